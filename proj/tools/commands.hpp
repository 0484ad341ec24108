#ifndef ACWB_TOOLS_COMMANDS_HPP_
#define ACWB_TOOLS_COMMANDS_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "acwb/stages.hpp"

namespace acwb::cli {

enum ExitCode : int { kOk = 0, kUnexpected = 1, kDataError = 2, kFitError = 3, kConfigError = 4 };

// Runs the command line `args` (without the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Flat key=value text; '#' starts a comment. Keys match the model file's config names.
AcwbConfig read_config_file(const std::string& path, AcwbConfig base = {});
void set_config_value(AcwbConfig& config, const std::string& key, const std::string& value);
std::string format_config(const AcwbConfig& config);

}  // namespace acwb::cli

#endif  // ACWB_TOOLS_COMMANDS_HPP_
