#ifndef ACWB_MODEL_IO_HPP_
#define ACWB_MODEL_IO_HPP_

#include <iosfwd>
#include <string>

#include "acwb/stages.hpp"

namespace acwb {

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelExtension = ".acwb";

// Versioned JSON text. Doubles are written with 17 significant digits, so a
// loaded model predicts bit-identically.
void save_model(const AcwbModel& model, const std::string& path);
void save_model(const AcwbModel& model, std::ostream& out);

// Throws DataError on unreadable, truncated or corrupt input (with the byte
// offset of the parse failure) and on an unsupported format version.
AcwbModel load_model(const std::string& path);
AcwbModel load_model_from_string(const std::string& text);

}  // namespace acwb

#endif  // ACWB_MODEL_IO_HPP_
