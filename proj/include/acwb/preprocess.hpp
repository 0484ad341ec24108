#ifndef ACWB_PREPROCESS_HPP_
#define ACWB_PREPROCESS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "acwb/data.hpp"

namespace acwb {

inline constexpr const char* kOtherLevel = "__other__";

// How a categorical column's training levels map onto retained levels.
struct LevelMap {
  std::vector<std::string> source_levels;
  // For each source level, its index in retained_levels.
  std::vector<std::int32_t> to_retained;
  // Retained levels in first-appearance order, then __other__ if collapsing occurred.
  std::vector<std::string> retained_levels;
  bool has_other = false;
};

struct Imputation {
  enum class Kind { none, mode, empirical };
  Kind kind = Kind::none;
  // mode: index into the retained levels
  std::int32_t mode_level = kMissingCode;
  // empirical: observed values and their relative frequencies
  std::vector<double> values;
  std::vector<double> probabilities;
  std::uint64_t seed = 0;
};

struct RecipeColumn {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  bool dropped = false;
  LevelMap level_map;
  Imputation imputation;
  // Observed training range (numeric only).
  double min = 0.0;
  double max = 0.0;
};

struct PreprocessOptions {
  int max_levels = 10;
  double min_level_freq = 0.01;
  std::uint64_t seed = 0;
};

// Fitted preprocessing: constant-column removal, rare-level collapsing, and
// imputation. Immutable after fit; replayable on any compatible dataset.
struct PreprocessRecipe {
  std::vector<RecipeColumn> columns;
  TargetInfo target;
  PreprocessOptions options;

  std::vector<std::string> dropped_columns() const;
  // Column kinds of the source schema, usable as CSV kind hints.
  std::map<std::string, ColumnKind> source_kinds() const;
  const RecipeColumn* find(std::string_view name) const;
};

PreprocessRecipe fit_recipe(const Dataset& train, const PreprocessOptions& options = {});

// Output columns are the retained recipe columns, in recipe order; no missing
// values remain. Classification targets are remapped by label onto the recipe's
// target levels (labels not seen at fit time are an error).
Dataset apply_recipe(const Dataset& ds, const PreprocessRecipe& recipe);

}  // namespace acwb

#endif  // ACWB_PREPROCESS_HPP_
