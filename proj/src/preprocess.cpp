#include "acwb/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace acwb {

std::vector<std::string> PreprocessRecipe::dropped_columns() const {
  std::vector<std::string> out;
  for (const auto& c : columns)
    if (c.dropped) out.push_back(c.name);
  return out;
}

std::map<std::string, ColumnKind> PreprocessRecipe::source_kinds() const {
  std::map<std::string, ColumnKind> out;
  for (const auto& c : columns) out[c.name] = c.kind;
  return out;
}

const RecipeColumn* PreprocessRecipe::find(std::string_view name) const {
  for (const auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

RecipeColumn fit_numeric(const Column& col, std::uint64_t seed) {
  RecipeColumn rc;
  rc.name = col.schema.name;
  rc.kind = ColumnKind::numeric;
  std::map<double, std::size_t> counts;
  std::size_t observed = 0;
  for (Index i = 0; i < col.numeric.size(); ++i) {
    const double v = col.numeric[i];
    if (std::isnan(v)) continue;
    ++counts[v];
    ++observed;
  }
  if (counts.size() <= 1) {
    rc.dropped = true;
    return rc;
  }
  rc.min = counts.begin()->first;
  rc.max = counts.rbegin()->first;
  if (observed < static_cast<std::size_t>(col.numeric.size())) {
    rc.imputation.kind = Imputation::Kind::empirical;
    rc.imputation.seed = seed;
    for (const auto& [v, c] : counts) {
      rc.imputation.values.push_back(v);
      rc.imputation.probabilities.push_back(static_cast<double>(c) / static_cast<double>(observed));
    }
  }
  return rc;
}

RecipeColumn fit_categorical(const Column& col, const PreprocessOptions& opt) {
  RecipeColumn rc;
  rc.name = col.schema.name;
  rc.kind = ColumnKind::categorical;
  const auto& levels = col.schema.levels;
  std::vector<std::size_t> counts(levels.size(), 0);
  std::size_t observed = 0;
  bool missing = false;
  for (auto code : col.codes) {
    if (code == kMissingCode) {
      missing = true;
      continue;
    }
    ++counts[static_cast<std::size_t>(code)];
    ++observed;
  }
  const auto distinct = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
  if (distinct <= 1) {
    rc.dropped = true;
    return rc;
  }

  std::vector<std::size_t> order(levels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  std::vector<char> keep(levels.size(), 0);
  int kept = 0;
  for (auto l : order) {
    if (counts[l] == 0 || kept >= opt.max_levels) break;
    const double freq = static_cast<double>(counts[l]) / static_cast<double>(observed);
    if (freq < opt.min_level_freq) continue;
    keep[l] = 1;
    ++kept;
  }
  // Anything observed but not kept collapses into __other__.
  bool collapsed = false;
  for (std::size_t l = 0; l < levels.size(); ++l)
    if (counts[l] > 0 && !keep[l]) collapsed = true;
  if (kept == 0 || (kept == 1 && !collapsed)) {
    rc.dropped = true;
    return rc;
  }

  auto& lm = rc.level_map;
  lm.source_levels = levels;
  lm.to_retained.assign(levels.size(), kMissingCode);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (keep[l]) {
      lm.to_retained[l] = static_cast<std::int32_t>(lm.retained_levels.size());
      lm.retained_levels.push_back(levels[l]);
    }
  }
  if (collapsed) {
    lm.has_other = true;
    lm.retained_levels.push_back(kOtherLevel);
  }

  // Mode over source levels; ties go to the lexicographically smallest name.
  std::size_t mode = 0;
  for (std::size_t l = 1; l < levels.size(); ++l) {
    if (counts[l] > counts[mode] || (counts[l] == counts[mode] && levels[l] < levels[mode])) mode = l;
  }
  const auto other_code = static_cast<std::int32_t>(lm.retained_levels.size()) - 1;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (keep[l]) continue;
    lm.to_retained[l] = collapsed ? other_code : static_cast<std::int32_t>(kMissingCode);
  }
  const auto mode_code = lm.to_retained[mode];
  for (auto& t : lm.to_retained)
    if (t == kMissingCode) t = mode_code;
  rc.imputation.mode_level = mode_code;
  rc.imputation.kind = missing ? Imputation::Kind::mode : Imputation::Kind::none;
  return rc;
}

double draw_empirical(const Imputation& imp, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < imp.values.size(); ++k) {
    acc += imp.probabilities[k];
    if (u < acc) return imp.values[k];
  }
  return imp.values.back();
}

}  // namespace

PreprocessRecipe fit_recipe(const Dataset& train, const PreprocessOptions& options) {
  if (train.n_rows() == 0) throw DataError("cannot fit preprocessing on an empty dataset");
  if (options.max_levels < 1) throw ConfigError("max_levels must be positive");
  if (!(options.min_level_freq >= 0.0 && options.min_level_freq < 1.0))
    throw ConfigError("min_level_freq must lie in [0, 1)");
  PreprocessRecipe recipe;
  recipe.options = options;
  recipe.target = train.target_info;
  for (std::size_t j = 0; j < train.columns.size(); ++j) {
    const auto& col = train.columns[j];
    if (col.is_numeric())
      recipe.columns.push_back(fit_numeric(col, mix_seed(options.seed, j)));
    else
      recipe.columns.push_back(fit_categorical(col, options));
  }
  if (std::all_of(recipe.columns.begin(), recipe.columns.end(), [](const auto& c) { return c.dropped; }))
    throw DataError("no usable features: every column is constant");
  return recipe;
}

Dataset apply_recipe(const Dataset& ds, const PreprocessRecipe& recipe) {
  Dataset out;
  out.target_info = recipe.target;
  const Index n = ds.n_rows();
  for (const auto& rc : recipe.columns) {
    if (rc.dropped) continue;
    const auto j = ds.find_column(rc.name);
    if (!j) throw LoadError(LoadErrorKind::schema_mismatch, "column '" + rc.name + "' is missing");
    const Column& src = ds.columns[static_cast<std::size_t>(*j)];
    if (src.schema.kind != rc.kind)
      throw LoadError(LoadErrorKind::schema_mismatch, "column '" + rc.name + "' should be " + to_string(rc.kind) +
                                                          " but is " + to_string(src.schema.kind));
    Column col;
    col.schema.name = rc.name;
    col.schema.kind = rc.kind;
    if (rc.kind == ColumnKind::numeric) {
      col.numeric = src.numeric;
      if (rc.imputation.kind == Imputation::Kind::empirical) {
        Rng rng(rc.imputation.seed);
        for (Index i = 0; i < n; ++i)
          if (std::isnan(col.numeric[i])) col.numeric[i] = draw_empirical(rc.imputation, rng);
      } else {
        // No missing values at fit time: replay uses the midpoint of the
        // training range, which keeps the output free of missing markers.
        for (Index i = 0; i < n; ++i)
          if (std::isnan(col.numeric[i])) col.numeric[i] = 0.5 * (rc.min + rc.max);
      }
    } else {
      const auto& lm = rc.level_map;
      col.schema.levels = lm.retained_levels;
      std::unordered_map<std::string, std::int32_t> lookup;
      for (std::size_t l = 0; l < lm.source_levels.size(); ++l) lookup.emplace(lm.source_levels[l], lm.to_retained[l]);
      for (std::size_t l = 0; l < lm.retained_levels.size(); ++l) lookup.emplace(lm.retained_levels[l], static_cast<std::int32_t>(l));
      const std::int32_t unseen = lm.has_other ? static_cast<std::int32_t>(lm.retained_levels.size()) - 1
                                               : rc.imputation.mode_level;
      std::vector<std::int32_t> translate(src.schema.levels.size());
      for (std::size_t l = 0; l < src.schema.levels.size(); ++l) {
        auto it = lookup.find(src.schema.levels[l]);
        translate[l] = it == lookup.end() ? unseen : it->second;
      }
      col.codes.resize(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) {
        const auto code = src.codes[static_cast<std::size_t>(i)];
        col.codes[static_cast<std::size_t>(i)] =
            code == kMissingCode ? rc.imputation.mode_level : translate[static_cast<std::size_t>(code)];
      }
    }
    out.columns.push_back(std::move(col));
  }

  if (ds.target.size() > 0) {
    out.target = ds.target;
    if (recipe.target.task != Task::regression) {
      std::unordered_map<std::string, double> lookup;
      for (std::size_t l = 0; l < recipe.target.levels.size(); ++l) lookup.emplace(recipe.target.levels[l], static_cast<double>(l));
      for (Index i = 0; i < n; ++i) {
        const auto& label = ds.target_info.levels.at(static_cast<std::size_t>(ds.target[i]));
        auto it = lookup.find(label);
        if (it == lookup.end()) throw DataError("target label '" + label + "' was not seen during training");
        out.target[i] = it->second;
      }
    }
  }
  return out;
}

}  // namespace acwb
