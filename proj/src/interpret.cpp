#include "acwb/interpret.hpp"

#include <algorithm>
#include <map>

namespace acwb {

std::string to_string(TermStage stage) { return stage == TermStage::uni ? "uni" : "pint"; }

double VipTable::total(TermStage stage) const {
  double acc = 0.0;
  for (const auto& e : entries)
    if (e.stage == stage) acc += e.vip;
  return acc;
}

std::vector<VipEntry> VipTable::stage_entries(TermStage stage) const {
  std::vector<VipEntry> out;
  for (const auto& e : entries)
    if (e.stage == stage) out.push_back(e);
  return out;
}

namespace {

const ComponentModel& component_at(const AcwbModel& model, int component) {
  if (component < 0 || static_cast<std::size_t>(component) >= model.components.size())
    throw ConfigError("component index " + std::to_string(component) + " out of range");
  return model.components[static_cast<std::size_t>(component)];
}

std::string pair_term(const std::vector<std::string>& features) { return features.at(0) + ":" + features.at(1); }

void collect_vip(const StageModel& stage, TermStage which, std::map<std::string, VipEntry>& acc) {
  double prev = stage.trace.initial_train_risk;
  for (int m = 0; m < stage.trace.best_iteration; ++m) {
    const auto& rec = stage.trace.records[static_cast<std::size_t>(m)];
    const LearnerKind& kind = stage.candidates.at(static_cast<std::size_t>(rec.learner));
    const std::string term = which == TermStage::uni ? kind.features.at(0) : pair_term(kind.features);
    auto [it, inserted] = acc.try_emplace(term);
    if (inserted) {
      it->second.term = term;
      it->second.features = kind.features;
      it->second.stage = which;
    }
    it->second.vip += prev - rec.train_risk;
    prev = rec.train_risk;
  }
}

// Synthetic preprocessed dataset with the given columns only.
Column synthetic_column(const AcwbModel& model, const std::string& name) {
  const RecipeColumn* rc = model.recipe.find(name);
  if (rc == nullptr || rc->dropped) throw DataError("feature '" + name + "' is not part of the model");
  Column c;
  c.schema.name = name;
  c.schema.kind = rc->kind;
  if (rc->kind == ColumnKind::categorical) c.schema.levels = rc->level_map.retained_levels;
  return c;
}

std::vector<double> equidistant(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    g[static_cast<std::size_t>(k)] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return g;
}

}  // namespace

VipTable variable_importance(const AcwbModel& model, int component) {
  const ComponentModel& cm = component_at(model, component);
  std::map<std::string, VipEntry> uni, pint;
  collect_vip(cm.uni, TermStage::uni, uni);
  if (cm.pint) collect_vip(*cm.pint, TermStage::pint, pint);
  VipTable table;
  for (auto& [k, e] : uni) table.entries.push_back(std::move(e));
  for (auto& [k, e] : pint) table.entries.push_back(std::move(e));
  std::stable_sort(table.entries.begin(), table.entries.end(),
                   [](const VipEntry& a, const VipEntry& b) { return a.vip > b.vip; });
  return table;
}

ComplexityReport complexity_report(const AcwbModel& model, int component) {
  const ComponentModel& cm = component_at(model, component);
  ComplexityReport rep;
  rep.checkpoints = cm.train_risk;
  rep.ran_pint = cm.pint.has_value();
  rep.ran_deep = cm.deep.has_value();
  const auto& r = cm.train_risk;
  rep.delta = r.r0 - r.deep;

  double prev = cm.uni.trace.initial_train_risk;
  for (int m = 0; m < cm.uni.trace.best_iteration; ++m) {
    const auto& rec = cm.uni.trace.records[static_cast<std::size_t>(m)];
    const double drop = prev - rec.train_risk;
    if (cm.uni.candidates.at(static_cast<std::size_t>(rec.learner)).type == LearnerType::centered_spline)
      rep.uni_nonlinear += drop;
    else
      rep.uni_linear += drop;
    prev = rec.train_risk;
  }

  if (!(rep.delta > 0.0)) {
    rep.warnings.push_back("the model explained no training risk; all fractions are zero");
    return rep;
  }
  rep.rho_uni = (r.r0 - r.uni) / rep.delta;
  rep.rho_pint = (r.uni - r.pint) / rep.delta;
  rep.rho_deep = (r.pint - r.deep) / rep.delta;
  auto clamp = [&](double& rho, const char* name) {
    if (rho < 0.0) {
      rep.warnings.push_back(std::string(name) + " was negative (" + std::to_string(rho) + ") and is clamped to 0");
      rho = 0.0;
    }
  };
  clamp(rep.rho_uni, "rho_uni");
  clamp(rep.rho_pint, "rho_pint");
  clamp(rep.rho_deep, "rho_deep");
  return rep;
}

EffectCurve partial_effect(const AcwbModel& model, const std::string& feature, int grid_size, int component) {
  if (grid_size < 1) throw ConfigError("grid size must be positive");
  const ComponentModel& cm = component_at(model, component);
  Dataset grid;
  grid.columns.push_back(synthetic_column(model, feature));
  Column& col = grid.columns.back();
  EffectCurve curve;
  curve.feature = feature;
  curve.numeric = col.is_numeric();
  if (curve.numeric) {
    const RecipeColumn* rc = model.recipe.find(feature);
    curve.grid = equidistant(rc->min, rc->max, grid_size);
    col.numeric = Eigen::Map<const Vector>(curve.grid.data(), static_cast<Index>(curve.grid.size()));
  } else {
    curve.levels = col.schema.levels;
    for (std::size_t l = 0; l < curve.levels.size(); ++l) col.codes.push_back(static_cast<std::int32_t>(l));
  }
  const Index n = grid.n_rows();
  Vector lin = Vector::Zero(n), nonlin = Vector::Zero(n);
  for (const auto& [idx, learner] : cm.uni.learners) {
    if (learner.meta.kind.features.at(0) != feature) continue;
    if (learner.meta.kind.type == LearnerType::centered_spline)
      nonlin += predict(learner, grid);
    else
      lin += predict(learner, grid);
  }
  curve.linear_part.assign(lin.data(), lin.data() + n);
  curve.nonlinear_part.assign(nonlin.data(), nonlin.data() + n);
  curve.total.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) curve.total[static_cast<std::size_t>(i)] = lin[i] + nonlin[i];
  return curve;
}

InteractionSurface interaction_surface(const AcwbModel& model, const std::string& feature_a,
                                       const std::string& feature_b, int grid_size, int component) {
  if (grid_size < 1) throw ConfigError("grid size must be positive");
  const ComponentModel& cm = component_at(model, component);
  const auto names = model.feature_names();
  auto index_of = [&](const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw DataError("feature '" + name + "' is not part of the model");
    return static_cast<int>(it - names.begin());
  };
  const int ia = index_of(feature_a);
  const int ib = index_of(feature_b);
  const std::pair<int, int> key{std::min(ia, ib), std::max(ia, ib)};
  if (std::find(cm.interactions.pairs.begin(), cm.interactions.pairs.end(), key) == cm.interactions.pairs.end())
    throw DataError("pair " + feature_a + ":" + feature_b + " is not in the fitted interaction set");

  InteractionSurface surf;
  // Axis order follows the learner's own feature order.
  const Dataset names_only = [&] {
    Dataset d;
    d.columns.push_back(synthetic_column(model, names[static_cast<std::size_t>(key.first)]));
    d.columns.push_back(synthetic_column(model, names[static_cast<std::size_t>(key.second)]));
    return d;
  }();
  surf.kind = pair_learner(names_only, 0, 1);
  surf.feature_names = surf.kind.features;

  Dataset grid;
  std::vector<std::size_t> axis_size;
  for (int a = 0; a < 2; ++a) {
    const std::string& name = surf.feature_names[static_cast<std::size_t>(a)];
    grid.columns.push_back(synthetic_column(model, name));
    const Column& c = grid.columns.back();
    auto& g = a == 0 ? surf.grid_a : surf.grid_b;
    auto& lv = a == 0 ? surf.levels_a : surf.levels_b;
    if (c.is_numeric()) {
      const RecipeColumn* rc = model.recipe.find(name);
      g = equidistant(rc->min, rc->max, grid_size);
      axis_size.push_back(g.size());
    } else {
      lv = c.schema.levels;
      axis_size.push_back(lv.size());
    }
  }
  const std::size_t na = axis_size[0], nb = axis_size[1];
  for (int a = 0; a < 2; ++a) {
    Column& c = grid.columns[static_cast<std::size_t>(a)];
    if (c.is_numeric()) c.numeric.resize(static_cast<Index>(na * nb));
    else c.codes.resize(na * nb);
  }
  for (std::size_t u = 0; u < na; ++u) {
    for (std::size_t v = 0; v < nb; ++v) {
      const std::size_t row = u * nb + v;
      for (int a = 0; a < 2; ++a) {
        Column& c = grid.columns[static_cast<std::size_t>(a)];
        const std::size_t k = a == 0 ? u : v;
        const auto& g = a == 0 ? surf.grid_a : surf.grid_b;
        if (c.is_numeric()) c.numeric[static_cast<Index>(row)] = g[k];
        else c.codes[row] = static_cast<std::int32_t>(k);
      }
    }
  }
  Vector values = Vector::Zero(static_cast<Index>(na * nb));
  if (cm.pint) {
    for (const auto& [idx, learner] : cm.pint->learners) {
      if (learner.meta.kind == surf.kind) {
        values += predict(learner, grid);
        surf.selected = true;
      }
    }
  }
  surf.values.resize(static_cast<Index>(na), static_cast<Index>(nb));
  for (std::size_t u = 0; u < na; ++u)
    for (std::size_t v = 0; v < nb; ++v) surf.values(static_cast<Index>(u), static_cast<Index>(v)) = values[static_cast<Index>(u * nb + v)];
  return surf;
}

Decomposition decompose_prediction(const AcwbModel& model, const Dataset& processed, Index row, int component) {
  const ComponentModel& cm = component_at(model, component);
  if (row < 0 || row >= processed.n_rows()) throw DataError("row " + std::to_string(row) + " is out of range");
  const std::vector<Index> rows{row};
  const Dataset one = processed.take(rows);
  Decomposition d;
  d.offset = cm.offset;
  std::map<std::string, double> uni;
  std::vector<std::string> order;
  for (const auto& [idx, learner] : cm.uni.learners) {
    const std::string& f = learner.meta.kind.features.at(0);
    if (!uni.count(f)) order.push_back(f);
    uni[f] += predict(learner, one)[0];
  }
  for (const auto& f : order) d.univariate.push_back({f, uni[f]});
  if (cm.pint)
    for (const auto& [idx, learner] : cm.pint->learners)
      d.pairs.push_back({pair_term(learner.meta.kind.features), predict(learner, one)[0]});
  if (cm.deep) d.deep = cm.deep->predict(one)[0];
  d.total = d.offset + d.deep;
  for (const auto& c : d.univariate) d.total += c.value;
  for (const auto& c : d.pairs) d.total += c.value;
  return d;
}

}  // namespace acwb
