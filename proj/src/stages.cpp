#include "acwb/stages.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

namespace acwb {

void AcwbConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(nu > 0.0 && nu <= 1.0, "nu must lie in (0, 1]");
  require(psi > 0.0 && psi <= 1.0, "psi must lie in (0, 1]");
  require(df > 0.0, "df must be positive");
  require(patience >= 0, "patience must be non-negative");
  require(max_iters_uni >= 1 && max_iters_pint >= 1 && max_iters_deep >= 1, "max_iters must be positive");
  require(rf_trees >= 1, "rf_trees must be positive");
  require(rf_depth >= 2, "rf_depth must be at least 2");
  require(rf_min_leaf >= 1 && deep_min_leaf >= 1, "min_leaf must be positive");
  require(deep_max_depth >= 1, "deep_max_depth must be positive");
  require(nu_deep > 0.0 && nu_deep <= 1.0, "nu_deep must lie in (0, 1]");
  require(validation_fraction >= 0.0 && validation_fraction < 1.0, "validation_fraction must lie in [0, 1)");
  require(patience == 0 || validation_fraction > 0.0, "early stopping needs validation_fraction > 0");
  require(design.spline_interior_knots >= 1 && design.tensor_interior_knots >= 1, "knot counts must be positive");
  require(design.degree >= 1 && design.degree <= kMaxSplineDegree, "spline degree must lie in [1, 15]");
  require(design.penalty_order >= 1 && design.penalty_order <= design.degree + 1, "penalty order out of range");
  require(max_levels >= 1, "max_levels must be positive");
  require(min_level_freq >= 0.0 && min_level_freq < 1.0, "min_level_freq must lie in [0, 1)");
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::size_t distinct_values(const Vector& x) {
  std::vector<double> v(x.data(), x.data() + x.size());
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::vector<LearnerKind> univariate_learners(const Dataset& ds) {
  std::vector<LearnerKind> out;
  for (const auto& c : ds.columns) {
    if (c.is_numeric()) {
      out.push_back({LearnerType::linear, {c.schema.name}});
      if (distinct_values(c.numeric) >= 4) out.push_back({LearnerType::centered_spline, {c.schema.name}});
    } else {
      out.push_back({LearnerType::categorical_ridge, {c.schema.name}});
    }
  }
  return out;
}

LearnerKind pair_learner(const Dataset& ds, int i, int j) {
  const Column& a = ds.columns.at(static_cast<std::size_t>(i));
  const Column& b = ds.columns.at(static_cast<std::size_t>(j));
  if (!a.is_numeric() && !b.is_numeric())
    return {LearnerType::cat_cat_interaction, {a.schema.name, b.schema.name}};
  if (a.is_numeric() && b.is_numeric()) return {LearnerType::tensor_spline, {a.schema.name, b.schema.name}};
  if (a.is_numeric()) return {LearnerType::varying_coefficient, {b.schema.name, a.schema.name}};
  return {LearnerType::varying_coefficient, {a.schema.name, b.schema.name}};
}

InteractionSet screen_interactions(const Dataset& train, const Vector& residuals, const ScreeningOptions& opt) {
  if (!(opt.psi > 0.0 && opt.psi <= 1.0)) throw ConfigError("psi must lie in (0, 1]");
  InteractionSet out;
  out.psi = opt.psi;
  const int p = static_cast<int>(train.n_features());
  if (p < 2) {
    out.skipped_reason = "fewer than two features";
    return out;
  }
  const Index n = train.n_rows();
  const TreeFitter fitter(train);
  TreeOptions topt;
  topt.max_depth = opt.depth;
  topt.min_leaf = opt.min_leaf;
  topt.features_per_split = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));

  std::vector<std::set<std::pair<int, int>>> per_tree(static_cast<std::size_t>(opt.n_trees));
  parallel_for(0, opt.n_trees, [&](Index t) {
    Rng rng(mix_seed(opt.seed, static_cast<std::uint64_t>(t)));
    Vector w = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) w[static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)))] += 1.0;
    const RegressionTree tree = fitter.fit(residuals, topt, w, &rng);
    auto& pairs = per_tree[static_cast<std::size_t>(t)];
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      for (int child : {node.left, node.right}) {
        const auto& c = tree.nodes[static_cast<std::size_t>(child)];
        if (c.is_leaf() || c.feature == node.feature) continue;
        pairs.emplace(std::min(node.feature, c.feature), std::max(node.feature, c.feature));
      }
    }
  });

  std::map<std::pair<int, int>, int> counts;
  for (const auto& pairs : per_tree)
    for (const auto& pr : pairs) ++counts[pr];
  out.observed_pairs = static_cast<int>(counts.size());
  if (counts.empty()) {
    out.skipped_reason = "no pair was selected by the screening forest";
    return out;
  }
  std::vector<std::pair<std::pair<int, int>, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const auto keep = static_cast<std::size_t>(std::ceil(opt.psi * static_cast<double>(ranked.size()) - 1e-12));
  for (std::size_t k = 0; k < std::min(keep, ranked.size()); ++k) {
    out.pairs.push_back(ranked[k].first);
    out.counts.push_back(ranked[k].second);
  }
  return out;
}

Vector DeepModel::predict(const Dataset& ds) const {
  Vector f = Vector::Zero(ds.n_rows());
  for (const auto& t : trees) t.add_prediction(ds, f, nu);
  return f;
}

DeepResult fit_deep(const Dataset& train, const Dataset& validation, const Vector& y_train,
                    const Vector& y_validation, LossKind loss, const Vector& offset_train,
                    const Vector& offset_validation, const DeepOptions& opt) {
  if (opt.patience > 0 && y_validation.size() == 0)
    throw ConfigError("early stopping needs a non-empty validation split");
  DeepResult result;
  DeepModel& model = result.model;
  model.nu = opt.nu;
  model.max_depth = opt.max_depth;
  BoostTrace& trace = model.trace;

  const TreeFitter fitter(train);
  TreeOptions topt;
  topt.max_depth = opt.max_depth;
  topt.min_leaf = opt.min_leaf;

  Vector f = offset_train;
  Vector fv = offset_validation;
  trace.initial_train_risk = empirical_risk(loss, y_train, f);
  trace.initial_validation_risk = empirical_risk(loss, y_validation, fv);
  double best_risk = trace.initial_validation_risk;
  Vector best_f = f;
  Vector best_fv = fv;
  int since_best = 0;

  for (int m = 1; m <= opt.max_iters; ++m) {
    const Vector r = pseudo_residuals(loss, y_train, f);
    model.trees.push_back(fitter.fit(r, topt));
    model.trees.back().add_prediction(train, f, opt.nu);
    model.trees.back().add_prediction(validation, fv, opt.nu);
    IterationRecord rec;
    rec.iteration = m;
    rec.sse = (r - model.trees.back().predict(train)).squaredNorm();
    rec.train_risk = empirical_risk(loss, y_train, f);
    rec.validation_risk = empirical_risk(loss, y_validation, fv);
    if (!std::isfinite(rec.train_risk) || !std::isfinite(rec.validation_risk))
      throw FitError("deep stage diverged at tree " + std::to_string(m));
    trace.records.push_back(rec);
    trace.stopped_at = m;
    if (opt.patience == 0) continue;
    if (rec.validation_risk <= best_risk - opt.min_improvement) {
      best_risk = rec.validation_risk;
      trace.best_iteration = m;
      best_f = f;
      best_fv = fv;
      since_best = 0;
    } else if (++since_best >= opt.patience) {
      trace.stop_reason = StopReason::patience;
      break;
    }
  }
  if (opt.patience == 0) {
    trace.best_iteration = trace.stopped_at;
    best_f = f;
    best_fv = fv;
  }
  model.trees.resize(static_cast<std::size_t>(trace.best_iteration));
  result.train_prediction = std::move(best_f);
  result.validation_prediction = std::move(best_fv);
  return result;
}

ComponentModel fit_component(const Dataset& train, const Dataset& validation, const Vector& y_train,
                             const Vector& y_validation, LossKind loss, const AcwbConfig& config,
                             std::uint64_t seed) {
  ComponentModel cm;
  cm.offset = init_offset(loss, y_train);
  Vector f = Vector::Constant(train.n_rows(), cm.offset);
  Vector fv = Vector::Constant(validation.n_rows(), cm.offset);
  cm.train_risk.r0 = empirical_risk(loss, y_train, f);
  cm.validation_risk.r0 = empirical_risk(loss, y_validation, fv);

  BoostOptions bopt;
  bopt.nu = config.nu;
  bopt.patience = config.patience;

  auto t0 = std::chrono::steady_clock::now();
  {
    bopt.max_iters = config.max_iters_uni;
    const auto learners = prepare_learners(univariate_learners(train), train, &validation, config.df, config.design);
    CwbResult res = cwb_fit(learners, y_train, y_validation, loss, f, fv, bopt);
    cm.uni = std::move(res.model);
    f = std::move(res.train_prediction);
    fv = std::move(res.validation_prediction);
  }
  cm.seconds.uni = seconds_since(t0);
  cm.train_risk.uni = empirical_risk(loss, y_train, f);
  cm.validation_risk.uni = empirical_risk(loss, y_validation, fv);
  cm.train_risk.pint = cm.train_risk.uni;
  cm.validation_risk.pint = cm.validation_risk.uni;

  if (config.interactions) {
    t0 = std::chrono::steady_clock::now();
    ScreeningOptions sopt;
    sopt.psi = config.psi;
    sopt.n_trees = config.rf_trees;
    sopt.depth = config.rf_depth;
    sopt.min_leaf = config.rf_min_leaf;
    sopt.seed = mix_seed(seed, 1);
    cm.interactions = screen_interactions(train, pseudo_residuals(loss, y_train, f), sopt);
    cm.seconds.screening = seconds_since(t0);
    if (!cm.interactions.pairs.empty()) {
      t0 = std::chrono::steady_clock::now();
      std::vector<LearnerKind> kinds;
      for (const auto& [i, j] : cm.interactions.pairs) kinds.push_back(pair_learner(train, i, j));
      bopt.max_iters = config.max_iters_pint;
      const auto learners = prepare_learners(kinds, train, &validation, config.df, config.design);
      CwbResult res = cwb_fit(learners, y_train, y_validation, loss, f, fv, bopt);
      cm.pint = std::move(res.model);
      f = std::move(res.train_prediction);
      fv = std::move(res.validation_prediction);
      cm.seconds.pint = seconds_since(t0);
      cm.train_risk.pint = empirical_risk(loss, y_train, f);
      cm.validation_risk.pint = empirical_risk(loss, y_validation, fv);
    }
  } else {
    cm.interactions.psi = config.psi;
    cm.interactions.skipped_reason = "interaction stage disabled";
  }
  cm.train_risk.deep = cm.train_risk.pint;
  cm.validation_risk.deep = cm.validation_risk.pint;

  if (config.deep) {
    t0 = std::chrono::steady_clock::now();
    DeepOptions dopt;
    dopt.nu = config.nu_deep;
    dopt.max_depth = config.deep_max_depth;
    dopt.min_leaf = config.deep_min_leaf;
    dopt.max_iters = config.max_iters_deep;
    dopt.patience = config.patience;
    DeepResult res = fit_deep(train, validation, y_train, y_validation, loss, f, fv, dopt);
    cm.deep = std::move(res.model);
    f = std::move(res.train_prediction);
    fv = std::move(res.validation_prediction);
    cm.seconds.deep = seconds_since(t0);
    cm.train_risk.deep = empirical_risk(loss, y_train, f);
    cm.validation_risk.deep = empirical_risk(loss, y_validation, fv);
  }
  return cm;
}

std::vector<std::string> AcwbModel::feature_names() const {
  std::vector<std::string> out;
  for (const auto& c : recipe.columns)
    if (!c.dropped) out.push_back(c.name);
  return out;
}

AcwbModel fit_acwb(const Dataset& ds, const AcwbConfig& config) {
  config.validate();
  if (ds.target.size() == 0) throw DataError("training data has no target column");
  const Task task = ds.task();
  SplitSpec spec;
  spec.validation_fraction = config.validation_fraction;
  spec.seed = mix_seed(config.seed, 0);
  spec.stratify = task != Task::regression;
  SplitResult parts = split(ds, spec);

  AcwbModel model;
  model.config = config;
  PreprocessOptions popt;
  popt.max_levels = config.max_levels;
  popt.min_level_freq = config.min_level_freq;
  popt.seed = mix_seed(config.seed, 2);
  model.recipe = fit_recipe(parts.train, popt);
  model.loss = task == Task::regression ? LossKind::squared_error : LossKind::binomial;
  const Dataset train = apply_recipe(parts.train, model.recipe);
  const Dataset validation = apply_recipe(parts.validation, model.recipe);
  model.train_rows = train.n_rows();
  model.validation_rows = validation.n_rows();

  if (task == Task::multiclass_classification) {
    const int k = static_cast<int>(model.recipe.target.levels.size());
    const auto y_val = one_vs_rest_targets(validation.target, k);
    model.components = one_vs_rest<ComponentModel>(train.target, k, [&](int c, const Vector& y) {
      return fit_component(train, validation, y, y_val[static_cast<std::size_t>(c)], model.loss, config,
                           mix_seed(config.seed, 100 + static_cast<std::uint64_t>(c)));
    });
  } else {
    if (task == Task::binary_classification && (train.target.minCoeff() == train.target.maxCoeff()))
      throw FitError("training split contains a single class");
    model.components.push_back(
        fit_component(train, validation, train.target, validation.target, model.loss, config, mix_seed(config.seed, 100)));
  }
  return model;
}

StageScores component_scores(const ComponentModel& cm, const Dataset& processed) {
  const Index n = processed.n_rows();
  StageScores s;
  s.offset = Vector::Constant(n, cm.offset);
  s.uni = cm.uni.predict(processed);
  s.pint = cm.pint ? cm.pint->predict(processed) : Vector::Zero(n);
  s.deep = cm.deep ? cm.deep->predict(processed) : Vector::Zero(n);
  return s;
}

Prediction predict_processed(const AcwbModel& model, const Dataset& processed) {
  Prediction out;
  const Index n = processed.n_rows();
  const auto k = static_cast<Index>(model.components.size());
  out.scores.resize(n, k);
  for (Index c = 0; c < k; ++c) out.scores.col(c) = component_scores(model.components[static_cast<std::size_t>(c)], processed).total();
  if (model.task() == Task::binary_classification) {
    out.probabilities = out.scores.unaryExpr([](double s) { return sigmoid(s); });
    out.predicted.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) out.predicted[static_cast<std::size_t>(i)] = out.probabilities(i, 0) >= 0.5 ? 1 : 0;
  } else if (model.task() == Task::multiclass_classification) {
    out.probabilities = normalized_probabilities(out.scores);
    out.predicted.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      out.probabilities.row(i).maxCoeff(&best);
      out.predicted[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
  }
  return out;
}

Prediction predict_full(const AcwbModel& model, const Dataset& ds) {
  return predict_processed(model, apply_recipe(ds, model.recipe));
}

}  // namespace acwb
