#ifndef ACWB_STAGES_HPP_
#define ACWB_STAGES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "acwb/boosting.hpp"
#include "acwb/preprocess.hpp"
#include "acwb/tree.hpp"

namespace acwb {

struct AcwbConfig {
  double nu = 0.1;
  double psi = 0.1;
  double df = 5.0;
  int patience = 2;
  int max_iters_uni = 5000;
  int max_iters_pint = 5000;
  int max_iters_deep = 5000;
  bool interactions = true;
  bool deep = true;
  int rf_trees = 500;
  int rf_depth = 2;
  int rf_min_leaf = 5;
  int deep_max_depth = 6;
  int deep_min_leaf = 10;
  double nu_deep = 0.1;
  double validation_fraction = 0.2;
  std::uint64_t seed = 1;
  DesignOptions design;
  int max_levels = 10;
  double min_level_freq = 0.01;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

struct InteractionSet {
  // Feature index pairs (i < j) into the preprocessed columns, most frequent first.
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> counts;
  double psi = 0.1;
  int observed_pairs = 0;
  // Non-empty when no pair could be formed.
  std::string skipped_reason;
};

struct ScreeningOptions {
  double psi = 0.1;
  int n_trees = 500;
  int depth = 2;
  int min_leaf = 5;
  std::uint64_t seed = 1;
};

// Random forest of shallow regression trees on the residuals; every distinct
// (parent feature, child feature) pair counts once per tree, and the top
// ceil(psi * #observed pairs) by frequency are kept (ties by feature index).
InteractionSet screen_interactions(const Dataset& train, const Vector& residuals, const ScreeningOptions& options);

// Structured learner used for a feature pair, by column kinds.
LearnerKind pair_learner(const Dataset& ds, int i, int j);
// Univariate candidates: linear and centered spline per numeric feature (the
// spline only with at least four distinct values), ridge per categorical one.
std::vector<LearnerKind> univariate_learners(const Dataset& ds);

struct DeepModel {
  std::vector<RegressionTree> trees;
  double nu = 0.1;
  int max_depth = 6;
  BoostTrace trace;

  Vector predict(const Dataset& ds) const;
};

struct DeepOptions {
  double nu = 0.1;
  int max_depth = 6;
  int min_leaf = 10;
  int max_iters = 5000;
  int patience = 2;
  double min_improvement = 1e-8;
};

struct DeepResult {
  DeepModel model;
  Vector train_prediction;
  Vector validation_prediction;
};

// Gradient boosting with regression trees from an incoming prediction.
DeepResult fit_deep(const Dataset& train, const Dataset& validation, const Vector& y_train,
                    const Vector& y_validation, LossKind loss, const Vector& offset_train,
                    const Vector& offset_validation, const DeepOptions& options);

struct RiskCheckpoints {
  double r0 = 0.0;
  double uni = 0.0;
  double pint = 0.0;
  double deep = 0.0;
};

struct StageTimings {
  double uni = 0.0;
  double screening = 0.0;
  double pint = 0.0;
  double deep = 0.0;
};

// One additive predictor; binary and regression models have one, multiclass
// models one per class.
struct ComponentModel {
  double offset = 0.0;
  StageModel uni;
  InteractionSet interactions;
  std::optional<StageModel> pint;
  std::optional<DeepModel> deep;
  RiskCheckpoints train_risk;
  RiskCheckpoints validation_risk;
  StageTimings seconds;
};

struct StageScores {
  Vector offset;
  Vector uni;
  Vector pint;
  Vector deep;

  Vector total() const { return offset + uni + pint + deep; }
};

StageScores component_scores(const ComponentModel& component, const Dataset& processed);

struct AcwbModel {
  AcwbConfig config;
  PreprocessRecipe recipe;
  LossKind loss = LossKind::squared_error;
  std::vector<ComponentModel> components;
  Index train_rows = 0;
  Index validation_rows = 0;

  Task task() const { return recipe.target.task; }
  // Names of the preprocessed feature columns, in model order.
  std::vector<std::string> feature_names() const;
};

AcwbModel fit_acwb(const Dataset& ds, const AcwbConfig& config);

// Fits one component on preprocessed train/validation data with the given targets.
ComponentModel fit_component(const Dataset& train, const Dataset& validation, const Vector& y_train,
                             const Vector& y_validation, LossKind loss, const AcwbConfig& config,
                             std::uint64_t seed);

struct Prediction {
  Matrix scores;                // rows x components
  Matrix probabilities;         // classification only: rows x classes
  std::vector<int> predicted;   // classification only: class index
};

Prediction predict_full(const AcwbModel& model, const Dataset& ds);
// Same, for data that already went through the model's recipe.
Prediction predict_processed(const AcwbModel& model, const Dataset& processed);

}  // namespace acwb

#endif  // ACWB_STAGES_HPP_
