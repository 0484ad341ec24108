#ifndef ACWB_BOOSTING_HPP_
#define ACWB_BOOSTING_HPP_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "acwb/learner.hpp"
#include "acwb/loss.hpp"

namespace acwb {

struct BoostOptions {
  double nu = 0.1;
  int max_iters = 5000;
  // Consecutive non-improving iterations tolerated; 0 disables early stopping.
  int patience = 2;
  // Validation risk must drop by at least this much below the running best.
  double min_improvement = 1e-8;
};

enum class StopReason { patience, max_iters };
std::string to_string(StopReason reason);
StopReason stop_reason_from_string(std::string_view s);

struct IterationRecord {
  int iteration = 0;  // 1-based
  int learner = -1;   // index into the stage's candidate list
  double sse = 0.0;
  double train_risk = 0.0;
  double validation_risk = 0.0;
  Vector theta;  // unscaled winner coefficients
};

struct BoostTrace {
  double initial_train_risk = 0.0;
  double initial_validation_risk = 0.0;
  // Every iteration that ran, including the ones after the best.
  std::vector<IterationRecord> records;
  // Iterations run before stopping.
  int stopped_at = 0;
  // Iterations kept in the model (the best validation iteration).
  int best_iteration = 0;
  StopReason stop_reason = StopReason::max_iters;

  // Training risk after the kept iterations.
  double final_train_risk() const;
  double final_validation_risk() const;
};

// A fitted componentwise boosting stage. Candidates are listed so the trace
// can refer to them by index; learners holds the aggregated coefficients of
// every candidate selected within the kept iterations.
struct StageModel {
  std::vector<LearnerKind> candidates;
  std::map<int, FittedBaseLearner> learners;
  BoostTrace trace;
  double nu = 0.1;

  Vector predict(const Dataset& ds) const;
  bool empty() const { return learners.empty(); }
};

// Recomputes the aggregated coefficients from the trace:
// theta_j = nu * sum over kept iterations selecting j of theta^[m].
std::map<int, FittedBaseLearner> aggregate(const StageModel& stage);

// Replays the kept iterations one by one; used to cross-check aggregation.
Vector replay_prediction(const StageModel& stage, const Dataset& ds);

std::vector<PreparedLearner> prepare_learners(const std::vector<LearnerKind>& kinds, const Dataset& train,
                                              const Dataset* validation, double df,
                                              const DesignOptions& design = {});

struct CwbResult {
  StageModel model;
  Vector train_prediction;       // offset_in + stage, at the kept iteration
  Vector validation_prediction;  // same on validation rows
};

// Componentwise boosting from an incoming prediction. Each iteration fits
// every candidate to the pseudo residuals, adds the lowest-SSE one (ties go to
// the lowest index) scaled by nu, and logs training and validation risk.
// Stops after `patience` non-improving iterations and rolls back to the best.
CwbResult cwb_fit(const std::vector<PreparedLearner>& learners, const Vector& y_train, const Vector& y_validation,
                  LossKind loss, const Vector& offset_train, const Vector& offset_validation,
                  const BoostOptions& options);

// Convenience wrapper: builds designs with the given df and fits from a constant offset.
CwbResult cwb_fit(const std::vector<LearnerKind>& kinds, const Dataset& train, const Dataset& validation,
                  LossKind loss, double offset, const BoostOptions& options, double df = 5.0);

// Class-vs-rest targets (1 for the class, 0 otherwise).
std::vector<Vector> one_vs_rest_targets(const Vector& classes, int n_classes);

// Runs `fit_binary` once per class (with a 0/1 target) and returns the results.
template <typename Model>
std::vector<Model> one_vs_rest(const Vector& classes, int n_classes,
                               const std::function<Model(int, const Vector&)>& fit_binary) {
  if (n_classes < 3) throw ConfigError("one-vs-rest needs at least three classes");
  const auto targets = one_vs_rest_targets(classes, n_classes);
  std::vector<Model> out;
  out.reserve(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    if (targets[static_cast<std::size_t>(c)].sum() == 0.0)
      throw FitError("class " + std::to_string(c) + " is absent from the training rows");
    out.push_back(fit_binary(c, targets[static_cast<std::size_t>(c)]));
  }
  return out;
}

// Row-normalized logistic scores: column c of `scores` is class c's score.
Matrix normalized_probabilities(const Matrix& scores);

}  // namespace acwb

#endif  // ACWB_BOOSTING_HPP_
