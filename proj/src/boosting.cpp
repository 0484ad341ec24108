#include "acwb/boosting.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace acwb {

std::string to_string(StopReason reason) { return reason == StopReason::patience ? "patience" : "max_iters"; }

StopReason stop_reason_from_string(std::string_view s) {
  if (s == "patience") return StopReason::patience;
  if (s == "max_iters") return StopReason::max_iters;
  throw DataError("unknown stop reason '" + std::string(s) + "'");
}

double BoostTrace::final_train_risk() const {
  return best_iteration == 0 ? initial_train_risk : records[static_cast<std::size_t>(best_iteration - 1)].train_risk;
}

double BoostTrace::final_validation_risk() const {
  return best_iteration == 0 ? initial_validation_risk
                             : records[static_cast<std::size_t>(best_iteration - 1)].validation_risk;
}

Vector StageModel::predict(const Dataset& ds) const {
  Vector f = Vector::Zero(ds.n_rows());
  if (ds.n_rows() == 0) return f;
  for (const auto& [idx, learner] : learners) f += acwb::predict(learner, ds);
  return f;
}

std::map<int, FittedBaseLearner> aggregate(const StageModel& stage) {
  std::map<int, FittedBaseLearner> out;
  for (int m = 0; m < stage.trace.best_iteration; ++m) {
    const auto& rec = stage.trace.records[static_cast<std::size_t>(m)];
    auto it = stage.learners.find(rec.learner);
    if (it == stage.learners.end()) throw std::logic_error("selected learner missing from the stage model");
    auto [pos, inserted] = out.try_emplace(rec.learner, FittedBaseLearner{it->second.meta, Vector()});
    if (inserted) pos->second.theta = Vector::Zero(rec.theta.size());
    if (pos->second.theta.size() != rec.theta.size()) throw std::logic_error("coefficient width mismatch in trace");
    pos->second.theta += stage.nu * rec.theta;
  }
  return out;
}

Vector replay_prediction(const StageModel& stage, const Dataset& ds) {
  Vector f = Vector::Zero(ds.n_rows());
  for (int m = 0; m < stage.trace.best_iteration; ++m) {
    const auto& rec = stage.trace.records[static_cast<std::size_t>(m)];
    const FittedBaseLearner step{stage.learners.at(rec.learner).meta, rec.theta};
    f += stage.nu * predict(step, ds);
  }
  return f;
}

std::vector<PreparedLearner> prepare_learners(const std::vector<LearnerKind>& kinds, const Dataset& train,
                                              const Dataset* validation, double df, const DesignOptions& design) {
  std::vector<PreparedLearner> out;
  out.reserve(kinds.size());
  for (const auto& kind : kinds) out.emplace_back(build_design(kind, train, design), df, validation);
  return out;
}

CwbResult cwb_fit(const std::vector<PreparedLearner>& learners, const Vector& y_train, const Vector& y_validation,
                  LossKind loss, const Vector& offset_train, const Vector& offset_validation,
                  const BoostOptions& opt) {
  if (learners.empty()) throw FitError("componentwise boosting needs at least one base learner");
  if (!(opt.nu > 0.0 && opt.nu <= 1.0)) throw ConfigError("learning rate nu must lie in (0, 1]");
  if (opt.max_iters < 1) throw ConfigError("max_iters must be positive");
  if (opt.patience < 0) throw ConfigError("patience must be non-negative");
  if (opt.patience > 0 && y_validation.size() == 0)
    throw ConfigError("early stopping needs a non-empty validation split");
  if (offset_train.size() != y_train.size() || offset_validation.size() != y_validation.size())
    throw std::invalid_argument("offset and target lengths differ");

  CwbResult result;
  StageModel& model = result.model;
  BoostTrace& trace = model.trace;
  model.nu = opt.nu;
  for (const auto& l : learners) model.candidates.push_back(l.meta().kind);

  Vector f = offset_train;
  Vector fv = offset_validation;
  trace.initial_train_risk = empirical_risk(loss, y_train, f);
  trace.initial_validation_risk = empirical_risk(loss, y_validation, fv);

  std::map<int, Vector> agg;
  std::map<int, Vector> best_agg;
  Vector best_f = f;
  Vector best_fv = fv;
  double best_risk = trace.initial_validation_risk;
  int since_best = 0;
  std::vector<PreparedLearner::Fit> fits(learners.size());

  for (int m = 1; m <= opt.max_iters; ++m) {
    const Vector r = pseudo_residuals(loss, y_train, f);
    const double rr = r.squaredNorm();
    parallel_for(0, static_cast<Index>(learners.size()),
                 [&](Index k) { fits[static_cast<std::size_t>(k)] = learners[static_cast<std::size_t>(k)].fit(r, rr); });
    std::size_t winner = 0;
    for (std::size_t k = 1; k < fits.size(); ++k)
      if (fits[k].sse < fits[winner].sse) winner = k;

    const PreparedLearner& best_learner = learners[winner];
    const Vector& theta = fits[winner].theta;
    best_learner.add_to_train(f, theta, opt.nu);
    best_learner.add_to_validation(fv, theta, opt.nu);
    auto [slot, inserted] = agg.try_emplace(static_cast<int>(winner), Vector::Zero(theta.size()));
    slot->second += opt.nu * theta;

    IterationRecord rec;
    rec.iteration = m;
    rec.learner = static_cast<int>(winner);
    rec.sse = fits[winner].sse;
    rec.train_risk = empirical_risk(loss, y_train, f);
    rec.validation_risk = empirical_risk(loss, y_validation, fv);
    rec.theta = theta;
    if (!std::isfinite(rec.train_risk) || !std::isfinite(rec.validation_risk)) {
      std::ostringstream msg;
      msg << "boosting diverged at iteration " << m << " (learner " << best_learner.meta().kind.label()
          << ", train risk " << rec.train_risk << ", validation risk " << rec.validation_risk << ")";
      throw FitError(msg.str());
    }
    trace.records.push_back(std::move(rec));
    trace.stopped_at = m;

    if (opt.patience == 0) continue;
    const double risk = trace.records.back().validation_risk;
    if (risk <= best_risk - opt.min_improvement) {
      best_risk = risk;
      trace.best_iteration = m;
      best_agg = agg;
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
    best_agg = std::move(agg);
    best_f = std::move(f);
    best_fv = std::move(fv);
  }
  for (auto& [idx, theta] : best_agg)
    model.learners.emplace(idx, FittedBaseLearner{learners[static_cast<std::size_t>(idx)].meta(), std::move(theta)});
  result.train_prediction = std::move(best_f);
  result.validation_prediction = std::move(best_fv);
  return result;
}

CwbResult cwb_fit(const std::vector<LearnerKind>& kinds, const Dataset& train, const Dataset& validation,
                  LossKind loss, double offset, const BoostOptions& options, double df) {
  const auto learners = prepare_learners(kinds, train, &validation, df);
  return cwb_fit(learners, train.target, validation.target, loss, Vector::Constant(train.n_rows(), offset),
                 Vector::Constant(validation.n_rows(), offset), options);
}

std::vector<Vector> one_vs_rest_targets(const Vector& classes, int n_classes) {
  std::vector<Vector> out(static_cast<std::size_t>(n_classes), Vector::Zero(classes.size()));
  for (Index i = 0; i < classes.size(); ++i) {
    const auto c = static_cast<int>(classes[i]);
    if (c < 0 || c >= n_classes) throw DataError("class index out of range");
    out[static_cast<std::size_t>(c)][i] = 1.0;
  }
  return out;
}

Matrix normalized_probabilities(const Matrix& scores) {
  Matrix p = scores.unaryExpr([](double s) { return sigmoid(s); });
  for (Index i = 0; i < p.rows(); ++i) {
    const double total = p.row(i).sum();
    if (total > 0.0)
      p.row(i) /= total;
    else
      p.row(i).setConstant(1.0 / static_cast<double>(p.cols()));
  }
  return p;
}

}  // namespace acwb
