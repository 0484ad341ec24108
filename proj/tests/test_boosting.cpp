#include <gtest/gtest.h>

#include <cmath>

#include "acwb/boosting.hpp"
#include "acwb/stages.hpp"
#include "test_util.hpp"

namespace acwb {
namespace {

BoostOptions fixed_iterations(int m, double nu = 0.1) {
  BoostOptions o;
  o.nu = nu;
  o.max_iters = m;
  o.patience = 0;
  return o;
}

// Random regression or binary task with numeric and categorical features.
struct Task {
  Dataset train;
  Dataset validation;
  std::vector<LearnerKind> kinds;
  LossKind loss = LossKind::squared_error;
};

Task random_task(std::uint64_t seed, Index n = 200) {
  Rng rng(seed);
  const Index p = 2 + static_cast<Index>(rng.below(3));
  const Matrix x = test::uniform_features(rng, n, p);
  std::vector<std::int32_t> codes(static_cast<std::size_t>(n));
  for (auto& c : codes) c = static_cast<std::int32_t>(rng.below(4));
  Vector eta(n);
  for (Index i = 0; i < n; ++i)
    eta[i] = std::sin(3.0 * x(i, 0)) + x(i, 1) * (seed % 3) + 0.5 * codes[static_cast<std::size_t>(i)] -
             0.7 * (x.cols() > 2 ? x(i, 2) * x(i, 2) : 0.0);
  Task t;
  t.loss = seed % 2 ? LossKind::binomial : LossKind::squared_error;
  Vector y(n);
  if (t.loss == LossKind::binomial)
    y = test::binary_labels(rng, eta);
  else
    for (Index i = 0; i < n; ++i) y[i] = eta[i] + 0.3 * test::normal(rng);
  auto cols = test::numeric_columns(x);
  cols.push_back(test::categorical_column("c", codes, {"a", "b", "c", "d"}));
  const auto ds = test::make_dataset(cols, y, t.loss == LossKind::binomial ? acwb::Task::binary_classification
                                                                           : acwb::Task::regression);
  auto parts = split(ds, {0.25, seed, false});
  t.train = std::move(parts.train);
  t.validation = std::move(parts.validation);
  t.kinds = univariate_learners(t.train);
  return t;
}

CwbResult fit_task(const Task& t, const BoostOptions& opt) {
  return cwb_fit(t.kinds, t.train, t.validation, t.loss, init_offset(t.loss, t.train.target), opt);
}

TEST(Cwb, OneStepIsOls) {
  Rng rng(1);
  Vector x(80), y(80);
  for (Index i = 0; i < 80; ++i) {
    x[i] = rng.uniform();
    y[i] = 1.0 + 2.0 * x[i] + 0.2 * test::normal(rng);
  }
  const auto ds = test::make_dataset({test::numeric_column("x", x)}, y);
  const auto learners = prepare_learners({{LearnerType::linear, {"x"}}}, ds, nullptr, 5.0);
  const auto res = cwb_fit(learners, y, Vector(), LossKind::squared_error, Vector::Zero(80), Vector(),
                           fixed_iterations(1, 1.0));
  Matrix X(80, 2);
  X.col(0).setOnes();
  X.col(1) = x;
  const Vector ols = X.colPivHouseholderQr().solve(y);
  EXPECT_LT((res.train_prediction - X * ols).cwiseAbs().maxCoeff(), 1e-10);
  const Vector resid = y - res.train_prediction;
  EXPECT_LT((X.transpose() * resid).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Cwb, TrainingRiskNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = random_task(seed);
    const auto res = fit_task(t, fixed_iterations(150));
    double prev = res.model.trace.initial_train_risk;
    for (const auto& rec : res.model.trace.records) {
      EXPECT_LE(rec.train_risk, prev + 1e-12) << "seed " << seed << " iteration " << rec.iteration;
      prev = rec.train_risk;
    }
  }
}

TEST(Cwb, InformativeFeatureSelectedFirst) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 1000);
    Vector x1(100), x2(100), y(100);
    for (Index i = 0; i < 100; ++i) {
      x1[i] = test::normal(rng);
      x2[i] = test::normal(rng);
      y[i] = 3.0 * x1[i] + test::normal(rng);
    }
    const auto ds = test::make_dataset({test::numeric_column("x1", x1), test::numeric_column("x2", x2)}, y);
    const auto learners =
        prepare_learners({{LearnerType::linear, {"x1"}}, {LearnerType::linear, {"x2"}}}, ds, nullptr, 5.0);
    const auto res = cwb_fit(learners, y, Vector(), LossKind::squared_error, Vector::Constant(100, y.mean()),
                             Vector(), fixed_iterations(1));
    hits += res.model.trace.records[0].learner == 0;
  }
  EXPECT_GE(hits, 95);
}

TEST(Cwb, TiesGoToLowestIndex) {
  Vector x = Vector::LinSpaced(50, 0.0, 1.0);
  const auto ds = test::make_dataset({test::numeric_column("a", x), test::numeric_column("b", x)}, 2.0 * x);
  const auto learners =
      prepare_learners({{LearnerType::linear, {"a"}}, {LearnerType::linear, {"b"}}}, ds, nullptr, 5.0);
  const auto res = cwb_fit(learners, ds.target, Vector(), LossKind::squared_error, Vector::Zero(50), Vector(),
                           fixed_iterations(5));
  for (const auto& rec : res.model.trace.records) EXPECT_EQ(rec.learner, 0);
}

TEST(Aggregate, SumsScaledCoefficients) {
  const auto t = random_task(2);
  const auto learners = prepare_learners(t.kinds, t.train, nullptr, 5.0);
  StageModel stage;
  stage.nu = 0.1;
  for (const auto& l : learners) stage.candidates.push_back(l.meta().kind);
  const Index w0 = learners[0].width();
  const Index w1 = learners[1].width();
  const Vector th1 = Vector::LinSpaced(w0, 1.0, 2.0);
  const Vector th2 = Vector::LinSpaced(w0, -3.0, 0.5);
  const Vector other = Vector::Ones(w1);
  const std::vector<std::pair<int, Vector>> steps = {{0, th1}, {1, other}, {1, other}, {0, th2}};
  for (std::size_t m = 0; m < steps.size(); ++m) {
    IterationRecord rec;
    rec.iteration = static_cast<int>(m + 1);
    rec.learner = steps[m].first;
    rec.theta = steps[m].second;
    stage.trace.records.push_back(rec);
  }
  stage.trace.best_iteration = 4;
  stage.learners.emplace(0, FittedBaseLearner{learners[0].meta(), Vector()});
  stage.learners.emplace(1, FittedBaseLearner{learners[1].meta(), Vector()});
  const auto agg = aggregate(stage);
  ASSERT_EQ(agg.size(), 2u);
  EXPECT_LT((agg.at(0).theta - 0.1 * (th1 + th2)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(agg.count(2), 0u);
}

TEST(Aggregate, ReplayIdentity) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto t = random_task(seed, 200);
    BoostOptions opt;
    opt.patience = 2;
    const auto res = fit_task(t, opt);
    const auto& stage = res.model;
    const Vector via_map = stage.predict(t.train);
    const Vector replay = replay_prediction(stage, t.train);
    EXPECT_LT((via_map - replay).cwiseAbs().maxCoeff(), 1e-10);
    const double offset = init_offset(t.loss, t.train.target);
    EXPECT_LT((via_map.array() + offset - res.train_prediction.array()).abs().maxCoeff(), 1e-10);
    const auto agg = aggregate(stage);
    ASSERT_EQ(agg.size(), stage.learners.size());
    for (const auto& [k, fl] : agg) EXPECT_LT((fl.theta - stage.learners.at(k).theta).cwiseAbs().maxCoeff(), 1e-10);
    const Vector val = stage.predict(t.validation);
    EXPECT_LT((val.array() + offset - res.validation_prediction.array()).abs().maxCoeff(), 1e-10);
  }
}

TEST(Trace, LoggedRiskMatchesReplay) {
  const auto t = random_task(5);
  const auto res = fit_task(t, fixed_iterations(40));
  const double offset = init_offset(t.loss, t.train.target);
  StageModel partial = res.model;
  for (int m = 1; m <= res.model.trace.stopped_at; ++m) {
    partial.trace.best_iteration = m;
    const Vector f = replay_prediction(partial, t.train).array() + offset;
    const auto& rec = res.model.trace.records[static_cast<std::size_t>(m - 1)];
    EXPECT_NEAR(rec.train_risk, empirical_risk(t.loss, t.train.target, f), 1e-10);
    const Vector fv = replay_prediction(partial, t.validation).array() + offset;
    EXPECT_NEAR(rec.validation_risk, empirical_risk(t.loss, t.validation.target, fv), 1e-10);
  }
}

TEST(Trace, EarlyStoppingInvariant) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = random_task(seed);
    BoostOptions opt;
    opt.patience = 1 + static_cast<int>(seed % 4);
    const auto res = fit_task(t, opt);
    const auto& tr = res.model.trace;
    double best = tr.initial_validation_risk;
    int best_it = 0;
    int run = 0;
    for (const auto& rec : tr.records) {
      if (rec.validation_risk <= best - opt.min_improvement) {
        best = rec.validation_risk;
        best_it = rec.iteration;
        run = 0;
      } else {
        ++run;
        if (rec.iteration < tr.stopped_at) {
          EXPECT_LT(run, opt.patience) << "seed " << seed;
        }
      }
    }
    EXPECT_EQ(tr.best_iteration, best_it);
    EXPECT_EQ(static_cast<int>(tr.records.size()), tr.stopped_at);
    if (tr.stop_reason == StopReason::patience) {
      EXPECT_EQ(run, opt.patience);
    }
    EXPECT_NEAR(tr.final_validation_risk(), best, 0.0);
  }
}

TEST(Cwb, SelectionInvariantToFeatureScaling) {
  const auto t = random_task(4, 100);
  Task scaled = t;
  const double factors[] = {3.0, 0.01, 250.0};
  for (auto* part : {&scaled.train, &scaled.validation}) {
    int j = 0;
    for (auto& c : part->columns)
      if (c.is_numeric()) c.numeric *= factors[j++ % 3];
  }
  const auto a = fit_task(t, fixed_iterations(60));
  const auto b = fit_task(scaled, fixed_iterations(60));
  ASSERT_EQ(a.model.trace.records.size(), b.model.trace.records.size());
  for (std::size_t m = 0; m < a.model.trace.records.size(); ++m)
    EXPECT_EQ(a.model.trace.records[m].learner, b.model.trace.records[m].learner) << "iteration " << m + 1;
  EXPECT_LT((a.train_prediction - b.train_prediction).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Cwb, InputValidation) {
  const auto t = random_task(6);
  BoostOptions bad;
  bad.nu = 0.0;
  EXPECT_THROW(fit_task(t, bad), ConfigError);
  const auto learners = prepare_learners(t.kinds, t.train, nullptr, 5.0);
  BoostOptions needs_val;
  EXPECT_THROW(cwb_fit(learners, t.train.target, Vector(), t.loss, Vector::Zero(t.train.n_rows()), Vector(), needs_val),
               ConfigError);
  EXPECT_THROW(cwb_fit(std::vector<PreparedLearner>{}, t.train.target, Vector(), t.loss,
                       Vector::Zero(t.train.n_rows()), Vector(), fixed_iterations(3)),
               FitError);
}

TEST(OneVsRest, OneModelPerClass) {
  Vector classes(9);
  classes << 0, 1, 2, 0, 1, 2, 0, 1, 2;
  int calls = 0;
  const auto models = one_vs_rest<double>(classes, 3, [&](int c, const Vector& y) {
    ++calls;
    EXPECT_EQ(y.sum(), 3.0);
    return static_cast<double>(c);
  });
  EXPECT_EQ(models.size(), 3u);
  EXPECT_EQ(calls, 3);
  Vector missing(4);
  missing << 0, 1, 0, 1;
  EXPECT_THROW(one_vs_rest<double>(missing, 3, [](int, const Vector&) { return 0.0; }), FitError);
  EXPECT_THROW(one_vs_rest<double>(missing, 2, [](int, const Vector&) { return 0.0; }), ConfigError);
}

TEST(OneVsRest, ProbabilitiesSumToOne) {
  Rng rng(7);
  Matrix scores(200, 4);
  for (Index i = 0; i < scores.rows(); ++i)
    for (Index j = 0; j < 4; ++j) scores(i, j) = 20.0 * test::normal(rng);
  const Matrix p = normalized_probabilities(scores);
  for (Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
}

TEST(OneVsRest, SeparableClassesAreLearned) {
  Rng rng(8);
  const Index n = 600;
  Vector x(n), z(n), cls(n);
  for (Index i = 0; i < n; ++i) {
    const auto c = static_cast<int>(i % 3);
    x[i] = 0.4 * c + 0.2 * rng.uniform();
    z[i] = rng.uniform();
    cls[i] = c;
  }
  const auto ds = test::make_dataset({test::numeric_column("x", x), test::numeric_column("z", z)}, cls,
                                     acwb::Task::multiclass_classification);
  AcwbConfig cfg;
  cfg.interactions = false;
  cfg.deep = false;
  cfg.nu = 0.5;
  cfg.patience = 20;
  const auto model = fit_acwb(ds, cfg);
  EXPECT_EQ(model.components.size(), 3u);
  const auto pred = predict_full(model, ds);
  for (Index i = 0; i < n; ++i) {
    EXPECT_EQ(pred.predicted[static_cast<std::size_t>(i)], static_cast<int>(cls[i])) << "row " << i;
    EXPECT_NEAR(pred.probabilities.row(i).sum(), 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace acwb
