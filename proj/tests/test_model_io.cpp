#include <gtest/gtest.h>

#include <sstream>

#include "acwb/model_io.hpp"
#include "test_util.hpp"

namespace acwb {
namespace {

Dataset mixed(std::uint64_t seed, Index n, Task task) {
  Rng rng(seed);
  const Matrix x = test::uniform_features(rng, n, 3);
  std::vector<std::int32_t> g(static_cast<std::size_t>(n));
  Vector eta(n);
  for (Index i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(rng.below(3));
    eta[i] = 2.0 * x(i, 0) + std::sin(3.0 * x(i, 1)) + x(i, 1) * x(i, 2) + 0.5 * g[static_cast<std::size_t>(i)];
  }
  Vector y(n);
  if (task == Task::regression) {
    for (Index i = 0; i < n; ++i) y[i] = eta[i] + 0.3 * test::normal(rng);
  } else if (task == Task::binary_classification) {
    y = test::binary_labels(rng, eta.array() - eta.mean());
  } else {
    for (Index i = 0; i < n; ++i) y[i] = eta[i] < 0.0 ? 0 : (eta[i] < 1.2 ? 1 : 2);
  }
  auto cols = test::numeric_columns(x);
  cols.push_back(test::categorical_column("g", g, {"a", "b", "c"}));
  // Missing values exercise the stored imputation.
  cols[0].numeric[3] = std::numeric_limits<double>::quiet_NaN();
  cols[3].codes[5] = kMissingCode;
  return test::make_dataset(cols, y, task);
}

void expect_same_predictions(const AcwbModel& a, const AcwbModel& b, const Dataset& ds) {
  const auto pa = predict_full(a, ds);
  const auto pb = predict_full(b, ds);
  ASSERT_EQ(pa.scores.rows(), pb.scores.rows());
  ASSERT_EQ(pa.scores.cols(), pb.scores.cols());
  for (Index i = 0; i < pa.scores.rows(); ++i)
    for (Index j = 0; j < pa.scores.cols(); ++j)
      EXPECT_LE(std::abs(pa.scores(i, j) - pb.scores(i, j)), 1e-12 * std::max(1.0, std::abs(pa.scores(i, j))));
  EXPECT_EQ(pa.predicted, pb.predicted);
}

TEST(ModelIo, RoundTripAllTasks) {
  const std::string dir = test::tmp_dir("model_io");
  for (Task task : {Task::regression, Task::binary_classification, Task::multiclass_classification}) {
    const auto ds = mixed(1, 500, task);
    AcwbConfig cfg;
    cfg.rf_trees = 100;
    const auto model = fit_acwb(ds, cfg);
    const std::string path = dir + "/model" + std::to_string(static_cast<int>(task)) + kModelExtension;
    save_model(model, path);
    const auto loaded = load_model(path);
    EXPECT_EQ(loaded.task(), model.task());
    EXPECT_EQ(loaded.components.size(), model.components.size());
    EXPECT_EQ(loaded.feature_names(), model.feature_names());
    expect_same_predictions(model, loaded, ds);
    expect_same_predictions(model, loaded, mixed(2, 200, task));
    // A second save of the loaded model is byte-identical.
    std::ostringstream a, b;
    save_model(model, a);
    save_model(loaded, b);
    EXPECT_EQ(a.str(), b.str());
  }
}

TEST(ModelIo, TruncatedFileIsRejected) {
  const auto ds = mixed(3, 200, Task::regression);
  AcwbConfig cfg;
  cfg.deep = false;
  cfg.rf_trees = 50;
  std::ostringstream out;
  save_model(fit_acwb(ds, cfg), out);
  const std::string text = out.str();
  try {
    load_model_from_string(text.substr(0, text.size() / 2));
    FAIL() << "truncated model accepted";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_model_from_string(""), DataError);
  EXPECT_THROW(load_model_from_string("{}"), DataError);
  EXPECT_THROW(load_model("/nonexistent/dir/model.acwb"), DataError);
}

TEST(ModelIo, VersionMismatchNamesBothVersions) {
  const auto ds = mixed(4, 150, Task::regression);
  AcwbConfig cfg;
  cfg.interactions = false;
  cfg.deep = false;
  std::ostringstream out;
  save_model(fit_acwb(ds, cfg), out);
  std::string text = out.str();
  const auto key = text.find("\"format_version\"");
  ASSERT_NE(key, std::string::npos);
  const auto digits = text.find_first_of("0123456789", key);
  const auto end = text.find_first_not_of("0123456789", digits);
  ASSERT_EQ(text.substr(digits, end - digits), std::to_string(kModelFormatVersion));
  text.replace(digits, end - digits, std::to_string(kModelFormatVersion + 1));
  try {
    load_model_from_string(text);
    FAIL() << "future version accepted";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(std::to_string(kModelFormatVersion + 1)), std::string::npos) << msg;
    EXPECT_NE(msg.find(std::to_string(kModelFormatVersion)), std::string::npos) << msg;
  }
}

}  // namespace
}  // namespace acwb
