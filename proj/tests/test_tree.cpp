#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "acwb/tree.hpp"
#include "test_util.hpp"

namespace acwb {
namespace {

double sse(const Vector& r, const Vector& f) { return (r - f).squaredNorm(); }

// Brute force over every single split of every numeric column.
double best_stump_sse(const Dataset& ds, const Vector& r) {
  double best = (r.array() - r.mean()).matrix().squaredNorm();
  for (const auto& c : ds.columns) {
    std::set<double> values(c.numeric.data(), c.numeric.data() + c.numeric.size());
    for (double t : values) {
      double sl = 0, nl = 0, sr = 0, nr = 0;
      for (Index i = 0; i < r.size(); ++i) {
        if (c.numeric[i] <= t) {
          sl += r[i];
          ++nl;
        } else {
          sr += r[i];
          ++nr;
        }
      }
      if (nl == 0 || nr == 0) continue;
      double s = 0;
      for (Index i = 0; i < r.size(); ++i) {
        const double m = c.numeric[i] <= t ? sl / nl : sr / nr;
        s += (r[i] - m) * (r[i] - m);
      }
      best = std::min(best, s);
    }
  }
  return best;
}

Dataset xor_grid(int copies) {
  Vector x1(4 * copies), x2(4 * copies), y(4 * copies);
  for (int c = 0; c < copies; ++c)
    for (int k = 0; k < 4; ++k) {
      const int i = 4 * c + k;
      x1[i] = (k & 1) ? 1.0 : -1.0;
      x2[i] = (k & 2) ? 1.0 : -1.0;
      y[i] = x1[i] * x2[i];
    }
  return test::make_dataset({test::numeric_column("x1", x1), test::numeric_column("x2", x2)}, y);
}

TEST(Tree, ConstantResidualsGiveOneLeaf) {
  Rng rng(1);
  const auto ds = test::make_dataset(test::numeric_columns(test::uniform_features(rng, 50, 3)), Vector::Zero(50));
  const auto t = fit_regression_tree(ds, Vector::Constant(50, 2.5), 4, 1);
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.nodes[0].value, 2.5);
  EXPECT_EQ(t.depth(), 0);
}

TEST(Tree, PerfectSplit) {
  Vector x(40), r(40);
  for (Index i = 0; i < 40; ++i) {
    x[i] = i % 2 ? 1.0 : -1.0;
    r[i] = x[i] > 0 ? 1.0 : 0.0;
  }
  const auto ds = test::make_dataset({test::numeric_column("x", x)}, r);
  const auto t = fit_regression_tree(ds, r, 1, 1);
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.nodes[0].threshold, 0.0);
  EXPECT_EQ(t.nodes[static_cast<std::size_t>(t.nodes[0].left)].value, 0.0);
  EXPECT_EQ(t.nodes[static_cast<std::size_t>(t.nodes[0].right)].value, 1.0);
}

TEST(Tree, DepthTwoSolvesProductDepthOneCannot) {
  const auto ds = xor_grid(25);
  const Vector& r = ds.target;
  const auto t2 = fit_regression_tree(ds, r, 2, 1);
  EXPECT_NEAR(sse(r, t2.predict(ds)), 0.0, 1e-12);
  EXPECT_LE(t2.depth(), 2);
  const auto t1 = fit_regression_tree(ds, r, 1, 1);
  const double oracle = best_stump_sse(ds, r);
  EXPECT_GT(oracle, 0.0);
  EXPECT_NEAR(sse(r, t1.predict(ds)), oracle, 1e-9);
}

TEST(Tree, StumpMatchesBruteForce) {
  Rng rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix x = test::uniform_features(rng, 60, 3);
    Vector r(60);
    for (Index i = 0; i < 60; ++i) r[i] = std::sin(3 * x(i, rep % 3)) + 0.3 * test::normal(rng);
    const auto ds = test::make_dataset(test::numeric_columns(x), r);
    const auto t = fit_regression_tree(ds, r, 1, 1);
    EXPECT_NEAR(sse(r, t.predict(ds)), best_stump_sse(ds, r), 1e-9);
  }
}

TEST(Tree, ThresholdsAreMidpoints) {
  Vector x(6), r(6);
  x << 0, 1, 2, 10, 11, 12;
  r << 0, 0, 0, 5, 5, 5;
  const auto ds = test::make_dataset({test::numeric_column("x", x)}, r);
  const auto t = fit_regression_tree(ds, r, 1, 1);
  EXPECT_EQ(t.nodes[0].threshold, 6.0);
}

TEST(Tree, CategoricalSplitGroupsLevelsByMean) {
  std::vector<std::int32_t> codes;
  Vector r(60);
  for (Index i = 0; i < 60; ++i) {
    const auto c = static_cast<std::int32_t>(i % 4);
    codes.push_back(c);
    r[i] = (c == 0 || c == 2) ? 3.0 : -1.0;
  }
  const auto ds = test::make_dataset({test::categorical_column("c", codes, {"a", "b", "c", "d"})}, r);
  const auto t = fit_regression_tree(ds, r, 1, 1);
  ASSERT_EQ(t.nodes[0].feature, 0);
  EXPECT_NEAR(sse(r, t.predict(ds)), 0.0, 1e-12);
  const auto& left = t.nodes[0].left_levels;
  EXPECT_EQ(left[0], left[2]);
  EXPECT_EQ(left[1], left[3]);
  EXPECT_NE(left[0], left[1]);
}

TEST(Tree, MinLeafRespected) {
  Rng rng(3);
  const Matrix x = test::uniform_features(rng, 200, 2);
  Vector r(200);
  for (Index i = 0; i < 200; ++i) r[i] = test::normal(rng);
  const auto ds = test::make_dataset(test::numeric_columns(x), r);
  TreeOptions opt;
  opt.max_depth = 6;
  opt.min_leaf = 15;
  const auto t = TreeFitter(ds).fit(r, opt);
  std::vector<int> count(t.nodes.size(), 0);
  for (Index i = 0; i < 200; ++i) {
    int k = 0;
    while (!t.nodes[static_cast<std::size_t>(k)].is_leaf()) {
      const auto& n = t.nodes[static_cast<std::size_t>(k)];
      k = ds.columns[static_cast<std::size_t>(n.feature)].numeric[i] <= n.threshold ? n.left : n.right;
    }
    ++count[static_cast<std::size_t>(k)];
  }
  for (std::size_t k = 0; k < t.nodes.size(); ++k)
    if (t.nodes[k].is_leaf()) {
      EXPECT_GE(count[k], 15);
    }
  EXPECT_LE(t.depth(), 6);
}

TEST(Tree, LeavesHoldMeanResidual) {
  Rng rng(4);
  const Matrix x = test::uniform_features(rng, 120, 2);
  Vector r(120);
  for (Index i = 0; i < 120; ++i) r[i] = x(i, 0) > 0 ? 2.0 + test::normal(rng) : test::normal(rng);
  const auto ds = test::make_dataset(test::numeric_columns(x), r);
  const auto t = fit_regression_tree(ds, r, 3, 5);
  const Vector f = t.predict(ds);
  std::map<double, std::pair<double, int>> by_leaf;
  for (Index i = 0; i < 120; ++i) {
    by_leaf[f[i]].first += r[i];
    ++by_leaf[f[i]].second;
  }
  for (const auto& [value, acc] : by_leaf) EXPECT_NEAR(value, acc.first / acc.second, 1e-12);
}

TEST(Tree, WeightsActAsMultiplicities) {
  Rng rng(5);
  const Matrix x = test::uniform_features(rng, 40, 2);
  Vector r(40), w(40);
  for (Index i = 0; i < 40; ++i) {
    r[i] = x(i, 0) * x(i, 1) + 0.1 * test::normal(rng);
    w[i] = static_cast<double>(rng.below(3));
  }
  const auto ds = test::make_dataset(test::numeric_columns(x), r);
  std::vector<Index> rows;
  for (Index i = 0; i < 40; ++i)
    for (int k = 0; k < static_cast<int>(w[i]); ++k) rows.push_back(i);
  const auto expanded = ds.take(rows);
  TreeOptions opt;
  opt.max_depth = 3;
  opt.min_leaf = 2;
  const auto a = TreeFitter(ds).fit(r, opt, w);
  const auto b = TreeFitter(expanded).fit(expanded.target, opt);
  ASSERT_EQ(a.nodes.size(), b.nodes.size());
  for (std::size_t k = 0; k < a.nodes.size(); ++k) {
    EXPECT_EQ(a.nodes[k].feature, b.nodes[k].feature);
    EXPECT_EQ(a.nodes[k].threshold, b.nodes[k].threshold);
    EXPECT_NEAR(a.nodes[k].value, b.nodes[k].value, 1e-12);
  }
}

TEST(Tree, PredictionIsPiecewiseConstant) {
  Rng rng(6);
  const Matrix x = test::uniform_features(rng, 300, 2);
  Vector r(300);
  for (Index i = 0; i < 300; ++i) r[i] = std::sin(4 * x(i, 0)) + x(i, 1);
  const auto ds = test::make_dataset(test::numeric_columns(x), r);
  const auto t = fit_regression_tree(ds, r, 4, 5);
  const Vector f = t.predict(ds);
  std::set<double> distinct(f.data(), f.data() + f.size());
  EXPECT_LE(distinct.size(), 16u);
  Vector g = Vector::Zero(300);
  t.add_prediction(ds, g, 0.5);
  EXPECT_LT((g - 0.5 * f).cwiseAbs().maxCoeff(), 1e-15);
}

}  // namespace
}  // namespace acwb
