#include "acwb/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace acwb {

double RegressionTree::predict_row(const Dataset& ds, Index row) const {
  int k = 0;
  while (!nodes[static_cast<std::size_t>(k)].is_leaf()) {
    const TreeNode& node = nodes[static_cast<std::size_t>(k)];
    const Column& col = ds.columns[static_cast<std::size_t>(node.feature)];
    bool go_left;
    if (col.is_numeric()) {
      go_left = col.numeric[row] <= node.threshold;
    } else {
      const auto code = col.codes[static_cast<std::size_t>(row)];
      go_left = code >= 0 && static_cast<std::size_t>(code) < node.left_levels.size() &&
                node.left_levels[static_cast<std::size_t>(code)] != 0;
    }
    k = go_left ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(k)].value;
}

Vector RegressionTree::predict(const Dataset& ds) const {
  Vector out(ds.n_rows());
  for (Index i = 0; i < out.size(); ++i) out[i] = predict_row(ds, i);
  return out;
}

void RegressionTree::add_prediction(const Dataset& ds, Vector& f, double scale) const {
  for (Index i = 0; i < f.size(); ++i) f[i] += scale * predict_row(ds, i);
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    best = std::max(best, d[k]);
    if (!nodes[k].is_leaf()) {
      d[static_cast<std::size_t>(nodes[k].left)] = d[k] + 1;
      d[static_cast<std::size_t>(nodes[k].right)] = d[k] + 1;
    }
  }
  return best;
}

TreeFitter::TreeFitter(const Dataset& ds) : n_(ds.n_rows()) {
  columns_.reserve(ds.columns.size());
  for (const auto& c : ds.columns) {
    FeatureData fd;
    fd.numeric = c.is_numeric();
    if (fd.numeric) {
      fd.values = &c.numeric;
      fd.order.resize(static_cast<std::size_t>(n_));
      std::iota(fd.order.begin(), fd.order.end(), Index{0});
      std::stable_sort(fd.order.begin(), fd.order.end(),
                       [&](Index a, Index b) { return c.numeric[a] < c.numeric[b]; });
    } else {
      fd.codes = &c.codes;
      fd.n_levels = static_cast<int>(c.schema.levels.size());
    }
    columns_.push_back(std::move(fd));
  }
}

namespace {

struct Candidate {
  double gain = -std::numeric_limits<double>::infinity();
  int feature = -1;
  double threshold = 0.0;
  std::vector<std::uint8_t> left_levels;
};

struct Frontier {
  int node = 0;  // index into tree.nodes
  double sum = 0.0;
  double sum_sq = 0.0;
  double weight = 0.0;
  std::vector<char> allowed;  // per-feature
  Candidate best;
};

double split_gain(double sl, double wl, double s, double w) {
  const double sr = s - sl;
  const double wr = w - wl;
  return sl * sl / wl + sr * sr / wr - s * s / w;
}

}  // namespace

RegressionTree TreeFitter::fit(const Vector& r, const TreeOptions& opt, const Vector& weights, Rng* rng) const {
  if (r.size() != n_) throw std::invalid_argument("residual length does not match the dataset");
  if (weights.size() != 0 && weights.size() != n_) throw std::invalid_argument("weight length does not match");
  const int p = n_features();
  const double min_leaf = std::max(1, opt.min_leaf);
  const int mtry = opt.features_per_split <= 0 ? p : std::min(opt.features_per_split, p);
  auto w = [&](Index i) { return weights.size() ? weights[i] : 1.0; };

  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<int> slot(static_cast<std::size_t>(n_), -1);  // frontier slot per row, -1 = settled
  Frontier root;
  for (Index i = 0; i < n_; ++i) {
    if (w(i) <= 0.0) continue;
    slot[static_cast<std::size_t>(i)] = 0;
    root.sum += w(i) * r[i];
    root.sum_sq += w(i) * r[i] * r[i];
    root.weight += w(i);
  }
  if (root.weight <= 0.0) return tree;
  tree.nodes[0].value = root.sum / root.weight;
  std::vector<Frontier> frontier{root};

  std::vector<int> perm(static_cast<std::size_t>(p));
  std::vector<double> sum_l, w_l, last;
  std::vector<char> seen;
  for (int depth = 0; depth < opt.max_depth && !frontier.empty(); ++depth) {
    const std::size_t K = frontier.size();
    for (auto& fr : frontier) {
      fr.allowed.assign(static_cast<std::size_t>(p), 0);
      if (mtry == p || rng == nullptr) {
        std::fill(fr.allowed.begin(), fr.allowed.end(), 1);
      } else {
        std::iota(perm.begin(), perm.end(), 0);
        for (int a = 0; a < mtry; ++a) {
          const auto b = a + static_cast<int>(rng->below(static_cast<std::uint64_t>(p - a)));
          std::swap(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
          fr.allowed[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])] = 1;
        }
      }
    }

    for (int f = 0; f < p; ++f) {
      const FeatureData& fd = columns_[static_cast<std::size_t>(f)];
      bool any = false;
      for (const auto& fr : frontier) any = any || fr.allowed[static_cast<std::size_t>(f)];
      if (!any) continue;
      if (fd.numeric) {
        sum_l.assign(K, 0.0);
        w_l.assign(K, 0.0);
        last.assign(K, 0.0);
        const Vector& x = *fd.values;
        for (Index i : fd.order) {
          const int s = slot[static_cast<std::size_t>(i)];
          if (s < 0) continue;
          Frontier& fr = frontier[static_cast<std::size_t>(s)];
          if (!fr.allowed[static_cast<std::size_t>(f)]) continue;
          const double v = x[i];
          const auto ks = static_cast<std::size_t>(s);
          if (w_l[ks] > 0.0 && v > last[ks] && w_l[ks] >= min_leaf && fr.weight - w_l[ks] >= min_leaf) {
            const double g = split_gain(sum_l[ks], w_l[ks], fr.sum, fr.weight);
            if (g > fr.best.gain) {
              double thr = 0.5 * (last[ks] + v);
              if (!(thr < v)) thr = last[ks];
              fr.best.gain = g;
              fr.best.feature = f;
              fr.best.threshold = thr;
              fr.best.left_levels.clear();
            }
          }
          sum_l[ks] += w(i) * r[i];
          w_l[ks] += w(i);
          last[ks] = v;
        }
      } else {
        const auto L = static_cast<std::size_t>(fd.n_levels);
        std::vector<double> lsum(K * L, 0.0), lw(K * L, 0.0);
        const auto& codes = *fd.codes;
        for (Index i = 0; i < n_; ++i) {
          const int s = slot[static_cast<std::size_t>(i)];
          if (s < 0 || !frontier[static_cast<std::size_t>(s)].allowed[static_cast<std::size_t>(f)]) continue;
          const auto c = codes[static_cast<std::size_t>(i)];
          if (c < 0) continue;
          const std::size_t idx = static_cast<std::size_t>(s) * L + static_cast<std::size_t>(c);
          lsum[idx] += w(i) * r[i];
          lw[idx] += w(i);
        }
        std::vector<std::size_t> levels;
        for (std::size_t ks = 0; ks < K; ++ks) {
          Frontier& fr = frontier[ks];
          if (!fr.allowed[static_cast<std::size_t>(f)]) continue;
          levels.clear();
          for (std::size_t l = 0; l < L; ++l)
            if (lw[ks * L + l] > 0.0) levels.push_back(l);
          if (levels.size() < 2) continue;
          // Ordering levels by mean response makes the best prefix the best
          // binary partition under squared error.
          std::stable_sort(levels.begin(), levels.end(), [&](std::size_t a, std::size_t b) {
            return lsum[ks * L + a] / lw[ks * L + a] < lsum[ks * L + b] / lw[ks * L + b];
          });
          double sl = 0.0, wl = 0.0;
          for (std::size_t t = 0; t + 1 < levels.size(); ++t) {
            sl += lsum[ks * L + levels[t]];
            wl += lw[ks * L + levels[t]];
            if (wl < min_leaf || fr.weight - wl < min_leaf) continue;
            const double g = split_gain(sl, wl, fr.sum, fr.weight);
            if (g > fr.best.gain) {
              fr.best.gain = g;
              fr.best.feature = f;
              fr.best.left_levels.assign(L, 0);
              for (std::size_t u = 0; u <= t; ++u) fr.best.left_levels[levels[u]] = 1;
            }
          }
        }
      }
    }

    // Apply the chosen splits and build the next frontier.
    std::vector<Frontier> next;
    std::vector<int> left_slot(K, -1), right_slot(K, -1);
    for (std::size_t ks = 0; ks < K; ++ks) {
      Frontier& fr = frontier[ks];
      // Impure nodes take their best split even at zero gain (as CART does),
      // so that XOR-like structure below a flat split stays reachable.
      const double impurity = fr.sum_sq - fr.sum * fr.sum / fr.weight;
      if (fr.best.feature < 0 || !(impurity > 1e-12 * std::max(1.0, fr.sum_sq))) continue;
      TreeNode& node = tree.nodes[static_cast<std::size_t>(fr.node)];
      node.feature = fr.best.feature;
      node.threshold = fr.best.threshold;
      node.left_levels = std::move(fr.best.left_levels);
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      Frontier lf, rf;
      lf.node = node.left;
      rf.node = node.right;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      left_slot[ks] = static_cast<int>(next.size());
      next.push_back(std::move(lf));
      right_slot[ks] = static_cast<int>(next.size());
      next.push_back(std::move(rf));
    }
    for (Index i = 0; i < n_; ++i) {
      int& s = slot[static_cast<std::size_t>(i)];
      if (s < 0) continue;
      const auto ks = static_cast<std::size_t>(s);
      if (left_slot[ks] < 0) {
        s = -1;
        continue;
      }
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(frontier[ks].node)];
      const FeatureData& fd = columns_[static_cast<std::size_t>(node.feature)];
      bool go_left;
      if (fd.numeric) {
        go_left = (*fd.values)[i] <= node.threshold;
      } else {
        const auto c = (*fd.codes)[static_cast<std::size_t>(i)];
        go_left = c >= 0 && static_cast<std::size_t>(c) < node.left_levels.size() &&
                  node.left_levels[static_cast<std::size_t>(c)] != 0;
      }
      s = go_left ? left_slot[ks] : right_slot[ks];
      Frontier& child = next[static_cast<std::size_t>(s)];
      child.sum += w(i) * r[i];
      child.sum_sq += w(i) * r[i] * r[i];
      child.weight += w(i);
    }
    for (auto& child : next) tree.nodes[static_cast<std::size_t>(child.node)].value = child.sum / child.weight;
    frontier = std::move(next);
  }
  return tree;
}

RegressionTree fit_regression_tree(const Dataset& ds, const Vector& residuals, int max_depth, int min_leaf) {
  TreeOptions opt;
  opt.max_depth = max_depth;
  opt.min_leaf = min_leaf;
  return TreeFitter(ds).fit(residuals, opt);
}

}  // namespace acwb
