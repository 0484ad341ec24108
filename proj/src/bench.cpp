#include "acwb/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

namespace acwb {

std::string Variant::name() const {
  std::string n = deep ? "ACWB_deep" : "ACWB";
  return hpo ? n : n + "_no_HPO";
}

Variant variant_from_string(std::string_view s) {
  for (const auto& v : all_variants())
    if (v.name() == s) return v;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected ACWB, ACWB_deep, ACWB_no_HPO or ACWB_deep_no_HPO)");
}

std::vector<Variant> all_variants() { return {{false, true}, {true, true}, {true, false}, {false, false}}; }

double auc(const Vector& scores, const Vector& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  const Index n = scores.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  double pos = 0.0;
  for (Index i = 0; i < n;) {
    Index j = i;
    while (j < n && scores[order[static_cast<std::size_t>(j)]] == scores[order[static_cast<std::size_t>(i)]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (Index k = i; k < j; ++k)
      if (labels[order[static_cast<std::size_t>(k)]] > 0.5) {
        rank_sum += midrank;
        pos += 1.0;
      }
    i = j;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw DataError("AUC needs both classes");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double log_loss(const Matrix& probabilities, const Vector& classes) {
  if (probabilities.rows() != classes.size()) throw std::invalid_argument("probabilities and classes differ in length");
  if (classes.size() == 0) return 0.0;
  double acc = 0.0;
  for (Index i = 0; i < classes.size(); ++i) {
    const auto c = static_cast<Index>(classes[i]);
    acc -= std::log(std::clamp(probabilities(i, c), 1e-15, 1.0 - 1e-15));
  }
  return acc / static_cast<double>(classes.size());
}

std::vector<std::vector<Index>> stratified_folds(const Dataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs at least two folds");
  if (ds.n_rows() < k) throw DataError("fewer rows than folds");
  auto groups = rows_by_class(ds);
  if (groups.empty()) {
    groups.emplace_back(static_cast<std::size_t>(ds.n_rows()));
    std::iota(groups[0].begin(), groups[0].end(), Index{0});
  }
  std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
  Rng rng(seed);
  std::size_t offset = 0;
  for (auto& g : groups) {
    for (std::size_t i = g.size(); i > 1; --i) std::swap(g[i - 1], g[static_cast<std::size_t>(rng.below(i))]);
    // Continue the round-robin across classes so fold sizes stay balanced.
    for (std::size_t i = 0; i < g.size(); ++i) folds[(offset + i) % static_cast<std::size_t>(k)].push_back(g[i]);
    offset += g.size();
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

BenchResult cross_validate(const Dataset& ds, const std::string& name, const BenchOptions& opt) {
  if (ds.task() == Task::regression) throw ConfigError("benchmarking needs a classification task");
  const auto start = std::chrono::steady_clock::now();
  BenchResult res;
  res.dataset = name;
  res.variant = opt.variant.name();
  res.metric = ds.task() == Task::binary_classification ? "auc" : "logloss";
  const auto folds = stratified_folds(ds, opt.folds, opt.seed);
  res.fold_scores.assign(folds.size(), 0.0);

  parallel_for(0, static_cast<Index>(folds.size()), [&](Index f) {
    const auto& test_rows = folds[static_cast<std::size_t>(f)];
    std::vector<char> in_test(static_cast<std::size_t>(ds.n_rows()), 0);
    for (Index i : test_rows) in_test[static_cast<std::size_t>(i)] = 1;
    std::vector<Index> train_rows;
    for (Index i = 0; i < ds.n_rows(); ++i)
      if (!in_test[static_cast<std::size_t>(i)]) train_rows.push_back(i);
    const Dataset train = ds.take(train_rows);
    const Dataset test = ds.take(test_rows);

    AcwbConfig cfg = opt.config;
    cfg.deep = opt.variant.deep;
    cfg.interactions = true;
    cfg.seed = mix_seed(opt.seed, 1000 + static_cast<std::uint64_t>(f));
    if (opt.variant.hpo) {
      const auto schedule = make_schedule(opt.r_min, 1.0, opt.eta);
      const auto tuned = hyperband(schedule, make_evaluator(train, cfg, cfg.seed), cfg.seed, opt.max_minutes_per_fold);
      cfg.nu = tuned.best.nu;
      cfg.psi = tuned.best.psi;
    }
    const AcwbModel model = fit_acwb(train, cfg);
    const Dataset processed = apply_recipe(test, model.recipe);
    const Prediction pred = predict_processed(model, processed);
    const double score = res.metric == "auc" ? auc(pred.scores.col(0), processed.target)
                                             : log_loss(pred.probabilities, processed.target);
    res.fold_scores[static_cast<std::size_t>(f)] = score;
  });

  res.mean = std::accumulate(res.fold_scores.begin(), res.fold_scores.end(), 0.0) /
             static_cast<double>(res.fold_scores.size());
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

std::optional<double> reference_auc(const std::string& dataset, const std::string& variant) {
  // Columns: ACWB, ACWB_deep, ACWB_deep_no_HPO, ACWB_no_HPO.
  static const std::map<std::string, std::array<double, 4>> table = {
      {"adult", {0.900, 0.904, 0.911, 0.911}},
      {"blood-transfusion", {0.755, 0.750, 0.749, 0.725}},
      {"credit-g", {0.763, 0.755, 0.760, 0.768}},
  };
  static const std::map<std::string, std::size_t> column = {
      {"ACWB", 0}, {"ACWB_deep", 1}, {"ACWB_deep_no_HPO", 2}, {"ACWB_no_HPO", 3}};
  auto row = table.find(dataset);
  auto col = column.find(variant);
  if (row == table.end() || col == column.end()) return std::nullopt;
  return row->second[col->second];
}

std::vector<ReportRow> report_table(const std::vector<BenchResult>& results, double tolerance) {
  std::vector<ReportRow> rows;
  for (const auto& r : results) {
    ReportRow row;
    row.dataset = r.dataset;
    row.variant = r.variant;
    row.measured = r.mean;
    if (r.metric == "auc") {
      row.reference = reference_auc(r.dataset, "ACWB");
      row.variant_reference = reference_auc(r.dataset, r.variant);
    }
    if (row.reference) {
      row.delta = row.measured - *row.reference;
      row.flagged = std::abs(row.delta) > tolerance;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace acwb
