#ifndef ACWB_BENCH_HPP_
#define ACWB_BENCH_HPP_

#include <optional>
#include <string>
#include <vector>

#include "acwb/hpo.hpp"
#include "acwb/stages.hpp"

namespace acwb {

// The four configurations: with or without the deep stage, with or without tuning.
struct Variant {
  bool deep = false;
  bool hpo = false;

  std::string name() const;
};

Variant variant_from_string(std::string_view s);
std::vector<Variant> all_variants();

// Rank-based AUC with midranks for ties; labels are 0/1.
double auc(const Vector& scores, const Vector& labels);
// Mean negative log-likelihood of the true class; probabilities clamped to [1e-15, 1 - 1e-15].
double log_loss(const Matrix& probabilities, const Vector& classes);

// Test-fold rows per fold, stratified by class (round-robin after a seeded
// shuffle within each class). Every row appears in exactly one fold.
std::vector<std::vector<Index>> stratified_folds(const Dataset& ds, int k, std::uint64_t seed);

struct BenchOptions {
  int folds = 5;
  Variant variant;
  std::uint64_t seed = 1;
  AcwbConfig config;
  double eta = 3.0;
  double r_min = 1.0 / 9.0;
  std::optional<double> max_minutes_per_fold;
};

struct BenchResult {
  std::string dataset;
  std::string metric;  // "auc" or "logloss"
  std::string variant;
  std::vector<double> fold_scores;
  double mean = 0.0;
  double seconds = 0.0;
};

BenchResult cross_validate(const Dataset& ds, const std::string& name, const BenchOptions& options);

// Published AUC reference of a dataset for a variant (nullopt when unknown).
std::optional<double> reference_auc(const std::string& dataset, const std::string& variant = "ACWB");

struct ReportRow {
  std::string dataset;
  std::string variant;
  double measured = 0.0;
  std::optional<double> reference;          // ACWB column
  std::optional<double> variant_reference;  // column of the measured variant
  double delta = 0.0;                       // measured - reference
  bool flagged = false;                     // |delta| beyond tolerance
};

std::vector<ReportRow> report_table(const std::vector<BenchResult>& results, double tolerance = 0.05);

}  // namespace acwb

#endif  // ACWB_BENCH_HPP_
