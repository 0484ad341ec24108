#ifndef ACWB_HPO_HPP_
#define ACWB_HPO_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "acwb/stages.hpp"

namespace acwb {

inline constexpr double kNuMin = 0.001;
inline constexpr double kNuMax = 0.5;
inline constexpr double kPsiMin = 0.01;
inline constexpr double kPsiMax = 0.2;

struct HpoConfig {
  double nu = 0.1;
  double psi = 0.1;

  // Throws ConfigError outside the search space.
  static HpoConfig make(double nu, double psi);
};

// nu log-uniform on [0.001, 0.5], psi uniform on [0.01, 0.2].
HpoConfig sample_config(std::uint64_t seed);

struct Bracket {
  int s = 0;
  std::vector<int> n_configs;   // per rung
  std::vector<double> budgets;  // per rung
};

struct HyperbandSchedule {
  double eta = 3.0;
  double r_min = 1.0 / 9.0;
  double r_max = 1.0;
  int s_max = 0;
  std::vector<Bracket> brackets;  // s_max first
};

// s_max = floor(log_eta(r_max / r_min)); bracket s starts
// ceil((s_max + 1) eta^s / (s + 1)) configs at budget r_max eta^-s, and each
// rung keeps floor(n / eta) of them at eta times the budget.
HyperbandSchedule make_schedule(double r_min, double r_max = 1.0, double eta = 3.0);

using Evaluator = std::function<double(const HpoConfig&, double budget)>;

struct Evaluation {
  int config_id = 0;
  HpoConfig config;
  double budget = 0.0;
  double risk = 0.0;  // +inf when the evaluation failed
  double seconds = 0.0;
  int bracket = 0;
  int rung = 0;
};

struct HalvingResult {
  // Indices into the input configs, best first, as ranked at the last rung.
  std::vector<int> ranking;
  std::vector<double> risks;
  bool truncated = false;
};

struct HalvingOptions {
  double eta = 3.0;
  double r0 = 1.0 / 9.0;
  double r_max = 1.0;
  int bracket = 0;
  // Evaluations are skipped once this returns true.
  std::function<bool()> out_of_time;
};

// Evaluates every survivor at the current budget, keeps the best floor(n/eta)
// (ties to the lower index, failures last) and multiplies the budget by eta
// until r_max has been evaluated.
HalvingResult successive_halving(const std::vector<HpoConfig>& configs, const std::vector<int>& config_ids,
                                 const Evaluator& evaluate, const HalvingOptions& options,
                                 std::vector<Evaluation>& log);

struct HyperbandResult {
  HpoConfig best;
  int best_id = -1;
  double best_risk = 0.0;
  double best_budget = 0.0;
  std::vector<Evaluation> log;
  HyperbandSchedule schedule;
  bool truncated = false;
};

// Runs brackets s_max..0; the winner has the lowest full-budget risk (or, if
// a time limit cut the run short, the lowest risk at the highest budget seen).
HyperbandResult hyperband(const HyperbandSchedule& schedule, const Evaluator& evaluate, std::uint64_t seed,
                          std::optional<double> max_minutes = std::nullopt);

// Mean validation loss: squared error, binomial deviance, or multiclass log-loss.
double validation_risk(const AcwbModel& model, const Dataset& validation);

// Carves one validation split from ds (shared by all candidates); each call
// fits on a budget-sized stratified subsample of the rest.
Evaluator make_evaluator(const Dataset& ds, const AcwbConfig& base, std::uint64_t seed);

}  // namespace acwb

#endif  // ACWB_HPO_HPP_
