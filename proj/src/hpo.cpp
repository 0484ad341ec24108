#include "acwb/hpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace acwb {

HpoConfig HpoConfig::make(double nu, double psi) {
  if (!(nu >= kNuMin && nu <= kNuMax)) throw ConfigError("nu must lie in [0.001, 0.5]");
  if (!(psi >= kPsiMin && psi <= kPsiMax)) throw ConfigError("psi must lie in [0.01, 0.2]");
  return {nu, psi};
}

HpoConfig sample_config(std::uint64_t seed) {
  Rng rng(seed);
  const double lo = std::log(kNuMin);
  const double hi = std::log(kNuMax);
  HpoConfig c;
  c.nu = std::clamp(std::exp(lo + (hi - lo) * rng.uniform()), kNuMin, kNuMax);
  c.psi = kPsiMin + (kPsiMax - kPsiMin) * rng.uniform();
  return c;
}

namespace {

int rung_count(double r0, double r_max, double eta) {
  return static_cast<int>(std::floor(std::log(r_max / r0) / std::log(eta) + 1e-9)) + 1;
}

int survivors(int n, double eta) { return std::max(1, static_cast<int>(std::floor(n / eta + 1e-12))); }

}  // namespace

HyperbandSchedule make_schedule(double r_min, double r_max, double eta) {
  if (!(eta > 1.0)) throw ConfigError("eta must be greater than 1");
  if (!(r_min > 0.0)) throw ConfigError("r_min must be positive");
  if (!(r_max > 0.0 && r_max <= 1.0)) throw ConfigError("r_max must lie in (0, 1]");
  if (r_min > r_max) throw ConfigError("r_min must not exceed r_max");
  HyperbandSchedule sch;
  sch.eta = eta;
  sch.r_min = r_min;
  sch.r_max = r_max;
  sch.s_max = static_cast<int>(std::floor(std::log(r_max / r_min) / std::log(eta) + 1e-9));
  for (int s = sch.s_max; s >= 0; --s) {
    Bracket b;
    b.s = s;
    int n = static_cast<int>(std::ceil((sch.s_max + 1) * std::pow(eta, s) / (s + 1) - 1e-9));
    const double r0 = r_max * std::pow(eta, -s);
    if (!(r0 > 0.0)) throw ConfigError("bracket budget underflows to zero");
    for (int i = 0; i <= s; ++i) {
      b.n_configs.push_back(n);
      b.budgets.push_back(i == s ? r_max : r0 * std::pow(eta, i));
      n = survivors(n, eta);
    }
    sch.brackets.push_back(std::move(b));
  }
  return sch;
}

HalvingResult successive_halving(const std::vector<HpoConfig>& configs, const std::vector<int>& config_ids,
                                 const Evaluator& evaluate, const HalvingOptions& opt,
                                 std::vector<Evaluation>& log) {
  if (configs.empty()) throw ConfigError("successive halving needs at least one configuration");
  if (config_ids.size() != configs.size()) throw std::invalid_argument("config ids and configs differ in length");
  const int rungs = rung_count(opt.r0, opt.r_max, opt.eta);
  HalvingResult res;
  std::vector<int> alive(configs.size());
  std::iota(alive.begin(), alive.end(), 0);
  for (int rung = 0; rung < rungs; ++rung) {
    const double budget = rung == rungs - 1 ? opt.r_max : opt.r0 * std::pow(opt.eta, rung);
    std::vector<double> risk(alive.size(), std::numeric_limits<double>::infinity());
    std::vector<char> done(alive.size(), 0);
    for (std::size_t a = 0; a < alive.size(); ++a) {
      if (opt.out_of_time && opt.out_of_time()) {
        res.truncated = true;
        break;
      }
      const int c = alive[a];
      const auto start = std::chrono::steady_clock::now();
      double r = std::numeric_limits<double>::infinity();
      try {
        r = evaluate(configs[static_cast<std::size_t>(c)], budget);
      } catch (const std::exception&) {
        r = std::numeric_limits<double>::infinity();
      }
      if (std::isnan(r)) r = std::numeric_limits<double>::infinity();
      risk[a] = r;
      done[a] = 1;
      Evaluation e;
      e.config_id = config_ids[static_cast<std::size_t>(c)];
      e.config = configs[static_cast<std::size_t>(c)];
      e.budget = budget;
      e.risk = r;
      e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      e.bracket = opt.bracket;
      e.rung = rung;
      log.push_back(e);
    }
    // Rank evaluated configs first, by risk, ties to the lower config index.
    std::vector<std::size_t> order(alive.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      if (done[x] != done[y]) return done[x] > done[y];
      if (risk[x] != risk[y]) return risk[x] < risk[y];
      return alive[x] < alive[y];
    });
    std::vector<int> ranked;
    std::vector<double> ranked_risk;
    for (auto o : order) {
      ranked.push_back(alive[o]);
      ranked_risk.push_back(risk[o]);
    }
    res.ranking = ranked;
    res.risks = ranked_risk;
    if (res.truncated || rung == rungs - 1) break;
    const auto keep = static_cast<std::size_t>(survivors(static_cast<int>(alive.size()), opt.eta));
    alive.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  return res;
}

HyperbandResult hyperband(const HyperbandSchedule& schedule, const Evaluator& evaluate, std::uint64_t seed,
                          std::optional<double> max_minutes) {
  HyperbandResult out;
  out.schedule = schedule;
  const auto start = std::chrono::steady_clock::now();
  std::function<bool()> out_of_time;
  if (max_minutes) {
    const double limit = *max_minutes * 60.0;
    out_of_time = [start, limit] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > limit;
    };
  }
  int next_id = 0;
  for (const Bracket& b : schedule.brackets) {
    if (out_of_time && out_of_time()) {
      out.truncated = true;
      break;
    }
    std::vector<HpoConfig> configs;
    std::vector<int> ids;
    for (int k = 0; k < b.n_configs.front(); ++k) {
      ids.push_back(next_id);
      configs.push_back(sample_config(mix_seed(seed, static_cast<std::uint64_t>(next_id))));
      ++next_id;
    }
    HalvingOptions opt;
    opt.eta = schedule.eta;
    opt.r0 = b.budgets.front();
    opt.r_max = schedule.r_max;
    opt.bracket = b.s;
    opt.out_of_time = out_of_time;
    const HalvingResult hr = successive_halving(configs, ids, evaluate, opt, out.log);
    if (hr.truncated) {
      out.truncated = true;
      break;
    }
  }
  if (out.log.empty()) throw FitError("hyperband ran out of time before the first evaluation");
  double top_budget = 0.0;
  for (const auto& e : out.log) top_budget = std::max(top_budget, e.budget);
  for (const auto& e : out.log) {
    if (e.budget != top_budget) continue;
    if (out.best_id < 0 || e.risk < out.best_risk) {
      out.best = e.config;
      out.best_id = e.config_id;
      out.best_risk = e.risk;
      out.best_budget = e.budget;
    }
  }
  return out;
}

double validation_risk(const AcwbModel& model, const Dataset& validation) {
  const Dataset processed = apply_recipe(validation, model.recipe);
  const Prediction pred = predict_processed(model, processed);
  const Vector& y = processed.target;
  if (y.size() == 0) throw DataError("validation data has no target");
  if (model.task() == Task::multiclass_classification) {
    double acc = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      const double p = std::clamp(pred.probabilities(i, static_cast<Index>(y[i])), 1e-15, 1.0 - 1e-15);
      acc -= std::log(p);
    }
    return acc / static_cast<double>(y.size());
  }
  return empirical_risk(model.loss, y, pred.scores.col(0));
}

Evaluator make_evaluator(const Dataset& ds, const AcwbConfig& base, std::uint64_t seed) {
  SplitSpec spec;
  spec.validation_fraction = base.validation_fraction > 0.0 ? base.validation_fraction : 0.2;
  spec.seed = mix_seed(seed, 7);
  spec.stratify = ds.task() != Task::regression;
  auto parts = std::make_shared<SplitResult>(split(ds, spec));
  return [parts, base, seed](const HpoConfig& c, double budget) {
    AcwbConfig cfg = base;
    cfg.nu = c.nu;
    cfg.psi = c.psi;
    const auto budget_key = static_cast<std::uint64_t>(std::llround(budget * 1e9));
    const Dataset train = budget >= 1.0 ? parts->train : subsample(parts->train, budget, mix_seed(seed, budget_key));
    const AcwbModel model = fit_acwb(train, cfg);
    return validation_risk(model, parts->validation);
  };
}

}  // namespace acwb
