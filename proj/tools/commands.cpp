#include "commands.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "acwb/bench.hpp"
#include "acwb/hpo.hpp"
#include "acwb/interpret.hpp"
#include "acwb/model_io.hpp"

namespace acwb::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

bool parse_switch(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects on or off, got '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string safe_name(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') c = '_';
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw DataError("failed to write '" + path.string() + "'");
}

std::string fmt(double v) { return format_double(v); }

struct DataFlags {
  std::string data;
  std::string target;
  std::string task;
  std::vector<std::string> na_strings;
};

Dataset load_training_data(const DataFlags& f) {
  if (f.target.empty()) throw ConfigError("--target is required");
  CsvOptions opt;
  opt.target = f.target;
  if (!f.task.empty()) opt.task = task_from_string(f.task);
  opt.na_strings = f.na_strings;
  return load_csv(f.data, opt);
}

struct CommonFlags {
  DataFlags data;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string config_path;
  std::optional<double> nu, psi, df, validation_fraction;
  std::optional<int> patience, max_iters;
  std::string deep, interactions;
};

void add_data_flags(CLI::App* app, DataFlags& f, bool require_target) {
  app->add_option("--data", f.data, "input CSV file")->required();
  auto* t = app->add_option("--target", f.target, "target column");
  if (require_target) t->required();
  app->add_option("--task", f.task, "regression, binary or multiclass (default: inferred)");
  app->add_option("--na-strings", f.na_strings, "extra cell values read as missing")->delimiter(',');
}

void add_fit_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--config", f.config_path, "key=value configuration file");
  app->add_option("--nu", f.nu, "learning rate of the structured stages");
  app->add_option("--psi", f.psi, "fraction of screened interactions kept");
  app->add_option("--df", f.df, "degrees of freedom of every structured learner");
  app->add_option("--patience", f.patience, "early-stopping patience");
  app->add_option("--max-iters", f.max_iters, "maximum iterations per stage");
  app->add_option("--validation-fraction", f.validation_fraction, "share of rows held out for early stopping");
  app->add_option("--deep", f.deep, "deep tree stage: on or off");
  app->add_option("--interactions", f.interactions, "interaction stage: on or off");
}

AcwbConfig resolve_config(const CommonFlags& f) {
  AcwbConfig c;
  if (!f.config_path.empty()) c = read_config_file(f.config_path, c);
  if (f.seed) c.seed = *f.seed;
  if (f.nu) c.nu = *f.nu;
  if (f.psi) c.psi = *f.psi;
  if (f.df) c.df = *f.df;
  if (f.patience) c.patience = *f.patience;
  if (f.max_iters) c.max_iters_uni = c.max_iters_pint = c.max_iters_deep = *f.max_iters;
  if (f.validation_fraction) c.validation_fraction = *f.validation_fraction;
  if (!f.deep.empty()) c.deep = parse_switch("--deep", f.deep);
  if (!f.interactions.empty()) c.interactions = parse_switch("--interactions", f.interactions);
  c.validate();
  return c;
}

void print_summary(const AcwbModel& model, std::ostream& out) {
  const auto& levels = model.recipe.target.levels;
  for (std::size_t k = 0; k < model.components.size(); ++k) {
    const ComponentModel& c = model.components[k];
    out << "component " << k;
    if (model.task() == Task::multiclass_classification) out << " (class '" << levels[k] << "' vs rest)";
    else if (model.task() == Task::binary_classification) out << " (positive class '" << levels.at(1) << "')";
    out << "\n";
    out << std::left << std::setw(13) << "stage" << std::setw(16) << "train_risk" << std::setw(18)
        << "validation_risk" << std::setw(12) << "iterations" << "seconds\n";
    auto row = [&](const std::string& name, double tr, double va, const std::string& iters, double secs) {
      out << std::left << std::setw(13) << name << std::setw(16) << std::setprecision(8) << tr << std::setw(18) << va
          << std::setw(12) << iters << std::setprecision(3) << secs << "\n";
    };
    row("offset", c.train_risk.r0, c.validation_risk.r0, "-", 0.0);
    row("univariate", c.train_risk.uni, c.validation_risk.uni, std::to_string(c.uni.trace.best_iteration),
        c.seconds.uni);
    if (c.pint)
      row("interaction", c.train_risk.pint, c.validation_risk.pint,
          std::to_string(c.pint->trace.best_iteration) + "/" + std::to_string(c.interactions.pairs.size()) + "p",
          c.seconds.screening + c.seconds.pint);
    else
      out << std::setw(13) << "interaction" << "skipped: "
          << (c.interactions.skipped_reason.empty() ? "no pairs" : c.interactions.skipped_reason) << "\n";
    if (c.deep)
      row("deep", c.train_risk.deep, c.validation_risk.deep, std::to_string(c.deep->trace.best_iteration),
          c.seconds.deep);
    else
      out << std::setw(13) << "deep" << "skipped: disabled\n";
  }
  out << std::right;
}

int cmd_train(const CommonFlags& f, const std::string& model_path, std::ostream& out) {
  const AcwbConfig cfg = resolve_config(f);
  const Dataset ds = load_training_data(f.data);
  const AcwbModel model = fit_acwb(ds, cfg);
  print_summary(model, out);
  save_model(model, model_path);
  out << "model written to " << model_path << "\n";
  return kOk;
}

std::vector<std::string> schema_problems(const PreprocessRecipe& recipe, const Dataset& ds) {
  std::vector<std::string> problems;
  for (const auto& rc : recipe.columns) {
    if (rc.dropped) continue;
    const auto j = ds.find_column(rc.name);
    if (!j) {
      problems.push_back("missing column '" + rc.name + "'");
    } else if (ds.columns[static_cast<std::size_t>(*j)].schema.kind != rc.kind) {
      problems.push_back("column '" + rc.name + "' should be " + to_string(rc.kind));
    }
  }
  return problems;
}

Dataset load_for_model(const AcwbModel& model, const std::string& path, const std::vector<std::string>& na) {
  CsvOptions opt;
  opt.target = model.recipe.target.name;
  opt.task = model.task();
  opt.na_strings = na;
  opt.require_target = false;
  opt.allow_empty = true;
  for (const auto& [name, kind] : model.recipe.source_kinds()) opt.kind_hints[name] = kind;
  Dataset ds;
  try {
    ds = load_csv(path, opt);
  } catch (const LoadError& e) {
    if (e.kind() != LoadErrorKind::schema_mismatch) throw;
    throw DataError(std::string("input does not match the model schema: ") + e.what());
  }
  const auto problems = schema_problems(model.recipe, ds);
  if (!problems.empty()) {
    std::string msg = "input does not match the model schema:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw DataError(msg);
  }
  return ds;
}

int cmd_predict(const std::string& model_path, const std::string& data, const std::vector<std::string>& na,
                const std::string& out_path, std::ostream& out) {
  const AcwbModel model = load_model(model_path);
  const Dataset ds = load_for_model(model, data, na);
  const Dataset processed = apply_recipe(ds, model.recipe);
  const Prediction pred = predict_processed(model, processed);
  const auto& levels = model.recipe.target.levels;
  std::ostringstream csv;
  csv << "row_id";
  if (model.task() == Task::multiclass_classification) {
    for (const auto& l : levels) csv << "," << csv_escape("score_" + l);
    for (const auto& l : levels) csv << "," << csv_escape("probability_" + l);
    csv << ",predicted_class\n";
  } else if (model.task() == Task::binary_classification) {
    csv << ",score,probability,predicted_class\n";
  } else {
    csv << ",score\n";
  }
  for (Index i = 0; i < processed.n_rows(); ++i) {
    csv << i;
    for (Index c = 0; c < pred.scores.cols(); ++c) csv << "," << fmt(pred.scores(i, c));
    for (Index c = 0; c < pred.probabilities.cols(); ++c) csv << "," << fmt(pred.probabilities(i, c));
    if (!pred.predicted.empty()) csv << "," << csv_escape(levels.at(static_cast<std::size_t>(pred.predicted[static_cast<std::size_t>(i)])));
    csv << "\n";
  }
  write_text(out_path, csv.str());
  out << processed.n_rows() << " predictions written to " << out_path << "\n";
  return kOk;
}

json trace_risks(const BoostTrace& t) {
  json tr = json::array(), va = json::array();
  tr.push_back(t.initial_train_risk);
  va.push_back(t.initial_validation_risk);
  for (const auto& r : t.records) {
    tr.push_back(r.train_risk);
    va.push_back(r.validation_risk);
  }
  return {{"train_risk", tr}, {"validation_risk", va}, {"best_iteration", t.best_iteration},
          {"stopped_at", t.stopped_at}, {"stop_reason", to_string(t.stop_reason)}};
}

json complexity_json(const AcwbModel& model, int k) {
  const ComplexityReport rep = complexity_report(model, k);
  const ComponentModel& c = model.components[static_cast<std::size_t>(k)];
  json traces = {{"uni", trace_risks(c.uni.trace)}};
  if (c.pint) traces["pint"] = trace_risks(c.pint->trace);
  if (c.deep) traces["deep"] = trace_risks(c.deep->trace);
  return {{"component", k},
          {"rho_uni", rep.rho_uni},
          {"rho_pint", rep.rho_pint},
          {"rho_deep", rep.rho_deep},
          {"rho_pint_definition", kRhoPintDefinition},
          {"checkpoints",
           {{"R0", rep.checkpoints.r0}, {"R_uni", rep.checkpoints.uni}, {"R_pint", rep.checkpoints.pint},
            {"R_deep", rep.checkpoints.deep}}},
          {"delta", rep.delta},
          {"stages_run", {{"uni", true}, {"pint", rep.ran_pint}, {"deep", rep.ran_deep}}},
          {"uni_explained_risk", {{"linear", rep.uni_linear}, {"nonlinear", rep.uni_nonlinear}}},
          {"warnings", rep.warnings},
          {"traces", traces}};
}

int cmd_explain(const std::string& model_path, const std::string& out_dir, const std::optional<Index>& row,
                const std::string& data, const std::vector<std::string>& na, int grid, int surface_grid,
                int component, std::ostream& out) {
  AcwbModel model;
  try {
    model = load_model(model_path);
  } catch (const Error& e) {
    throw DataError(e.what());
  }
  if (component < 0 || component >= static_cast<int>(model.components.size()))
    throw ConfigError("--component out of range");
  if (row && data.empty()) throw ConfigError("--row needs --data");
  const fs::path dir(out_dir);
  fs::create_directories(dir / "effects");
  fs::create_directories(dir / "interactions");

  std::ostringstream vip;
  vip << "component,term,stage,vip\n";
  for (int k = 0; k < static_cast<int>(model.components.size()); ++k)
    for (const auto& e : variable_importance(model, k).entries)
      vip << k << "," << csv_escape(e.term) << "," << to_string(e.stage) << "," << fmt(e.vip) << "\n";
  write_text(dir / "vip.csv", vip.str());

  json comps = json::array();
  for (int k = 0; k < static_cast<int>(model.components.size()); ++k) comps.push_back(complexity_json(model, k));
  json complexity = comps[static_cast<std::size_t>(component)];
  complexity["components"] = comps;
  write_text(dir / "complexity.json", complexity.dump(2) + "\n");

  for (const auto& name : model.feature_names()) {
    const EffectCurve curve = partial_effect(model, name, grid, component);
    std::ostringstream csv;
    csv << (curve.numeric ? "grid" : "level") << ",total,linear,nonlinear\n";
    for (std::size_t i = 0; i < curve.total.size(); ++i) {
      csv << (curve.numeric ? fmt(curve.grid[i]) : csv_escape(curve.levels[i])) << "," << fmt(curve.total[i]) << ","
          << fmt(curve.linear_part[i]) << "," << fmt(curve.nonlinear_part[i]) << "\n";
    }
    write_text(dir / "effects" / (safe_name(name) + ".csv"), csv.str());
  }

  const ComponentModel& cm = model.components[static_cast<std::size_t>(component)];
  const auto names = model.feature_names();
  for (const auto& [i, j] : cm.interactions.pairs) {
    const auto& a = names[static_cast<std::size_t>(i)];
    const auto& b = names[static_cast<std::size_t>(j)];
    const InteractionSurface s = interaction_surface(model, a, b, surface_grid, component);
    std::ostringstream csv;
    csv << csv_escape(s.feature_names[0]) << "," << csv_escape(s.feature_names[1]) << ",value\n";
    for (Index u = 0; u < s.values.rows(); ++u)
      for (Index v = 0; v < s.values.cols(); ++v) {
        csv << (s.grid_a.empty() ? csv_escape(s.levels_a[static_cast<std::size_t>(u)]) : fmt(s.grid_a[static_cast<std::size_t>(u)]))
            << ","
            << (s.grid_b.empty() ? csv_escape(s.levels_b[static_cast<std::size_t>(v)]) : fmt(s.grid_b[static_cast<std::size_t>(v)]))
            << "," << fmt(s.values(u, v)) << "\n";
      }
    write_text(dir / "interactions" / (safe_name(a) + "_" + safe_name(b) + ".csv"), csv.str());
  }

  if (row) {
    const Dataset ds = load_for_model(model, data, na);
    const Dataset processed = apply_recipe(ds, model.recipe);
    const Decomposition d = decompose_prediction(model, processed, *row, component);
    std::ostringstream csv;
    csv << "term,kind,contribution\n";
    csv << "offset,offset," << fmt(d.offset) << "\n";
    for (const auto& c : d.univariate) csv << csv_escape(c.term) << ",univariate," << fmt(c.value) << "\n";
    for (const auto& c : d.pairs) csv << csv_escape(c.term) << ",interaction," << fmt(c.value) << "\n";
    csv << "deep trees,deep," << fmt(d.deep) << "\n";
    csv << "total,total," << fmt(d.total) << "\n";
    write_text(dir / ("decomposition_" + std::to_string(*row) + ".csv"), csv.str());
  }
  out << "explanation written to " << dir.string() << "\n";
  return kOk;
}

int cmd_tune(const CommonFlags& f, double eta, double r_min, std::optional<double> max_minutes,
             const std::string& out_dir, bool retrain, const std::string& model_path, std::ostream& out) {
  const AcwbConfig base = resolve_config(f);
  const Dataset ds = load_training_data(f.data);
  const auto schedule = make_schedule(r_min, 1.0, eta);
  const HyperbandResult res = hyperband(schedule, make_evaluator(ds, base, base.seed), base.seed, max_minutes);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  std::ostringstream log;
  log << "config_id,nu,psi,budget,risk,seconds,bracket,rung\n";
  for (const auto& e : res.log)
    log << e.config_id << "," << fmt(e.config.nu) << "," << fmt(e.config.psi) << "," << fmt(e.budget) << ","
        << (std::isfinite(e.risk) ? fmt(e.risk) : std::string("inf")) << "," << fmt(e.seconds) << "," << e.bracket
        << "," << e.rung << "\n";
  write_text(dir / "tune_log.csv", log.str());
  AcwbConfig best = base;
  best.nu = res.best.nu;
  best.psi = res.best.psi;
  write_text(dir / "best_config.txt", format_config(best));
  out << "best config " << res.best_id << ": nu=" << fmt(res.best.nu) << " psi=" << fmt(res.best.psi)
      << " risk=" << fmt(res.best_risk) << " at budget " << fmt(res.best_budget)
      << (res.truncated ? " (time limit reached)" : "") << "\n";
  if (retrain) {
    const AcwbModel model = fit_acwb(ds, best);
    print_summary(model, out);
    const std::string path = model_path.empty() ? (dir / "model.acwb").string() : model_path;
    save_model(model, path);
    out << "model written to " << path << "\n";
  }
  return kOk;
}

struct BenchDataset {
  std::string file;
  std::string target;
  std::vector<std::string> na;
};

const std::map<std::string, BenchDataset>& bench_registry() {
  static const std::map<std::string, BenchDataset> r = {
      {"adult", {"adult.csv", "class", {"?"}}},
      {"credit-g", {"credit-g.csv", "class", {}}},
      {"blood-transfusion", {"blood-transfusion.csv", "Class", {}}},
  };
  return r;
}

int cmd_bench(const std::vector<std::string>& datasets, const std::string& data_dir, int folds,
              const std::vector<std::string>& variants, std::uint64_t seed, Index max_rows,
              std::optional<double> max_minutes, const std::string& out_path, const CommonFlags& f,
              std::ostream& out) {
  const AcwbConfig cfg = resolve_config(f);
  std::vector<BenchResult> results;
  for (const auto& name : datasets) {
    auto it = bench_registry().find(name);
    if (it == bench_registry().end()) throw ConfigError("unknown benchmark dataset '" + name + "'");
    CsvOptions opt;
    opt.target = it->second.target;
    opt.na_strings = it->second.na;
    opt.task = Task::binary_classification;
    Dataset ds = load_csv((fs::path(data_dir) / it->second.file).string(), opt);
    if (max_rows > 0 && ds.n_rows() > max_rows)
      ds = subsample(ds, static_cast<double>(max_rows) / static_cast<double>(ds.n_rows()), mix_seed(seed, 99));
    for (const auto& v : variants) {
      BenchOptions bo;
      bo.folds = folds;
      bo.variant = variant_from_string(v);
      bo.seed = seed;
      bo.config = cfg;
      bo.max_minutes_per_fold = max_minutes;
      results.push_back(cross_validate(ds, name, bo));
      const auto& r = results.back();
      out << name << " " << r.variant << " " << r.metric << " mean " << fmt(r.mean) << " (" << r.seconds << " s)\n";
    }
  }
  const auto table = report_table(results);
  std::ostringstream csv;
  csv << "dataset,variant,metric,mean,fold_scores,seconds,reference_acwb,reference_variant,delta,flagged\n";
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    const auto& row = table[k];
    std::string folds_text;
    for (std::size_t i = 0; i < r.fold_scores.size(); ++i) folds_text += (i ? ";" : "") + fmt(r.fold_scores[i]);
    csv << r.dataset << "," << r.variant << "," << r.metric << "," << fmt(r.mean) << "," << folds_text << ","
        << fmt(r.seconds) << "," << (row.reference ? fmt(*row.reference) : "") << ","
        << (row.variant_reference ? fmt(*row.variant_reference) : "") << ","
        << (row.reference ? fmt(row.delta) : "") << "," << (row.flagged ? "yes" : "no") << "\n";
  }
  write_text(out_path, csv.str());
  out << "results written to " << out_path << "\n";
  return kOk;
}

}  // namespace

void set_config_value(AcwbConfig& c, const std::string& key, const std::string& v) {
  auto as_int = [&] { return static_cast<int>(parse_int(key, v)); };
  if (key == "nu") c.nu = parse_double(key, v);
  else if (key == "psi") c.psi = parse_double(key, v);
  else if (key == "df") c.df = parse_double(key, v);
  else if (key == "patience" || key == "kappa") c.patience = as_int();
  else if (key == "max_iters") c.max_iters_uni = c.max_iters_pint = c.max_iters_deep = as_int();
  else if (key == "max_iters_uni") c.max_iters_uni = as_int();
  else if (key == "max_iters_pint") c.max_iters_pint = as_int();
  else if (key == "max_iters_deep") c.max_iters_deep = as_int();
  else if (key == "interactions") c.interactions = parse_switch(key, v);
  else if (key == "deep") c.deep = parse_switch(key, v);
  else if (key == "rf_trees") c.rf_trees = as_int();
  else if (key == "rf_depth") c.rf_depth = as_int();
  else if (key == "rf_min_leaf") c.rf_min_leaf = as_int();
  else if (key == "deep_max_depth") c.deep_max_depth = as_int();
  else if (key == "deep_min_leaf") c.deep_min_leaf = as_int();
  else if (key == "nu_deep") c.nu_deep = parse_double(key, v);
  else if (key == "validation_fraction") c.validation_fraction = parse_double(key, v);
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, v));
  else if (key == "spline_knots") c.design.spline_interior_knots = as_int();
  else if (key == "tensor_knots") c.design.tensor_interior_knots = as_int();
  else if (key == "spline_degree") c.design.degree = as_int();
  else if (key == "penalty_order") c.design.penalty_order = as_int();
  else if (key == "max_levels") c.max_levels = as_int();
  else if (key == "min_level_freq") c.min_level_freq = parse_double(key, v);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

AcwbConfig read_config_file(const std::string& path, AcwbConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

std::string format_config(const AcwbConfig& c) {
  std::ostringstream o;
  o << "nu=" << fmt(c.nu) << "\npsi=" << fmt(c.psi) << "\ndf=" << fmt(c.df) << "\npatience=" << c.patience
    << "\nmax_iters_uni=" << c.max_iters_uni << "\nmax_iters_pint=" << c.max_iters_pint
    << "\nmax_iters_deep=" << c.max_iters_deep << "\ninteractions=" << (c.interactions ? "on" : "off")
    << "\ndeep=" << (c.deep ? "on" : "off") << "\nrf_trees=" << c.rf_trees << "\nrf_depth=" << c.rf_depth
    << "\nrf_min_leaf=" << c.rf_min_leaf << "\ndeep_max_depth=" << c.deep_max_depth
    << "\ndeep_min_leaf=" << c.deep_min_leaf << "\nnu_deep=" << fmt(c.nu_deep)
    << "\nvalidation_fraction=" << fmt(c.validation_fraction) << "\nseed=" << c.seed
    << "\nspline_knots=" << c.design.spline_interior_knots << "\ntensor_knots=" << c.design.tensor_interior_knots
    << "\nspline_degree=" << c.design.degree << "\npenalty_order=" << c.design.penalty_order
    << "\nmax_levels=" << c.max_levels << "\nmin_level_freq=" << fmt(c.min_level_freq) << "\n";
  return o.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Automatic componentwise boosting: interpretable three-stage models for tabular data", "acwb"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: all cores)");

  CommonFlags train_flags;
  std::string train_model = "model.acwb";
  auto* train = app.add_subcommand("train", "fit a model and write it to a .acwb file");
  add_data_flags(train, train_flags.data, false);
  add_fit_flags(train, train_flags);
  train->add_option("--model,-o", train_model, "output model file");
  train->add_option("--threads", threads, "worker threads");

  std::string predict_model, predict_data, predict_out = "predictions.csv";
  std::vector<std::string> predict_na;
  auto* predict = app.add_subcommand("predict", "score a CSV file with a saved model");
  predict->add_option("--model,-m", predict_model, "model file")->required();
  predict->add_option("--data", predict_data, "input CSV file")->required();
  predict->add_option("--na-strings", predict_na, "extra cell values read as missing")->delimiter(',');
  predict->add_option("--out,-o", predict_out, "output CSV file");
  predict->add_option("--threads", threads, "worker threads");

  std::string explain_model, explain_out = "explanation", explain_data;
  std::vector<std::string> explain_na;
  std::optional<Index> explain_row;
  int grid = 100, surface_grid = 50, component = 0;
  auto* explain = app.add_subcommand("explain", "write importance, complexity, effect and surface tables");
  explain->add_option("--model,-m", explain_model, "model file")->required();
  explain->add_option("--out,-o", explain_out, "output directory");
  explain->add_option("--row", explain_row, "row of --data to decompose (0-based)");
  explain->add_option("--data", explain_data, "CSV file for --row");
  explain->add_option("--na-strings", explain_na, "extra cell values read as missing")->delimiter(',');
  explain->add_option("--grid", grid, "points per effect curve");
  explain->add_option("--surface-grid", surface_grid, "points per surface axis");
  explain->add_option("--component", component, "component (class) for multiclass models");
  explain->add_option("--threads", threads, "worker threads");

  CommonFlags tune_flags;
  double eta = 3.0, r_min = 1.0 / 9.0;
  std::optional<double> max_minutes;
  std::string tune_out = "tuning", tune_model;
  bool retrain = false;
  auto* tune = app.add_subcommand("tune", "Hyperband search over nu and psi");
  add_data_flags(tune, tune_flags.data, false);
  add_fit_flags(tune, tune_flags);
  tune->add_option("--eta", eta, "halving factor");
  tune->add_option("--r-min", r_min, "smallest subsampling budget");
  tune->add_option("--max-minutes", max_minutes, "wall-clock limit");
  tune->add_option("--out,-o", tune_out, "output directory");
  tune->add_flag("--retrain", retrain, "fit the best configuration on all rows");
  tune->add_option("--model", tune_model, "model file for --retrain");
  tune->add_option("--threads", threads, "worker threads");

  CommonFlags bench_flags;
  std::vector<std::string> bench_sets{"adult", "credit-g", "blood-transfusion"};
  std::vector<std::string> bench_variants{"ACWB_no_HPO"};
  std::string bench_dir = "data", bench_out = "results.csv";
  int folds = 5;
  std::uint64_t bench_seed = 1;
  Index max_rows = 0;
  std::optional<double> bench_minutes;
  auto* bench = app.add_subcommand("bench", "cross-validated benchmark against published reference values");
  bench->add_option("--datasets", bench_sets, "adult, credit-g, blood-transfusion")->delimiter(',');
  bench->add_option("--data-dir", bench_dir, "directory holding the dataset CSV files");
  bench->add_option("--folds", folds, "number of folds");
  bench->add_option("--variant", bench_variants, "ACWB, ACWB_deep, ACWB_no_HPO, ACWB_deep_no_HPO")->delimiter(',');
  bench->add_option("--seed", bench_seed, "random seed");
  bench->add_option("--max-rows", max_rows, "stratified subsample of larger datasets (0 = all rows)");
  bench->add_option("--max-minutes", bench_minutes, "tuning time limit per fold");
  bench->add_option("--config", bench_flags.config_path, "key=value configuration file");
  bench->add_option("--out,-o", bench_out, "results CSV");
  bench->add_option("--threads", threads, "worker threads");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kConfigError;
  }

  try {
    if (threads > 0) set_num_threads(threads);
    if (*train) {
      if (train_flags.data.target.empty()) {
        err << "error: --target is required\n\n" << train->help();
        return kConfigError;
      }
      return cmd_train(train_flags, train_model, out);
    }
    if (*predict) return cmd_predict(predict_model, predict_data, predict_na, predict_out, out);
    if (*explain)
      return cmd_explain(explain_model, explain_out, explain_row, explain_data, explain_na, grid, surface_grid,
                         component, out);
    if (*tune) {
      if (tune_flags.data.target.empty()) {
        err << "error: --target is required\n\n" << tune->help();
        return kConfigError;
      }
      return cmd_tune(tune_flags, eta, r_min, max_minutes, tune_out, retrain, tune_model, out);
    }
    if (*bench)
      return cmd_bench(bench_sets, bench_dir, folds, bench_variants, bench_seed, max_rows, bench_minutes, bench_out,
                       bench_flags, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const FitError& e) {
    err << "fit error: " << e.what() << "\n";
    return kFitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUnexpected;
  }
  return kConfigError;
}

}  // namespace acwb::cli
