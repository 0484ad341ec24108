#include "acwb/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace acwb {

using json = nlohmann::json;

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

json mat_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix mat_from(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols) throw DataError("matrix size does not match its data");
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

json knots_json(const KnotVector<double>& k) {
  return {{"interior", k.interior}, {"degree", k.degree}, {"lower", k.lower}, {"upper", k.upper}};
}

KnotVector<double> knots_from(const json& j) {
  KnotVector<double> k;
  k.interior = j.at("interior").get<std::vector<double>>();
  k.degree = j.at("degree").get<int>();
  k.lower = j.at("lower").get<double>();
  k.upper = j.at("upper").get<double>();
  return k;
}

json kind_json(const LearnerKind& k) { return {{"type", to_string(k.type)}, {"features", k.features}}; }

LearnerKind kind_from(const json& j) {
  return {learner_type_from_string(j.at("type").get<std::string>()), j.at("features").get<std::vector<std::string>>()};
}

json meta_json(const LearnerMeta& m) {
  json j = {{"kind", kind_json(m.kind)},       {"levels_a", m.levels_a}, {"levels_b", m.levels_b},
            {"lambda", m.lambda},               {"df", m.df},             {"transform", mat_json(m.transform)}};
  if (m.kind.type == LearnerType::centered_spline || m.kind.type == LearnerType::tensor_spline)
    j["knots_a"] = knots_json(m.knots_a);
  if (m.kind.type == LearnerType::tensor_spline) j["knots_b"] = knots_json(m.knots_b);
  return j;
}

LearnerMeta meta_from(const json& j) {
  LearnerMeta m;
  m.kind = kind_from(j.at("kind"));
  m.levels_a = j.at("levels_a").get<Index>();
  m.levels_b = j.at("levels_b").get<Index>();
  m.lambda = j.at("lambda").get<double>();
  m.df = j.at("df").get<double>();
  m.transform = mat_from(j.at("transform"));
  if (j.contains("knots_a")) m.knots_a = knots_from(j.at("knots_a"));
  if (j.contains("knots_b")) m.knots_b = knots_from(j.at("knots_b"));
  return m;
}

json trace_json(const BoostTrace& t) {
  json records = json::array();
  for (const auto& r : t.records) {
    records.push_back({{"iteration", r.iteration},
                       {"learner", r.learner},
                       {"sse", r.sse},
                       {"train_risk", r.train_risk},
                       {"validation_risk", r.validation_risk},
                       {"theta", vec_json(r.theta)}});
  }
  return {{"initial_train_risk", t.initial_train_risk},
          {"initial_validation_risk", t.initial_validation_risk},
          {"stopped_at", t.stopped_at},
          {"best_iteration", t.best_iteration},
          {"stop_reason", to_string(t.stop_reason)},
          {"records", records}};
}

BoostTrace trace_from(const json& j) {
  BoostTrace t;
  t.initial_train_risk = j.at("initial_train_risk").get<double>();
  t.initial_validation_risk = j.at("initial_validation_risk").get<double>();
  t.stopped_at = j.at("stopped_at").get<int>();
  t.best_iteration = j.at("best_iteration").get<int>();
  t.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
  for (const auto& r : j.at("records")) {
    IterationRecord rec;
    rec.iteration = r.at("iteration").get<int>();
    rec.learner = r.at("learner").get<int>();
    rec.sse = r.at("sse").get<double>();
    rec.train_risk = r.at("train_risk").get<double>();
    rec.validation_risk = r.at("validation_risk").get<double>();
    rec.theta = vec_from(r.at("theta"));
    t.records.push_back(std::move(rec));
  }
  if (t.best_iteration < 0 || t.best_iteration > static_cast<int>(t.records.size()))
    throw DataError("trace best iteration out of range");
  return t;
}

json stage_json(const StageModel& s) {
  json candidates = json::array();
  for (const auto& k : s.candidates) candidates.push_back(kind_json(k));
  json learners = json::array();
  for (const auto& [idx, l] : s.learners)
    learners.push_back({{"index", idx}, {"meta", meta_json(l.meta)}, {"theta", vec_json(l.theta)}});
  return {{"nu", s.nu}, {"candidates", candidates}, {"learners", learners}, {"trace", trace_json(s.trace)}};
}

StageModel stage_from(const json& j) {
  StageModel s;
  s.nu = j.at("nu").get<double>();
  for (const auto& k : j.at("candidates")) s.candidates.push_back(kind_from(k));
  for (const auto& l : j.at("learners")) {
    FittedBaseLearner f{meta_from(l.at("meta")), vec_from(l.at("theta"))};
    if (f.theta.size() != f.meta.width()) throw DataError("learner coefficient length does not match its design");
    s.learners.emplace(l.at("index").get<int>(), std::move(f));
  }
  s.trace = trace_from(j.at("trace"));
  for (const auto& r : s.trace.records)
    if (r.learner < 0 || r.learner >= static_cast<int>(s.candidates.size()))
      throw DataError("trace refers to an unknown learner");
  return s;
}

json tree_json(const RegressionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    json node = {{"feature", n.feature}, {"value", n.value}};
    if (!n.is_leaf()) {
      node["threshold"] = n.threshold;
      node["left"] = n.left;
      node["right"] = n.right;
      if (!n.left_levels.empty()) node["left_levels"] = n.left_levels;
    }
    nodes.push_back(std::move(node));
  }
  return nodes;
}

RegressionTree tree_from(const json& j, int n_features) {
  RegressionTree t;
  for (const auto& node : j) {
    TreeNode n;
    n.feature = node.at("feature").get<int>();
    n.value = node.at("value").get<double>();
    if (n.feature >= 0) {
      n.threshold = node.at("threshold").get<double>();
      n.left = node.at("left").get<int>();
      n.right = node.at("right").get<int>();
      if (node.contains("left_levels")) n.left_levels = node.at("left_levels").get<std::vector<std::uint8_t>>();
    }
    t.nodes.push_back(std::move(n));
  }
  const auto size = static_cast<int>(t.nodes.size());
  if (size == 0) throw DataError("tree without nodes");
  for (int k = 0; k < size; ++k) {
    const auto& n = t.nodes[static_cast<std::size_t>(k)];
    if (n.is_leaf()) continue;
    if (n.feature >= n_features || n.left <= k || n.right <= k || n.left >= size || n.right >= size)
      throw DataError("tree node " + std::to_string(k) + " is inconsistent");
  }
  return t;
}

json deep_json(const DeepModel& d) {
  json trees = json::array();
  for (const auto& t : d.trees) trees.push_back(tree_json(t));
  return {{"nu", d.nu}, {"max_depth", d.max_depth}, {"trees", trees}, {"trace", trace_json(d.trace)}};
}

DeepModel deep_from(const json& j, int n_features) {
  DeepModel d;
  d.nu = j.at("nu").get<double>();
  d.max_depth = j.at("max_depth").get<int>();
  for (const auto& t : j.at("trees")) d.trees.push_back(tree_from(t, n_features));
  d.trace = trace_from(j.at("trace"));
  return d;
}

json checkpoints_json(const RiskCheckpoints& r) {
  return {{"r0", r.r0}, {"uni", r.uni}, {"pint", r.pint}, {"deep", r.deep}};
}

RiskCheckpoints checkpoints_from(const json& j) {
  return {j.at("r0").get<double>(), j.at("uni").get<double>(), j.at("pint").get<double>(),
          j.at("deep").get<double>()};
}

json config_json(const AcwbConfig& c) {
  return {{"nu", c.nu},
          {"psi", c.psi},
          {"df", c.df},
          {"patience", c.patience},
          {"max_iters_uni", c.max_iters_uni},
          {"max_iters_pint", c.max_iters_pint},
          {"max_iters_deep", c.max_iters_deep},
          {"interactions", c.interactions},
          {"deep", c.deep},
          {"rf_trees", c.rf_trees},
          {"rf_depth", c.rf_depth},
          {"rf_min_leaf", c.rf_min_leaf},
          {"deep_max_depth", c.deep_max_depth},
          {"deep_min_leaf", c.deep_min_leaf},
          {"nu_deep", c.nu_deep},
          {"validation_fraction", c.validation_fraction},
          {"seed", c.seed},
          {"spline_knots", c.design.spline_interior_knots},
          {"tensor_knots", c.design.tensor_interior_knots},
          {"spline_degree", c.design.degree},
          {"penalty_order", c.design.penalty_order},
          {"max_levels", c.max_levels},
          {"min_level_freq", c.min_level_freq}};
}

AcwbConfig config_from(const json& j) {
  AcwbConfig c;
  c.nu = j.at("nu").get<double>();
  c.psi = j.at("psi").get<double>();
  c.df = j.at("df").get<double>();
  c.patience = j.at("patience").get<int>();
  c.max_iters_uni = j.at("max_iters_uni").get<int>();
  c.max_iters_pint = j.at("max_iters_pint").get<int>();
  c.max_iters_deep = j.at("max_iters_deep").get<int>();
  c.interactions = j.at("interactions").get<bool>();
  c.deep = j.at("deep").get<bool>();
  c.rf_trees = j.at("rf_trees").get<int>();
  c.rf_depth = j.at("rf_depth").get<int>();
  c.rf_min_leaf = j.at("rf_min_leaf").get<int>();
  c.deep_max_depth = j.at("deep_max_depth").get<int>();
  c.deep_min_leaf = j.at("deep_min_leaf").get<int>();
  c.nu_deep = j.at("nu_deep").get<double>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.design.spline_interior_knots = j.at("spline_knots").get<int>();
  c.design.tensor_interior_knots = j.at("tensor_knots").get<int>();
  c.design.degree = j.at("spline_degree").get<int>();
  c.design.penalty_order = j.at("penalty_order").get<int>();
  c.max_levels = j.at("max_levels").get<int>();
  c.min_level_freq = j.at("min_level_freq").get<double>();
  return c;
}

const char* imputation_name(Imputation::Kind k) {
  switch (k) {
    case Imputation::Kind::mode:
      return "mode";
    case Imputation::Kind::empirical:
      return "empirical";
    case Imputation::Kind::none:
      break;
  }
  return "none";
}

Imputation::Kind imputation_from(const std::string& s) {
  if (s == "mode") return Imputation::Kind::mode;
  if (s == "empirical") return Imputation::Kind::empirical;
  if (s == "none") return Imputation::Kind::none;
  throw DataError("unknown imputation kind '" + s + "'");
}

json recipe_json(const PreprocessRecipe& r) {
  json cols = json::array();
  for (const auto& c : r.columns) {
    json col = {{"name", c.name}, {"kind", to_string(c.kind)}, {"dropped", c.dropped}};
    if (!c.dropped) {
      col["min"] = c.min;
      col["max"] = c.max;
      col["imputation"] = {{"kind", imputation_name(c.imputation.kind)},
                           {"mode_level", c.imputation.mode_level},
                           {"values", c.imputation.values},
                           {"probabilities", c.imputation.probabilities},
                           {"seed", c.imputation.seed}};
      if (c.kind == ColumnKind::categorical)
        col["level_map"] = {{"source_levels", c.level_map.source_levels},
                            {"to_retained", c.level_map.to_retained},
                            {"retained_levels", c.level_map.retained_levels},
                            {"has_other", c.level_map.has_other}};
    }
    cols.push_back(std::move(col));
  }
  return {{"columns", cols},
          {"target", {{"name", r.target.name}, {"task", to_string(r.target.task)}, {"levels", r.target.levels}}},
          {"options",
           {{"max_levels", r.options.max_levels},
            {"min_level_freq", r.options.min_level_freq},
            {"seed", r.options.seed}}}};
}

PreprocessRecipe recipe_from(const json& j) {
  PreprocessRecipe r;
  for (const auto& col : j.at("columns")) {
    RecipeColumn c;
    c.name = col.at("name").get<std::string>();
    c.kind = column_kind_from_string(col.at("kind").get<std::string>());
    c.dropped = col.at("dropped").get<bool>();
    if (!c.dropped) {
      c.min = col.at("min").get<double>();
      c.max = col.at("max").get<double>();
      const auto& imp = col.at("imputation");
      c.imputation.kind = imputation_from(imp.at("kind").get<std::string>());
      c.imputation.mode_level = imp.at("mode_level").get<std::int32_t>();
      c.imputation.values = imp.at("values").get<std::vector<double>>();
      c.imputation.probabilities = imp.at("probabilities").get<std::vector<double>>();
      c.imputation.seed = imp.at("seed").get<std::uint64_t>();
      if (c.kind == ColumnKind::categorical) {
        const auto& lm = col.at("level_map");
        c.level_map.source_levels = lm.at("source_levels").get<std::vector<std::string>>();
        c.level_map.to_retained = lm.at("to_retained").get<std::vector<std::int32_t>>();
        c.level_map.retained_levels = lm.at("retained_levels").get<std::vector<std::string>>();
        c.level_map.has_other = lm.at("has_other").get<bool>();
        if (c.level_map.to_retained.size() != c.level_map.source_levels.size())
          throw DataError("level map of '" + c.name + "' is inconsistent");
      }
    }
    r.columns.push_back(std::move(c));
  }
  const auto& t = j.at("target");
  r.target.name = t.at("name").get<std::string>();
  r.target.task = task_from_string(t.at("task").get<std::string>());
  r.target.levels = t.at("levels").get<std::vector<std::string>>();
  const auto& o = j.at("options");
  r.options.max_levels = o.at("max_levels").get<int>();
  r.options.min_level_freq = o.at("min_level_freq").get<double>();
  r.options.seed = o.at("seed").get<std::uint64_t>();
  return r;
}

json interactions_json(const InteractionSet& s) {
  json pairs = json::array();
  for (const auto& [a, b] : s.pairs) pairs.push_back({a, b});
  return {{"pairs", pairs},
          {"counts", s.counts},
          {"psi", s.psi},
          {"observed_pairs", s.observed_pairs},
          {"skipped_reason", s.skipped_reason}};
}

InteractionSet interactions_from(const json& j) {
  InteractionSet s;
  for (const auto& p : j.at("pairs")) s.pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  s.counts = j.at("counts").get<std::vector<int>>();
  s.psi = j.at("psi").get<double>();
  s.observed_pairs = j.at("observed_pairs").get<int>();
  s.skipped_reason = j.at("skipped_reason").get<std::string>();
  return s;
}

// Stage timings are not stored: the file must be a pure function of data, flags and seed.
json to_json(const AcwbModel& model) {
  json components = json::array();
  for (const auto& c : model.components) {
    components.push_back({{"offset", c.offset},
                          {"uni", stage_json(c.uni)},
                          {"interactions", interactions_json(c.interactions)},
                          {"pint", c.pint ? stage_json(*c.pint) : json(nullptr)},
                          {"deep", c.deep ? deep_json(*c.deep) : json(nullptr)},
                          {"train_risk", checkpoints_json(c.train_risk)},
                          {"validation_risk", checkpoints_json(c.validation_risk)}});
  }
  return {{"format_version", kModelFormatVersion},
          {"task", to_string(model.task())},
          {"loss", to_string(model.loss)},
          {"config", config_json(model.config)},
          {"recipe", recipe_json(model.recipe)},
          {"train_rows", model.train_rows},
          {"validation_rows", model.validation_rows},
          {"components", components}};
}

AcwbModel from_json(const json& j) {
  if (!j.is_object() || !j.contains("format_version")) throw DataError("not a model file: no format_version");
  const int version = j.at("format_version").get<int>();
  if (version != kModelFormatVersion)
    throw DataError("model file format version " + std::to_string(version) + " is not supported (expected version " +
                    std::to_string(kModelFormatVersion) + ")");
  AcwbModel m;
  m.config = config_from(j.at("config"));
  m.recipe = recipe_from(j.at("recipe"));
  m.loss = loss_from_string(j.at("loss").get<std::string>());
  m.train_rows = j.at("train_rows").get<Index>();
  m.validation_rows = j.at("validation_rows").get<Index>();
  const int n_features = static_cast<int>(m.feature_names().size());
  for (const auto& c : j.at("components")) {
    ComponentModel cm;
    cm.offset = c.at("offset").get<double>();
    cm.uni = stage_from(c.at("uni"));
    cm.interactions = interactions_from(c.at("interactions"));
    if (!c.at("pint").is_null()) cm.pint = stage_from(c.at("pint"));
    if (!c.at("deep").is_null()) cm.deep = deep_from(c.at("deep"), n_features);
    cm.train_risk = checkpoints_from(c.at("train_risk"));
    cm.validation_risk = checkpoints_from(c.at("validation_risk"));
    m.components.push_back(std::move(cm));
  }
  if (m.components.empty()) throw DataError("model file has no components");
  return m;
}

}  // namespace

void save_model(const AcwbModel& model, std::ostream& out) {
  out << to_json(model).dump(1) << '\n';
  if (!out) throw DataError("failed to write the model");
}

void save_model(const AcwbModel& model, const std::string& path) {
  std::ostringstream buf;
  save_model(model, buf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << buf.str();
  out.close();
  if (!out) throw DataError("failed to write '" + path + "'");
}

AcwbModel load_model_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError("corrupt model file at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

AcwbModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model_from_string(buf.str());
}

}  // namespace acwb
