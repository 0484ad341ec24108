#include <gtest/gtest.h>

#include <filesystem>
#include <json.hpp>
#include <set>
#include <sstream>

#include "acwb/model_io.hpp"
#include "commands.hpp"
#include "test_util.hpp"

namespace acwb {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(const std::string& path) {
  std::istringstream in(test::read_file(path));
  auto cells = parse_csv(in);
  Table t;
  if (cells.empty()) return t;
  t.header = cells.front();
  t.rows.assign(cells.begin() + 1, cells.end());
  return t;
}

// Binary task with a numeric interaction, a categorical feature and missing cells.
std::string binary_csv(Index n, std::uint64_t seed, bool header_only = false) {
  Rng rng(seed);
  std::ostringstream s;
  s << "age,hours,group,label\n";
  if (header_only) return s.str();
  const char* groups[] = {"red", "green", "blue"};
  for (Index i = 0; i < n; ++i) {
    const double a = rng.uniform();
    const double h = rng.uniform();
    const auto g = rng.below(3);
    const double eta = 3.0 * (a - 0.5) + 4.0 * (a - 0.5) * (h - 0.5) * 4.0 + (g == 1 ? 1.0 : -0.5);
    const bool y = rng.uniform() < 1.0 / (1.0 + std::exp(-eta));
    if (i % 50 == 7) {
      s << "NA,";
    } else {
      s << a << ",";
    }
    s << h << "," << groups[g] << "," << (y ? "yes" : "no") << "\n";
  }
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = test::tmp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    data_ = dir_ + "/train.csv";
    test::write_file(data_, binary_csv(400, 1));
  }
  std::string path(const std::string& name) const { return dir_ + "/" + name; }
  CliRun train(const std::string& model, std::vector<std::string> extra = {}) {
    std::vector<std::string> args = {"train", "--data", data_, "--target", "label", "--model", model,
                                     "--seed", "3"};
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  }
  std::string dir_;
  std::string data_;
};

TEST_F(Cli, TrainWritesModelAndSummary) {
  const auto r = train(path("m.acwb"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("m.acwb")));
  for (const char* stage : {"offset", "univariate", "interaction", "deep"}) EXPECT_NE(r.out.find(stage), std::string::npos);
  const auto model = load_model(path("m.acwb"));
  EXPECT_EQ(model.task(), Task::binary_classification);
  EXPECT_TRUE(model.components[0].deep.has_value());
}

TEST_F(Cli, AblationFlagsDisableStages) {
  ASSERT_EQ(train(path("uni.acwb"), {"--deep", "off", "--interactions", "off"}).code, 0);
  const auto model = load_model(path("uni.acwb"));
  EXPECT_FALSE(model.components[0].pint.has_value());
  EXPECT_FALSE(model.components[0].deep.has_value());
  EXPECT_EQ(train(path("x.acwb"), {"--deep", "maybe"}).code, cli::kConfigError);
}

TEST_F(Cli, ExitCodes) {
  const auto missing_target = run_cli({"train", "--data", data_});
  EXPECT_EQ(missing_target.code, cli::kConfigError);
  EXPECT_NE(missing_target.err.find("--target"), std::string::npos);
  EXPECT_NE(missing_target.err.find("Usage"), std::string::npos) << missing_target.err;

  EXPECT_EQ(run_cli({"train", "--data", path("nope.csv"), "--target", "label"}).code, cli::kDataError);
  EXPECT_EQ(run_cli({"train", "--data", data_, "--target", "nope"}).code, cli::kDataError);
  EXPECT_EQ(train(path("x.acwb"), {"--nu", "2"}).code, cli::kConfigError);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kConfigError);
  EXPECT_EQ(run_cli({}).code, cli::kConfigError);

  test::write_file(path("bad.cfg"), "nu = 0.2\nwarp = 9\n");
  EXPECT_EQ(train(path("x.acwb"), {"--config", path("bad.cfg")}).code, cli::kConfigError);

  // Squared residuals overflow, so boosting reports divergence.
  std::ostringstream huge;
  huge << "x,y\n";
  for (int i = 0; i < 60; ++i) huge << i << "," << (i % 2 ? "1e160" : "-1e160") << "\n";
  test::write_file(path("huge.csv"), huge.str());
  const auto diverged = run_cli({"train", "--data", path("huge.csv"), "--target", "y", "--model", path("h.acwb")});
  EXPECT_EQ(diverged.code, cli::kFitError) << diverged.err;
  EXPECT_FALSE(fs::exists(path("h.acwb")));
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  test::write_file(path("c.cfg"), "# comment\nnu = 0.2\npsi=0.05\ndeep = off\n");
  ASSERT_EQ(train(path("c.acwb"), {"--config", path("c.cfg"), "--nu", "0.3"}).code, 0);
  const auto model = load_model(path("c.acwb"));
  EXPECT_EQ(model.config.nu, 0.3);
  EXPECT_EQ(model.config.psi, 0.05);
  EXPECT_FALSE(model.config.deep);
  const auto parsed = cli::read_config_file(path("c.cfg"));
  EXPECT_EQ(cli::format_config(cli::read_config_file(path("c.cfg"))), cli::format_config(parsed));
}

TEST_F(Cli, PredictReplaysTraining) {
  ASSERT_EQ(train(path("m.acwb")).code, 0);
  const auto r = run_cli({"predict", "--model", path("m.acwb"), "--data", data_, "--out", path("p.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = read_table(path("p.csv"));
  ASSERT_EQ(table.header, (std::vector<std::string>{"row_id", "score", "probability", "predicted_class"}));
  ASSERT_EQ(table.rows.size(), 400u);

  const auto model = load_model(path("m.acwb"));
  CsvOptions load;
  load.target = "label";
  const auto pred = predict_full(model, load_csv(data_, load));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double score = std::stod(table.rows[i][1]);
    const double prob = std::stod(table.rows[i][2]);
    EXPECT_NEAR(score, pred.scores(static_cast<Index>(i), 0), 1e-10);
    EXPECT_GT(prob, 0.0);
    EXPECT_LT(prob, 1.0);
    EXPECT_TRUE(table.rows[i][3] == "yes" || table.rows[i][3] == "no");
  }
}

TEST_F(Cli, PredictEdgeCases) {
  ASSERT_EQ(train(path("m.acwb")).code, 0);
  test::write_file(path("empty.csv"), binary_csv(0, 1, true));
  ASSERT_EQ(run_cli({"predict", "--model", path("m.acwb"), "--data", path("empty.csv"), "--out", path("e.csv")}).code, 0);
  EXPECT_EQ(test::read_file(path("e.csv")), "row_id,score,probability,predicted_class\n");

  test::write_file(path("unlabeled.csv"), "age,hours,group\n0.5,0.5,red\n");
  EXPECT_EQ(run_cli({"predict", "--model", path("m.acwb"), "--data", path("unlabeled.csv"), "--out", path("u.csv")}).code, 0);

  test::write_file(path("short.csv"), "age,group,label\n0.5,red,yes\n");
  const auto r = run_cli({"predict", "--model", path("m.acwb"), "--data", path("short.csv"), "--out", path("s.csv")});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("hours"), std::string::npos) << r.err;

  test::write_file(path("typed.csv"), "age,hours,group,label\n0.5,late,red,yes\n");
  EXPECT_EQ(run_cli({"predict", "--model", path("m.acwb"), "--data", path("typed.csv"), "--out", path("t.csv")}).code,
            cli::kDataError);
}

TEST_F(Cli, ExplainBundle) {
  ASSERT_EQ(train(path("m.acwb"), {"--psi", "1"}).code, 0);
  const std::string out = path("explain");
  const auto r = run_cli({"explain", "--model", path("m.acwb"), "--out", out, "--grid", "25", "--row", "4", "--data", data_});
  ASSERT_EQ(r.code, 0) << r.err;

  const auto complexity = nlohmann::json::parse(test::read_file(out + "/complexity.json"));
  const double rho = complexity["rho_uni"].get<double>() + complexity["rho_pint"].get<double>() +
                     complexity["rho_deep"].get<double>();
  EXPECT_NEAR(rho, 1.0, 1e-10);

  const auto vip = read_table(out + "/vip.csv");
  EXPECT_EQ(vip.header, (std::vector<std::string>{"component", "term", "stage", "vip"}));
  EXPECT_FALSE(vip.rows.empty());

  const auto effect = read_table(out + "/effects/age.csv");
  EXPECT_EQ(effect.header, (std::vector<std::string>{"grid", "total", "linear", "nonlinear"}));
  EXPECT_EQ(effect.rows.size(), 25u);
  const auto levels = read_table(out + "/effects/group.csv");
  EXPECT_EQ(levels.header[0], "level");

  const auto model = load_model(path("m.acwb"));
  const auto& pairs = model.components[0].interactions.pairs;
  EXPECT_EQ(static_cast<std::size_t>(std::distance(fs::directory_iterator(out + "/interactions"), fs::directory_iterator())),
            pairs.size());

  const auto dec = read_table(out + "/decomposition_4.csv");
  double sum = 0.0, total = 0.0;
  for (const auto& row : dec.rows) {
    if (row[1] == "total") {
      total = std::stod(row[2]);
    } else {
      sum += std::stod(row[2]);
    }
  }
  CsvOptions load;
  load.target = "label";
  const auto pred = predict_full(model, load_csv(data_, load));
  EXPECT_NEAR(total, pred.scores(4, 0), 1e-10);
  EXPECT_NEAR(sum, total, 1e-10);

  test::write_file(path("junk.acwb"), "{\"format_version\": 1");
  EXPECT_EQ(run_cli({"explain", "--model", path("junk.acwb"), "--out", path("junk")}).code, cli::kDataError);
}

TEST_F(Cli, Deterministic) {
  const std::string before = test::read_file(data_);
  ASSERT_EQ(train(path("a.acwb")).code, 0);
  ASSERT_EQ(train(path("b.acwb")).code, 0);
  // EXPECT_TRUE rather than EXPECT_EQ: a diff of two megabyte files is not useful output.
  EXPECT_TRUE(test::read_file(path("a.acwb")) == test::read_file(path("b.acwb")));
  EXPECT_EQ(test::read_file(data_), before);
  ASSERT_EQ(run_cli({"predict", "--model", path("a.acwb"), "--data", data_, "--out", path("p1.csv")}).code, 0);
  ASSERT_EQ(run_cli({"predict", "--model", path("a.acwb"), "--data", data_, "--out", path("p2.csv")}).code, 0);
  EXPECT_TRUE(test::read_file(path("p1.csv")) == test::read_file(path("p2.csv")));
  ASSERT_EQ(run_cli({"train", "--data", data_, "--target", "label", "--model", path("c.acwb"), "--seed", "4"}).code, 0);
  EXPECT_TRUE(test::read_file(path("a.acwb")) != test::read_file(path("c.acwb")));
}

TEST_F(Cli, TuneAndRetrain) {
  test::write_file(data_, binary_csv(1000, 2));
  test::write_file(path("fast.cfg"), "deep = off\nrf_trees = 50\n");
  const auto r = run_cli({"tune", "--data", data_, "--target", "label", "--eta", "3", "--max-minutes", "5", "--config",
                          path("fast.cfg"), "--out", path("tune"), "--retrain", "--model", path("best.acwb")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto log = read_table(path("tune/tune_log.csv"));
  EXPECT_EQ(log.header, (std::vector<std::string>{"config_id", "nu", "psi", "budget", "risk", "seconds", "bracket", "rung"}));
  std::set<std::string> rungs;
  double best_full = std::numeric_limits<double>::infinity();
  for (const auto& row : log.rows) {
    rungs.insert(row[7]);
    if (std::stod(row[3]) == 1.0) best_full = std::min(best_full, std::stod(row[4]));
  }
  EXPECT_GE(rungs.size(), 2u);
  const AcwbConfig best = cli::read_config_file(path("tune/best_config.txt"));
  bool logged = false;
  for (const auto& row : log.rows)
    if (std::stod(row[3]) == 1.0 && std::stod(row[4]) == best_full)
      logged |= std::stod(row[1]) == best.nu && std::stod(row[2]) == best.psi;
  EXPECT_TRUE(logged);
  const auto model = load_model(path("best.acwb"));
  EXPECT_EQ(model.config.nu, best.nu);
  EXPECT_EQ(model.config.psi, best.psi);
  EXPECT_FALSE(model.config.deep);
}

TEST_F(Cli, HelpExitsCleanly) {
  const auto r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"train", "predict", "explain", "tune", "bench"}) EXPECT_NE(r.out.find(sub), std::string::npos);
}

}  // namespace
}  // namespace acwb
