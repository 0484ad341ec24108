#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "acwb/data.hpp"
#include "test_util.hpp"

namespace acwb {
namespace {

Dataset parse(const std::string& text, CsvOptions opt) {
  std::istringstream in(text);
  return read_csv(in, opt);
}

CsvOptions target(const std::string& name) {
  CsvOptions o;
  o.target = name;
  return o;
}

TEST(Csv, NumericColumnWithMissing) {
  const auto ds = parse("a,y\n1.5,1\n2,2\nNA,3\n", target("y"));
  ASSERT_EQ(ds.n_features(), 1);
  const auto& c = ds.columns[0];
  EXPECT_TRUE(c.is_numeric());
  EXPECT_EQ(c.schema.missing_count, 1u);
  EXPECT_DOUBLE_EQ(c.numeric[0], 1.5);
  EXPECT_TRUE(std::isnan(c.numeric[2]));
  EXPECT_EQ(ds.task(), Task::regression);
}

TEST(Csv, CategoricalLevelsInFirstAppearanceOrder) {
  const auto ds = parse("a,y\nb,1\na,2\nb,3\n", target("y"));
  const auto& c = ds.columns[0];
  EXPECT_FALSE(c.is_numeric());
  EXPECT_EQ(c.schema.levels, (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(c.codes, (std::vector<std::int32_t>{0, 1, 0}));
}

TEST(Csv, QuotingAndEmbeddedNewlines) {
  std::istringstream in("a,b\r\n\"x,1\",\"he said \"\"hi\"\"\"\r\n\"multi\nline\",2\n");
  const auto rows = parse_csv(in);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "x,1");
  EXPECT_EQ(rows[1][1], "he said \"hi\"");
  EXPECT_EQ(rows[2][0], "multi\nline");
}

TEST(Csv, TaskDetection) {
  EXPECT_EQ(parse("x,y\n1,a\n2,b\n3,a\n", target("y")).task(), Task::binary_classification);
  EXPECT_EQ(parse("x,y\n1,a\n2,b\n3,c\n", target("y")).task(), Task::multiclass_classification);
  auto opt = target("y");
  opt.task = Task::binary_classification;
  const auto ds = parse("x,y\n1,1\n2,2\n3,1\n", opt);
  EXPECT_EQ(ds.task(), Task::binary_classification);
  EXPECT_EQ(ds.target_info.levels.size(), 2u);
}

TEST(Csv, NaStringsOption) {
  auto opt = target("y");
  opt.na_strings = {"?"};
  const auto ds = parse("a,b,y\n1,u,0\n?,?,1\n3,v,0\n", opt);
  EXPECT_TRUE(ds.columns[0].is_numeric());
  EXPECT_TRUE(std::isnan(ds.columns[0].numeric[1]));
  EXPECT_EQ(ds.columns[1].codes[1], kMissingCode);
}

TEST(Csv, DistinctLoadErrors) {
  auto kind_of = [](const std::string& text, const CsvOptions& opt) {
    try {
      parse(text, opt);
    } catch (const LoadError& e) {
      return e.kind();
    }
    return LoadErrorKind::malformed;
  };
  EXPECT_EQ(kind_of("a,b\n1,2\n", target("y")), LoadErrorKind::missing_target);
  EXPECT_EQ(kind_of("a,y\n1,2\n3\n", target("y")), LoadErrorKind::ragged_row);
  EXPECT_EQ(kind_of("a,y\n", target("y")), LoadErrorKind::no_rows);
  try {
    load_csv("/nonexistent/file.csv", target("y"));
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.kind(), LoadErrorKind::missing_file);
  }
}

TEST(Csv, HeaderOnlyAllowedWhenRequested) {
  auto opt = target("y");
  opt.allow_empty = true;
  const auto ds = parse("a,y\n", opt);
  EXPECT_EQ(ds.n_rows(), 0);
}

TEST(Csv, WriteReadRoundTrip) {
  Rng rng(3);
  Vector x(50);
  for (Index i = 0; i < x.size(); ++i) x[i] = test::normal(rng) * 1e3 / 7.0;
  x[4] = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::int32_t> codes(50);
  for (auto& c : codes) c = static_cast<std::int32_t>(rng.below(3));
  codes[9] = kMissingCode;
  Vector y = Vector::LinSpaced(50, -1.0, 1.0) / 3.0;
  const auto ds = test::make_dataset({test::numeric_column("x", x), test::categorical_column("c,q", codes, {"p", "q r", "\"s\""})}, y);
  std::ostringstream out;
  write_csv(ds, out);
  auto back = parse(out.str(), target("y"));
  ASSERT_EQ(back.n_rows(), 50);
  for (Index i = 0; i < 50; ++i) {
    if (std::isnan(x[i]))
      EXPECT_TRUE(std::isnan(back.columns[0].numeric[i]));
    else
      EXPECT_EQ(back.columns[0].numeric[i], x[i]);
    EXPECT_EQ(back.target[i], y[i]);
    const auto code = codes[static_cast<std::size_t>(i)];
    const auto bcode = back.columns[1].codes[static_cast<std::size_t>(i)];
    if (code == kMissingCode)
      EXPECT_EQ(bcode, kMissingCode);
    else
      EXPECT_EQ(back.columns[1].schema.levels[static_cast<std::size_t>(bcode)],
                ds.columns[1].schema.levels[static_cast<std::size_t>(code)]);
  }
  EXPECT_EQ(back.columns[1].schema.name, "c,q");
}

Dataset binary_counts(int pos, int neg) {
  Vector y(pos + neg);
  for (int i = 0; i < pos + neg; ++i) y[i] = i < pos ? 1.0 : 0.0;
  Vector x = Vector::LinSpaced(pos + neg, 0.0, 1.0);
  return test::make_dataset({test::numeric_column("x", x)}, y, Task::binary_classification);
}

TEST(Split, SizesAndDeterminism) {
  Vector x = Vector::LinSpaced(100, 0.0, 1.0);
  const auto ds = test::make_dataset({test::numeric_column("x", x)}, x);
  const auto a = split(ds, {0.2, 7, false});
  const auto b = split(ds, {0.2, 7, false});
  EXPECT_EQ(a.train.n_rows(), 80);
  EXPECT_EQ(a.validation.n_rows(), 20);
  EXPECT_EQ(a.validation_rows, b.validation_rows);
}

TEST(Split, PartitionIsExhaustive) {
  const auto ds = binary_counts(37, 63);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = split(ds, {0.3, seed, true});
    std::vector<Index> all = s.train_rows;
    all.insert(all.end(), s.validation_rows.begin(), s.validation_rows.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), 100u);
    for (Index i = 0; i < 100; ++i) EXPECT_EQ(all[static_cast<std::size_t>(i)], i);
  }
}

TEST(Split, StratifiedCounts) {
  const auto s = split(binary_counts(10, 90), {0.2, 1, true});
  EXPECT_EQ(s.validation.n_rows(), 20);
  EXPECT_EQ(s.validation.target.sum(), 2.0);
}

TEST(Split, SeedsProduceDifferentSplits) {
  Vector x = Vector::LinSpaced(10, 0.0, 1.0);
  const auto ds = test::make_dataset({test::numeric_column("x", x)}, x);
  std::set<std::vector<Index>> seen;
  for (std::uint64_t seed = 0; seed < 10; ++seed) seen.insert(split(ds, {0.2, seed, false}).validation_rows);
  EXPECT_GT(seen.size(), 1u);
  EXPECT_NE(split(ds, {0.2, 7, false}).validation_rows, split(ds, {0.2, 8, false}).validation_rows);
}

TEST(Subsample, FloorArithmeticAndIdentity) {
  Vector x = Vector::LinSpaced(1000, 0.0, 1.0);
  const auto ds = test::make_dataset({test::numeric_column("x", x)}, x);
  EXPECT_EQ(subsample(ds, 0.5, 1).n_rows(), 500);
  const auto full = subsample(ds, 1.0, 1);
  EXPECT_EQ(full.columns[0].numeric, ds.columns[0].numeric);
  EXPECT_EQ(full.schema().size(), ds.schema().size());
}

TEST(Subsample, StratifiedProportions) {
  const auto ds = binary_counts(2300, 7700);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = subsample(ds, 0.5, seed);
    const double p = s.target.mean();
    EXPECT_NEAR(p, 0.23, 0.05);
  }
}

}  // namespace
}  // namespace acwb
