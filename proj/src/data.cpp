#include "acwb/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace acwb {

std::string to_string(ColumnKind kind) {
  return kind == ColumnKind::numeric ? "numeric" : "categorical";
}

std::string to_string(Task task) {
  switch (task) {
    case Task::regression:
      return "regression";
    case Task::binary_classification:
      return "binary";
    case Task::multiclass_classification:
      return "multiclass";
  }
  return "regression";
}

ColumnKind column_kind_from_string(std::string_view s) {
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "categorical") return ColumnKind::categorical;
  throw DataError("unknown column kind '" + std::string(s) + "'");
}

Task task_from_string(std::string_view s) {
  if (s == "regression") return Task::regression;
  if (s == "binary" || s == "binary_classification") return Task::binary_classification;
  if (s == "multiclass" || s == "multiclass_classification") return Task::multiclass_classification;
  throw ConfigError("unknown task '" + std::string(s) + "' (expected regression, binary, multiclass)");
}

Index Column::size() const {
  return is_numeric() ? numeric.size() : static_cast<Index>(codes.size());
}

bool Column::is_missing(Index row) const {
  if (is_numeric()) return std::isnan(numeric[row]);
  return codes[static_cast<std::size_t>(row)] == kMissingCode;
}

Index Dataset::n_rows() const {
  if (!columns.empty()) return columns.front().size();
  return target.size();
}

std::optional<Index> Dataset::find_column(std::string_view name) const {
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (columns[j].schema.name == name) return static_cast<Index>(j);
  return std::nullopt;
}

std::vector<ColumnSchema> Dataset::schema() const {
  std::vector<ColumnSchema> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.schema);
  return out;
}

Dataset Dataset::take(std::span<const Index> rows) const {
  Dataset out;
  out.target_info = target_info;
  out.columns.reserve(columns.size());
  for (const auto& col : columns) {
    Column c;
    c.schema = col.schema;
    c.schema.missing_count = 0;
    if (col.is_numeric()) {
      c.numeric.resize(static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        c.numeric[static_cast<Index>(i)] = col.numeric[rows[i]];
        if (std::isnan(c.numeric[static_cast<Index>(i)])) ++c.schema.missing_count;
      }
    } else {
      c.codes.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        c.codes[i] = col.codes[static_cast<std::size_t>(rows[i])];
        if (c.codes[i] == kMissingCode) ++c.schema.missing_count;
      }
    }
    out.columns.push_back(std::move(c));
  }
  if (target.size() > 0) {
    out.target.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out.target[static_cast<Index>(i)] = target[rows[i]];
  }
  return out;
}

void Dataset::validate() const {
  const Index n = n_rows();
  for (const auto& c : columns) {
    if (c.size() != n) throw DataError("column '" + c.schema.name + "' has inconsistent length");
    if (!c.is_numeric()) {
      const auto levels = static_cast<std::int32_t>(c.schema.levels.size());
      for (auto code : c.codes)
        if (code != kMissingCode && (code < 0 || code >= levels))
          throw DataError("column '" + c.schema.name + "' has an out-of-range level code");
    }
  }
  if (target.size() != 0 && target.size() != n) throw DataError("target length differs from row count");
}

// ---------------------------------------------------------------------------
// CSV

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // distinguishes an empty last field from no field
  char ch;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        if (in.peek() == '\n') in.get(ch);
        end_row();
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) throw LoadError(LoadErrorKind::malformed, "unterminated quoted field at end of file");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

namespace {

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

struct LevelIndex {
  std::vector<std::string> levels;
  std::unordered_map<std::string, std::int32_t> lookup;

  std::int32_t code(const std::string& s) {
    auto it = lookup.find(s);
    if (it != lookup.end()) return it->second;
    const auto c = static_cast<std::int32_t>(levels.size());
    levels.push_back(s);
    lookup.emplace(s, c);
    return c;
  }
};

}  // namespace

Dataset read_csv(std::istream& in, const CsvOptions& options) {
  auto rows = parse_csv(in);
  if (rows.empty()) throw LoadError(LoadErrorKind::malformed, "CSV has no header row");
  const auto header = std::move(rows.front());
  const std::size_t width = header.size();
  const std::size_t n = rows.size() - 1;
  if (n == 0 && !options.allow_empty) throw LoadError(LoadErrorKind::no_rows, "CSV has no data rows");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != width)
      throw LoadError(LoadErrorKind::ragged_row, "row " + std::to_string(i + 1) + " has " +
                                                     std::to_string(rows[i].size()) + " fields, header has " +
                                                     std::to_string(width));
  }

  std::set<std::string> na(options.na_strings.begin(), options.na_strings.end());
  na.insert("");
  na.insert("NA");
  auto is_na = [&](const std::string& s) { return na.count(s) > 0; };

  std::optional<std::size_t> target_col;
  for (std::size_t j = 0; j < width; ++j)
    if (header[j] == options.target && !options.target.empty()) target_col = j;
  if (!target_col && options.require_target)
    throw LoadError(LoadErrorKind::missing_target, "target column '" + options.target + "' not found");

  Dataset ds;
  for (std::size_t j = 0; j < width; ++j) {
    if (target_col && j == *target_col) continue;
    Column col;
    col.schema.name = header[j];
    bool numeric = true;
    auto hint = options.kind_hints.find(header[j]);
    if (hint != options.kind_hints.end()) {
      numeric = hint->second == ColumnKind::numeric;
    } else {
      double tmp;
      for (std::size_t i = 1; i <= n && numeric; ++i) {
        const auto& cell = rows[i][j];
        if (!is_na(cell) && !parse_number(cell, tmp)) numeric = false;
      }
    }
    if (numeric) {
      col.schema.kind = ColumnKind::numeric;
      col.numeric.resize(static_cast<Index>(n));
      for (std::size_t i = 1; i <= n; ++i) {
        const auto& cell = rows[i][j];
        double v = std::numeric_limits<double>::quiet_NaN();
        if (is_na(cell)) {
          ++col.schema.missing_count;
        } else if (!parse_number(cell, v)) {
          throw LoadError(LoadErrorKind::schema_mismatch, "column '" + header[j] + "' expects numbers; row " +
                                                              std::to_string(i + 1) + " has '" + cell + "'");
        }
        col.numeric[static_cast<Index>(i - 1)] = v;
      }
    } else {
      col.schema.kind = ColumnKind::categorical;
      LevelIndex idx;
      col.codes.resize(n);
      for (std::size_t i = 1; i <= n; ++i) {
        const auto& cell = rows[i][j];
        if (is_na(cell)) {
          col.codes[i - 1] = kMissingCode;
          ++col.schema.missing_count;
        } else {
          col.codes[i - 1] = idx.code(cell);
        }
      }
      col.schema.levels = std::move(idx.levels);
    }
    ds.columns.push_back(std::move(col));
  }

  if (target_col) {
    const std::size_t t = *target_col;
    ds.target_info.name = header[t];
    bool numeric = true;
    double tmp;
    for (std::size_t i = 1; i <= n; ++i) {
      if (is_na(rows[i][t]))
        throw LoadError(LoadErrorKind::malformed, "missing target value in row " + std::to_string(i + 1));
      if (!parse_number(rows[i][t], tmp)) numeric = false;
    }
    LevelIndex idx;
    std::vector<std::int32_t> codes(n);
    for (std::size_t i = 1; i <= n; ++i) codes[i - 1] = idx.code(rows[i][t]);
    Task task;
    if (options.task) {
      task = *options.task;
    } else if (numeric) {
      task = Task::regression;
    } else {
      task = idx.levels.size() == 2 ? Task::binary_classification : Task::multiclass_classification;
    }
    if (task == Task::regression && !numeric)
      throw LoadError(LoadErrorKind::schema_mismatch, "regression target '" + header[t] + "' is not numeric");
    ds.target_info.task = task;
    ds.target.resize(static_cast<Index>(n));
    if (task == Task::regression) {
      for (std::size_t i = 1; i <= n; ++i) parse_number(rows[i][t], ds.target[static_cast<Index>(i - 1)]);
    } else {
      ds.target_info.levels = std::move(idx.levels);
      for (std::size_t i = 0; i < n; ++i) ds.target[static_cast<Index>(i)] = codes[i];
    }
  } else {
    ds.target_info.name = options.target;
    if (options.task) ds.target_info.task = *options.task;
  }
  return ds;
}

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::missing_file, "cannot open '" + path + "'");
  return read_csv(in, options);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv(const Dataset& ds, std::ostream& out) {
  const bool with_target = ds.target.size() > 0;
  bool first = true;
  for (const auto& c : ds.columns) {
    if (!first) out << ',';
    out << csv_escape(c.schema.name);
    first = false;
  }
  if (with_target) out << (first ? "" : ",") << csv_escape(ds.target_info.name);
  out << '\n';
  const Index n = ds.n_rows();
  for (Index i = 0; i < n; ++i) {
    first = true;
    for (const auto& c : ds.columns) {
      if (!first) out << ',';
      first = false;
      if (c.is_numeric()) {
        out << format_double(c.numeric[i]);
      } else {
        const auto code = c.codes[static_cast<std::size_t>(i)];
        out << (code == kMissingCode ? std::string("NA") : csv_escape(c.schema.levels[static_cast<std::size_t>(code)]));
      }
    }
    if (with_target) {
      if (!first) out << ',';
      if (ds.task() == Task::regression)
        out << format_double(ds.target[i]);
      else
        out << csv_escape(ds.target_info.levels[static_cast<std::size_t>(ds.target[i])]);
    }
    out << '\n';
  }
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(ds, out);
  if (!out) throw DataError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Splitting and subsampling

namespace {

void shuffle(std::vector<Index>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

bool is_classification(const Dataset& ds) {
  return ds.task() != Task::regression && ds.target.size() > 0;
}

// Largest-remainder allocation of `total` items over groups with the given sizes.
std::vector<Index> allocate(const std::vector<Index>& sizes, Index total) {
  Index n = std::accumulate(sizes.begin(), sizes.end(), Index{0});
  std::vector<Index> out(sizes.size());
  std::vector<std::pair<double, std::size_t>> rem;
  Index used = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const double exact = static_cast<double>(total) * static_cast<double>(sizes[g]) / static_cast<double>(n);
    out[g] = static_cast<Index>(std::floor(exact));
    used += out[g];
    rem.emplace_back(exact - static_cast<double>(out[g]), g);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < total && k < rem.size(); ++k) {
    ++out[rem[k].second];
    ++used;
  }
  return out;
}

}  // namespace

std::vector<std::vector<Index>> rows_by_class(const Dataset& ds) {
  std::vector<std::vector<Index>> groups;
  if (!is_classification(ds)) return groups;
  groups.resize(ds.target_info.levels.size());
  for (Index i = 0; i < ds.n_rows(); ++i) groups[static_cast<std::size_t>(ds.target[i])].push_back(i);
  return groups;
}

SplitResult split(const Dataset& ds, const SplitSpec& spec) {
  const Index n = ds.n_rows();
  if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0))
    throw ConfigError("validation fraction must lie in (0, 1)");
  if (n < 10) throw DataError("splitting needs at least 10 rows");
  const Index n_val = static_cast<Index>(std::llround(spec.validation_fraction * static_cast<double>(n)));
  if (n_val < 1 || n_val > n - 1) throw ConfigError("validation fraction leaves an empty partition");

  Rng rng(spec.seed);
  std::vector<char> in_val(static_cast<std::size_t>(n), 0);
  SplitResult result;
  bool stratified = false;
  if (spec.stratify && is_classification(ds)) {
    auto groups = rows_by_class(ds);
    bool possible = true;
    for (const auto& g : groups)
      if (g.size() == 1) possible = false;
    if (possible) {
      stratified = true;
      for (auto& g : groups) {
        const auto k = static_cast<std::size_t>(
            std::llround(spec.validation_fraction * static_cast<double>(g.size())));
        shuffle(g, rng);
        for (std::size_t i = 0; i < k && i < g.size(); ++i) in_val[static_cast<std::size_t>(g[i])] = 1;
      }
    } else {
      result.stratification_fallback = true;
    }
  }
  if (!stratified) {
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    shuffle(all, rng);
    for (Index i = 0; i < n_val; ++i) in_val[static_cast<std::size_t>(all[static_cast<std::size_t>(i)])] = 1;
  }
  for (Index i = 0; i < n; ++i) (in_val[static_cast<std::size_t>(i)] ? result.validation_rows : result.train_rows).push_back(i);
  if (result.validation_rows.empty() || result.train_rows.empty())
    throw ConfigError("validation fraction leaves an empty partition");
  result.train = ds.take(result.train_rows);
  result.validation = ds.take(result.validation_rows);
  return result;
}

std::vector<Index> subsample_rows(const Dataset& ds, double fraction, std::uint64_t seed) {
  const Index n = ds.n_rows();
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("subsample fraction must lie in (0, 1]");
  const Index m = static_cast<Index>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  if (m < 1) throw ConfigError("subsample fraction selects no rows");
  std::vector<Index> rows;
  if (m == n) {
    rows.resize(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});
    return rows;
  }
  Rng rng(seed);
  if (is_classification(ds)) {
    auto groups = rows_by_class(ds);
    std::vector<Index> sizes;
    for (const auto& g : groups) sizes.push_back(static_cast<Index>(g.size()));
    const auto quota = allocate(sizes, m);
    for (std::size_t c = 0; c < groups.size(); ++c) {
      shuffle(groups[c], rng);
      rows.insert(rows.end(), groups[c].begin(), groups[c].begin() + quota[c]);
    }
  } else {
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    shuffle(all, rng);
    rows.assign(all.begin(), all.begin() + m);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

Dataset subsample(const Dataset& ds, double fraction, std::uint64_t seed) {
  const auto rows = subsample_rows(ds, fraction, seed);
  if (static_cast<Index>(rows.size()) == ds.n_rows()) return ds;
  return ds.take(rows);
}

}  // namespace acwb
