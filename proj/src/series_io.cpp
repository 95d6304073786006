#include "ccppm/series_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "ccppm/error.hpp"

namespace ccppm {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

int to_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return -1;
  return v;
}

bool valid_ymd(int y, int m, int d) {
  if (y < 0 || m < 1 || m > 12 || d < 1) return false;
  static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return d <= days[m - 1] + ((m == 2 && leap) ? 1 : 0);
}

std::string ymd_key(int y, int m, int d) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
  return buf;
}

std::optional<std::string> normalize_date(const std::string& text, DateFormat f) {
  if (f == DateFormat::Iso) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    const int y = to_int(std::string_view(text).substr(0, 4));
    const int m = to_int(std::string_view(text).substr(5, 2));
    const int d = to_int(std::string_view(text).substr(8, 2));
    if (!valid_ymd(y, m, d)) return std::nullopt;
    return ymd_key(y, m, d);
  }
  if (f == DateFormat::Dmy) {
    const auto s1 = text.find('/');
    const auto s2 = text.find('/', s1 == std::string::npos ? s1 : s1 + 1);
    if (s1 == std::string::npos || s2 == std::string::npos) return std::nullopt;
    const int d = to_int(std::string_view(text).substr(0, s1));
    const int m = to_int(std::string_view(text).substr(s1 + 1, s2 - s1 - 1));
    const int y = to_int(std::string_view(text).substr(s2 + 1));
    if (!valid_ymd(y, m, d) || text.size() - s2 - 1 != 4) return std::nullopt;
    return ymd_key(y, m, d);
  }
  return text;
}

struct Table {
  std::filesystem::path path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::optional<std::size_t> column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  Table t;
  t.path = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    for (auto& c : cells) c = trim(c);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(lineno);
  }
  if (t.header.empty()) throw DataError(path.string() + " is empty");
  return t;
}

double parse_cell(const Table& t, std::size_t r, std::size_t col, const std::string& series) {
  const std::string& cell = t.rows[r][col];
  const std::string where = "series '" + series + "', row " + std::to_string(r + 1) + " (" + t.path.string() + ":" +
                            std::to_string(t.line_numbers[r]) + ")";
  if (is_missing(cell)) throw DataError("missing value for " + where);
  try {
    return parse_double(cell);
  } catch (const InvalidInput&) {
    throw DataError("unparseable number '" + cell + "' for " + where);
  }
}

std::string describe_gaps(const std::vector<std::string>& gaps) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(gaps.size(), 10);
  for (std::size_t k = 0; k < shown; ++k) out += (k ? ", " : "") + gaps[k];
  if (gaps.size() > shown) out += ", ... (" + std::to_string(gaps.size()) + " total)";
  return out;
}

std::vector<std::string> row_dates(const Table& t, const ColumnMapping& m) {
  std::vector<std::string> dates;
  dates.reserve(t.rows.size());
  if (m.date_format == DateFormat::Index) {
    for (std::size_t r = 0; r < t.rows.size(); ++r) dates.push_back(std::to_string(r + 1));
    return dates;
  }
  const auto dc = t.column(m.date_column);
  if (!dc) throw DataError(t.path.string() + ": no date column '" + m.date_column + "'");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto d = normalize_date(t.rows[r][*dc], m.date_format);
    if (!d) {
      throw DataError(t.path.string() + ":" + std::to_string(t.line_numbers[r]) + ": bad date '" + t.rows[r][*dc] +
                      "' for format " + std::string(to_string(m.date_format)));
    }
    dates.push_back(std::move(*d));
  }
  return dates;
}

LoadedSeries load_wide(const std::vector<Table>& tables, const ColumnMapping& m) {
  LoadedSeries out;
  std::map<std::string, std::size_t> seen;
  std::vector<std::string> reference_dates;
  for (std::size_t f = 0; f < tables.size(); ++f) {
    const Table& t = tables[f];
    auto dates = row_dates(t, m);
    for (std::size_t r = 1; r < dates.size(); ++r) {
      if (m.date_format != DateFormat::Index && !(dates[r - 1] < dates[r])) {
        throw DataError(t.path.string() + ": dates not strictly increasing at row " + std::to_string(r + 1));
      }
    }
    if (f == 0) {
      reference_dates = dates;
    } else if (dates != reference_dates) {
      if (m.date_format == DateFormat::Index) {
        throw DataError(t.path.string() + ": row count differs from " + tables[0].path.string());
      }
      std::vector<std::string> gaps;
      std::set_symmetric_difference(reference_dates.begin(), reference_dates.end(), dates.begin(), dates.end(),
                                    std::back_inserter(gaps));
      throw DataError(t.path.string() + ": dates do not align with " + tables[0].path.string() +
                      "; missing dates: " + describe_gaps(gaps));
    }
    for (std::size_t col = 0; col < t.header.size(); ++col) {
      const std::string& name = t.header[col];
      if (m.date_format != DateFormat::Index && name == m.date_column) continue;
      if (!m.series.empty() && std::find(m.series.begin(), m.series.end(), name) == m.series.end()) continue;
      if (seen.count(name)) throw DataError("series '" + name + "' appears in more than one column");
      SeriesData s;
      s.name = name;
      s.y.reserve(t.rows.size());
      for (std::size_t r = 0; r < t.rows.size(); ++r) s.y.push_back(parse_cell(t, r, col, name));
      seen[name] = out.series.size();
      out.series.push_back(std::move(s));
    }
  }
  if (!m.series.empty()) {
    std::vector<SeriesData> ordered;
    for (const auto& name : m.series) {
      const auto it = seen.find(name);
      if (it == seen.end()) throw DataError("series '" + name + "' not found in input");
      ordered.push_back(std::move(out.series[it->second]));
    }
    out.series = std::move(ordered);
  }
  out.dates = std::move(reference_dates);
  return out;
}

LoadedSeries load_long(const std::vector<Table>& tables, const ColumnMapping& m) {
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, double>> values;
  std::map<std::string, std::size_t> row_of_first;
  for (const Table& t : tables) {
    const auto sc = t.column(m.series_column);
    const auto vc = t.column(m.value_column);
    if (!sc) throw DataError(t.path.string() + ": no series column '" + m.series_column + "'");
    if (!vc) throw DataError(t.path.string() + ": no value column '" + m.value_column + "'");
    if (m.date_format == DateFormat::Index) {
      throw DataError("long format needs a date column (date format iso or dmy)");
    }
    const auto dates = row_dates(t, m);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string& name = t.rows[r][*sc];
      if (!m.series.empty() && std::find(m.series.begin(), m.series.end(), name) == m.series.end()) continue;
      if (!values.count(name)) order.push_back(name);
      auto& col = values[name];
      if (col.count(dates[r])) {
        throw DataError(t.path.string() + ":" + std::to_string(t.line_numbers[r]) + ": duplicate date " + dates[r] +
                        " for series '" + name + "'");
      }
      col[dates[r]] = parse_cell(t, r, *vc, name);
    }
  }
  if (!m.series.empty()) {
    for (const auto& name : m.series) {
      if (!values.count(name)) throw DataError("series '" + name + "' not found in input");
    }
    order = m.series;
  }
  LoadedSeries out;
  std::map<std::string, int> all_dates;
  for (const auto& [name, col] : values) {
    for (const auto& [d, v] : col) all_dates[d] = 0;
  }
  for (const auto& [d, unused] : all_dates) out.dates.push_back(d);
  for (const auto& name : order) {
    const auto& col = values[name];
    std::vector<std::string> gaps;
    SeriesData s;
    s.name = name;
    for (std::size_t r = 0; r < out.dates.size(); ++r) {
      const auto it = col.find(out.dates[r]);
      if (it == col.end()) {
        gaps.push_back(out.dates[r] + " (row " + std::to_string(r + 1) + ")");
      } else {
        s.y.push_back(it->second);
      }
    }
    if (!gaps.empty()) throw DataError("missing value for series '" + name + "' at " + describe_gaps(gaps));
    out.series.push_back(std::move(s));
  }
  return out;
}

}  // namespace

DateFormat parse_date_format(std::string_view name) {
  if (name == "iso") return DateFormat::Iso;
  if (name == "dmy") return DateFormat::Dmy;
  if (name == "index" || name == "none") return DateFormat::Index;
  throw ConfigError("unknown date format '" + std::string(name) + "' (expected iso, dmy or index)");
}

std::string_view to_string(DateFormat f) {
  switch (f) {
    case DateFormat::Iso: return "iso";
    case DateFormat::Dmy: return "dmy";
    case DateFormat::Index: return "index";
  }
  return "?";
}

LoadedSeries load_series(const std::vector<std::filesystem::path>& paths, const ColumnMapping& mapping) {
  if (paths.empty()) throw DataError("no input files given");
  std::vector<Table> tables;
  for (const auto& p : paths) tables.push_back(read_table(p));
  LoadedSeries out = mapping.long_format ? load_long(tables, mapping) : load_wide(tables, mapping);
  if (out.series.empty()) throw DataError("no series found in input");
  for (const auto& s : out.series) {
    if (s.y.size() != out.dates.size()) throw DataError("series '" + s.name + "' has a ragged length");
    for (double v : s.y) {
      if (!std::isfinite(v)) throw DataError("series '" + s.name + "' contains a non-finite value");
    }
  }
  return out;
}

SeriesData compute_returns(const SeriesData& prices) {
  const std::size_t n = prices.y.size();
  if (n < 2) throw InvalidInput("returns need at least two prices (series '" + prices.name + "')");
  for (std::size_t t = 0; t < n; ++t) {
    if (!(prices.y[t] > 0.0)) {
      throw DataError("nonpositive price " + format_double(prices.y[t]) + " in series '" + prices.name + "' at row " +
                      std::to_string(t + 1));
    }
  }
  SeriesData r;
  r.name = prices.name;
  r.y.resize(n - 1);
  for (std::size_t t = 1; t < n; ++t) r.y[t - 1] = (prices.y[t] - prices.y[t - 1]) / prices.y[t - 1];
  return r;
}

LoadedSeries compute_returns(const LoadedSeries& prices) {
  LoadedSeries out;
  out.dates.assign(prices.dates.begin() + (prices.dates.empty() ? 0 : 1), prices.dates.end());
  for (const auto& s : prices.series) out.series.push_back(compute_returns(s));
  return out;
}

void write_series_csv(const std::filesystem::path& path, const LoadedSeries& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "date";
  for (const auto& s : data.series) out << ',' << s.name;
  out << '\n';
  for (std::size_t r = 0; r < data.dates.size(); ++r) {
    out << data.dates[r];
    for (const auto& s : data.series) out << ',' << format_double(s.y[r]);
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InvalidInput("cannot format number");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = text.data() + text.size();
  if (b != e && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || b == e) throw InvalidInput("not a number: '" + std::string(text) + "'");
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r' && ch != '\n') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace ccppm
