#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ccppm/marglik.hpp"

namespace ccppm {

enum class DateFormat {
  Index,  // no date column; rows are numbered 1..n
  Iso,    // yyyy-mm-dd
  Dmy,    // dd/mm/yyyy
};

DateFormat parse_date_format(std::string_view name);
std::string_view to_string(DateFormat f);

// How to find series in CSV files.
//  wide: one row per date, one column per series (all non-date columns when
//        `series` is empty).
//  long: one row per observation with date, series and value columns.
struct ColumnMapping {
  bool long_format = false;
  DateFormat date_format = DateFormat::Iso;
  std::string date_column = "date";
  std::string series_column = "series";
  std::string value_column = "value";
  std::vector<std::string> series;  // subset / order; empty means all
};

struct LoadedSeries {
  std::vector<std::string> dates;  // normalized yyyy-mm-dd, or row numbers
  std::vector<SeriesData> series;
};

// Reads and aligns the series. Throws DataError on missing cells (naming the
// series and row), unparseable numbers, ragged or misaligned inputs, and
// unknown columns.
LoadedSeries load_series(const std::vector<std::filesystem::path>& paths, const ColumnMapping& mapping);

// R_t = (P_t - P_{t-1}) / P_{t-1}; needs n >= 2 and all prices > 0.
SeriesData compute_returns(const SeriesData& prices);
LoadedSeries compute_returns(const LoadedSeries& prices);

// Wide CSV with a date column followed by one column per series.
void write_series_csv(const std::filesystem::path& path, const LoadedSeries& data);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

// Minimal RFC 4180 line splitter (quoted fields, doubled quotes).
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace ccppm
