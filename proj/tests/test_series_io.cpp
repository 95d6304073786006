#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "ccppm/error.hpp"
#include "ccppm/series_io.hpp"

using namespace ccppm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ccppm_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

const char* kWide =
    "date,A,B,C,D,E\n"
    "1995-10-31,1.5,2,3,4,5\n"
    "1995-11-01,1.25,2.5,3.5,4.5,5.5\n"
    "1995-11-02,1,3,4,5,6\n"
    "1995-11-03,0.75,3.5,4.5,5.5,6.5\n";

}  // namespace

TEST_CASE("wide input") {
  TempDir tmp;
  const auto f = tmp.write("w.csv", kWide);
  const auto s = load_series({f}, ColumnMapping{});
  REQUIRE(s.series.size() == 5);
  CHECK(s.dates == std::vector<std::string>{"1995-10-31", "1995-11-01", "1995-11-02", "1995-11-03"});
  CHECK(s.series[0].name == "A");
  CHECK(s.series[0].y == std::vector<double>{1.5, 1.25, 1, 0.75});
  CHECK(s.series[4].y == std::vector<double>{5, 5.5, 6, 6.5});

  ColumnMapping pick;
  pick.series = {"C", "A"};
  const auto p = load_series({f}, pick);
  REQUIRE(p.series.size() == 2);
  CHECK(p.series[0].name == "C");
  CHECK(p.series[1].name == "A");
  pick.series = {"Z"};
  CHECK_THROWS_AS(load_series({f}, pick), DataError);

  // split across files
  const auto g = tmp.write("a.csv", "date,A,B\n1995-10-31,1.5,2\n1995-11-01,1.25,2.5\n1995-11-02,1,3\n1995-11-03,0.75,3.5\n");
  const auto h = tmp.write("c.csv",
                           "date,C,D,E\n1995-10-31,3,4,5\n1995-11-01,3.5,4.5,5.5\n1995-11-02,4,5,6\n1995-11-03,4.5,5.5,6.5\n");
  const auto both = load_series({g, h}, ColumnMapping{});
  REQUIRE(both.series.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(both.series[i].y == s.series[i].y);

  const auto gap = tmp.write("gap.csv", "date,C\n1995-10-31,3\n1995-11-01,3.5\n1995-11-03,4.5\n");
  const auto msg = message_of([&] { load_series({g, gap}, ColumnMapping{}); });
  CHECK(msg.find("1995-11-02") != std::string::npos);
}

TEST_CASE("long input matches wide input") {
  TempDir tmp;
  const auto wide = load_series({tmp.write("w.csv", kWide)}, ColumnMapping{});
  std::string text = "series,date,value\n";
  // deliberately shuffled rows
  const char* names[] = {"A", "B", "C", "D", "E"};
  for (int r = 3; r >= 0; --r) {
    for (int i = 0; i < 5; ++i) {
      text += std::string(names[i]) + "," + wide.dates[r] + "," + format_double(wide.series[i].y[r]) + "\n";
    }
  }
  ColumnMapping m;
  m.long_format = true;
  const auto lng = load_series({tmp.write("l.csv", text)}, m);
  CHECK(lng.dates == wide.dates);
  REQUIRE(lng.series.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(lng.series[i].name == wide.series[i].name);
    CHECK(lng.series[i].y == wide.series[i].y);
  }

  // one observation missing for series C
  std::string holey = "date,series,value\n";
  for (int r = 0; r < 4; ++r) {
    for (int i = 0; i < 5; ++i) {
      if (i == 2 && r == 1) continue;
      holey += wide.dates[r] + "," + names[i] + "," + format_double(wide.series[i].y[r]) + "\n";
    }
  }
  const auto msg = message_of([&] { load_series({tmp.write("h.csv", holey)}, m); });
  CHECK(msg.find("'C'") != std::string::npos);
  CHECK(msg.find("1995-11-01") != std::string::npos);
}

TEST_CASE("malformed input") {
  TempDir tmp;
  const auto missing = tmp.write("m.csv", "date,A,B\n1995-10-31,1,2\n1995-11-01,,3\n1995-11-02,2,4\n");
  const auto msg = message_of([&] { load_series({missing}, ColumnMapping{}); });
  CHECK(msg.find("'A'") != std::string::npos);
  CHECK(msg.find("row 2") != std::string::npos);

  CHECK_THROWS_AS(load_series({tmp.write("x.csv", "date,A\n1995-10-31,abc\n1995-11-01,1\n")}, ColumnMapping{}),
                  DataError);
  CHECK_THROWS_AS(load_series({tmp.write("r.csv", "date,A,B\n1995-10-31,1\n")}, ColumnMapping{}), DataError);
  CHECK_THROWS_AS(load_series({tmp.write("d.csv", "date,A\n1995-13-45,1\n")}, ColumnMapping{}), DataError);
  CHECK_THROWS_AS(load_series({tmp.write("o.csv", "date,A\n1995-11-02,1\n1995-11-01,2\n")}, ColumnMapping{}),
                  DataError);
  CHECK_THROWS_AS(load_series({tmp.write("n.csv", "when,A\n1995-11-02,1\n")}, ColumnMapping{}), DataError);
  CHECK_THROWS_AS(load_series({tmp.path / "absent.csv"}, ColumnMapping{}), DataError);
  CHECK_THROWS_AS(load_series({}, ColumnMapping{}), DataError);
}

TEST_CASE("date formats") {
  TempDir tmp;
  ColumnMapping dmy;
  dmy.date_format = DateFormat::Dmy;
  const auto s = load_series({tmp.write("d.csv", "date,A\n31/10/1995,1\n01/11/1995,2\n")}, dmy);
  CHECK(s.dates == std::vector<std::string>{"1995-10-31", "1995-11-01"});
  CHECK_THROWS_AS(load_series({tmp.write("e.csv", "date,A\n1995-10-31,1\n")}, dmy), DataError);

  ColumnMapping idx;
  idx.date_format = DateFormat::Index;
  const auto i = load_series({tmp.write("i.csv", "A,B\n1,2\n3,4\n5,6\n")}, idx);
  CHECK(i.dates == std::vector<std::string>{"1", "2", "3"});
  CHECK(i.series[1].y == std::vector<double>{2, 4, 6});

  CHECK(parse_date_format("iso") == DateFormat::Iso);
  CHECK(parse_date_format("dmy") == DateFormat::Dmy);
  CHECK(parse_date_format("index") == DateFormat::Index);
  CHECK_THROWS_AS(parse_date_format("mdy"), ConfigError);
}

TEST_CASE("returns") {
  SeriesData p;
  p.name = "P";
  p.y = {100, 110};
  CHECK(compute_returns(p).y[0] == doctest::Approx(0.10).epsilon(1e-15));
  p.y = {100, 110, 99};
  const auto r = compute_returns(p);
  REQUIRE(r.y.size() == 2);
  CHECK(r.y[1] == doctest::Approx(-0.1).epsilon(1e-14));
  p.y = {5, 5, 5, 5};
  for (double v : compute_returns(p).y) CHECK(v == 0.0);
  p.y = {100, 0, 100};
  CHECK_THROWS_AS(compute_returns(p), DataError);
  p.y = {100, -1};
  CHECK_THROWS_AS(compute_returns(p), DataError);
  p.y = {100};
  CHECK_THROWS_AS(compute_returns(p), InvalidInput);

  LoadedSeries ls;
  ls.dates = {"a", "b", "c"};
  SeriesData q;
  q.name = "Q";
  q.y = {1, 2, 4};
  ls.series = {q};
  const auto lr = compute_returns(ls);
  CHECK(lr.dates == std::vector<std::string>{"b", "c"});
  CHECK(lr.series[0].y == std::vector<double>{1, 1});
}

TEST_CASE("number and line formatting") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const double v = g(rng) * std::pow(10.0, static_cast<int>(g(rng) * 40));
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(parse_double("1.5x"), InvalidInput);
  CHECK_THROWS_AS(parse_double(""), InvalidInput);
  CHECK(split_csv_line("a,\"b,c\",\"d\"\"e\",") == std::vector<std::string>{"a", "b,c", "d\"e", ""});

  TempDir tmp;
  const auto orig = load_series({tmp.write("w.csv", kWide)}, ColumnMapping{});
  write_series_csv(tmp.path / "out.csv", orig);
  const auto back = load_series({tmp.path / "out.csv"}, ColumnMapping{});
  CHECK(back.dates == orig.dates);
  for (std::size_t i = 0; i < 5; ++i) CHECK(back.series[i].y == orig.series[i].y);
}
