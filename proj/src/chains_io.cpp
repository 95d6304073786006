#include "ccppm/chains_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "ccppm/error.hpp"
#include "ccppm/series_io.hpp"

namespace ccppm {
namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary draw files assume a little-endian host");

namespace {

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

template <class T>
void write_binary(const fs::path& path, const std::vector<T>& values, std::uint64_t n_save, std::uint64_t L,
                  std::uint64_t T_) {
  auto out = open_out(path, true);
  out.write(kChainsMagic, sizeof kChainsMagic);
  const std::uint64_t dims[3] = {n_save, L, T_};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(T)));
  if (!out) throw DataError("write failed: " + path.string());
}

template <class T>
std::vector<T> read_binary(const fs::path& path, std::uint64_t n_save, std::uint64_t L, std::uint64_t T_) {
  auto in = open_in(path, true);
  char magic[8];
  std::uint64_t dims[3];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || std::memcmp(magic, kChainsMagic, sizeof magic) != 0) throw DataError(path.string() + ": bad header");
  if (dims[0] != n_save || dims[1] != L || dims[2] != T_) {
    throw DataError(path.string() + ": dimensions disagree with meta.json");
  }
  std::vector<T> values(n_save * L * T_);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(T)));
  if (!in) throw DataError(path.string() + ": truncated payload");
  if (in.peek() != std::char_traits<char>::eof()) throw DataError(path.string() + ": trailing bytes");
  return values;
}

template <class T, class Fmt>
void write_long_csv(const fs::path& path, const std::vector<T>& values, std::size_t n_save, std::size_t L,
                    std::size_t T_, Fmt fmt) {
  auto out = open_out(path);
  out << "draw,series,time,value\n";
  std::size_t k = 0;
  for (std::size_t d = 0; d < n_save; ++d) {
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < T_; ++j, ++k) {
        out << d + 1 << ',' << i + 1 << ',' << j + 2 << ',' << fmt(values[k]) << '\n';
      }
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::size_t parse_index(const std::string& s, const fs::path& path) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError(path.string() + ": bad index '" + s + "'");
  }
}

template <class T, class Parse>
std::vector<T> read_long_csv(const fs::path& path, std::size_t n_save, std::size_t L, std::size_t T_, Parse parse) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "draw,series,time,value") throw DataError(path.string() + ": bad header");
  std::vector<T> values(n_save * L * T_);
  std::vector<std::uint8_t> filled(values.size(), 0);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 4) throw DataError(path.string() + ": malformed row '" + line + "'");
    const std::size_t d = parse_index(cells[0], path), i = parse_index(cells[1], path), t = parse_index(cells[2], path);
    if (d < 1 || d > n_save || i < 1 || i > L || t < 2 || t > T_ + 1) {
      throw DataError(path.string() + ": index out of range");
    }
    const std::size_t k = ((d - 1) * L + (i - 1)) * T_ + (t - 2);
    if (filled[k]) throw DataError(path.string() + ": duplicate entry");
    filled[k] = 1;
    values[k] = parse(cells[3]);
  }
  for (auto f : filled) {
    if (!f) throw DataError(path.string() + ": missing entries");
  }
  return values;
}

}  // namespace

DrawFormat parse_draw_format(std::string_view name) {
  if (name == "binary" || name == "bin") return DrawFormat::Binary;
  if (name == "csv") return DrawFormat::Csv;
  throw ConfigError("unknown draw format '" + std::string(name) + "' (expected binary or csv)");
}

std::string_view to_string(DrawFormat f) { return f == DrawFormat::Binary ? "binary" : "csv"; }

json to_json(const MargLikParams& p) {
  return {{"mu0", p.mu0}, {"kappa0", p.kappa0}, {"alpha0", p.alpha0}, {"beta0", p.beta0}};
}

MargLikParams marglik_from_json(const json& j) {
  MargLikParams p;
  p.mu0 = j.at("mu0").get<double>();
  p.kappa0 = j.at("kappa0").get<double>();
  p.alpha0 = j.at("alpha0").get<double>();
  p.beta0 = j.at("beta0").get<double>();
  p.validate();
  return p;
}

json to_json(const TPriorParams& p) {
  json mu = json::array(), sig = json::array();
  const auto L = static_cast<Eigen::Index>(p.dim());
  for (Eigen::Index i = 0; i < L; ++i) {
    mu.push_back(p.mu0()(i));
    json row = json::array();
    for (Eigen::Index s = 0; s < L; ++s) row.push_back(p.sigma0()(i, s));
    sig.push_back(row);
  }
  return {{"nu0", p.nu0()}, {"mu0", mu}, {"sigma0", sig}};
}

TPriorParams tprior_from_json(const json& j) {
  const auto mu = j.at("mu0").get<std::vector<double>>();
  const auto sig = j.at("sigma0").get<std::vector<std::vector<double>>>();
  const auto L = static_cast<Eigen::Index>(mu.size());
  Eigen::VectorXd m(L);
  Eigen::MatrixXd S(L, L);
  if (static_cast<Eigen::Index>(sig.size()) != L) throw InvalidInput("sigma0 has the wrong number of rows");
  for (Eigen::Index i = 0; i < L; ++i) {
    m(i) = mu[static_cast<std::size_t>(i)];
    const auto& row = sig[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != L) throw InvalidInput("sigma0 has the wrong number of columns");
    for (Eigen::Index s = 0; s < L; ++s) S(i, s) = row[static_cast<std::size_t>(s)];
  }
  return TPriorParams(j.at("nu0").get<double>(), m, S);
}

json to_json(const McmcConfig& c) {
  return {{"n_burn", c.n_burn}, {"n_thin", c.n_thin}, {"n_save", c.n_save}, {"rw_sd", c.rw_sd}, {"seed", c.seed}};
}

void write_chains(const fs::path& dir, const Chains& ch, DrawFormat format, const json& run_config) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  const std::size_t T_ = ch.T();

  json meta;
  meta["format_version"] = 1;
  meta["method"] = ch.method;
  meta["dims"] = {{"n_save", ch.n_save}, {"L", ch.L}, {"n", ch.n}, {"T", T_}};
  meta["mcmc"] = to_json(ch.config);
  meta["n_sweeps"] = ch.n_sweeps;
  meta["draw_format"] = to_string(format);
  json series = json::array();
  for (std::size_t i = 0; i < ch.L; ++i) {
    const auto& s = ch.data[i];
    series.push_back({{"name", s.name},
                      {"standardized", s.standardized},
                      {"center", s.center},
                      {"scale", s.scale},
                      {"marglik", to_json(ch.marglik[i])}});
  }
  meta["series"] = series;
  if (ch.prior) meta["tprior"] = to_json(*ch.prior);
  if (ch.beta) meta["beta_prior"] = {{"a", ch.beta->a}, {"b", ch.beta->b}};
  if (const auto rate = ch.acceptance_rate()) meta["acceptance_rate"] = *rate;
  else meta["acceptance_rate"] = nullptr;
  meta["run_config"] = run_config;
  {
    auto out = open_out(dir / "meta.json");
    out << meta.dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "data.csv");
    out << "series,time,value,original\n";
    for (std::size_t i = 0; i < ch.L; ++i) {
      const auto& s = ch.data[i];
      for (std::size_t t = 0; t < s.y.size(); ++t) {
        out << i + 1 << ',' << t + 1 << ',' << format_double(s.y[t]) << ',';
        if (!s.original.empty()) out << format_double(s.original[t]);
        out << '\n';
      }
    }
  }
  if (format == DrawFormat::Binary) {
    write_binary(dir / "c_draws.bin", ch.c, ch.n_save, ch.L, T_);
    write_binary(dir / "p_draws.bin", ch.p, ch.n_save, ch.L, T_);
  } else {
    write_long_csv(dir / "c_draws.csv", ch.c, ch.n_save, ch.L, T_, [](std::uint8_t v) { return int(v); });
    write_long_csv(dir / "p_draws.csv", ch.p, ch.n_save, ch.L, T_, [](double v) { return format_double(v); });
  }
  {
    auto out = open_out(dir / "loglik.csv");
    out << "draw,series,loglik\n";
    for (std::size_t d = 0; d < ch.n_save; ++d) {
      for (std::size_t i = 0; i < ch.L; ++i) out << d + 1 << ',' << i + 1 << ',' << format_double(ch.loglik[d * ch.L + i]) << '\n';
    }
  }
  {
    auto out = open_out(dir / "acceptance.csv");
    out << "series,time,accepted,proposed\n";
    for (std::size_t i = 0; i < ch.L; ++i) {
      for (std::size_t j = 0; j < T_; ++j) {
        out << i + 1 << ',' << j + 2 << ',' << ch.accepted[i * T_ + j] << ',' << ch.proposed[i * T_ + j] << '\n';
      }
    }
    if (!out) throw DataError("write failed: " + (dir / "acceptance.csv").string());
  }
}

json read_meta(const fs::path& dir) {
  auto in = open_in(dir / "meta.json");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError((dir / "meta.json").string() + ": " + e.what());
  }
}

Chains read_chains(const fs::path& dir) {
  const json meta = read_meta(dir);
  Chains ch;
  try {
    ch.method = meta.at("method").get<std::string>();
    ch.n_save = meta.at("dims").at("n_save").get<std::size_t>();
    ch.L = meta.at("dims").at("L").get<std::size_t>();
    ch.n = meta.at("dims").at("n").get<std::size_t>();
    ch.n_sweeps = meta.at("n_sweeps").get<std::uint64_t>();
    const auto& m = meta.at("mcmc");
    ch.config.n_burn = m.at("n_burn").get<std::size_t>();
    ch.config.n_thin = m.at("n_thin").get<std::size_t>();
    ch.config.n_save = m.at("n_save").get<std::size_t>();
    ch.config.rw_sd = m.at("rw_sd").get<double>();
    ch.config.seed = m.at("seed").get<std::uint64_t>();
    for (const auto& s : meta.at("series")) {
      SeriesData sd;
      sd.name = s.at("name").get<std::string>();
      sd.standardized = s.at("standardized").get<bool>();
      sd.center = s.at("center").get<double>();
      sd.scale = s.at("scale").get<double>();
      ch.data.push_back(std::move(sd));
      ch.marglik.push_back(marglik_from_json(s.at("marglik")));
    }
    if (meta.contains("tprior")) ch.prior = tprior_from_json(meta.at("tprior"));
    if (meta.contains("beta_prior")) ch.beta = BetaPrior{meta["beta_prior"].at("a").get<double>(), meta["beta_prior"].at("b").get<double>()};
  } catch (const json::exception& e) {
    throw DataError((dir / "meta.json").string() + ": " + e.what());
  }
  if (ch.data.size() != ch.L || ch.n < 2) throw DataError((dir / "meta.json").string() + ": inconsistent dimensions");
  const std::size_t T_ = ch.T();

  {
    auto in = open_in(dir / "data.csv");
    std::string line;
    std::getline(in, line);
    for (auto& s : ch.data) s.y.assign(ch.n, 0.0);
    std::vector<std::size_t> count(ch.L, 0);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      if (cells.size() != 4) throw DataError("data.csv: malformed row");
      const std::size_t i = parse_index(cells[0], dir / "data.csv"), t = parse_index(cells[1], dir / "data.csv");
      if (i < 1 || i > ch.L || t < 1 || t > ch.n) throw DataError("data.csv: index out of range");
      auto& s = ch.data[i - 1];
      s.y[t - 1] = parse_double(cells[2]);
      if (!cells[3].empty()) {
        if (s.original.empty()) s.original.assign(ch.n, 0.0);
        s.original[t - 1] = parse_double(cells[3]);
      }
      ++count[i - 1];
    }
    for (auto c : count) {
      if (c != ch.n) throw DataError("data.csv: wrong number of rows");
    }
  }

  const std::string fmt = meta.value("draw_format", "binary");
  if (parse_draw_format(fmt) == DrawFormat::Binary) {
    ch.c = read_binary<std::uint8_t>(dir / "c_draws.bin", ch.n_save, ch.L, T_);
    ch.p = read_binary<double>(dir / "p_draws.bin", ch.n_save, ch.L, T_);
  } else {
    ch.c = read_long_csv<std::uint8_t>(dir / "c_draws.csv", ch.n_save, ch.L, T_, [&](const std::string& s) {
      if (s != "0" && s != "1") throw DataError("c_draws.csv: indicator values must be 0 or 1");
      return static_cast<std::uint8_t>(s == "1");
    });
    ch.p = read_long_csv<double>(dir / "p_draws.csv", ch.n_save, ch.L, T_,
                                 [](const std::string& s) { return parse_double(s); });
  }
  for (auto v : ch.c) {
    if (v > 1) throw DataError("c_draws: indicator values must be 0 or 1");
  }

  ch.loglik.assign(ch.n_save * ch.L, 0.0);
  {
    auto in = open_in(dir / "loglik.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      if (cells.size() != 3) throw DataError("loglik.csv: malformed row");
      const std::size_t d = parse_index(cells[0], dir / "loglik.csv"), i = parse_index(cells[1], dir / "loglik.csv");
      if (d < 1 || d > ch.n_save || i < 1 || i > ch.L) throw DataError("loglik.csv: index out of range");
      ch.loglik[(d - 1) * ch.L + (i - 1)] = parse_double(cells[2]);
    }
  }
  ch.accepted.assign(ch.L * T_, 0);
  ch.proposed.assign(ch.L * T_, 0);
  {
    auto in = open_in(dir / "acceptance.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      if (cells.size() != 4) throw DataError("acceptance.csv: malformed row");
      const std::size_t i = parse_index(cells[0], dir / "acceptance.csv"), t = parse_index(cells[1], dir / "acceptance.csv");
      if (i < 1 || i > ch.L || t < 2 || t > T_ + 1) throw DataError("acceptance.csv: index out of range");
      const std::size_t k = (i - 1) * T_ + (t - 2);
      ch.accepted[k] = parse_index(cells[2], dir / "acceptance.csv");
      ch.proposed[k] = parse_index(cells[3], dir / "acceptance.csv");
    }
  }
  return ch;
}

}  // namespace ccppm
