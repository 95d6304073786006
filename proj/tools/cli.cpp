#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "ccppm/chains_io.hpp"
#include "ccppm/error.hpp"
#include "ccppm/posterior.hpp"
#include "ccppm/sampler.hpp"
#include "ccppm/series_io.hpp"
#include "ccppm/simgen.hpp"
#include "ccppm/tprior.hpp"
#include "ccppm/tuning.hpp"
#include "config.hpp"

namespace ccppm::cli {
namespace fs = std::filesystem;

namespace {

// Output directory built next to its final location and renamed into place.
void write_marker(const fs::path& dir) { std::ofstream(dir / ".ccppm-output") << "ccppm\n"; }

class StagingDir {
 public:
  explicit StagingDir(fs::path target) : target_(std::move(target)) {
    if (target_.empty()) throw ConfigError("no output directory given");
    if (!target_.has_filename()) target_ = target_.parent_path();
    tmp_ = target_.parent_path() / ("." + target_.filename().string() + ".tmp-" + std::to_string(::getpid()));
    fs::remove_all(tmp_);
    if (!target_.parent_path().empty()) fs::create_directories(target_.parent_path());
    fs::create_directories(tmp_);
  }
  StagingDir(const StagingDir&) = delete;
  StagingDir& operator=(const StagingDir&) = delete;
  ~StagingDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(tmp_, ec);
    }
  }

  const fs::path& path() const { return tmp_; }

  // Replaces an existing target only if it is empty or was written by us.
  void commit() {
    write_marker(tmp_);
    if (fs::exists(target_)) {
      if (!fs::is_directory(target_) || (!fs::is_empty(target_) && !fs::exists(target_ / kMarker))) {
        throw ConfigError("refusing to replace " + target_.string() +
                          ": it exists and was not written by this tool");
      }
      fs::remove_all(target_);
    }
    fs::rename(tmp_, target_);
    committed_ = true;
  }

  static constexpr const char* kMarker = ".ccppm-output";

 private:
  fs::path target_;
  fs::path tmp_;
  bool committed_ = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp-" + std::to_string(::getpid()));
  write_text(tmp, text);
  fs::rename(tmp, path);
}

void emit_json(const json& doc, const std::string& out_path, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (out_path.empty() || out_path == "-") {
    out << text;
  } else {
    write_text_atomic(out_path, text);
  }
}

std::string fmt(double v) { return format_double(v); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---- config -> library types -------------------------------------------

LoadedSeries load_input(const json& cfg) {
  const json& in = cfg.at("input");
  std::vector<fs::path> paths;
  if (in.at("paths").is_string()) {
    paths.emplace_back(in["paths"].get<std::string>());
  } else {
    for (const auto& p : in.at("paths")) paths.emplace_back(p.get<std::string>());
  }
  if (paths.empty()) throw ConfigError("no input files (input.paths / --input)");
  ColumnMapping m;
  const auto layout = in.at("layout").get<std::string>();
  if (layout != "wide" && layout != "long") throw ConfigError("input.layout must be wide or long");
  m.long_format = layout == "long";
  m.date_format = parse_date_format(in.at("date_format").get<std::string>());
  m.date_column = in.at("date_column").get<std::string>();
  m.series_column = in.at("series_column").get<std::string>();
  m.value_column = in.at("value_column").get<std::string>();
  m.series = in.at("series").get<std::vector<std::string>>();
  LoadedSeries data = load_series(paths, m);
  const auto mode = in.at("mode").get<std::string>();
  if (mode == "prices") return compute_returns(data);
  if (mode != "returns") throw ConfigError("input.mode must be prices or returns");
  return data;
}

std::vector<SeriesData> standardized(const LoadedSeries& data) {
  std::vector<SeriesData> out;
  for (const auto& s : data.series) out.push_back(standardize(s));
  if (out.front().size() < 3) throw DataError("series need at least three observations");
  return out;
}

McmcConfig mcmc_config(const json& cfg) {
  McmcConfig c;
  const json& m = cfg.at("mcmc");
  c.n_burn = m.at("n_burn").get<std::size_t>();
  c.n_thin = m.at("n_thin").get<std::size_t>();
  c.n_save = m.at("n_save").get<std::size_t>();
  c.rw_sd = m.at("rw_sd").get<double>();
  c.seed = m.at("seed").get<std::uint64_t>();
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("mcmc: ") + e.what());
  }
  return c;
}

TPriorParams parse_tprior(const json& t, double default_nu0, std::optional<std::size_t> dim) {
  if (!t.is_object()) throw ConfigError("tprior must be a table");
  const double nu0 = t.value("nu0", default_nu0);
  Eigen::VectorXd mu;
  const json& jm = t.at("mu0");
  if (jm.is_number()) {
    std::size_t L = t.contains("L") ? t["L"].get<std::size_t>() : dim.value_or(0);
    if (L == 0) throw ConfigError("tprior.mu0 is a scalar but the dimension is unknown (set tprior.L)");
    mu = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(L), jm.get<double>());
  } else {
    const auto v = jm.get<std::vector<double>>();
    if (v.size() == 1 && t.contains("L")) {
      mu = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(t["L"].get<std::size_t>()), v[0]);
    } else {
      mu = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  }
  if (dim && static_cast<std::size_t>(mu.size()) != *dim) {
    throw ConfigError("tprior dimension " + std::to_string(mu.size()) + " differs from the number of series " +
                      std::to_string(*dim));
  }
  try {
    if (t.contains("sigma0")) {
      json full = {{"nu0", nu0}, {"mu0", std::vector<double>(mu.data(), mu.data() + mu.size())},
                   {"sigma0", t["sigma0"]}};
      return tprior_from_json(full);
    }
    return TPriorParams::compound_symmetric(nu0, mu, t.at("var").get<double>(), t.value("corr", 0.0));
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("tprior: ") + e.what());
  }
}

std::vector<MargLikParams> resolve_marglik(json& cfg, const std::vector<SeriesData>& series, json* diagnostics) {
  const std::size_t L = series.size();
  std::vector<MargLikParams> out;
  const json* node = find_path(cfg, "marglik");
  const bool tune = !node || node->is_null() || (node->is_string() && node->get<std::string>() == "auto");
  if (tune) {
    const auto max_lag = cfg.at("tuning").at("max_lag").get<std::size_t>();
    json diag = json::array();
    for (const auto& s : series) {
      const auto t = marglik_params_from_data(s.y, max_lag);
      out.push_back(t.params);
      diag.push_back({{"name", s.name},
                      {"marglik", to_json(t.params)},
                      {"kappa", {{"lag", t.kappa.lag},
                                 {"acf", t.kappa.acf},
                                 {"raw_acf", t.kappa.raw_acf},
                                 {"fallback", t.kappa.fallback},
                                 {"clamped", t.kappa.clamped}}},
                      {"student_t", {{"d", t.fit.d},
                                     {"m", t.fit.m},
                                     {"s", t.fit.s},
                                     {"log_likelihood", t.fit.log_likelihood},
                                     {"iterations", t.fit.iterations}}}});
    }
    if (diagnostics) *diagnostics = diag;
  } else {
    try {
      if (node->is_array()) {
        if (node->size() != L) throw ConfigError("marglik has " + std::to_string(node->size()) + " entries for " +
                                                 std::to_string(L) + " series");
        for (const auto& m : *node) out.push_back(marglik_from_json(m));
      } else {
        out.assign(L, marglik_from_json(*node));
      }
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("marglik: ") + e.what());
    }
  }
  json resolved = json::array();
  for (const auto& m : out) resolved.push_back(to_json(m));
  cfg["marglik"] = resolved;
  return out;
}

TPriorParams resolve_tprior(json& cfg, std::size_t n, std::size_t L, json* guess_out) {
  const double nu0 = cfg.at("tuning").at("nu0").get<double>();
  const json* node = find_path(cfg, "tprior");
  TPriorParams prior;
  if (node && !node->is_null()) {
    prior = parse_tprior(*node, nu0, L);
  } else {
    const double r0 = cfg.at("tuning").at("r0").get<double>();
    try {
      const auto guess = default_prior_guess(n, L, r0);
      prior = tprior_from_guess(guess, nu0);
      if (guess_out) *guess_out = {{"m0", guess.m0(0)}, {"sigma0_sq", guess.sigma0_sq}, {"r0", guess.r0}};
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("tuning: ") + e.what());
    }
  }
  cfg["tprior"] = to_json(prior);
  return prior;
}

BetaPrior resolve_beta(json& cfg, std::size_t n) {
  BetaPrior beta;
  const json* node = find_path(cfg, "beta_prior");
  const json& tuning = cfg.at("tuning");
  try {
    if (node && node->is_object() && node->contains("a")) {
      beta = {node->at("a").get<double>(), node->at("b").get<double>()};
    } else if (node && node->is_object() && node->contains("mean_clusters")) {
      beta = beta_params_from_cluster_moments(n, node->at("mean_clusters").get<double>(),
                                              node->at("var_clusters").get<double>());
    } else if (!tuning.at("mean_clusters").is_null()) {
      beta = beta_params_from_cluster_moments(n, tuning["mean_clusters"].get<double>(),
                                              tuning.at("var_clusters").get<double>());
    }
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("beta prior: ") + e.what());
  }
  if (!(beta.a > 0.0) || !(beta.b > 0.0)) throw ConfigError("beta prior needs a > 0 and b > 0");
  cfg["beta_prior"] = {{"a", beta.a}, {"b", beta.b}};
  return beta;
}

LossConfig loss_config(const json& cfg) {
  LossConfig l{cfg.at("loss").at("a").get<double>(), cfg.at("loss").at("b").get<double>()};
  try {
    l.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("loss: ") + e.what());
  }
  return l;
}

std::vector<ChangeIndicators> read_truth(const fs::path& path, std::size_t L, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open truth file " + path.string());
  json t;
  try {
    t = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  std::vector<ChangeIndicators> out;
  for (const auto& s : t.at("series")) {
    out.emplace_back(s.at("indicators").get<std::vector<std::uint8_t>>(), n);
  }
  if (out.size() != L) throw DataError("truth file has " + std::to_string(out.size()) + " series, chains have " +
                                       std::to_string(L));
  return out;
}

json indicators_json(const ChangeIndicators& c) {
  json blocks = json::array();
  for (const auto& b : blocks_from_indicators(c).blocks()) blocks.push_back({b.first, b.last});
  return {{"change_times", c.change_times()}, {"num_blocks", c.num_blocks()}, {"blocks", blocks}};
}

// ---- subcommands ---------------------------------------------------------

int cmd_tune(json cfg, const std::string& out_path, std::ostream& out) {
  const auto data = load_input(cfg);
  const auto series = standardized(data);
  const std::size_t n = series.front().size();
  json diag;
  json guess;
  resolve_marglik(cfg, series, &diag);
  resolve_tprior(cfg, n, series.size(), &guess);
  json doc;
  doc["n"] = n;
  doc["L"] = series.size();
  doc["series"] = diag;
  doc["tprior"] = cfg["tprior"];
  if (!guess.is_null()) doc["tprior_guess"] = guess;
  const bool have_moments = !cfg["tuning"]["mean_clusters"].is_null() ||
                            (cfg.contains("beta_prior") && cfg["beta_prior"].is_object());
  if (have_moments) {
    resolve_beta(cfg, n);
    doc["beta_prior"] = cfg["beta_prior"];
  }
  doc["config"] = {{"marglik", cfg["marglik"]}, {"tprior", cfg["tprior"]}};
  if (have_moments) doc["config"]["beta_prior"] = cfg["beta_prior"];
  emit_json(doc, out_path, out);
  return kExitOk;
}

int cmd_fit(json cfg, bool indep, std::ostream& out) {
  const auto data = load_input(cfg);
  const auto series = standardized(data);
  const std::size_t n = series.front().size();
  const auto mcmc = mcmc_config(cfg);
  const auto format = parse_draw_format(cfg.at("output").at("draw_format").get<std::string>());
  const fs::path dir = cfg.at("output").at("dir").get<std::string>();
  if (dir.empty()) throw ConfigError("no output directory (output.dir / --out)");
  const auto ml = resolve_marglik(cfg, series, nullptr);
  Chains chains;
  if (indep) {
    cfg.erase("tprior");
    const auto beta = resolve_beta(cfg, n);
    chains = run_indep_ppm(series, ml, beta, mcmc);
  } else {
    cfg.erase("beta_prior");
    const auto prior = resolve_tprior(cfg, n, series.size(), nullptr);
    chains = run_ccp_ppm(series, ml, prior, mcmc);
  }
  StagingDir stage(dir);
  write_chains(stage.path(), chains, format, cfg);
  stage.commit();
  out << "wrote " << dir.string() << ": method " << chains.method << ", L=" << chains.L << ", n=" << chains.n
      << ", draws=" << chains.n_save;
  if (const auto r = chains.acceptance_rate()) out << ", acceptance=" << fmt(*r);
  out << "\n";
  return kExitOk;
}

int cmd_summarize(json cfg, const fs::path& chains_dir, std::ostream& out) {
  const Chains chains = read_chains(chains_dir);
  fs::path dir = cfg.at("output").at("dir").get<std::string>();
  if (dir.empty()) dir = chains_dir / "summary";
  const double threshold = cfg.at("summarize").at("threshold").get<double>();
  const auto loss = loss_config(cfg);
  const auto truth_path = cfg.at("summarize").at("truth").get<std::string>();

  const auto report = change_prob_estimates(chains);
  std::vector<ChangeIndicators> thresholded;
  try {
    thresholded = classify_threshold(report, threshold);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("summarize.threshold: ") + e.what());
  }
  std::vector<PartitionEstimate> estimates;
  for (std::size_t i = 0; i < chains.L; ++i) estimates.push_back(estimate_partition(chains, loss, i));

  StagingDir stage(dir);
  {
    std::ostringstream csv;
    csv << "series,time,prob\n";
    for (std::size_t i = 0; i < chains.L; ++i) {
      for (std::size_t j = 0; j < report.T; ++j) csv << chains.data[i].name << ',' << j + 2 << ',' << fmt(report.at(i, j)) << '\n';
    }
    write_text(stage.path() / "change_probs.csv", csv.str());
  }
  {
    json doc;
    doc["loss"] = {{"a", loss.a}, {"b", loss.b}};
    doc["threshold"] = threshold;
    json rows = json::array();
    for (std::size_t i = 0; i < chains.L; ++i) {
      json row = indicators_json(estimates[i].c);
      row["name"] = chains.data[i].name;
      row["expected_loss"] = estimates[i].expected_loss;
      row["threshold_estimate"] = indicators_json(thresholded[i]);
      rows.push_back(row);
    }
    doc["series"] = rows;
    write_text(stage.path() / "partition_est.json", doc.dump(2) + "\n");
  }
  {
    json doc;
    doc["method"] = chains.method;
    doc["n_save"] = chains.n_save;
    doc["L"] = chains.L;
    doc["n"] = chains.n;
    doc["acceptance_rate"] = opt_json(chains.acceptance_rate());
    json rows = json::array();
    for (std::size_t i = 0; i < chains.L; ++i) {
      double expected = 0.0;
      for (std::size_t j = 0; j < report.T; ++j) expected += report.at(i, j);
      rows.push_back({{"name", chains.data[i].name},
                      {"expected_changes", expected},
                      {"threshold_changes", thresholded[i].num_changes()},
                      {"estimate_changes", estimates[i].c.num_changes()}});
    }
    doc["series"] = rows;
    if (chains.L >= 2) {
      const auto pw = pairwise_ari_trace(chains);
      json mean = json::array();
      for (Eigen::Index i = 0; i < pw.mean.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index s = 0; s < pw.mean.cols(); ++s) r.push_back(pw.mean(i, s));
        mean.push_back(r);
      }
      doc["pairwise_ari"] = {{"pairs_per_draw", pw.pairs_per_draw}, {"grand_mean", pw.grand_mean}, {"mean", mean}};
    }
    if (!truth_path.empty()) {
      const auto truth = read_truth(truth_path, chains.L, chains.n);
      json t = json::array();
      for (std::size_t i = 0; i < chains.L; ++i) {
        const auto cm = confusion_metrics(thresholded[i], truth[i]);
        t.push_back({{"name", chains.data[i].name},
                     {"ari_threshold", ari(thresholded[i], truth[i])},
                     {"ari_estimate", ari(estimates[i].c, truth[i])},
                     {"misclassification", cm.misclassification},
                     {"sensitivity", opt_json(cm.sensitivity)},
                     {"specificity", opt_json(cm.specificity)}});
      }
      doc["truth"] = t;
    }
    write_text(stage.path() / "metrics.json", doc.dump(2) + "\n");
  }
  {
    std::ostringstream csv;
    csv << "series,time,value,prob,cluster\n";
    for (std::size_t i = 0; i < chains.L; ++i) {
      const auto labels = labels_from_indicators(estimates[i].c);
      for (std::size_t t = 0; t < chains.n; ++t) {
        csv << chains.data[i].name << ',' << (t + 1) << ',' << fmt(chains.data[i].y[t]) << ',';
        if (t > 0) csv << fmt(report.at(i, t - 1));
        csv << ',' << labels[t] << '\n';
      }
    }
    write_text(stage.path() / "plotdata.csv", csv.str());
  }
  write_text(stage.path() / "config.json", cfg.dump(2) + "\n");
  stage.commit();
  out << "wrote " << dir.string() << "\n";
  return kExitOk;
}

StudyConfig study_config(json& cfg) {
  StudyConfig sc;
  sc.mcmc = mcmc_config(cfg);
  const json& sim = cfg.at("simulate");
  sc.seed = sim.at("seed").get<std::uint64_t>();
  sc.threads = sim.at("threads").get<std::size_t>();
  sc.threshold = cfg.at("summarize").at("threshold").get<double>();
  if (!(sc.threshold > 0.0 && sc.threshold < 1.0)) throw ConfigError("summarize.threshold must lie in (0, 1)");
  const json* ml = find_path(cfg, "marglik");
  if (ml && !ml->is_null()) {
    try {
      sc.marglik = marglik_from_json(*ml);
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("marglik: ") + e.what());
    }
  }
  cfg["marglik"] = to_json(sc.marglik);
  const json* tp = find_path(cfg, "tprior");
  if (tp && !tp->is_null()) {
    sc.prior = parse_tprior(*tp, cfg["tuning"]["nu0"].get<double>(), std::nullopt);
    cfg["tprior"] = to_json(*sc.prior);
  }
  const json* bp = find_path(cfg, "beta_prior");
  if (bp && bp->is_object()) sc.beta = {bp->at("a").get<double>(), bp->at("b").get<double>()};
  cfg["beta_prior"] = {{"a", sc.beta.a}, {"b", sc.beta.b}};
  return sc;
}

void write_replicate(const fs::path& dir, const SimData& data) {
  fs::create_directories(dir);
  LoadedSeries ls;
  for (std::size_t t = 0; t < data.series.front().size(); ++t) ls.dates.push_back(std::to_string(t + 1));
  ls.series = data.series;
  {
    std::ostringstream csv;
    for (std::size_t i = 0; i < ls.series.size(); ++i) csv << (i ? "," : "") << ls.series[i].name;
    csv << '\n';
    for (std::size_t t = 0; t < ls.dates.size(); ++t) {
      for (std::size_t i = 0; i < ls.series.size(); ++i) csv << (i ? "," : "") << fmt(ls.series[i].y[t]);
      csv << '\n';
    }
    write_text(dir / "data.csv", csv.str());
  }
  json truth;
  truth["n"] = data.series.front().size();
  json rows = json::array();
  for (std::size_t i = 0; i < data.truth.size(); ++i) {
    json row = indicators_json(data.truth[i]);
    row["name"] = data.series[i].name;
    row["indicators"] = data.truth[i].values();
    rows.push_back(row);
  }
  truth["series"] = rows;
  write_text(dir / "truth.json", truth.dump(2) + "\n");
}

int cmd_simulate(json cfg, std::ostream& out, std::ostream& err) {
  const json& sim = cfg.at("simulate");
  ScenarioSpec scenario = scenario_preset(sim.at("scenario").get<std::string>());
  scenario.sigma_is_sd = sim.at("sigma_is_sd").get<bool>();
  const auto replicates = sim.at("replicates").get<std::size_t>();
  const bool generate_only = sim.at("generate_only").get<bool>();
  std::vector<Method> methods;
  for (const auto& m : sim.at("methods")) methods.push_back(parse_method(m.get<std::string>()));
  const fs::path dir = cfg.at("output").at("dir").get<std::string>();
  if (dir.empty()) throw ConfigError("no output directory (output.dir / --out)");
  StudyConfig sc = study_config(cfg);

  StagingDir stage(dir);
  auto rep_dir = [&](std::size_t r) {
    char name[32];
    std::snprintf(name, sizeof name, "replicate_%04zu", r + 1);
    return stage.path() / name;
  };
  if (generate_only) {
    for (std::size_t r = 0; r < replicates; ++r) {
      Rng rng(derive_seed(sc.seed, 2 * r));
      write_replicate(rep_dir(r), generate(scenario, rng));
    }
  } else {
    const auto result = run_study(replicates, scenario, methods, sc, [&](std::size_t r) {
      err << "replicate " << (r + 1) << "/" << replicates << " done\n";
    });
    std::ostringstream csv;
    csv << "replicate,method,series,ari,misclassification,sensitivity,specificity,acceptance_rate\n";
    auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
    for (const auto& rep : result.replicates) {
      write_replicate(rep_dir(rep.replicate), rep.data);
      for (const auto& m : rep.metrics) {
        for (std::size_t i = 0; i < m.ari.size(); ++i) {
          const auto& c = m.per_series[i];
          csv << (rep.replicate + 1) << ',' << to_string(m.method) << ',' << rep.data.series[i].name << ','
              << fmt(m.ari[i]) << ',' << fmt(c.misclassification) << ',' << opt(c.sensitivity) << ','
              << opt(c.specificity) << ',' << opt(m.acceptance_rate) << '\n';
        }
        csv << (rep.replicate + 1) << ',' << to_string(m.method) << ",all," << fmt(m.mean_ari) << ','
            << fmt(m.pooled.misclassification) << ',' << opt(m.pooled.sensitivity) << ','
            << opt(m.pooled.specificity) << ',' << opt(m.acceptance_rate) << '\n';
      }
    }
    write_text(stage.path() / "study_results.csv", csv.str());
    json summary = json::array();
    for (const auto& s : result.summaries()) {
      summary.push_back({{"method", to_string(s.method)},
                         {"mean_ari", s.mean_ari},
                         {"mean_misclassification", s.mean_misclassification},
                         {"mean_sensitivity", opt_json(s.mean_sensitivity)},
                         {"mean_specificity", opt_json(s.mean_specificity)}});
    }
    write_text(stage.path() / "study_summary.json",
               json{{"scenario", scenario.name}, {"replicates", replicates}, {"methods", summary}}.dump(2) + "\n");
  }
  write_text(stage.path() / "config.json", cfg.dump(2) + "\n");
  stage.commit();
  out << "wrote " << dir.string() << " (" << replicates << " replicates)\n";
  return kExitOk;
}

int cmd_prior_probe(json cfg, std::size_t n, const std::string& out_path, std::ostream& out) {
  const json* tp = find_path(cfg, "tprior");
  if (!tp || tp->is_null()) throw ConfigError("prior-probe needs tprior parameters (--mu, --var, ... or a config)");
  const TPriorParams prior = parse_tprior(*tp, cfg["tuning"]["nu0"].get<double>(), std::nullopt);
  if (n < 2) throw ConfigError("prior-probe needs n >= 2");
  const auto sums = prior_summaries(prior);
  const std::size_t L = prior.dim();
  json doc;
  doc["tprior"] = to_json(prior);
  doc["n"] = n;
  doc["phi"] = sums.phi;
  doc["phi_error"] = sums.phi_error;
  json varphi = json::array(), cond = json::array(), moments = json::array();
  for (std::size_t i = 0; i < L; ++i) {
    json vr = json::array(), cr = json::array();
    for (std::size_t s = 0; s < L; ++s) {
      const auto ii = static_cast<Eigen::Index>(i), ss = static_cast<Eigen::Index>(s);
      vr.push_back(sums.varphi(ii, ss));
      cr.push_back(i == s ? 1.0 : sums.varphi(ii, ss) / sums.phi[s]);
    }
    varphi.push_back(vr);
    cond.push_back(cr);
    for (std::size_t s = i; s < L; ++s) {
      const auto cm = count_moments(prior, i, s, n);
      moments.push_back({{"i", i + 1},
                         {"s", s + 1},
                         {"mean_i", cm.mean_i},
                         {"mean_s", cm.mean_s},
                         {"var_i", cm.var_i},
                         {"var_s", cm.var_s},
                         {"covariance", cm.covariance},
                         {"correlation", cm.correlation}});
    }
  }
  doc["varphi"] = varphi;
  doc["conditional_prob"] = cond;  // [i][s] = P(c_i = 1 | c_s = 1)
  doc["count_moments"] = moments;
  emit_json(doc, out_path, out);
  return kExitOk;
}

// ---- argument wiring -----------------------------------------------------

template <class T>
void override_option(CLI::App* app, const std::string& flags, const std::string& key, json& ov,
                     const std::string& help) {
  app->add_option_function<T>(flags, [&ov, key](const T& v) { set_path(ov, key, json(v)); }, help);
}

void add_common(CLI::App* app, std::string& config_path, std::vector<std::string>& sets) {
  app->add_option("-c,--config", config_path, "TOML or JSON config (a chains meta.json works too)");
  app->add_option("--set", sets, "Override any config key: section.key=value");
}

void add_input(CLI::App* app, json& ov) {
  override_option<std::vector<std::string>>(app, "-i,--input", "input.paths", ov, "Input CSV file(s)");
  override_option<std::string>(app, "--layout", "input.layout", ov, "wide or long");
  override_option<std::string>(app, "--date-format", "input.date_format", ov, "iso, dmy or index");
  override_option<std::string>(app, "--date-column", "input.date_column", ov, "Date column name");
  override_option<std::vector<std::string>>(app, "--series", "input.series", ov, "Series to use, in order");
  override_option<std::string>(app, "--mode", "input.mode", ov, "prices (convert to returns) or returns (use as is)");
  override_option<std::size_t>(app, "--max-lag", "tuning.max_lag", ov, "Largest autocorrelation lag for kappa0");
}

void add_mcmc(CLI::App* app, json& ov, bool seed) {
  override_option<std::size_t>(app, "--n-burn", "mcmc.n_burn", ov, "Burn-in sweeps");
  override_option<std::size_t>(app, "--n-thin", "mcmc.n_thin", ov, "Thinning interval");
  override_option<std::size_t>(app, "--n-save", "mcmc.n_save", ov, "Saved draws");
  override_option<double>(app, "--rw-sd", "mcmc.rw_sd", ov, "Random-walk proposal sd for p");
  if (seed) override_option<std::uint64_t>(app, "--seed", "mcmc.seed", ov, "Sampler seed");
}

json build_config(const std::string& config_path, const std::vector<std::string>& sets, json ov) {
  json file = config_path.empty() ? json::object() : load_config_file(config_path);
  for (const auto& s : sets) apply_assignment(ov, s);
  return resolve_config(file, ov);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Correlated change point product partition models"};
  app.name("ccppm");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::string config_path;
  std::vector<std::string> sets;
  json ov = json::object();
  std::string out_file;
  std::string chains_dir;
  std::size_t probe_n = 100;

  auto* tune = app.add_subcommand("tune", "Empirical-Bayes hyperparameters from data");
  add_common(tune, config_path, sets);
  add_input(tune, ov);
  override_option<double>(tune, "--r0", "tuning.r0", ov, "Guessed correlation of change probabilities");
  override_option<double>(tune, "--nu0", "tuning.nu0", ov, "Degrees of freedom of the logit-t prior");
  override_option<double>(tune, "--mean-clusters", "tuning.mean_clusters", ov, "Prior mean number of blocks (Beta prior)");
  override_option<double>(tune, "--var-clusters", "tuning.var_clusters", ov, "Prior variance of the number of blocks");
  tune->add_option("-o,--out", out_file, "Output JSON file (default stdout)");

  auto* fit = app.add_subcommand("fit", "Fit the correlated change point model");
  add_common(fit, config_path, sets);
  add_input(fit, ov);
  add_mcmc(fit, ov, true);
  override_option<double>(fit, "--r0", "tuning.r0", ov, "Guessed correlation of change probabilities");
  override_option<double>(fit, "--nu0", "tuning.nu0", ov, "Degrees of freedom of the logit-t prior");
  override_option<std::string>(fit, "-o,--out", "output.dir", ov, "Chains output directory");
  override_option<std::string>(fit, "--draw-format", "output.draw_format", ov, "binary or csv");

  auto* fit_indep = app.add_subcommand("fit-indep", "Fit the independent change point baseline");
  add_common(fit_indep, config_path, sets);
  add_input(fit_indep, ov);
  add_mcmc(fit_indep, ov, true);
  override_option<double>(fit_indep, "--beta-a", "beta_prior.a", ov, "Beta prior a");
  override_option<double>(fit_indep, "--beta-b", "beta_prior.b", ov, "Beta prior b");
  override_option<double>(fit_indep, "--mean-clusters", "tuning.mean_clusters", ov, "Prior mean number of blocks");
  override_option<double>(fit_indep, "--var-clusters", "tuning.var_clusters", ov, "Prior variance of the number of blocks");
  override_option<std::string>(fit_indep, "-o,--out", "output.dir", ov, "Chains output directory");
  override_option<std::string>(fit_indep, "--draw-format", "output.draw_format", ov, "binary or csv");

  auto* summarize = app.add_subcommand("summarize", "Posterior summaries of a chains directory");
  add_common(summarize, config_path, sets);
  summarize->add_option("chains", chains_dir, "Chains directory written by fit / fit-indep")->required();
  override_option<std::string>(summarize, "-o,--out", "output.dir", ov, "Summary directory (default <chains>/summary)");
  override_option<double>(summarize, "--threshold", "summarize.threshold", ov, "Change probability threshold");
  override_option<double>(summarize, "--loss-a", "loss.a", ov, "False-positive change point penalty");
  override_option<double>(summarize, "--loss-b", "loss.b", ov, "False-negative penalty");
  override_option<std::string>(summarize, "--truth", "summarize.truth", ov, "truth.json to score against");

  auto* simulate = app.add_subcommand("simulate", "Simulation study on the built-in scenarios");
  add_common(simulate, config_path, sets);
  add_mcmc(simulate, ov, false);
  override_option<std::string>(simulate, "--scenario", "simulate.scenario", ov, "type1, type2 or type3");
  override_option<std::size_t>(simulate, "--replicates", "simulate.replicates", ov, "Number of data sets");
  override_option<std::uint64_t>(simulate, "--seed", "simulate.seed", ov, "Master seed");
  override_option<std::vector<std::string>>(simulate, "--methods", "simulate.methods", ov, "ccp_ppm and/or indep_ppm");
  override_option<std::size_t>(simulate, "--threads", "simulate.threads", ov, "Worker threads (0: all cores)");
  override_option<double>(simulate, "--threshold", "summarize.threshold", ov, "Change probability threshold");
  override_option<std::string>(simulate, "-o,--out", "output.dir", ov, "Output directory");
  simulate->add_flag_callback("--sigma-variance", [&ov] { set_path(ov, "simulate.sigma_is_sd", false); },
                              "Read sigma* as variances instead of standard deviations");
  simulate->add_flag_callback("--generate-only", [&ov] { set_path(ov, "simulate.generate_only", true); },
                              "Write data sets and truth without fitting");

  auto* probe = app.add_subcommand("prior-probe", "Prior change point probabilities and count moments");
  add_common(probe, config_path, sets);
  override_option<double>(probe, "--nu0", "tprior.nu0", ov, "Degrees of freedom");
  override_option<std::vector<double>>(probe, "--mu", "tprior.mu0", ov, "Location (one value per series, or one with --dim)");
  override_option<double>(probe, "--var", "tprior.var", ov, "Compound-symmetric variance");
  override_option<double>(probe, "--corr", "tprior.corr", ov, "Compound-symmetric correlation");
  override_option<std::size_t>(probe, "--dim", "tprior.L", ov, "Number of series when --mu is a single value");
  probe->add_option("-n,--length", probe_n, "Series length for count moments");
  probe->add_option("-o,--out", out_file, "Output JSON file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    if (rc != 0) err << "\n" << app.help();
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    json cfg = build_config(config_path, sets, ov);
    if (*tune) return cmd_tune(cfg, out_file, out);
    if (*fit) return cmd_fit(cfg, false, out);
    if (*fit_indep) return cmd_fit(cfg, true, out);
    if (*summarize) return cmd_summarize(cfg, chains_dir, out);
    if (*simulate) return cmd_simulate(cfg, out, err);
    if (*probe) return cmd_prior_probe(cfg, probe_n, out_file, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    err << "config error: missing key " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DegenerateInput& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace ccppm::cli
