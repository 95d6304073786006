#include "ccppm/simgen.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "ccppm/error.hpp"

namespace ccppm {
namespace {

SimData emit(const ScenarioSpec& spec, std::vector<ChangeIndicators> truth, const std::vector<std::vector<double>>& means,
             const std::vector<std::vector<double>>& sds, Rng& rng) {
  SimData out;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < spec.L; ++i) {
    SeriesData s;
    s.name = "series" + std::to_string(i + 1);
    s.y.reserve(spec.n);
    std::size_t block = 0;
    for (std::size_t t = 0; t < spec.n; ++t) {
      if (t > 0 && truth[i][t - 1]) ++block;
      s.y.push_back(means[i][block] + sds[i][block] * normal(rng));
    }
    out.series.push_back(std::move(s));
  }
  out.truth = std::move(truth);
  return out;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (n < 3) throw InvalidInput("scenario needs n >= 3");
  if (L < 1) throw InvalidInput("scenario needs L >= 1");
  if (kind == ScenarioKind::Type1) {
    if (!generating_prior) throw InvalidInput("type1 scenario needs a generating prior");
    if (generating_prior->dim() != L) throw InvalidInput("generating prior dimension differs from L");
    if (mean_locations.size() != L) throw InvalidInput("type1 scenario needs one mean location per series");
    if (!(mean_sd >= 0.0) || !(var_shape > 0.0) || !(var_scale > 0.0)) {
      throw InvalidInput("type1 cluster-parameter laws need mean_sd >= 0 and positive Inv-Gamma parameters");
    }
    return;
  }
  for (std::size_t k = 0; k < locations.size(); ++k) {
    if (locations[k] < 1 || locations[k] > n - 1) {
      throw InvalidInput("change location " + std::to_string(locations[k]) + " outside [1, n - 1]");
    }
    if (k > 0 && locations[k] <= locations[k - 1]) throw InvalidInput("change locations must be strictly increasing");
  }
  const std::size_t blocks = locations.size() + 1;
  if (mu_star.size() != L || sigma_star.size() != L) throw InvalidInput("need mu* and sigma* for every series");
  for (std::size_t i = 0; i < L; ++i) {
    if (mu_star[i].size() != blocks || sigma_star[i].size() != blocks) {
      throw InvalidInput("mu* and sigma* need one entry per block");
    }
    for (double s : sigma_star[i]) {
      if (!(s > 0.0)) throw InvalidInput("sigma* entries must be positive");
    }
  }
}

ScenarioSpec scenario_preset(std::string_view name) {
  ScenarioSpec s;
  s.name = std::string(name);
  s.n = 100;
  s.L = 2;
  if (name == "type1") {
    s.kind = ScenarioKind::Type1;
    s.generating_prior = TPriorParams::compound_symmetric(3.0, Eigen::Vector2d(-6.0, -6.0), 10.0, 0.9);
    s.mean_locations = {0.0, 4.0};
    return s;
  }
  s.kind = ScenarioKind::FixedBlocks;
  s.locations = {25, 50, 75};
  if (name == "type2") {
    s.mu_star = {{-1.0, 0.0, 1.0, 2.0}, {2.0, 1.0, 0.0, -1.0}};
    s.sigma_star = {{0.1, 0.25, 0.5, 0.75}, {0.1, 0.25, 0.5, 0.75}};
    return s;
  }
  if (name == "type3") {
    s.mu_star = {{-0.25, 0.0, 0.25, 0.5}, {-0.25, 0.0, 0.25, 0.5}};
    s.sigma_star = {{0.1, 0.25, 1.0, 0.25}, {0.1, 2.0, 0.5, 1.0}};
    return s;
  }
  throw ConfigError("unknown scenario '" + std::string(name) + "' (expected type1, type2 or type3)");
}

SimData gen_type1(const ScenarioSpec& spec, Rng& rng) {
  if (spec.kind != ScenarioKind::Type1) throw InvalidInput("gen_type1 needs a type1 scenario");
  spec.validate();
  const std::size_t T = spec.n - 1;
  std::vector<std::vector<std::uint8_t>> c(spec.L, std::vector<std::uint8_t>(T, 0));
  for (std::size_t j = 0; j < T; ++j) {
    const auto p = sample_p(*spec.generating_prior, rng);
    for (std::size_t i = 0; i < spec.L; ++i) c[i][j] = uniform01(rng) < p[i] ? 1 : 0;
  }
  std::vector<ChangeIndicators> truth;
  std::vector<std::vector<double>> means(spec.L), sds(spec.L);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> gamma(spec.var_shape, 1.0);
  for (std::size_t i = 0; i < spec.L; ++i) {
    truth.emplace_back(c[i], spec.n);
    for (std::size_t b = 0; b < truth.back().num_blocks(); ++b) {
      means[i].push_back(spec.mean_locations[i] + spec.mean_sd * normal(rng));
      sds[i].push_back(std::sqrt(spec.var_scale / gamma(rng)));
    }
  }
  return emit(spec, std::move(truth), means, sds, rng);
}

SimData gen_fixed(const ScenarioSpec& spec, Rng& rng) {
  if (spec.kind != ScenarioKind::FixedBlocks) throw InvalidInput("gen_fixed needs a fixed-blocks scenario");
  spec.validate();
  std::vector<std::uint8_t> c(spec.n - 1, 0);
  for (auto l : spec.locations) c[l - 1] = 1;
  std::vector<ChangeIndicators> truth(spec.L, ChangeIndicators(c, spec.n));
  std::vector<std::vector<double>> sds = spec.sigma_star;
  if (!spec.sigma_is_sd) {
    for (auto& row : sds) {
      for (auto& v : row) v = std::sqrt(v);
    }
  }
  return emit(spec, std::move(truth), spec.mu_star, sds, rng);
}

SimData generate(const ScenarioSpec& spec, Rng& rng) {
  return spec.kind == ScenarioKind::Type1 ? gen_type1(spec, rng) : gen_fixed(spec, rng);
}

std::string_view to_string(Method m) { return m == Method::CcpPpm ? "ccp_ppm" : "indep_ppm"; }

Method parse_method(std::string_view name) {
  if (name == "ccp_ppm" || name == "ccp") return Method::CcpPpm;
  if (name == "indep_ppm" || name == "indep") return Method::IndepPpm;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected ccp_ppm or indep_ppm)");
}

MethodMetrics evaluate_method(const SimData& data, Method method, const StudyConfig& cfg, std::uint64_t fit_seed) {
  const std::size_t L = data.series.size();
  McmcConfig mcmc = cfg.mcmc;
  mcmc.seed = fit_seed;
  const std::vector<MargLikParams> ml(L, cfg.marglik);
  Chains chains;
  if (method == Method::CcpPpm) {
    TPriorParams prior = cfg.prior ? *cfg.prior
                                   : TPriorParams::compound_symmetric(3.0, Eigen::VectorXd::Constant(
                                                                               static_cast<Eigen::Index>(L), -6.0),
                                                                      10.0, 0.9);
    chains = run_ccp_ppm(data.series, ml, prior, mcmc);
  } else {
    chains = run_indep_ppm(data.series, ml, cfg.beta, mcmc);
  }
  const auto est = classify_threshold(change_prob_estimates(chains), cfg.threshold);
  MethodMetrics m;
  m.method = method;
  for (std::size_t i = 0; i < L; ++i) {
    m.ari.push_back(ari(est[i], data.truth[i]));
    m.per_series.push_back(confusion_metrics(est[i], data.truth[i]));
    m.mean_ari += m.ari.back() / static_cast<double>(L);
  }
  m.pooled = confusion_metrics(std::span<const ChangeIndicators>(est), std::span<const ChangeIndicators>(data.truth));
  m.acceptance_rate = chains.acceptance_rate();
  return m;
}

StudyResult run_study(std::size_t n_replicates, const ScenarioSpec& scenario, std::span<const Method> methods,
                      const StudyConfig& cfg, const std::function<void(std::size_t)>& on_done) {
  scenario.validate();
  cfg.mcmc.validate();
  StudyResult result;
  result.scenario = scenario;
  result.config = cfg;
  result.methods.assign(methods.begin(), methods.end());
  result.replicates.resize(n_replicates);
  if (n_replicates == 0) return result;

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= n_replicates) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        ReplicateResult rep;
        rep.replicate = r;
        rep.data_seed = derive_seed(cfg.seed, 2 * r);
        rep.fit_seed = derive_seed(cfg.seed, 2 * r + 1);
        Rng rng(rep.data_seed);
        rep.data = generate(scenario, rng);
        for (Method m : methods) rep.metrics.push_back(evaluate_method(rep.data, m, cfg, rep.fit_seed));
        result.replicates[r] = std::move(rep);
        if (on_done) {
          std::lock_guard lock(mu);
          on_done(r);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n_replicates);
  {
    std::vector<std::jthread> pool;
    for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

std::vector<MethodSummary> StudyResult::summaries() const {
  std::vector<MethodSummary> out;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    MethodSummary s;
    s.method = methods[k];
    double sens = 0.0, spec = 0.0;
    std::size_t n_sens = 0, n_spec = 0;
    for (const auto& rep : replicates) {
      const auto& m = rep.metrics[k];
      s.mean_ari += m.mean_ari;
      s.mean_misclassification += m.pooled.misclassification;
      if (m.pooled.sensitivity) {
        sens += *m.pooled.sensitivity;
        ++n_sens;
      }
      if (m.pooled.specificity) {
        spec += *m.pooled.specificity;
        ++n_spec;
      }
    }
    if (!replicates.empty()) {
      s.mean_ari /= static_cast<double>(replicates.size());
      s.mean_misclassification /= static_cast<double>(replicates.size());
    }
    if (n_sens) s.mean_sensitivity = sens / static_cast<double>(n_sens);
    if (n_spec) s.mean_specificity = spec / static_cast<double>(n_spec);
    out.push_back(s);
  }
  return out;
}

}  // namespace ccppm
