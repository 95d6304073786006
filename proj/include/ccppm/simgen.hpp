#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccppm/marglik.hpp"
#include "ccppm/partition.hpp"
#include "ccppm/posterior.hpp"
#include "ccppm/rng.hpp"
#include "ccppm/sampler.hpp"
#include "ccppm/tprior.hpp"
#include "ccppm/tuning.hpp"

namespace ccppm {

enum class ScenarioKind { Type1, FixedBlocks };

struct ScenarioSpec {
  std::string name;
  ScenarioKind kind = ScenarioKind::FixedBlocks;
  std::size_t n = 100;
  std::size_t L = 2;

  // Type1: indicators from the logit-t prior, then per block
  //   mean ~ Normal(mean_locations[i], mean_sd^2), variance ~ Inv-Gamma(var_shape, var_scale).
  std::optional<TPriorParams> generating_prior;
  std::vector<double> mean_locations;
  double mean_sd = 1.0;
  double var_shape = 10.0;
  double var_scale = 1.0;

  // FixedBlocks: location l puts a change between times l and l + 1
  // (c_l = 1). Strictly increasing, within [1, n - 1].
  std::vector<std::size_t> locations;
  std::vector<std::vector<double>> mu_star;     // L x (#locations + 1)
  std::vector<std::vector<double>> sigma_star;  // L x (#locations + 1)
  bool sigma_is_sd = true;                      // false: sigma_star are variances

  void validate() const;
};

// "type1", "type2" or "type3"; n = 100, L = 2.
ScenarioSpec scenario_preset(std::string_view name);

struct SimData {
  std::vector<SeriesData> series;
  std::vector<ChangeIndicators> truth;
};

SimData gen_type1(const ScenarioSpec& spec, Rng& rng);
SimData gen_fixed(const ScenarioSpec& spec, Rng& rng);
SimData generate(const ScenarioSpec& spec, Rng& rng);

enum class Method { CcpPpm, IndepPpm };
std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct StudyConfig {
  McmcConfig mcmc;  // seed is ignored; each replicate derives its own
  MargLikParams marglik;
  std::optional<TPriorParams> prior;  // default: the type1 generating prior
  BetaPrior beta{1.0, 20.0};
  double threshold = 0.5;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: hardware concurrency
};

// Threshold-classified fit of one method on one replicate.
struct MethodMetrics {
  Method method = Method::CcpPpm;
  std::vector<double> ari;  // per series, estimate vs truth
  double mean_ari = 0.0;
  Confusion pooled;                 // over all series
  std::vector<Confusion> per_series;
  std::optional<double> acceptance_rate;
};

struct ReplicateResult {
  std::size_t replicate = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t fit_seed = 0;
  SimData data;
  std::vector<MethodMetrics> metrics;  // same order as the requested methods
};

struct MethodSummary {
  Method method = Method::CcpPpm;
  double mean_ari = 0.0;
  double mean_misclassification = 0.0;
  std::optional<double> mean_sensitivity;  // over replicates where defined
  std::optional<double> mean_specificity;
};

struct StudyResult {
  ScenarioSpec scenario;
  StudyConfig config;
  std::vector<Method> methods;
  std::vector<ReplicateResult> replicates;

  std::vector<MethodSummary> summaries() const;
};

// Replicate r uses data seed derive_seed(seed, 2r) and fit seed
// derive_seed(seed, 2r + 1), so results do not depend on scheduling.
StudyResult run_study(std::size_t n_replicates, const ScenarioSpec& scenario, std::span<const Method> methods,
                      const StudyConfig& cfg, const std::function<void(std::size_t)>& on_done = {});

// One fit + classification; exposed for tests.
MethodMetrics evaluate_method(const SimData& data, Method method, const StudyConfig& cfg, std::uint64_t fit_seed);

}  // namespace ccppm
