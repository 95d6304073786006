#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccppm/marglik.hpp"
#include "ccppm/partition.hpp"
#include "ccppm/rng.hpp"
#include "ccppm/tprior.hpp"
#include "ccppm/tuning.hpp"

namespace ccppm {

struct McmcConfig {
  std::size_t n_burn = 10000;
  std::size_t n_thin = 10;
  std::size_t n_save = 2000;
  double rw_sd = 0.005;  // random-walk proposal sd for p_{i,t}
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t total_sweeps() const { return n_burn + n_save * n_thin; }
};

// Current (C, P) of the chain. Matrices are L x T row-major with T = n - 1;
// entry (i, j) concerns c_{i, j+1}, i.e. whether time j + 2 starts a block.
struct McmcState {
  std::size_t L = 0;
  std::size_t T = 0;
  std::vector<std::uint8_t> c;
  std::vector<double> p;
  std::vector<double> z;  // logit(p), kept in sync with p
  // Per-series sum of block log data factors for the current c (cache).
  std::vector<double> loglik;
  std::vector<std::uint64_t> accepted;
  std::vector<std::uint64_t> proposed;
  // P(c_{i,j} = 1 | rest) as computed by the most recent update_c.
  std::vector<double> last_change_prob;

  // No change points; p set to p0[i] along row i.
  static McmcState initial(std::size_t L, std::size_t n, std::span<const double> p0);

  std::size_t index(std::size_t i, std::size_t j) const { return i * T + j; }
  ChangeIndicators indicators(std::size_t i) const;
  void set_p(std::size_t i, std::size_t j, double value);
  // Recomputes the loglik cache from scratch.
  void refresh_loglik(std::span<const BlockEvaluator> series);
};

// Random-walk Metropolis over every p_{i,t}, ascending (i, t). Target:
//   (1/p) (p / (1 - p))^c [1 + Q(logit p_t) / nu0]^{-(nu0 + L)/2} 1(0 < p < 1)
// with Q the Sigma0^{-1} quadratic form around mu0. Out-of-range proposals
// are rejected.
void update_p(McmcState& state, const TPriorParams& prior, double rw_sd, Rng& rng);

// Log of the p_{i,t} full-conditional target above, up to a constant.
double log_p_target(double p, std::uint8_t c, double quad_form, const TPriorParams& prior);

// Gibbs update of every c_{i,t}, ascending (i, t), from
//   P(c = 1 | ...) = w / (1 + w),
//   w = F(left block) F(right block) / F(merged block) * p / (1 - p).
// The per-series loglik cache is updated incrementally.
void update_c(McmcState& state, std::span<const BlockEvaluator> series, Rng& rng);

// Standalone evaluation of P(c_j = 1 | rest) for one series, by scanning
// for the neighbouring change points. Same formula as update_c.
double conditional_change_prob(const BlockEvaluator& series, std::span<const std::uint8_t> c, std::size_t j,
                               double p);

// Thinned archive of a run together with everything needed to summarize it.
struct Chains {
  std::string method;  // "ccp_ppm" or "indep_ppm"
  std::size_t n_save = 0;
  std::size_t L = 0;
  std::size_t n = 0;
  std::vector<std::uint8_t> c;  // n_save x L x (n - 1)
  std::vector<double> p;        // n_save x L x (n - 1)
  std::vector<double> loglik;   // n_save x L
  std::vector<std::uint64_t> accepted;  // L x (n - 1); zero for indep_ppm
  std::vector<std::uint64_t> proposed;  // L x (n - 1)
  std::uint64_t n_sweeps = 0;
  McmcConfig config;
  std::vector<SeriesData> data;  // as sampled (standardized)
  std::vector<MargLikParams> marglik;
  std::optional<TPriorParams> prior;
  std::optional<BetaPrior> beta;

  std::size_t T() const { return n - 1; }
  std::size_t offset(std::size_t draw, std::size_t i) const { return (draw * L + i) * T(); }
  ChangeIndicators draw_indicators(std::size_t draw, std::size_t i) const;
  // Overall Metropolis acceptance rate; nullopt when nothing was proposed.
  std::optional<double> acceptance_rate() const;
};

// CCP-PPM. Series are standardized unless already flagged; all must share
// one length n >= 3. Bitwise reproducible for a given seed.
Chains run_ccp_ppm(std::span<const SeriesData> data, std::span<const MargLikParams> marglik,
                   const TPriorParams& prior, const McmcConfig& cfg);

// Independent change point PPM with p_i ~ Beta(a, b) per series:
// p_i | c ~ Beta(a + k_i - 1, b + n - k_i), c by the same Gibbs step.
Chains run_indep_ppm(std::span<const SeriesData> data, std::span<const MargLikParams> marglik,
                     const BetaPrior& beta, const McmcConfig& cfg);

double sample_beta(double a, double b, Rng& rng);

}  // namespace ccppm
