#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

#include "ccppm/marglik.hpp"
#include "ccppm/tprior.hpp"

namespace ccppm {

// Prior guesses for E(p_t) and Var(p_t).
struct PriorGuess {
  Eigen::VectorXd m0;
  Eigen::MatrixXd S0;
  double r0 = 0.5;
  double sigma0_sq = 0.0;
};

// Location-scale Student t: y = m + s * T_d.
struct StudentTFit {
  double d = 0.0;
  double m = 0.0;
  double s = 0.0;
  double log_likelihood = 0.0;
  int iterations = 0;
};

struct KappaEstimate {
  double kappa0 = 0.0;
  std::size_t lag = 0;     // 0 when no positive autocorrelation was found
  double acf = 0.0;        // value used in the formula, after clamping
  double raw_acf = 0.0;    // autocorrelation at `lag` before clamping
  bool fallback = false;   // no positive autocorrelation up to max_lag
  bool clamped = false;    // acf was moved into [1/n, 1 - 1/n]
};

std::vector<double> autocorrelation(std::span<const double> y, std::size_t max_lag);

// Smallest lag l >= 1 with positive sample autocorrelation c; kappa0 =
// (1 - c) / c. c is clamped to [1/n, 1 - 1/n]; with no positive lag up to
// max_lag, c = 1/n and `fallback` is set.
KappaEstimate estimate_kappa(std::span<const double> y, std::size_t max_lag = 50);

double student_t_log_likelihood(std::span<const double> y, double d, double m, double s);

struct StudentTOptions {
  double d_min = 0.2;
  double d_max = 500.0;
  std::size_t grid_points = 41;
  double d_tol = 1e-9;  // golden-section tolerance on log d
  int max_em_iterations = 20000;
  double em_tol = 1e-13;
};

// Maximum likelihood fit. For fixed d, (m, s) come from the EM /
// iteratively-reweighted fixed point; d is found by a log-spaced grid search
// on the profile likelihood refined by golden-section.
StudentTFit fit_student_t_mle(std::span<const double> y, const StudentTOptions& opts = {});

struct MargLikTuning {
  MargLikParams params;
  KappaEstimate kappa;
  StudentTFit fit;
};

// kappa0 from estimate_kappa, mu0 = m, alpha0 = d/2, beta0 = (d/2)(1 - c) s^2.
MargLikTuning marglik_params_from_data(std::span<const double> y, std::size_t max_lag = 50,
                                       const StudentTOptions& opts = {});

// m0_i = 1/n, sigma0^2 = (n - 1)/n^3, S0 = sigma0^2 ((1 - r0) I + r0 J).
PriorGuess default_prior_guess(std::size_t n, std::size_t L, double r0 = 0.5);

// First-order (delta method) inversion: mu0 = logit(m0),
// Sigma0 = ((nu0 - 2)/nu0) D^{-1} S0 D^{-1}, D = diag(m0 (1 - m0)).
TPriorParams tprior_from_guess(const PriorGuess& guess, double nu0 = 3.0);

// Forward map used by tprior_from_guess: approximate (E p, Var p) from
// (nu0, mu0, Sigma0). nu0 > 2.
PriorGuess approximate_p_moments(const TPriorParams& prior);

struct BetaPrior {
  double a = 1.0;
  double b = 20.0;
};

// Beta(a, b) on a constant change probability such that the number of
// change points k - 1 ~ Beta-Binomial(n - 1, a, b) has mean mean_clusters - 1
// and variance var_clusters.
BetaPrior beta_params_from_cluster_moments(std::size_t n, double mean_clusters, double var_clusters);

}  // namespace ccppm
