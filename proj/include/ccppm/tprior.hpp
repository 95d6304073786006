#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

#include "ccppm/rng.hpp"

namespace ccppm {

// Multivariate Student-t law t_L(nu0, mu0, Sigma0) on the logits of the
// per-time change probabilities p_t = (p_{1,t}, ..., p_{L,t}).
class TPriorParams {
 public:
  TPriorParams() = default;
  // Throws InvalidInput for nu0 <= 0, mismatched dimensions, an asymmetric
  // or non positive-definite Sigma0.
  TPriorParams(double nu0, Eigen::VectorXd mu0, Eigen::MatrixXd sigma0);

  // Compound symmetry: Sigma0 = var * ((1 - corr) I + corr J).
  static TPriorParams compound_symmetric(double nu0, Eigen::VectorXd mu0, double var, double corr);

  double nu0() const { return nu0_; }
  const Eigen::VectorXd& mu0() const { return mu0_; }
  const Eigen::MatrixXd& sigma0() const { return sigma0_; }
  std::size_t dim() const { return static_cast<std::size_t>(mu0_.size()); }

  const Eigen::MatrixXd& precision() const { return precision_; }
  const Eigen::MatrixXd& chol_lower() const { return chol_lower_; }
  double log_det_sigma() const { return log_det_; }

 private:
  double nu0_ = 3.0;
  Eigen::VectorXd mu0_;
  Eigen::MatrixXd sigma0_;
  Eigen::MatrixXd precision_;
  Eigen::MatrixXd chol_lower_;
  double log_det_ = 0.0;
};

double logistic(double z);
double logit(double p);

double log_mvt_density(std::span<const double> x, const TPriorParams& params);

// Marginal law of the coordinates in `subset` (0-based, distinct, nonempty):
// same degrees of freedom, sub-vector and sub-matrix.
TPriorParams marginal_t(const TPriorParams& params, std::span<const std::size_t> subset);

// z = mu0 + chol * g / sqrt(w / nu0), g ~ N(0, I), w ~ chi2(nu0); one mixing
// variable per vector.
Eigen::VectorXd sample_logit_p(const TPriorParams& params, Rng& rng);
std::vector<double> sample_p(const TPriorParams& params, Rng& rng);

struct QuadOptions {
  // Relative tolerance handed to each adaptive Gauss-Kronrod call.
  double rel_tol = 1e-11;
  unsigned max_depth = 18;
  // Failure threshold for the reported (conservative) absolute error.
  double max_abs_error = 1e-8;
  // Work cap for the nested pairwise integral.
  std::size_t max_inner_integrals = 20000;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // conservative absolute error bound
};

// P(c_{i,t} = 1) = E[logistic(z_i)], z_i ~ t_1(nu0, mu0_i, sigma0_ii).
QuadResult phi(const TPriorParams& params, std::size_t i, const QuadOptions& opts = {});

// P(c_{i,t} = 1, c_{s,t} = 1) = E[logistic(z_i) logistic(z_s)] under the
// bivariate marginal of (z_i, z_s). i != s.
QuadResult varphi(const TPriorParams& params, std::size_t i, std::size_t s, const QuadOptions& opts = {});

// P(c_{i,t} = 1 | c_{s,t} = 1) = varphi(i, s) / phi(s).
QuadResult conditional_cp_prob(const TPriorParams& params, std::size_t i, std::size_t s,
                               const QuadOptions& opts = {});

struct CountMoments {
  double mean_i = 0.0;
  double mean_s = 0.0;
  double var_i = 0.0;
  double var_s = 0.0;
  double covariance = 0.0;
  double correlation = 0.0;
};

// Moments of the change counts (k_i - 1, k_s - 1) for series length n.
// i == s gives the Binomial variance as the "covariance".
CountMoments count_moments(const TPriorParams& params, std::size_t i, std::size_t s, std::size_t n,
                           const QuadOptions& opts = {});

struct PriorSummaries {
  std::vector<double> phi;
  std::vector<double> phi_error;
  Eigen::MatrixXd varphi;  // diagonal holds phi
  Eigen::MatrixXd varphi_error;
};

PriorSummaries prior_summaries(const TPriorParams& params, const QuadOptions& opts = {});

}  // namespace ccppm
