#include "ccppm/marglik.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ccppm/error.hpp"
#include "ccppm/kernels.hpp"

namespace ccppm {
namespace {

void check_finite(std::span<const double> y) {
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (!std::isfinite(y[t])) throw InvalidInput("non-finite observation at position " + std::to_string(t + 1));
  }
}

// Everything in the log density that depends on m only:
//   lgamma((nu + m)/2) - lgamma(nu/2) - (m/2) log(nu pi)
//   - (1/2) [m log(beta/alpha) + log(1 + m/kappa)]
double size_term(std::size_t m, const MargLikParams& p) {
  const double nu = 2.0 * p.alpha0;
  const double md = static_cast<double>(m);
  return std::lgamma(0.5 * (nu + md)) - std::lgamma(0.5 * nu) - 0.5 * md * std::log(nu * std::numbers::pi) -
         0.5 * (md * std::log(p.beta0 / p.alpha0) + std::log1p(md / p.kappa0));
}

double quad_term(std::size_t m, double sum_d, double sumsq_d, const MargLikParams& p) {
  const double nu = 2.0 * p.alpha0;
  const double md = static_cast<double>(m);
  // (I + J/kappa)^{-1} = I - J/(kappa + m)
  double q = sumsq_d - sum_d * sum_d / (p.kappa0 + md);
  if (q < 0.0) q = 0.0;
  q *= p.alpha0 / p.beta0;
  return -0.5 * (nu + md) * std::log1p(q / nu);
}

}  // namespace

void MargLikParams::validate() const {
  if (!std::isfinite(mu0) || !std::isfinite(kappa0) || !std::isfinite(alpha0) || !std::isfinite(beta0)) {
    throw InvalidInput("marginal likelihood parameters must be finite");
  }
  if (!(kappa0 > 0.0) || !(alpha0 > 0.0) || !(beta0 > 0.0)) {
    throw InvalidInput("marginal likelihood parameters kappa0, alpha0, beta0 must be positive");
  }
}

SeriesData standardize(const SeriesData& series) {
  if (series.standardized) return series;
  const std::size_t n = series.y.size();
  if (n < 2) throw InvalidInput("series '" + series.name + "' is too short to standardize");
  check_finite(series.y);
  double mean = 0.0;
  for (double v : series.y) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : series.y) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw DegenerateInput("series '" + series.name + "' has zero variance");

  SeriesData out;
  out.name = series.name;
  out.original = series.y;
  out.center = mean;
  out.scale = sd;
  out.standardized = true;
  out.y.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.y[t] = (series.y[t] - mean) / sd;
  return out;
}

double log_data_factor_from_moments(std::size_t m, double sum_d, double sumsq_d, const MargLikParams& params) {
  if (m == 0) throw InvalidInput("data factor of an empty block");
  return size_term(m, params) + quad_term(m, sum_d, sumsq_d, params);
}

double log_data_factor(std::span<const double> block, const MargLikParams& params) {
  params.validate();
  if (block.empty()) throw InvalidInput("data factor of an empty block");
  check_finite(block);
  const auto mom = kernels::active_kernels().block_moments(block, params.mu0);
  return log_data_factor_from_moments(block.size(), mom.sum, mom.sumsq, params);
}

double log_likelihood_given_partition(const SeriesData& series, const ChangeIndicators& c,
                                      const MargLikParams& params) {
  if (c.n() != series.y.size()) {
    throw InvalidInput("partition length " + std::to_string(c.n()) + " does not match series length " +
                       std::to_string(series.y.size()));
  }
  double acc = 0.0;
  const BlockSet blocks = blocks_from_indicators(c);
  for (const auto& b : blocks.blocks()) {
    acc += log_data_factor(std::span<const double>(series.y).subspan(b.first - 1, b.size()), params);
  }
  return acc;
}

BlockEvaluator::BlockEvaluator(std::span<const double> y, const MargLikParams& params)
    : n_(y.size()), params_(params), prefix_sum_(y.size() + 1, 0.0), prefix_sumsq_(y.size() + 1, 0.0) {
  params_.validate();
  check_finite(y);
  for (std::size_t t = 0; t < n_; ++t) {
    const double d = y[t] - params_.mu0;
    prefix_sum_[t + 1] = prefix_sum_[t] + d;
    prefix_sumsq_[t + 1] = prefix_sumsq_[t] + d * d;
  }
  size_term_.resize(n_ + 1, 0.0);
  for (std::size_t m = 1; m <= n_; ++m) size_term_[m] = size_term(m, params_);
}

double BlockEvaluator::log_factor(std::size_t begin, std::size_t end) const {
  const std::size_t m = end - begin;
  const double s1 = prefix_sum_[end] - prefix_sum_[begin];
  const double s2 = prefix_sumsq_[end] - prefix_sumsq_[begin];
  return size_term_[m] + quad_term(m, s1, s2, params_);
}

double BlockEvaluator::log_likelihood(const ChangeIndicators& c) const {
  if (c.n() != n_) throw InvalidInput("partition length does not match series length");
  double acc = 0.0;
  std::size_t begin = 0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (c[j]) {
      acc += log_factor(begin, j + 1);
      begin = j + 1;
    }
  }
  return acc + log_factor(begin, n_);
}

}  // namespace ccppm
