#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ccppm/partition.hpp"

namespace ccppm {

// Normal likelihood with Normal-Inverse-Gamma prior on (mean, variance):
//   mu | s2 ~ Normal(mu0, s2 / kappa0),  s2 ~ Inv-Gamma(alpha0, beta0).
struct MargLikParams {
  double mu0 = 0.0;
  double kappa0 = 1.0;
  double alpha0 = 2.0;
  double beta0 = 1.0;

  // Throws InvalidInput unless kappa0, alpha0, beta0 > 0 and all finite.
  void validate() const;
};

struct SeriesData {
  std::string name;
  std::vector<double> y;
  bool standardized = false;
  // Values before standardization and the transform that was applied
  // (y = (original - center) / scale). Empty / identity when not standardized.
  std::vector<double> original;
  double center = 0.0;
  double scale = 1.0;

  std::size_t size() const { return y.size(); }
};

// Mean 0, sample standard deviation 1 (denominator n - 1). Throws
// DegenerateInput for a constant series, InvalidInput for n < 2 or
// non-finite values. An already-standardized input is returned unchanged.
SeriesData standardize(const SeriesData& series);

// Log of the m-variate Student-t density with 2 alpha0 degrees of freedom,
// location mu0 1_m and scale (beta0 / alpha0)(I_m + J_m / kappa0), evaluated
// at the block. O(m); uses the rank-one structure of the scale matrix.
double log_data_factor(std::span<const double> block, const MargLikParams& params);

// Same density from sufficient statistics of d = y - mu0:
// size m, sum_d = sum d_t, sumsq_d = sum d_t^2.
double log_data_factor_from_moments(std::size_t m, double sum_d, double sumsq_d, const MargLikParams& params);

double log_likelihood_given_partition(const SeriesData& series, const ChangeIndicators& c,
                                      const MargLikParams& params);

// O(1) block evaluation from prefix sums of the centered data. One instance
// per series; it owns copies of everything it needs.
class BlockEvaluator {
 public:
  BlockEvaluator() = default;
  BlockEvaluator(std::span<const double> y, const MargLikParams& params);

  std::size_t size() const { return n_; }
  const MargLikParams& params() const { return params_; }

  // Log data factor of the 0-based half-open range [begin, end).
  double log_factor(std::size_t begin, std::size_t end) const;

  // Sum of block log factors for the partition c.
  double log_likelihood(const ChangeIndicators& c) const;

 private:
  std::size_t n_ = 0;
  MargLikParams params_;
  std::vector<double> prefix_sum_;
  std::vector<double> prefix_sumsq_;
  // Terms that depend only on the block size m, cached for m = 0..n.
  std::vector<double> size_term_;
};

}  // namespace ccppm
