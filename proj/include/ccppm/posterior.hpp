#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ccppm/partition.hpp"
#include "ccppm/sampler.hpp"

namespace ccppm {

struct ChangeProbReport {
  std::size_t L = 0;
  std::size_t T = 0;
  std::vector<double> probs;  // L x T, posterior mean of c_{i,t}

  double at(std::size_t i, std::size_t j) const { return probs[i * T + j]; }
};

ChangeProbReport change_prob_estimates(const Chains& chains);

// c_{i,t} = 1 iff prob > threshold (strict). threshold in (0, 1).
std::vector<ChangeIndicators> classify_threshold(const ChangeProbReport& report, double threshold = 0.5);

// Generalized Binder loss. a weighs pairs split apart that the posterior
// keeps together (false-positive change points), b pairs placed together
// that the posterior separates. Larger a gives fewer change points.
struct LossConfig {
  double a = 25.0;
  double b = 1.0;

  void validate() const;
};

struct PartitionEstimate {
  ChangeIndicators c;
  double expected_loss = 0.0;  // posterior expected loss of c
};

// Exact minimizer over all contiguous partitions of
//   sum_{s<t} [ b 1(s~t) (1 - pi_st) + a (1 - 1(s~t)) pi_st ]
// where pi_st is the fraction of draws with s and t in one block. `draws` is
// an N x (n - 1) row-major 0/1 matrix of change indicators. O(N n + n^2).
PartitionEstimate estimate_partition(std::span<const std::uint8_t> draws, std::size_t n_draws, std::size_t n,
                                     const LossConfig& loss);
PartitionEstimate estimate_partition(const Chains& chains, const LossConfig& loss, std::size_t series);

// Adjusted Rand index between two partitions of {1..n}. Identical
// partitions give 1.
double ari(const ChangeIndicators& x, const ChangeIndicators& y);
// Same quantity for arbitrary (not necessarily contiguous) label vectors.
double ari_labels(std::span<const int> x, std::span<const int> y);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double misclassification = 0.0;
  std::optional<double> sensitivity;  // nullopt when truth has no change points
  std::optional<double> specificity;  // nullopt when truth is all change points
};

Confusion confusion_metrics(const ChangeIndicators& estimate, const ChangeIndicators& truth);
Confusion confusion_metrics(std::span<const ChangeIndicators> estimate, std::span<const ChangeIndicators> truth);

struct PairwiseAri {
  Eigen::MatrixXd mean;               // L x L, per-pair mean over draws (diagonal 1)
  std::vector<double> per_draw_mean;  // mean over the L(L-1)/2 pairs, per draw
  double grand_mean = 0.0;
  std::size_t pairs_per_draw = 0;
};

// ARI between every pair of series' partitions at every saved draw. L >= 2.
PairwiseAri pairwise_ari_trace(const Chains& chains);

}  // namespace ccppm
