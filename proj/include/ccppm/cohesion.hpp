#pragma once

#include <cstddef>
#include <span>

#include "ccppm/partition.hpp"

namespace ccppm {

// Log cohesions and partition probabilities for contiguous partitions.
// Every quantity is returned on the log scale; probabilities of exactly 0 or
// 1 produce -infinity rather than NaN or an exception.

// Geometric-decay cohesion of block {first..last} with constant change
// probability p (p in [0, 1]) for a series of length n:
//   log p + (m - 1) log(1 - p)   if last < n
//   (m - 1) log(1 - p)           if last == n
double log_yao_cohesion(Interval block, double p, std::size_t n);

// Time-varying extension. probs holds p_1..p_{n-1} (0-based storage).
//   log p_last + sum_{t=first}^{last-1} log(1 - p_t)   if last < n
//   sum_{t=first}^{last-1} log(1 - p_t)                if last == n
double log_extended_cohesion(Interval block, std::span<const double> probs, std::size_t n);

// sum_t [c_t log p_t + (1 - c_t) log(1 - p_t)]; identical to the sum of the
// extended cohesions over the blocks of c.
double log_partition_prob(const ChangeIndicators& c, std::span<const double> probs);

// Constant-probability special case: (k - 1) log p + (n - k) log(1 - p).
double log_partition_prob(const ChangeIndicators& c, double p);

}  // namespace ccppm
