#include "ccppm/cohesion.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ccppm/error.hpp"

namespace ccppm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_prob(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("change probability " + std::to_string(p) + " outside [0, 1]");
}

// count * log(x) with the convention 0 * log(0) = 0.
double scaled_log(double count, double x) {
  if (count == 0.0) return 0.0;
  return x == 0.0 ? kNegInf : count * std::log(x);
}

double log_or_neg_inf(double x) { return x == 0.0 ? kNegInf : std::log(x); }

void check_block(Interval block, std::size_t n) {
  if (block.first < 1 || block.last < block.first || block.last > n) {
    throw InvalidInput("block {" + std::to_string(block.first) + ".." + std::to_string(block.last) +
                       "} is not a nonempty interval of {1.." + std::to_string(n) + "}");
  }
}

}  // namespace

double log_yao_cohesion(Interval block, double p, std::size_t n) {
  check_block(block, n);
  check_prob(p);
  const double stay = scaled_log(static_cast<double>(block.size() - 1), 1.0 - p);
  if (block.last == n) return stay;
  return log_or_neg_inf(p) + stay;
}

double log_extended_cohesion(Interval block, std::span<const double> probs, std::size_t n) {
  check_block(block, n);
  if (probs.size() + 1 != n) {
    throw InvalidInput("probability vector has length " + std::to_string(probs.size()) + ", expected n - 1");
  }
  double acc = 0.0;
  for (std::size_t t = block.first; t < block.last; ++t) {
    check_prob(probs[t - 1]);
    acc += log_or_neg_inf(1.0 - probs[t - 1]);
  }
  if (block.last < n) {
    check_prob(probs[block.last - 1]);
    acc += log_or_neg_inf(probs[block.last - 1]);
  }
  return acc;
}

double log_partition_prob(const ChangeIndicators& c, std::span<const double> probs) {
  if (probs.size() != c.size()) {
    throw InvalidInput("probability vector has length " + std::to_string(probs.size()) + ", indicators have " +
                       std::to_string(c.size()));
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    check_prob(probs[j]);
    acc += c[j] ? log_or_neg_inf(probs[j]) : log_or_neg_inf(1.0 - probs[j]);
  }
  return acc;
}

double log_partition_prob(const ChangeIndicators& c, double p) {
  check_prob(p);
  const auto changes = static_cast<double>(c.num_changes());
  const auto stays = static_cast<double>(c.size()) - changes;
  return scaled_log(changes, p) + scaled_log(stays, 1.0 - p);
}

}  // namespace ccppm
