#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numeric code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

inline double log_t1(double x, double df, double loc, double scale) {
  const double z = (x - loc) / scale;
  return std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * std::numbers::pi) - std::log(scale) -
         (df + 1) / 2 * std::log1p(z * z / df);
}

// Chain rule: sum of one-step-ahead Student-t predictives under conjugate
// Normal-Inverse-Gamma updating.
inline double sequential_nig(std::span<const double> y, double mu, double kappa, double alpha, double beta) {
  double total = 0.0;
  for (double v : y) {
    const double scale = std::sqrt(beta * (kappa + 1) / (alpha * kappa));
    total += log_t1(v, 2 * alpha, mu, scale);
    const double kn = kappa + 1;
    const double mn = (kappa * mu + v) / kn;
    beta += kappa * (v - mu) * (v - mu) / (2 * kn);
    alpha += 0.5;
    mu = mn;
    kappa = kn;
  }
  return total;
}

// Labels 0.. for a contiguous partition given 0/1 indicators.
inline std::vector<int> labels(std::span<const std::uint8_t> c) {
  std::vector<int> e(c.size() + 1, 0);
  for (std::size_t j = 0; j < c.size(); ++j) e[j + 1] = e[j] + c[j];
  return e;
}

// ARI by explicit pair counting, O(n^2).
inline double ari_pairs(std::span<const int> x, std::span<const int> y) {
  const std::size_t n = x.size();
  double a = 0, b = 0, c = 0, d = 0;  // together/together, together/apart, apart/together, apart/apart
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = s + 1; t < n; ++t) {
      const bool tx = x[s] == x[t], ty = y[s] == y[t];
      if (tx && ty) ++a;
      else if (tx) ++b;
      else if (ty) ++c;
      else ++d;
    }
  }
  const double total = a + b + c + d;
  const double expected = (a + b) * (a + c) / total;
  const double maxi = 0.5 * ((a + b) + (a + c));
  if (maxi == expected) return 1.0;
  return (a - expected) / (maxi - expected);
}

// Posterior expected generalized Binder loss by direct pair loops.
// a: penalty for splitting pairs the draws keep together; b: for merging
// pairs the draws separate.
inline double binder_loss(std::span<const std::uint8_t> est, const std::vector<std::vector<std::uint8_t>>& draws,
                          double a, double b) {
  const auto e = labels(est);
  const std::size_t n = e.size();
  std::vector<std::vector<int>> dl;
  for (const auto& d : draws) dl.push_back(labels(d));
  double loss = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = s + 1; t < n; ++t) {
      double pi = 0.0;
      for (const auto& l : dl) pi += l[s] == l[t];
      pi /= static_cast<double>(dl.size());
      loss += e[s] == e[t] ? b * (1 - pi) : a * pi;
    }
  }
  return loss;
}

// Two-sample Kolmogorov-Smirnov distance.
inline double ks_distance(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(double(i) / x.size() - double(j) / y.size()));
  }
  return d;
}

// KS distance of a sample against a CDF.
template <class Cdf>
double ks_distance(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  double d = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double f = cdf(x[k]);
    d = std::max({d, std::abs(f - k / n), std::abs((k + 1) / n - f)});
  }
  return d;
}

inline double mean(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace oracle
