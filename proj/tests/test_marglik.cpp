#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ccppm/error.hpp"
#include "ccppm/marglik.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ccppm;

TEST_CASE("univariate t oracle") {
  const std::vector<double> y{0.0};
  const MargLikParams p{0.0, 1.0, 2.0, 1.0};
  CHECK(log_data_factor(y, p) == doctest::Approx(std::log(0.375)).epsilon(1e-14));
  CHECK(log_data_factor(y, p) == doctest::Approx(-0.98083).epsilon(1e-5));
}

TEST_CASE("closed form matches the sequential predictive chain rule") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t m = 1 + rng() % 50;
    const MargLikParams p{2 * g(rng), 0.1 + 5 * u(rng), 0.5 + 4 * u(rng), 0.1 + 3 * u(rng)};
    std::vector<double> y(m);
    for (auto& v : y) v = p.mu0 + 2 * g(rng);
    worst = std::max(worst, std::abs(log_data_factor(y, p) - oracle::sequential_nig(y, p.mu0, p.kappa0, p.alpha0, p.beta0)));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("closed form matches Monte Carlo integration over the NIG prior") {
  const MargLikParams p{0.3, 1.5, 3.0, 2.0};
  const std::vector<double> y{0.1, 0.8, -0.4};
  std::mt19937_64 rng(5);
  std::gamma_distribution<double> gam(p.alpha0, 1.0 / p.beta0);
  std::normal_distribution<double> g(0.0, 1.0);
  const int N = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < N; ++k) {
    const double sig2 = 1.0 / gam(rng);
    const double mu = p.mu0 + std::sqrt(sig2 / p.kappa0) * g(rng);
    double like = 1.0;
    for (double v : y) like *= std::exp(-0.5 * (v - mu) * (v - mu) / sig2) / std::sqrt(2 * std::numbers::pi * sig2);
    s += like;
    s2 += like * like;
  }
  const double mean = s / N;
  const double sd = std::sqrt(s2 / N - mean * mean);
  const double se_log = sd / std::sqrt(double(N)) / mean;
  CHECK(std::abs(std::log(mean) - log_data_factor(y, p)) < 3 * se_log);
}

TEST_CASE("exchangeable within a block") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> y(17);
  for (auto& v : y) v = g(rng);
  const MargLikParams p{0.2, 0.7, 2.5, 1.3};
  const double base = log_data_factor(y, p);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(y.begin(), y.end(), rng);
    CHECK(log_data_factor(y, p) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("stable for long blocks") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<double> y(2000);
  for (auto& v : y) v = u(rng);
  const double v = log_data_factor(y, MargLikParams{});
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(oracle::sequential_nig(y, 0, 1, 2, 1)).epsilon(1e-10));
}

TEST_CASE("parameter and data validation") {
  const std::vector<double> y{1.0, 2.0};
  CHECK_THROWS_AS(log_data_factor(y, MargLikParams{0, 0, 2, 1}), InvalidInput);
  CHECK_THROWS_AS(log_data_factor(y, MargLikParams{0, 1, -1, 1}), InvalidInput);
  CHECK_THROWS_AS(log_data_factor(std::vector<double>{1.0, NAN}, MargLikParams{}), InvalidInput);
  CHECK_THROWS_AS(log_data_factor(std::vector<double>{}, MargLikParams{}), InvalidInput);
}

TEST_CASE("standardize") {
  auto s = make_series("x", {1, 2, 3});
  const auto z = standardize(s);
  CHECK(z.y == std::vector<double>{-1, 0, 1});
  CHECK(z.standardized);
  CHECK(z.original == s.y);
  const auto zz = standardize(z);
  for (std::size_t t = 0; t < 3; ++t) CHECK(std::abs(zz.y[t] - z.y[t]) < 1e-12);
  CHECK_THROWS_AS(standardize(make_series("c", {5, 5, 5})), DegenerateInput);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(3.0, 7.0);
  auto r = make_series("r", std::vector<double>(500));
  for (auto& v : r.y) v = g(rng);
  const auto zr = standardize(r);
  CHECK(std::abs(oracle::mean(zr.y)) < 1e-12);
  CHECK(std::abs(oracle::variance(zr.y) - 1.0) < 1e-12);
  for (std::size_t t = 0; t < r.y.size(); ++t) CHECK(zr.y[t] * zr.scale + zr.center == doctest::Approx(r.y[t]));
}

TEST_CASE("block evaluator and partition likelihood") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = 40;
  std::vector<double> y(n);
  for (auto& v : y) v = g(rng);
  const MargLikParams p{0.1, 1.2, 2.2, 0.9};
  const BlockEvaluator ev(y, p);
  for (std::size_t a = 0; a < n; a += 3) {
    for (std::size_t b = a + 1; b <= n; b += 5) {
      const double direct = log_data_factor(std::span<const double>(y).subspan(a, b - a), p);
      CHECK(ev.log_factor(a, b) == doctest::Approx(direct).epsilon(1e-11));
    }
  }
  const auto s = make_series("y", y);
  CHECK(log_likelihood_given_partition(s, ChangeIndicators::none(n), p) == doctest::Approx(log_data_factor(y, p)));
  double singles = 0.0;
  for (double v : y) singles += log_data_factor(std::vector<double>{v}, p);
  const ChangeIndicators all(std::vector<std::uint8_t>(n - 1, 1), n);
  CHECK(log_likelihood_given_partition(s, all, p) == doctest::Approx(singles).epsilon(1e-12));
  CHECK(ev.log_likelihood(all) == doctest::Approx(singles).epsilon(1e-12));
}

TEST_CASE("single-block correlation equals 1/(1+kappa0)") {
  // Predictive simulation of two observations sharing one block.
  const MargLikParams p{0.0, 1.5, 6.0, 5.0};
  std::mt19937_64 rng(21);
  std::gamma_distribution<double> gam(p.alpha0, 1.0 / p.beta0);
  std::normal_distribution<double> g(0.0, 1.0);
  const int batches = 100, per = 10000;
  std::vector<double> corr;
  for (int b = 0; b < batches; ++b) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int k = 0; k < per; ++k) {
      const double s2 = 1.0 / gam(rng);
      const double mu = p.mu0 + std::sqrt(s2 / p.kappa0) * g(rng);
      const double a = mu + std::sqrt(s2) * g(rng), c = mu + std::sqrt(s2) * g(rng);
      sx += a, sy += c, sxx += a * a, syy += c * c, sxy += a * c;
    }
    const double mx = sx / per, my = sy / per;
    corr.push_back((sxy / per - mx * my) / std::sqrt((sxx / per - mx * mx) * (syy / per - my * my)));
  }
  const double se = std::sqrt(oracle::variance(corr) / batches);
  CHECK(std::abs(oracle::mean(corr) - 1.0 / (1.0 + p.kappa0)) < 3 * se);
}
