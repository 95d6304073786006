#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <cmath>
#include <random>

#include "ccppm/error.hpp"
#include "ccppm/tprior.hpp"
#include "oracles.hpp"

using namespace ccppm;

namespace {

double sigm(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Bivariate t draws built directly from normals and one chi-square.
struct Bivariate {
  double nu, m1, m2, s11, s12, s22;
  std::pair<double, double> draw(std::mt19937_64& rng) const {
    std::normal_distribution<double> g(0.0, 1.0);
    std::chi_squared_distribution<double> chi(nu);
    const double l11 = std::sqrt(s11), l21 = s12 / l11, l22 = std::sqrt(s22 - l21 * l21);
    const double g1 = g(rng), g2 = g(rng);
    const double k = std::sqrt(nu / chi(rng));
    return {m1 + k * l11 * g1, m2 + k * (l21 * g1 + l22 * g2)};
  }
};

struct Mc {
  double mean, se;
};

template <class F>
Mc monte_carlo(long draws, F&& f) {
  double s = 0, s2 = 0;
  for (long k = 0; k < draws; ++k) {
    const double v = f();
    s += v;
    s2 += v * v;
  }
  const double m = s / draws;
  return {m, std::sqrt((s2 / draws - m * m) / draws)};
}

}  // namespace

TEST_CASE("construction validates the scale matrix") {
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(TPriorParams(3, Eigen::Vector2d(0, 0), bad), InvalidInput);
  Eigen::Matrix2d asym;
  asym << 1, 0.5, 0.2, 1;
  CHECK_THROWS_AS(TPriorParams(3, Eigen::Vector2d(0, 0), asym), InvalidInput);
  CHECK_THROWS_AS(TPriorParams(0, Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity()), InvalidInput);
  CHECK_THROWS_AS(TPriorParams(3, Eigen::Vector3d(0, 0, 0), Eigen::Matrix2d::Identity()), InvalidInput);
}

TEST_CASE("density") {
  const TPriorParams p(4, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  const double x0 = 0.0;
  CHECK(log_mvt_density(std::span<const double>(&x0, 1), p) == doctest::Approx(std::log(0.375)).epsilon(1e-14));

  const auto q = TPriorParams::compound_symmetric(3, Eigen::Vector3d(1, -2, 0.5), 2.0, 0.4);
  const std::vector<double> d{0.3, -1.1, 0.7};
  std::vector<double> plus(3), minus(3);
  for (int k = 0; k < 3; ++k) {
    plus[k] = q.mu0()(k) + d[k];
    minus[k] = q.mu0()(k) - d[k];
  }
  CHECK(log_mvt_density(plus, q) == doctest::Approx(log_mvt_density(minus, q)).epsilon(1e-14));
}

TEST_CASE("marginalization") {
  Eigen::Matrix3d s;
  s << 2.0, 0.6, -0.3, 0.6, 1.5, 0.2, -0.3, 0.2, 0.8;
  const TPriorParams p(4.5, Eigen::Vector3d(0.5, -1.0, 2.0), s);
  const std::vector<std::size_t> all{0, 1, 2};
  const auto id = marginal_t(p, all);
  CHECK(id.mu0() == p.mu0());
  CHECK(id.sigma0() == p.sigma0());
  const std::vector<std::size_t> second{1};
  const auto m = marginal_t(p, second);
  CHECK(m.dim() == 1);
  CHECK(m.nu0() == p.nu0());
  CHECK(m.mu0()(0) == -1.0);
  CHECK(m.sigma0()(0, 0) == 1.5);
  CHECK_THROWS_AS(marginal_t(p, std::vector<std::size_t>{}), InvalidInput);
  CHECK_THROWS_AS(marginal_t(p, std::vector<std::size_t>{3}), InvalidInput);

  // Integrate the (z1, z3) density over z3 and compare with the z1 marginal.
  const auto pair = marginal_t(p, std::vector<std::size_t>{0, 2});
  const auto one = marginal_t(p, std::vector<std::size_t>{0});
  boost::math::quadrature::sinh_sinh<double> integrator;
  for (double z1 : {-3.0, -0.5, 0.5, 1.7, 6.0}) {
    const double integral = integrator.integrate([&](double z3) {
      const std::vector<double> x{z1, z3};
      return std::exp(log_mvt_density(x, pair));
    });
    CHECK(std::abs(integral - std::exp(log_mvt_density(std::span<const double>(&z1, 1), one))) < 1e-6);
  }
}

TEST_CASE("sampling") {
  std::mt19937_64 rng(1);
  const auto tight = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-2, 1), 1e-12, 0.3);
  for (int k = 0; k < 100; ++k) {
    const auto p = sample_p(tight, rng);
    CHECK(std::abs(p[0] - logistic(-2)) < 1e-4);
    CHECK(std::abs(p[1] - logistic(1)) < 1e-4);
  }

  // nu0 = 5: mean mu0, covariance nu/(nu-2) Sigma0 within 5%.
  const auto q = TPriorParams::compound_symmetric(5, Eigen::Vector2d(-1, 0.5), 2.0, 0.6);
  const long N = 1000000;
  double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
  for (long k = 0; k < N; ++k) {
    const auto z = sample_logit_p(q, rng);
    s1 += z(0), s2 += z(1), s11 += z(0) * z(0), s22 += z(1) * z(1), s12 += z(0) * z(1);
  }
  const double m1 = s1 / N, m2 = s2 / N;
  const double v11 = s11 / N - m1 * m1, v22 = s22 / N - m2 * m2, v12 = s12 / N - m1 * m2;
  const double f = 5.0 / 3.0;
  CHECK(std::abs(m1 + 1.0) < 3 * std::sqrt(f * 2.0 / N));
  CHECK(std::abs(m2 - 0.5) < 3 * std::sqrt(f * 2.0 / N));
  CHECK(std::abs(v11 / (f * 2.0) - 1) < 0.05);
  CHECK(std::abs(v22 / (f * 2.0) - 1) < 0.05);
  CHECK(std::abs(v12 / (f * 1.2) - 1) < 0.05);
}

TEST_CASE("sampling shares one mixing variable per vector") {
  // Uncorrelated t coordinates are still dependent: their squares correlate.
  const auto q = TPriorParams::compound_symmetric(5, Eigen::Vector2d(0, 0), 1.0, 0.0);
  std::mt19937_64 rng(2);
  const long N = 200000;
  std::vector<double> a(N), b(N);
  for (long k = 0; k < N; ++k) {
    const auto z = sample_logit_p(q, rng);
    a[k] = z(0) * z(0);
    b[k] = z(1) * z(1);
  }
  double cov = 0;
  const double ma = oracle::mean(a), mb = oracle::mean(b);
  for (long k = 0; k < N; ++k) cov += (a[k] - ma) * (b[k] - mb);
  cov /= N;
  // independent coordinates give 0; the exact value here is 50/9
  CHECK(cov > 0.5);
}

TEST_CASE("phi") {
  for (double s : {0.1, 1.0, 10.0, 100.0}) {
    for (double nu : {0.5, 3.0, 30.0}) {
      const TPriorParams p(nu, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, s));
      CHECK(std::abs(phi(p, 0).value - 0.5) < 1e-12);
    }
  }
  const TPriorParams tight(3, Eigen::VectorXd::Constant(1, -2.5), Eigen::MatrixXd::Constant(1, 1, 1e-14));
  CHECK(std::abs(phi(tight, 0).value - logistic(-2.5)) < 1e-6);

  const TPriorParams study(3, Eigen::VectorXd::Constant(1, -6), Eigen::MatrixXd::Constant(1, 1, 10));
  const auto r = phi(study, 0);
  CHECK(r.error <= 1e-8);
  std::mt19937_64 rng(3);
  std::student_t_distribution<double> t(3.0);
  const auto mc = monte_carlo(10000000, [&] { return sigm(-6 + std::sqrt(10.0) * t(rng)); });
  CHECK(std::abs(mc.mean - r.value) < 3 * mc.se);
}

TEST_CASE("phi quadrature is self-consistent") {
  const TPriorParams p(3, Eigen::VectorXd::Constant(1, -4), Eigen::MatrixXd::Constant(1, 1, 5));
  QuadOptions loose;
  loose.rel_tol = 1e-9;
  QuadOptions tight;
  tight.rel_tol = 0.5e-9;
  const auto a = phi(p, 0, loose), b = phi(p, 0, tight);
  CHECK(std::abs(a.value - b.value) <= std::max(a.error, 1e-15));
  const auto study = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-6, -6), 10, 0.9);
  const auto va = varphi(study, 0, 1, loose), vb = varphi(study, 0, 1, tight);
  CHECK(std::abs(va.value - vb.value) <= std::max(va.error, 1e-15));
}

TEST_CASE("varphi") {
  const auto tight = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-1, 0.7), 1e-14, 0.5);
  CHECK(std::abs(varphi(tight, 0, 1).value - logistic(-1) * logistic(0.7)) < 1e-6);

  Eigen::Matrix2d s;
  s << 3.0, 1.2, 1.2, 0.7;
  const TPriorParams asym(4, Eigen::Vector2d(-2, 1), s);
  CHECK(std::abs(varphi(asym, 0, 1).value - varphi(asym, 1, 0).value) < 1e-9);
  CHECK_THROWS_AS(varphi(asym, 1, 1), InvalidInput);

  const auto study = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-6, -6), 10, 0.9);
  const auto r = varphi(study, 0, 1);
  CHECK(r.error <= 1e-6);
  std::mt19937_64 rng(4);
  const Bivariate b{3, -6, -6, 10, 9, 10};
  const auto mc = monte_carlo(10000000, [&] {
    const auto [z1, z2] = b.draw(rng);
    return sigm(z1) * sigm(z2);
  });
  CHECK(std::abs(mc.mean - r.value) < 3 * mc.se);
}

TEST_CASE("heavy and light tails across scales") {
  std::mt19937_64 rng(15);
  for (double nu : {0.2, 0.5, 0.8, 1.5, 2.5, 30.0}) {
    for (double v : {0.01, 1.0, 10.0, 1e4}) {
      const auto p = TPriorParams::compound_symmetric(nu, Eigen::Vector2d(-2, -3), v, 0.9);
      const auto a = phi(p, 0);
      const auto b = varphi(p, 0, 1);
      CHECK(a.error <= 1e-8);
      CHECK(b.error <= 1e-8);
      const Bivariate d{nu, -2, -3, v, 0.9 * v, v};
      const auto mc1 = monte_carlo(200000, [&] { return sigm(d.draw(rng).first); });
      const auto mc2 = monte_carlo(200000, [&] {
        const auto [z1, z2] = d.draw(rng);
        return sigm(z1) * sigm(z2);
      });
      CHECK(std::abs(mc1.mean - a.value) < 4 * mc1.se);
      CHECK(std::abs(mc2.mean - b.value) < 4 * mc2.se);
    }
  }
}

TEST_CASE("hopeless integrals fail quickly") {
  // All mass of logistic(z) sits in the far tail; the nested integral gives up.
  const auto p = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-800, -800), 1.0, 0.5);
  CHECK_THROWS_AS(varphi(p, 0, 1), NumericalFailure);
  QuadOptions small;
  small.max_inner_integrals = 10;
  const auto study = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-6, -6), 10, 0.9);
  CHECK_THROWS_AS(varphi(study, 0, 1, small), NumericalFailure);
}

TEST_CASE("conditional change probability") {
  const auto tight = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-1, 0.7), 1e-14, 0.5);
  CHECK(std::abs(conditional_cp_prob(tight, 0, 1).value - logistic(-1)) < 1e-5);

  double prev = 0.0;
  for (double r : {0.0, 0.25, 0.5, 0.75, 0.9}) {
    const auto p = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-6, -6), 10, r);
    const double v = conditional_cp_prob(p, 0, 1).value;
    CHECK(v >= prev);
    prev = v;
  }

  // Monte Carlo of P(c1 = 1 | c2 = 1) from Bernoulli draws.
  const auto study = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-6, -6), 10, 0.9);
  const double exact = conditional_cp_prob(study, 0, 1).value;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  const Bivariate b{3, -6, -6, 10, 9, 10};
  long both = 0, second = 0;
  for (long k = 0; k < 10000000; ++k) {
    const auto [z1, z2] = b.draw(rng);
    const bool c1 = u(rng) < sigm(z1), c2 = u(rng) < sigm(z2);
    second += c2;
    both += c1 && c2;
  }
  const double est = double(both) / second;
  const double se = std::sqrt(est * (1 - est) / second);
  CHECK(std::abs(est - exact) < 3 * se);

  const TPriorParams vanishing(3, Eigen::Vector2d(0, -60), Eigen::Matrix2d::Identity() * 1e-6);
  CHECK_THROWS_AS(conditional_cp_prob(vanishing, 0, 1), DegenerateInput);
}

TEST_CASE("count moments") {
  const auto study = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-6, -6), 10, 0.9);
  const std::size_t n = 100;
  const auto self = count_moments(study, 0, 0, n);
  const double f = phi(study, 0).value;
  CHECK(self.var_i == doctest::Approx((n - 1) * f * (1 - f)).epsilon(1e-12));
  CHECK(self.mean_i == doctest::Approx((n - 1) * f).epsilon(1e-12));

  // Diagonal Sigma0 still yields dependent indicators, hence nonzero covariance.
  const auto diag = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-2, -2), 4, 0.0);
  const auto cm = count_moments(diag, 0, 1, n);
  CHECK(cm.covariance > 0.0);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  const Bivariate b{3, -2, -2, 4, 0, 4};
  // Per-time covariance from 100 batch estimates.
  const int batches = 100, per = 20000;
  std::vector<double> covs;
  for (int bi = 0; bi < batches; ++bi) {
    double s1 = 0, s2 = 0, s12 = 0;
    for (int k = 0; k < per; ++k) {
      const auto [z1, z2] = b.draw(rng);
      const double c1 = u(rng) < sigm(z1), c2 = u(rng) < sigm(z2);
      s1 += c1, s2 += c2, s12 += c1 * c2;
    }
    covs.push_back((n - 1) * (s12 / per - (s1 / per) * (s2 / per)));
  }
  const double se = std::sqrt(oracle::variance(covs) / batches);
  CHECK(std::abs(oracle::mean(covs) - cm.covariance) < 3 * se);
}

TEST_CASE("indicators are independent over time and correlated across series") {
  const auto study = TPriorParams::compound_symmetric(3, Eigen::Vector2d(-1.5, -1.5), 3, 0.8);
  const double f = phi(study, 0).value;
  const double v = varphi(study, 0, 1).value;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  const long N = 400000;
  std::vector<double> c1(N), c2(N);
  for (long t = 0; t < N; ++t) {
    const auto p = sample_p(study, rng);
    c1[t] = u(rng) < p[0];
    c2[t] = u(rng) < p[1];
  }
  const double m = oracle::mean(c1);
  CHECK(std::abs(m - f) < 3 * std::sqrt(f * (1 - f) / N));
  double lag = 0.0;
  for (long t = 1; t < N; ++t) lag += (c1[t] - m) * (c1[t - 1] - m);
  lag /= (N - 1) * oracle::variance(c1);
  CHECK(std::abs(lag) < 3 / std::sqrt(double(N)));
  const double exact = (v - f * f) / (f * (1 - f));
  std::vector<double> corr;
  const long per = N / 100;
  for (long bi = 0; bi < 100; ++bi) {
    const std::span<const double> x(c1.data() + bi * per, per), y(c2.data() + bi * per, per);
    const double mx = oracle::mean(x), my = oracle::mean(y);
    double sxy = 0;
    for (long k = 0; k < per; ++k) sxy += (x[k] - mx) * (y[k] - my);
    corr.push_back(sxy / (per - 1) / std::sqrt(oracle::variance(x) * oracle::variance(y)));
  }
  CHECK(oracle::mean(corr) > 0);
  CHECK(std::abs(oracle::mean(corr) - exact) < 3 * std::sqrt(oracle::variance(corr) / 100));
}
