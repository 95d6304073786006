#include "ccppm/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ccppm/error.hpp"

namespace ccppm {
namespace {

struct EmState {
  double m;
  double s;
  double loglik;
  int iterations;
};

// (m, s) maximizing the likelihood for fixed d, by parameter-expanded EM:
// w_t = (d + 1) / (d + r_t^2), m = sum w y / sum w, s^2 = sum w (y - m)^2 / sum w.
EmState em_fixed_d(std::span<const double> y, double d, double m, double s, const StudentTOptions& opts) {
  int it = 0;
  for (; it < opts.max_em_iterations; ++it) {
    double sw = 0.0, swy = 0.0;
    for (double v : y) {
      const double r = (v - m) / s;
      const double w = (d + 1.0) / (d + r * r);
      sw += w;
      swy += w * v;
    }
    const double m_new = swy / sw;
    double sw2 = 0.0, swr = 0.0;
    for (double v : y) {
      const double r = (v - m) / s;
      const double w = (d + 1.0) / (d + r * r);
      sw2 += w;
      swr += w * (v - m_new) * (v - m_new);
    }
    const double s_new = std::sqrt(swr / sw2);
    if (!(s_new > 0.0) || !std::isfinite(s_new)) {
      throw NumericalFailure("student-t fit: scale collapsed at d = " + std::to_string(d));
    }
    const bool done = std::abs(m_new - m) <= opts.em_tol * (s + std::abs(m)) && std::abs(s_new - s) <= opts.em_tol * s;
    m = m_new;
    s = s_new;
    if (done) break;
  }
  return {m, s, student_t_log_likelihood(y, d, m, s), it + 1};
}

}  // namespace

std::vector<double> autocorrelation(std::span<const double> y, std::size_t max_lag) {
  const std::size_t n = y.size();
  if (n < max_lag + 2) throw InvalidInput("series too short for the requested autocorrelation lags");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (double v : y) denom += (v - mean) * (v - mean);
  if (!(denom > 0.0)) throw DegenerateInput("autocorrelation of a constant series");
  std::vector<double> acf(max_lag + 1, 0.0);
  acf[0] = 1.0;
  for (std::size_t l = 1; l <= max_lag; ++l) {
    double num = 0.0;
    for (std::size_t t = 0; t + l < n; ++t) num += (y[t] - mean) * (y[t + l] - mean);
    acf[l] = num / denom;
  }
  return acf;
}

KappaEstimate estimate_kappa(std::span<const double> y, std::size_t max_lag) {
  if (max_lag < 1) throw InvalidInput("max_lag must be at least 1");
  const auto acf = autocorrelation(y, max_lag);
  const double n = static_cast<double>(y.size());
  const double lo = 1.0 / n;
  const double hi = 1.0 - 1.0 / n;

  KappaEstimate out;
  for (std::size_t l = 1; l <= max_lag; ++l) {
    if (acf[l] > 0.0) {
      out.lag = l;
      out.raw_acf = acf[l];
      break;
    }
  }
  double c = 0.0;
  if (out.lag == 0) {
    out.fallback = true;
    c = lo;
  } else {
    c = std::clamp(out.raw_acf, lo, hi);
    out.clamped = (c != out.raw_acf);
  }
  out.acf = c;
  out.kappa0 = (1.0 - c) / c;
  return out;
}

double student_t_log_likelihood(std::span<const double> y, double d, double m, double s) {
  const double c = std::lgamma(0.5 * (d + 1.0)) - std::lgamma(0.5 * d) - 0.5 * std::log(d * std::numbers::pi) -
                   std::log(s);
  double acc = 0.0;
  for (double v : y) {
    const double r = (v - m) / s;
    acc += std::log1p(r * r / d);
  }
  return static_cast<double>(y.size()) * c - 0.5 * (d + 1.0) * acc;
}

StudentTFit fit_student_t_mle(std::span<const double> y, const StudentTOptions& opts) {
  const std::size_t n = y.size();
  if (n < 10) throw InvalidInput("student-t fit needs at least 10 observations");
  for (double v : y) {
    if (!std::isfinite(v)) throw InvalidInput("student-t fit: non-finite observation");
  }

  // Robust start: median and scaled MAD.
  std::vector<double> sorted(y.begin(), y.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(n / 2), sorted.end());
  const double med = sorted[n / 2];
  for (auto& v : sorted) v = std::abs(v - med);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(n / 2), sorted.end());
  double mad = 1.4826 * sorted[n / 2];
  if (!(mad > 0.0)) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    mad = std::sqrt(ss / static_cast<double>(n));
  }
  if (!(mad > 0.0)) throw DegenerateInput("student-t fit of a constant series");

  int total_iterations = 0;
  double warm_m = med, warm_s = mad;
  auto profile = [&](double log_d) {
    const EmState st = em_fixed_d(y, std::exp(log_d), warm_m, warm_s, opts);
    total_iterations += st.iterations;
    warm_m = st.m;
    warm_s = st.s;
    return st;
  };

  const double x_lo = std::log(opts.d_min);
  const double x_hi = std::log(opts.d_max);
  const std::size_t G = std::max<std::size_t>(opts.grid_points, 3);
  std::vector<double> xs(G), ll(G);
  std::size_t best = 0;
  for (std::size_t g = 0; g < G; ++g) {
    xs[g] = x_lo + (x_hi - x_lo) * static_cast<double>(g) / static_cast<double>(G - 1);
    ll[g] = profile(xs[g]).loglik;
    if (ll[g] > ll[best]) best = g;
  }

  // Golden-section on the bracket around the best grid point.
  double a = xs[best == 0 ? 0 : best - 1];
  double b = xs[best + 1 >= G ? G - 1 : best + 1];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  warm_m = med;
  warm_s = mad;
  EmState f1 = profile(x1);
  EmState f2 = profile(x2);
  while (b - a > opts.d_tol) {
    if (f1.loglik >= f2.loglik) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = profile(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = profile(x2);
    }
  }
  const double x_best = 0.5 * (a + b);
  EmState fin = profile(x_best);
  double d_best = std::exp(x_best);
  // Keep the best point seen among the final candidates and the grid.
  if (f1.loglik > fin.loglik) {
    fin = f1;
    d_best = std::exp(x1);
  }
  if (f2.loglik > fin.loglik) {
    fin = f2;
    d_best = std::exp(x2);
  }
  if (ll[best] > fin.loglik) {
    warm_m = med;
    warm_s = mad;
    fin = profile(xs[best]);
    d_best = std::exp(xs[best]);
  }
  if (!std::isfinite(fin.loglik)) throw NumericalFailure("student-t fit: non-finite log-likelihood");
  return {d_best, fin.m, fin.s, fin.loglik, total_iterations};
}

MargLikTuning marglik_params_from_data(std::span<const double> y, std::size_t max_lag, const StudentTOptions& opts) {
  MargLikTuning out;
  out.kappa = estimate_kappa(y, max_lag);
  out.fit = fit_student_t_mle(y, opts);
  const double c = out.kappa.acf;
  out.params.kappa0 = out.kappa.kappa0;
  out.params.mu0 = out.fit.m;
  out.params.alpha0 = 0.5 * out.fit.d;
  out.params.beta0 = 0.5 * out.fit.d * (1.0 - c) * out.fit.s * out.fit.s;
  out.params.validate();
  return out;
}

PriorGuess default_prior_guess(std::size_t n, std::size_t L, double r0) {
  if (n < 3) throw InvalidInput("default prior guess needs n >= 3");
  if (L < 1) throw InvalidInput("default prior guess needs L >= 1");
  if (!(r0 >= 0.0 && r0 < 1.0)) throw InvalidInput("compound-symmetry correlation r0 must lie in [0, 1)");
  const double nd = static_cast<double>(n);
  const auto Li = static_cast<Eigen::Index>(L);
  PriorGuess g;
  g.r0 = r0;
  g.m0 = Eigen::VectorXd::Constant(Li, 1.0 / nd);
  g.sigma0_sq = (nd - 1.0) / (nd * nd * nd);
  g.S0 = Eigen::MatrixXd::Constant(Li, Li, g.sigma0_sq * r0);
  g.S0.diagonal().setConstant(g.sigma0_sq);
  return g;
}

TPriorParams tprior_from_guess(const PriorGuess& guess, double nu0) {
  if (!(nu0 > 2.0)) throw InvalidInput("the moment map needs nu0 > 2, got " + std::to_string(nu0));
  const auto L = guess.m0.size();
  if (guess.S0.rows() != L || guess.S0.cols() != L) throw InvalidInput("prior guess dimensions disagree");
  Eigen::VectorXd mu(L);
  Eigen::VectorXd dinv(L);
  for (Eigen::Index l = 0; l < L; ++l) {
    const double m = guess.m0(l);
    if (!(m > 0.0 && m < 1.0)) throw InvalidInput("prior guess for E(p) must lie in (0, 1)");
    mu(l) = logit(m);
    dinv(l) = 1.0 / (m * (1.0 - m));
  }
  Eigen::MatrixXd sigma = ((nu0 - 2.0) / nu0) * (dinv.asDiagonal() * guess.S0 * dinv.asDiagonal());
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return TPriorParams(nu0, std::move(mu), std::move(sigma));
}

PriorGuess approximate_p_moments(const TPriorParams& prior) {
  if (!(prior.nu0() > 2.0)) throw InvalidInput("moment approximation needs nu0 > 2");
  const auto L = static_cast<Eigen::Index>(prior.dim());
  PriorGuess g;
  g.m0.resize(L);
  Eigen::VectorXd jac(L);
  for (Eigen::Index l = 0; l < L; ++l) {
    const double m = logistic(prior.mu0()(l));
    g.m0(l) = m;
    jac(l) = m * (1.0 - m);
  }
  g.S0 = (prior.nu0() / (prior.nu0() - 2.0)) * (jac.asDiagonal() * prior.sigma0() * jac.asDiagonal());
  g.sigma0_sq = g.S0(0, 0);
  g.r0 = L > 1 ? g.S0(0, 1) / std::sqrt(g.S0(0, 0) * g.S0(1, 1)) : 0.0;
  return g;
}

BetaPrior beta_params_from_cluster_moments(std::size_t n, double mean_clusters, double var_clusters) {
  if (n < 2) throw InvalidInput("beta inversion needs n >= 2");
  const double N = static_cast<double>(n - 1);
  const double mean_changes = mean_clusters - 1.0;
  const double q = mean_changes / N;
  if (!(q > 0.0 && q < 1.0)) {
    throw InvalidInput("mean number of clusters must lie strictly between 1 and n");
  }
  // Var = N q (1 - q) (S + N) / (S + 1), S = a + b, ranging over
  // (N q (1 - q), N^2 q (1 - q)) as S goes from infinity to 0.
  const double binom_var = N * q * (1.0 - q);
  const double ratio = var_clusters / binom_var;
  if (!(ratio > 1.0)) {
    throw InvalidInput("cluster-count variance " + std::to_string(var_clusters) +
                       " is at or below the Binomial floor " + std::to_string(binom_var) + " (a + b -> infinity)");
  }
  if (!(ratio < N)) {
    throw InvalidInput("cluster-count variance " + std::to_string(var_clusters) + " exceeds the Beta-Binomial maximum");
  }
  const double S = (N - ratio) / (ratio - 1.0);
  return {q * S, (1.0 - q) * S};
}

}  // namespace ccppm
