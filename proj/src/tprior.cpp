#include "ccppm/tprior.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

#include "ccppm/error.hpp"

namespace ccppm {
namespace {

using GaussKronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
constexpr double kHalfPi = std::numbers::pi / 2.0;

// Log normalizing constant of the standard univariate t with df nu.
double log_t1_const(double nu) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi);
}

// E[g(U)], U ~ standard t_nu, through u = sign(v) |v|^k with v = tan(theta).
// The transformed weight behaves like |v|^(1 - k nu) at theta = +-pi/2;
// An integer k >= 2/nu makes it vanish at least linearly and keeps
// |v|^(k-1) smooth at theta = 0.
template <class G>
QuadResult integrate_t(double nu, G&& g, const QuadOptions& opts) {
  const double log_c = log_t1_const(nu);
  const double k = std::max(1.0, std::ceil(2.0 / nu));
  auto f = [&](double theta) {
    const double v = std::tan(theta);
    const double av = std::abs(v);
    if (!std::isfinite(av)) return 0.0;
    const double au = k == 1.0 ? av : std::pow(av, k);
    const double u = std::copysign(au, v);
    // sec^2(theta) = 1 + v^2; du/dv = k |v|^(k - 1)
    const double log_jac = std::log1p(av * av) + (k == 1.0 ? 0.0 : std::log(k) + (k - 1.0) * std::log(av));
    const double w = std::exp(log_c - 0.5 * (nu + 1.0) * std::log1p(au * au / nu) + log_jac);
    if (w == 0.0 || !std::isfinite(w)) return 0.0;
    return g(u) * w;
  };
  double e1 = 0.0, e2 = 0.0;
  const double v1 = GaussKronrod::integrate(f, -kHalfPi, 0.0, opts.max_depth, opts.rel_tol, &e1);
  const double v2 = GaussKronrod::integrate(f, 0.0, kHalfPi, opts.max_depth, opts.rel_tol, &e2);
  return {v1 + v2, e1 + e2};
}

// E[logistic(loc + scale * U)], U ~ t_nu standard.
// For scale > 1 the logistic is a near-step on the u axis, so write it as
// P(loc + scale U > 0) plus the (logistic - step) correction, integrated in
// w = loc + scale u over |w| <= 40 where the difference exceeds e^-40.
QuadResult expect_logistic(double nu, double loc, double scale, const QuadOptions& opts) {
  if (scale <= 1.0) return integrate_t(nu, [&](double u) { return logistic(loc + scale * u); }, opts);
  constexpr double kWindow = 40.0;
  const boost::math::students_t_distribution<double> dist(nu);
  const double step = boost::math::cdf(boost::math::complement(dist, -loc / scale));
  const double log_c = log_t1_const(nu) - std::log(scale);
  auto density = [&](double w) {
    const double v = (w - loc) / scale;
    return std::exp(log_c - 0.5 * (nu + 1.0) * std::log1p(v * v / nu));
  };
  double e1 = 0.0, e2 = 0.0;
  const double below = GaussKronrod::integrate([&](double w) { return logistic(w) * density(w); }, -kWindow, 0.0,
                                               opts.max_depth, opts.rel_tol, &e1);
  const double above = GaussKronrod::integrate([&](double w) { return logistic(-w) * density(w); }, 0.0, kWindow,
                                               opts.max_depth, opts.rel_tol, &e2);
  return {step + below - above, e1 + e2 + 2.0 * std::exp(-kWindow) + 4.0 * std::numeric_limits<double>::epsilon()};
}

void check_index(const TPriorParams& params, std::size_t i) {
  if (i >= params.dim()) {
    throw InvalidInput("series index " + std::to_string(i) + " out of range for dimension " +
                       std::to_string(params.dim()));
  }
}

void check_error(const char* what, const QuadResult& r, const QuadOptions& opts) {
  if (!std::isfinite(r.value) || !(r.error <= opts.max_abs_error)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, ": quadrature did not converge (value %.6g, error bound %.3g, tolerance %.3g)",
                  r.value, r.error, opts.max_abs_error);
    throw NumericalFailure(std::string(what) + buf);
  }
}

}  // namespace

TPriorParams::TPriorParams(double nu0, Eigen::VectorXd mu0, Eigen::MatrixXd sigma0)
    : nu0_(nu0), mu0_(std::move(mu0)), sigma0_(std::move(sigma0)) {
  if (!(nu0_ > 0.0) || !std::isfinite(nu0_)) throw InvalidInput("nu0 must be positive and finite");
  const auto L = mu0_.size();
  if (L == 0) throw InvalidInput("prior dimension must be at least 1");
  if (sigma0_.rows() != L || sigma0_.cols() != L) throw InvalidInput("Sigma0 dimension does not match mu0");
  if (!mu0_.allFinite() || !sigma0_.allFinite()) throw InvalidInput("prior parameters must be finite");
  const double scale = std::max(1.0, sigma0_.cwiseAbs().maxCoeff());
  if (!sigma0_.isApprox(sigma0_.transpose(), 1e-12) &&
      (sigma0_ - sigma0_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidInput("Sigma0 is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma0_);
  if (llt.info() != Eigen::Success) throw InvalidInput("Sigma0 is not positive definite");
  chol_lower_ = llt.matrixL();
  if ((chol_lower_.diagonal().array() <= 0.0).any()) throw InvalidInput("Sigma0 is not positive definite");
  precision_ = llt.solve(Eigen::MatrixXd::Identity(L, L));
  log_det_ = 2.0 * chol_lower_.diagonal().array().log().sum();
}

TPriorParams TPriorParams::compound_symmetric(double nu0, Eigen::VectorXd mu0, double var, double corr) {
  const auto L = mu0.size();
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(L, L, var * corr);
  s.diagonal().setConstant(var);
  return TPriorParams(nu0, std::move(mu0), std::move(s));
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double log_mvt_density(std::span<const double> x, const TPriorParams& params) {
  const std::size_t L = params.dim();
  if (x.size() != L) throw InvalidInput("density argument has wrong dimension");
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(L));
  const Eigen::VectorXd d = xv - params.mu0();
  const Eigen::VectorXd w = params.chol_lower().triangularView<Eigen::Lower>().solve(d);
  const double q = w.squaredNorm();
  const double nu = params.nu0();
  const double Ld = static_cast<double>(L);
  return std::lgamma(0.5 * (nu + Ld)) - std::lgamma(0.5 * nu) - 0.5 * Ld * std::log(nu * std::numbers::pi) -
         0.5 * params.log_det_sigma() - 0.5 * (nu + Ld) * std::log1p(q / nu);
}

TPriorParams marginal_t(const TPriorParams& params, std::span<const std::size_t> subset) {
  if (subset.empty()) throw InvalidInput("marginal over an empty subset");
  const auto k = static_cast<Eigen::Index>(subset.size());
  Eigen::VectorXd mu(k);
  Eigen::MatrixXd sigma(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    check_index(params, subset[a]);
    for (Eigen::Index b = 0; b < a; ++b) {
      if (subset[a] == subset[b]) throw InvalidInput("marginal subset has repeated indices");
    }
    mu(a) = params.mu0()(static_cast<Eigen::Index>(subset[a]));
    for (Eigen::Index b = 0; b < k; ++b) {
      sigma(a, b) = params.sigma0()(static_cast<Eigen::Index>(subset[a]), static_cast<Eigen::Index>(subset[b]));
    }
  }
  return TPriorParams(params.nu0(), std::move(mu), std::move(sigma));
}

Eigen::VectorXd sample_logit_p(const TPriorParams& params, Rng& rng) {
  const auto L = static_cast<Eigen::Index>(params.dim());
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd g(L);
  for (Eigen::Index l = 0; l < L; ++l) g(l) = normal(rng);
  const double w = std::chi_squared_distribution<double>(params.nu0())(rng);
  const double mix = 1.0 / std::sqrt(w / params.nu0());
  return params.mu0() + (params.chol_lower() * g) * mix;
}

std::vector<double> sample_p(const TPriorParams& params, Rng& rng) {
  const Eigen::VectorXd z = sample_logit_p(params, rng);
  std::vector<double> p(static_cast<std::size_t>(z.size()));
  for (Eigen::Index l = 0; l < z.size(); ++l) p[static_cast<std::size_t>(l)] = logistic(z(l));
  return p;
}

QuadResult phi(const TPriorParams& params, std::size_t i, const QuadOptions& opts) {
  check_index(params, i);
  const auto ii = static_cast<Eigen::Index>(i);
  const QuadResult r =
      expect_logistic(params.nu0(), params.mu0()(ii), std::sqrt(params.sigma0()(ii, ii)), opts);
  check_error("phi", r, opts);
  return r;
}

QuadResult varphi(const TPriorParams& params, std::size_t i, std::size_t s, const QuadOptions& opts) {
  check_index(params, i);
  check_index(params, s);
  if (i == s) throw InvalidInput("varphi needs two distinct series");
  const auto ii = static_cast<Eigen::Index>(i);
  const auto ss = static_cast<Eigen::Index>(s);
  const double nu = params.nu0();
  const double mu_i = params.mu0()(ii);
  const double mu_s = params.mu0()(ss);
  const double s_ii = params.sigma0()(ii, ii);
  const double s_ss = params.sigma0()(ss, ss);
  const double s_is = params.sigma0()(ii, ss);
  const double sd_i = std::sqrt(s_ii);
  const double beta = s_is / sd_i;  // slope per unit of the standardized z_i
  const double resid_var = std::max(0.0, s_ss - s_is * s_is / s_ii);

  // Iterated integral: z_i ~ t_1(nu, mu_i, s_ii) and
  // z_s | z_i ~ t_1(nu + 1, mu_s + beta u, (nu + u^2) / (nu + 1) * resid_var)
  // with u the standardized z_i.
  double max_inner_error = 0.0;
  std::size_t inner_calls = 0;
  auto outer = [&](double u) {
    const double cond_scale = std::sqrt((nu + u * u) / (nu + 1.0) * resid_var);
    const QuadResult inner = expect_logistic(nu + 1.0, mu_s + beta * u, cond_scale, opts);
    max_inner_error = std::max(max_inner_error, inner.error);
    // Fail fast instead of refining a hopeless outer integral.
    check_error("varphi (inner)", inner, opts);
    if (++inner_calls > opts.max_inner_integrals) {
      throw NumericalFailure("varphi: more than " + std::to_string(opts.max_inner_integrals) +
                             " inner integrals without convergence");
    }
    return logistic(mu_i + sd_i * u) * inner.value;
  };
  const QuadResult o = integrate_t(nu, outer, opts);
  const double v = o.value;
  const double err = o.error;
  const QuadResult r{v, err + max_inner_error};
  check_error("varphi", r, opts);
  return r;
}

QuadResult conditional_cp_prob(const TPriorParams& params, std::size_t i, std::size_t s, const QuadOptions& opts) {
  const QuadResult joint = varphi(params, i, s, opts);
  const QuadResult marg = phi(params, s, opts);
  if (marg.value < 1e-12) {
    throw DegenerateInput("conditioning change probability phi_s = " + std::to_string(marg.value) +
                          " is below 1e-12");
  }
  const double value = joint.value / marg.value;
  return {value, (joint.error + value * marg.error) / marg.value};
}

CountMoments count_moments(const TPriorParams& params, std::size_t i, std::size_t s, std::size_t n,
                           const QuadOptions& opts) {
  if (n < 2) throw InvalidInput("count moments need n >= 2");
  const double m = static_cast<double>(n - 1);
  CountMoments out;
  const double phi_i = phi(params, i, opts).value;
  const double phi_s = (i == s) ? phi_i : phi(params, s, opts).value;
  out.mean_i = m * phi_i;
  out.mean_s = m * phi_s;
  out.var_i = m * phi_i * (1.0 - phi_i);
  out.var_s = m * phi_s * (1.0 - phi_s);
  if (i == s) {
    out.covariance = out.var_i;
    out.correlation = 1.0;
    return out;
  }
  out.covariance = m * (varphi(params, i, s, opts).value - phi_i * phi_s);
  out.correlation = out.covariance / std::sqrt(out.var_i * out.var_s);
  return out;
}

PriorSummaries prior_summaries(const TPriorParams& params, const QuadOptions& opts) {
  const std::size_t L = params.dim();
  PriorSummaries out;
  out.varphi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
  out.varphi_error = out.varphi;
  for (std::size_t i = 0; i < L; ++i) {
    const QuadResult r = phi(params, i, opts);
    out.phi.push_back(r.value);
    out.phi_error.push_back(r.error);
    const auto ii = static_cast<Eigen::Index>(i);
    out.varphi(ii, ii) = r.value;
    out.varphi_error(ii, ii) = r.error;
  }
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t s = i + 1; s < L; ++s) {
      const QuadResult r = varphi(params, i, s, opts);
      const auto ii = static_cast<Eigen::Index>(i);
      const auto ss = static_cast<Eigen::Index>(s);
      out.varphi(ii, ss) = out.varphi(ss, ii) = r.value;
      out.varphi_error(ii, ss) = out.varphi_error(ss, ii) = r.error;
    }
  }
  return out;
}

}  // namespace ccppm
