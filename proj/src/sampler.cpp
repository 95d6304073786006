#include "ccppm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ccppm/error.hpp"

namespace ccppm {
namespace {

std::vector<SeriesData> prepare_data(std::span<const SeriesData> data, std::span<const MargLikParams> marglik) {
  if (data.empty()) throw InvalidInput("no series supplied");
  if (marglik.size() != data.size()) {
    throw InvalidInput("expected " + std::to_string(data.size()) + " marginal likelihood parameter sets, got " +
                       std::to_string(marglik.size()));
  }
  const std::size_t n = data.front().size();
  if (n < 3) throw InvalidInput("series must have at least 3 observations");
  std::vector<SeriesData> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    if (s.size() != n) throw InvalidInput("series '" + s.name + "' has a different length");
    for (double v : s.y) {
      if (!std::isfinite(v)) throw InvalidInput("series '" + s.name + "' contains non-finite values");
    }
    out.push_back(standardize(s));
  }
  for (const auto& m : marglik) m.validate();
  return out;
}

std::vector<BlockEvaluator> make_evaluators(const std::vector<SeriesData>& data,
                                            std::span<const MargLikParams> marglik) {
  std::vector<BlockEvaluator> ev;
  ev.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) ev.emplace_back(data[i].y, marglik[i]);
  return ev;
}

Chains make_chains(std::string method, const McmcConfig& cfg, std::size_t L, std::size_t n) {
  Chains ch;
  ch.method = std::move(method);
  ch.n_save = cfg.n_save;
  ch.L = L;
  ch.n = n;
  ch.config = cfg;
  const std::size_t T = n - 1;
  ch.c.resize(cfg.n_save * L * T);
  ch.p.resize(cfg.n_save * L * T);
  ch.loglik.resize(cfg.n_save * L);
  return ch;
}

void save_draw(Chains& ch, const McmcState& st, std::size_t draw) {
  std::copy(st.c.begin(), st.c.end(), ch.c.begin() + static_cast<long>(draw * st.L * st.T));
  std::copy(st.p.begin(), st.p.end(), ch.p.begin() + static_cast<long>(draw * st.L * st.T));
  std::copy(st.loglik.begin(), st.loglik.end(), ch.loglik.begin() + static_cast<long>(draw * st.L));
}

}  // namespace

void McmcConfig::validate() const {
  if (n_save < 1) throw InvalidInput("n_save must be at least 1");
  if (n_thin < 1) throw InvalidInput("n_thin must be at least 1");
  if (!(rw_sd > 0.0) || !std::isfinite(rw_sd)) throw InvalidInput("rw_sd must be positive");
}

McmcState McmcState::initial(std::size_t L, std::size_t n, std::span<const double> p0) {
  if (n < 2) throw InvalidInput("series length must be at least 2");
  if (p0.size() != L) throw InvalidInput("initial probability vector has wrong length");
  McmcState st;
  st.L = L;
  st.T = n - 1;
  st.c.assign(L * st.T, 0);
  st.p.resize(L * st.T);
  st.z.resize(L * st.T);
  for (std::size_t i = 0; i < L; ++i) {
    if (!(p0[i] > 0.0 && p0[i] < 1.0)) throw InvalidInput("initial change probabilities must lie in (0, 1)");
    for (std::size_t j = 0; j < st.T; ++j) st.set_p(i, j, p0[i]);
  }
  st.loglik.assign(L, 0.0);
  st.accepted.assign(L * st.T, 0);
  st.proposed.assign(L * st.T, 0);
  st.last_change_prob.assign(L * st.T, std::numeric_limits<double>::quiet_NaN());
  return st;
}

ChangeIndicators McmcState::indicators(std::size_t i) const {
  return ChangeIndicators(std::vector<std::uint8_t>(c.begin() + static_cast<long>(i * T),
                                                    c.begin() + static_cast<long>((i + 1) * T)),
                          T + 1);
}

void McmcState::set_p(std::size_t i, std::size_t j, double value) {
  p[index(i, j)] = value;
  z[index(i, j)] = logit(value);
}

void McmcState::refresh_loglik(std::span<const BlockEvaluator> series) {
  for (std::size_t i = 0; i < L; ++i) loglik[i] = series[i].log_likelihood(indicators(i));
}

double log_p_target(double p, std::uint8_t c, double quad_form, const TPriorParams& prior) {
  const double nu = prior.nu0();
  const double L = static_cast<double>(prior.dim());
  double v = -std::log(p) - 0.5 * (nu + L) * std::log1p(quad_form / nu);
  if (c) v += logit(p);
  return v;
}

void update_p(McmcState& st, const TPriorParams& prior, double rw_sd, Rng& rng) {
  const std::size_t L = st.L;
  if (prior.dim() != L) throw InvalidInput("prior dimension does not match the number of series");
  const Eigen::MatrixXd& prec = prior.precision();
  const Eigen::VectorXd& mu = prior.mu0();
  std::normal_distribution<double> step(0.0, rw_sd);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> dev(L);

  for (std::size_t i = 0; i < L; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < st.T; ++j) {
      const std::size_t k = st.index(i, j);
      ++st.proposed[k];
      const double p_old = st.p[k];
      const double p_new = p_old + step(rng);
      if (!(p_new > 0.0 && p_new < 1.0)) continue;

      for (std::size_t l = 0; l < L; ++l) dev[l] = st.z[st.index(l, j)] - mu(static_cast<Eigen::Index>(l));
      double q = 0.0;
      double g = 0.0;  // (Sigma0^{-1} dev)_i
      for (std::size_t a = 0; a < L; ++a) {
        double row = 0.0;
        for (std::size_t b = 0; b < L; ++b) row += prec(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * dev[b];
        q += dev[a] * row;
        if (a == i) g = row;
      }
      const double z_new = logit(p_new);
      const double delta = z_new - st.z[k];
      const double q_new = q + 2.0 * delta * g + delta * delta * prec(ii, ii);
      const std::uint8_t c = st.c[k];
      const double log_ratio = log_p_target(p_new, c, q_new, prior) - log_p_target(p_old, c, q, prior);
      if (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio) {
        st.p[k] = p_new;
        st.z[k] = z_new;
        ++st.accepted[k];
      }
    }
  }
}

void update_c(McmcState& st, std::span<const BlockEvaluator> series, Rng& rng) {
  if (series.size() != st.L) throw InvalidInput("series count does not match the sampler state");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t T = st.T;
  const std::size_t n = T + 1;
  std::vector<std::size_t> next_change(T);

  for (std::size_t i = 0; i < st.L; ++i) {
    const BlockEvaluator& ev = series[i];
    std::uint8_t* c = st.c.data() + i * T;
    // next_change[j]: first k > j with c_k = 1 (end of the block right of j),
    // from the values at the start of the sweep; positions > j are still
    // untouched when j is visited.
    std::size_t nxt = T;
    for (std::size_t j = T; j-- > 0;) {
      next_change[j] = nxt;
      if (c[j]) nxt = j;
    }
    std::size_t left = 0;  // first time of the block containing time j
    for (std::size_t j = 0; j < T; ++j) {
      const std::size_t k = st.index(i, j);
      const std::size_t right_end = next_change[j] == T ? n : next_change[j] + 1;
      const double split = ev.log_factor(left, j + 1) + ev.log_factor(j + 1, right_end);
      const double merged = ev.log_factor(left, right_end);
      const double log_odds = split - merged + st.z[k];
      const double prob = logistic(log_odds);
      st.last_change_prob[k] = prob;
      const std::uint8_t c_new = unif(rng) < prob ? 1 : 0;
      if (c_new != c[j]) st.loglik[i] += c_new ? (split - merged) : (merged - split);
      c[j] = c_new;
      if (c_new) left = j + 1;
    }
  }
}

double conditional_change_prob(const BlockEvaluator& series, std::span<const std::uint8_t> c, std::size_t j,
                               double p) {
  const std::size_t T = c.size();
  if (series.size() != T + 1) throw InvalidInput("indicator length does not match series length");
  if (j >= T) throw InvalidInput("indicator position out of range");
  std::size_t left = j;
  while (left > 0 && !c[left - 1]) --left;
  std::size_t right = j + 1;
  while (right < T && !c[right]) ++right;
  const std::size_t right_end = right == T ? T + 1 : right + 1;
  const double split = series.log_factor(left, j + 1) + series.log_factor(j + 1, right_end);
  const double merged = series.log_factor(left, right_end);
  return logistic(split - merged + logit(p));
}

ChangeIndicators Chains::draw_indicators(std::size_t draw, std::size_t i) const {
  const auto off = static_cast<long>(offset(draw, i));
  return ChangeIndicators(std::vector<std::uint8_t>(c.begin() + off, c.begin() + off + static_cast<long>(T())), n);
}

std::optional<double> Chains::acceptance_rate() const {
  std::uint64_t acc = 0, prop = 0;
  for (std::size_t k = 0; k < proposed.size(); ++k) {
    acc += accepted[k];
    prop += proposed[k];
  }
  if (prop == 0) return std::nullopt;
  return static_cast<double>(acc) / static_cast<double>(prop);
}

Chains run_ccp_ppm(std::span<const SeriesData> data, std::span<const MargLikParams> marglik,
                   const TPriorParams& prior, const McmcConfig& cfg) {
  cfg.validate();
  auto prepared = prepare_data(data, marglik);
  const std::size_t L = prepared.size();
  const std::size_t n = prepared.front().size();
  if (prior.dim() != L) throw InvalidInput("prior dimension does not match the number of series");
  const auto evaluators = make_evaluators(prepared, marglik);

  std::vector<double> p0(L);
  for (std::size_t i = 0; i < L; ++i) p0[i] = logistic(prior.mu0()(static_cast<Eigen::Index>(i)));
  McmcState st = McmcState::initial(L, n, p0);
  st.refresh_loglik(evaluators);

  Chains ch = make_chains("ccp_ppm", cfg, L, n);
  Rng rng(cfg.seed);
  std::size_t saved = 0;
  const std::size_t sweeps = cfg.total_sweeps();
  for (std::size_t s = 1; s <= sweeps; ++s) {
    update_p(st, prior, cfg.rw_sd, rng);
    update_c(st, evaluators, rng);
    if (s > cfg.n_burn && (s - cfg.n_burn) % cfg.n_thin == 0) save_draw(ch, st, saved++);
  }
  ch.n_sweeps = sweeps;
  ch.accepted = std::move(st.accepted);
  ch.proposed = std::move(st.proposed);
  ch.data = std::move(prepared);
  ch.marglik.assign(marglik.begin(), marglik.end());
  ch.prior = prior;
  return ch;
}

double sample_beta(double a, double b, Rng& rng) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

Chains run_indep_ppm(std::span<const SeriesData> data, std::span<const MargLikParams> marglik,
                     const BetaPrior& beta, const McmcConfig& cfg) {
  cfg.validate();
  if (!(beta.a > 0.0) || !(beta.b > 0.0)) throw InvalidInput("Beta prior parameters must be positive");
  auto prepared = prepare_data(data, marglik);
  const std::size_t L = prepared.size();
  const std::size_t n = prepared.front().size();
  const auto evaluators = make_evaluators(prepared, marglik);

  std::vector<double> p0(L, beta.a / (beta.a + beta.b));
  McmcState st = McmcState::initial(L, n, p0);
  st.refresh_loglik(evaluators);

  Chains ch = make_chains("indep_ppm", cfg, L, n);
  Rng rng(cfg.seed);
  std::size_t saved = 0;
  const std::size_t sweeps = cfg.total_sweeps();
  const double T = static_cast<double>(n - 1);
  for (std::size_t s = 1; s <= sweeps; ++s) {
    for (std::size_t i = 0; i < L; ++i) {
      double changes = 0.0;
      for (std::size_t j = 0; j < st.T; ++j) changes += st.c[st.index(i, j)];
      double p = sample_beta(beta.a + changes, beta.b + T - changes, rng);
      // Guard the logit against a draw that rounds to the boundary.
      p = std::clamp(p, std::numeric_limits<double>::min(), 1.0 - std::numeric_limits<double>::epsilon());
      for (std::size_t j = 0; j < st.T; ++j) st.set_p(i, j, p);
    }
    update_c(st, evaluators, rng);
    if (s > cfg.n_burn && (s - cfg.n_burn) % cfg.n_thin == 0) save_draw(ch, st, saved++);
  }
  ch.n_sweeps = sweeps;
  ch.accepted = std::move(st.accepted);
  ch.proposed = std::move(st.proposed);
  ch.data = std::move(prepared);
  ch.marglik.assign(marglik.begin(), marglik.end());
  ch.beta = beta;
  return ch;
}

}  // namespace ccppm
