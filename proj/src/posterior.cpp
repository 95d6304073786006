#include "ccppm/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "ccppm/error.hpp"
#include "ccppm/kernels.hpp"

namespace ccppm {
namespace {

double choose2(double m) { return 0.5 * m * (m - 1.0); }

double ari_from_sums(double index, double sum_a, double sum_b, double n) {
  const double total = choose2(n);
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return index == max_index ? 1.0 : 0.0;
  return (index - expected) / denom;
}

}  // namespace

void LossConfig::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidInput("loss penalties a and b must be positive");
  }
}

ChangeProbReport change_prob_estimates(const Chains& chains) {
  if (chains.n_save == 0) throw InvalidInput("chains contain no saved draws");
  const std::size_t block = chains.L * chains.T();
  std::vector<std::uint32_t> counts(block, 0);
  const auto& k = kernels::active_kernels();
  for (std::size_t d = 0; d < chains.n_save; ++d) {
    k.accumulate_u8(std::span<const std::uint8_t>(chains.c).subspan(d * block, block), counts);
  }
  ChangeProbReport r;
  r.L = chains.L;
  r.T = chains.T();
  r.probs.resize(block);
  const double inv = 1.0 / static_cast<double>(chains.n_save);
  for (std::size_t j = 0; j < block; ++j) r.probs[j] = static_cast<double>(counts[j]) * inv;
  return r;
}

std::vector<ChangeIndicators> classify_threshold(const ChangeProbReport& report, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidInput("threshold must lie in (0, 1)");
  std::vector<ChangeIndicators> out;
  out.reserve(report.L);
  for (std::size_t i = 0; i < report.L; ++i) {
    std::vector<std::uint8_t> c(report.T);
    for (std::size_t j = 0; j < report.T; ++j) c[j] = report.at(i, j) > threshold ? 1 : 0;
    out.emplace_back(std::move(c), report.T + 1);
  }
  return out;
}

PartitionEstimate estimate_partition(std::span<const std::uint8_t> draws, std::size_t n_draws, std::size_t n,
                                     const LossConfig& loss) {
  loss.validate();
  if (n < 2) throw InvalidInput("partition estimation needs n >= 2");
  if (n_draws < 1) throw InvalidInput("partition estimation needs at least one draw");
  const std::size_t T = n - 1;
  if (draws.size() != n_draws * T) throw InvalidInput("draw matrix has the wrong size");

  // Work in counts (loss scaled by N) so that integer penalties stay exact.
  const double N = static_cast<double>(n_draws);
  const double merge_scaled = loss.b * N;
  const double ab = loss.a + loss.b;
  const auto& k = kernels::active_kernels();

  std::vector<std::size_t> start(n_draws, 0);  // block start of time v in each draw
  std::vector<double> hist(n, 0.0);
  std::vector<double> cum(n, 0.0);
  std::vector<double> r(n, 0.0);
  std::vector<double> w;
  w.reserve(n);
  std::vector<double> cost(n + 1, 0.0);
  std::vector<std::size_t> back(n + 1, 0);
  double together_total = 0.0;  // sum_{s<t} count(s, t)

  for (std::size_t v = 0; v < n; ++v) {
    if (v > 0) {
      for (std::size_t d = 0; d < n_draws; ++d) {
        if (draws[d * T + (v - 1)]) start[d] = v;
      }
    }
    std::fill(hist.begin(), hist.begin() + static_cast<long>(v + 1), 0.0);
    for (std::size_t d = 0; d < n_draws; ++d) hist[start[d]] += 1.0;
    // cum[s] = #draws with s and v in one block, s < v.
    double run = 0.0;
    for (std::size_t s = 0; s < v; ++s) {
      run += hist[s];
      cum[s] = run;
    }
    // r[j] = sum_{s=j}^{v-1} cum[s]
    double suffix = 0.0;
    r[v] = 0.0;
    for (std::size_t s = v; s-- > 0;) {
      suffix += cum[s];
      r[s] = suffix;
    }
    together_total += suffix;

    w.push_back(0.0);
    const auto best = k.binder_scan(std::span<double>(w), std::span<const double>(r).first(v + 1),
                                    std::span<const double>(cost).first(v + 1), merge_scaled, ab);
    cost[v + 1] = best.value;
    back[v + 1] = best.index;
  }

  std::vector<std::uint8_t> c(T, 0);
  for (std::size_t end = n; end > 0;) {
    const std::size_t j = back[end];
    if (j > 0) c[j - 1] = 1;
    end = j;
  }
  // Nonnegative by construction; rounding in the scaled sums can leave -1e-15.
  return {ChangeIndicators(std::move(c), n), std::max(0.0, (loss.a * together_total + cost[n]) / N)};
}

PartitionEstimate estimate_partition(const Chains& chains, const LossConfig& loss, std::size_t series) {
  if (series >= chains.L) throw InvalidInput("series index out of range");
  if (chains.n_save < 2) throw InvalidInput("partition estimation needs at least two saved draws");
  const std::size_t T = chains.T();
  std::vector<std::uint8_t> mat(chains.n_save * T);
  for (std::size_t d = 0; d < chains.n_save; ++d) {
    const auto off = static_cast<long>(chains.offset(d, series));
    std::copy(chains.c.begin() + off, chains.c.begin() + off + static_cast<long>(T),
              mat.begin() + static_cast<long>(d * T));
  }
  return estimate_partition(mat, chains.n_save, chains.n, loss);
}

double ari(const ChangeIndicators& x, const ChangeIndicators& y) {
  if (x.n() != y.n()) throw InvalidInput("ARI of partitions with different lengths");
  const std::size_t n = x.n();
  // Contingency cells of two contiguous partitions are the overlaps of their
  // blocks; walk both block lists at once.
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  std::size_t run_x = 1, run_y = 1, run_xy = 1;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const bool cx = x[j], cy = y[j];
    if (cx || cy) {
      index += choose2(static_cast<double>(run_xy));
      run_xy = 0;
    }
    if (cx) {
      sum_a += choose2(static_cast<double>(run_x));
      run_x = 0;
    }
    if (cy) {
      sum_b += choose2(static_cast<double>(run_y));
      run_y = 0;
    }
    ++run_x;
    ++run_y;
    ++run_xy;
  }
  index += choose2(static_cast<double>(run_xy));
  sum_a += choose2(static_cast<double>(run_x));
  sum_b += choose2(static_cast<double>(run_y));
  return ari_from_sums(index, sum_a, sum_b, static_cast<double>(n));
}

double ari_labels(std::span<const int> x, std::span<const int> y) {
  if (x.size() != y.size()) throw InvalidInput("ARI of label vectors with different lengths");
  if (x.size() < 2) throw InvalidInput("ARI needs at least two items");
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows, cols;
  for (std::size_t t = 0; t < x.size(); ++t) {
    cells[{x[t], y[t]}] += 1.0;
    rows[x[t]] += 1.0;
    cols[y[t]] += 1.0;
  }
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, v] : cells) index += choose2(v);
  for (const auto& [key, v] : rows) sum_a += choose2(v);
  for (const auto& [key, v] : cols) sum_b += choose2(v);
  return ari_from_sums(index, sum_a, sum_b, static_cast<double>(x.size()));
}

Confusion confusion_metrics(std::span<const ChangeIndicators> estimate, std::span<const ChangeIndicators> truth) {
  if (estimate.size() != truth.size()) throw InvalidInput("estimate and truth have different series counts");
  Confusion m;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    if (estimate[i].size() != truth[i].size()) throw InvalidInput("estimate and truth have different lengths");
    for (std::size_t j = 0; j < truth[i].size(); ++j) {
      const bool e = estimate[i][j], t = truth[i][j];
      if (e && t) ++m.tp;
      else if (e && !t) ++m.fp;
      else if (!e && t) ++m.fn;
      else ++m.tn;
    }
  }
  const double total = static_cast<double>(m.tp + m.fp + m.tn + m.fn);
  if (total == 0.0) throw InvalidInput("confusion metrics of empty indicator vectors");
  m.misclassification = static_cast<double>(m.fp + m.fn) / total;
  if (m.tp + m.fn > 0) m.sensitivity = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.tn + m.fp > 0) m.specificity = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
  return m;
}

Confusion confusion_metrics(const ChangeIndicators& estimate, const ChangeIndicators& truth) {
  return confusion_metrics(std::span<const ChangeIndicators>(&estimate, 1), std::span<const ChangeIndicators>(&truth, 1));
}

PairwiseAri pairwise_ari_trace(const Chains& chains) {
  const std::size_t L = chains.L;
  if (L < 2) throw InvalidInput("pairwise ARI needs at least two series");
  if (chains.n_save == 0) throw InvalidInput("chains contain no saved draws");
  PairwiseAri out;
  const auto Li = static_cast<Eigen::Index>(L);
  out.mean = Eigen::MatrixXd::Zero(Li, Li);
  out.pairs_per_draw = L * (L - 1) / 2;
  out.per_draw_mean.resize(chains.n_save);
  std::vector<ChangeIndicators> rows(L);
  for (std::size_t d = 0; d < chains.n_save; ++d) {
    for (std::size_t i = 0; i < L; ++i) rows[i] = chains.draw_indicators(d, i);
    double acc = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t s = i + 1; s < L; ++s) {
        const double v = ari(rows[i], rows[s]);
        out.mean(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) += v;
        acc += v;
      }
    }
    out.per_draw_mean[d] = acc / static_cast<double>(out.pairs_per_draw);
  }
  const double inv = 1.0 / static_cast<double>(chains.n_save);
  for (Eigen::Index i = 0; i < Li; ++i) {
    out.mean(i, i) = 1.0;
    for (Eigen::Index s = i + 1; s < Li; ++s) {
      out.mean(i, s) *= inv;
      out.mean(s, i) = out.mean(i, s);
    }
  }
  double g = 0.0;
  for (double v : out.per_draw_mean) g += v;
  out.grand_mean = g * inv;
  return out;
}

}  // namespace ccppm
