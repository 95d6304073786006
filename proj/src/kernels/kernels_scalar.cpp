#include "ccppm/kernels.hpp"

namespace ccppm::kernels {
namespace {

Moments block_moments_scalar(std::span<const double> y, double center) {
  Moments m;
  for (double v : y) {
    const double d = v - center;
    m.sum += d;
    m.sumsq += d * d;
  }
  return m;
}

void accumulate_u8_scalar(std::span<const std::uint8_t> row, std::span<std::uint32_t> counts) {
  for (std::size_t j = 0; j < row.size(); ++j) counts[j] += row[j];
}

ScanMin binder_scan_scalar(std::span<double> w, std::span<const double> r, std::span<const double> prev_cost, double a,
                           double ab) {
  const std::size_t len = w.size();
  ScanMin best{0.0, 0};
  for (std::size_t j = 0; j < len; ++j) {
    w[j] = w[j] + r[j];
    const double m = static_cast<double>(len - j);
    const double pairs = (m * (m - 1.0)) * 0.5;
    const double val = (prev_cost[j] + a * pairs) - ab * w[j];
    if (j == 0 || val < best.value) best = {val, j};
  }
  return best;
}

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet set{"scalar", &block_moments_scalar, &accumulate_u8_scalar, &binder_scan_scalar};
  return set;
}

}  // namespace ccppm::kernels
