#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference and, where
// the build and CPU allow it, an AVX2 variant; active_kernels() picks one at
// runtime. Setting CCPPM_FORCE_SCALAR=1 in the environment pins the scalar set.

#include <cstddef>
#include <cstdint>
#include <span>

namespace ccppm::kernels {

struct Moments {
  double sum = 0.0;    // sum of (y - center)
  double sumsq = 0.0;  // sum of (y - center)^2
};

struct ScanMin {
  double value = 0.0;
  std::size_t index = 0;  // lowest index attaining the minimum
};

struct KernelSet {
  const char* name;

  // Centered first and second moments of a block. Lane-parallel summation,
  // so results may differ from the scalar order in the last bits.
  Moments (*block_moments)(std::span<const double> y, double center);

  // counts[j] += row[j] for 0/1 bytes. Exact.
  void (*accumulate_u8)(std::span<const std::uint8_t> row, std::span<std::uint32_t> counts);

  // One column of the Binder-loss dynamic program. For j in [0, w.size()):
  //   w[j] += r[j]
  //   m     = w.size() - j
  //   val_j = prev_cost[j] + a * (m * (m - 1) * 0.5) - ab * w[j]
  // and returns the minimum val_j with its lowest index. Elementwise, so all
  // variants agree exactly.
  ScanMin (*binder_scan)(std::span<double> w, std::span<const double> r, std::span<const double> prev_cost, double a,
                         double ab);
};

const KernelSet& scalar_kernels();
// nullptr when the AVX2 variant is not compiled in or the CPU lacks AVX2.
const KernelSet* avx2_kernels();
const KernelSet& active_kernels();

}  // namespace ccppm::kernels
