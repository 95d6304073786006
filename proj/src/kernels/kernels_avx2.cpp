#include <immintrin.h>

#include <limits>

#include "ccppm/kernels.hpp"

namespace ccppm::kernels {

const KernelSet& scalar_kernels();

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

Moments block_moments_avx2(std::span<const double> y, double center) {
  const std::size_t n = y.size();
  const double* src = y.data();
  const __m256d c = _mm256_set1_pd(center);
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d q0 = _mm256_setzero_pd(), q1 = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(src + j), c);
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(src + j + 4), c);
    s0 = _mm256_add_pd(s0, d0);
    s1 = _mm256_add_pd(s1, d1);
    q0 = _mm256_add_pd(q0, _mm256_mul_pd(d0, d0));
    q1 = _mm256_add_pd(q1, _mm256_mul_pd(d1, d1));
  }
  for (; j + 4 <= n; j += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(src + j), c);
    s0 = _mm256_add_pd(s0, d0);
    q0 = _mm256_add_pd(q0, _mm256_mul_pd(d0, d0));
  }
  Moments m{hsum(_mm256_add_pd(s0, s1)), hsum(_mm256_add_pd(q0, q1))};
  for (; j < n; ++j) {
    const double d = src[j] - center;
    m.sum += d;
    m.sumsq += d * d;
  }
  return m;
}

void accumulate_u8_avx2(std::span<const std::uint8_t> row, std::span<std::uint32_t> counts) {
  const std::size_t n = row.size();
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m128i bytes = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(row.data() + j));
    const __m256i widened = _mm256_cvtepu8_epi32(bytes);
    auto* dst = reinterpret_cast<__m256i*>(counts.data() + j);
    _mm256_storeu_si256(dst, _mm256_add_epi32(_mm256_loadu_si256(dst), widened));
  }
  for (; j < n; ++j) counts[j] += row[j];
}

ScanMin binder_scan_avx2(std::span<double> w, std::span<const double> r, std::span<const double> prev_cost, double a,
                         double ab) {
  const std::size_t len = w.size();
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vab = _mm256_set1_pd(ab);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d step = _mm256_set1_pd(4.0);
  // Lane k holds index j + k; m = len - j - k.
  __m256d idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  __m256d m = _mm256_sub_pd(_mm256_set1_pd(static_cast<double>(len)), idx);
  __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d best_idx = _mm256_setzero_pd();

  std::size_t j = 0;
  for (; j + 4 <= len; j += 4) {
    const __m256d wv = _mm256_add_pd(_mm256_loadu_pd(w.data() + j), _mm256_loadu_pd(r.data() + j));
    _mm256_storeu_pd(w.data() + j, wv);
    const __m256d pairs = _mm256_mul_pd(_mm256_mul_pd(m, _mm256_sub_pd(m, one)), half);
    const __m256d val =
        _mm256_sub_pd(_mm256_add_pd(_mm256_loadu_pd(prev_cost.data() + j), _mm256_mul_pd(va, pairs)),
                      _mm256_mul_pd(vab, wv));
    // Strict less keeps the earliest index within each lane.
    const __m256d lt = _mm256_cmp_pd(val, best, _CMP_LT_OQ);
    best = _mm256_blendv_pd(best, val, lt);
    best_idx = _mm256_blendv_pd(best_idx, idx, lt);
    idx = _mm256_add_pd(idx, step);
    m = _mm256_sub_pd(m, step);
  }

  alignas(32) double lane_val[4];
  alignas(32) double lane_idx[4];
  _mm256_store_pd(lane_val, best);
  _mm256_store_pd(lane_idx, best_idx);
  ScanMin out{std::numeric_limits<double>::infinity(), 0};
  bool found = false;
  for (int k = 0; k < 4; ++k) {
    const auto i = static_cast<std::size_t>(lane_idx[k]);
    if (lane_val[k] == std::numeric_limits<double>::infinity()) continue;
    if (!found || lane_val[k] < out.value || (lane_val[k] == out.value && i < out.index)) {
      out = {lane_val[k], i};
      found = true;
    }
  }
  for (; j < len; ++j) {
    w[j] = w[j] + r[j];
    const double mm = static_cast<double>(len - j);
    const double pairs = (mm * (mm - 1.0)) * 0.5;
    const double val = (prev_cost[j] + a * pairs) - ab * w[j];
    if (!found || val < out.value) {
      out = {val, j};
      found = true;
    }
  }
  return out;
}

}  // namespace

const KernelSet& avx2_kernel_set() {
  static const KernelSet set{"avx2", &block_moments_avx2, &accumulate_u8_avx2, &binder_scan_avx2};
  return set;
}

}  // namespace ccppm::kernels
