// Built with -mavx2 -mfma. Only reached after a runtime CPU check.
#include <immintrin.h>

#include "kernels_internal.hpp"

namespace geoloc::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void gram_avx2(const double* a, std::size_t rows, const double* b,
               std::size_t cols, std::size_t dim, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = dot_avx2(a + i * dim, b + j * dim, dim);
    }
  }
}

MinMax min_max_avx2(const double* x, std::size_t n) {
  if (n < 4) {
    MinMax r{x[0], x[0]};
    for (std::size_t i = 1; i < n; ++i) {
      if (x[i] < r.min) r.min = x[i];
      if (x[i] > r.max) r.max = x[i];
    }
    return r;
  }
  __m256d vmin = _mm256_loadu_pd(x);
  __m256d vmax = vmin;
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    vmin = _mm256_min_pd(vmin, v);
    vmax = _mm256_max_pd(vmax, v);
  }
  alignas(32) double lo[4];
  alignas(32) double hi[4];
  _mm256_store_pd(lo, vmin);
  _mm256_store_pd(hi, vmax);
  MinMax r{lo[0], hi[0]};
  for (int k = 1; k < 4; ++k) {
    if (lo[k] < r.min) r.min = lo[k];
    if (hi[k] > r.max) r.max = hi[k];
  }
  for (; i < n; ++i) {
    if (x[i] < r.min) r.min = x[i];
    if (x[i] > r.max) r.max = x[i];
  }
  return r;
}

void affine_avx2(const double* x, std::size_t n, double lo, double range,
                 double* out) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vscale = _mm256_set1_pd(range);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_sub_pd(_mm256_loadu_pd(x + i), vlo);
    _mm256_storeu_pd(out + i, _mm256_div_pd(v, vscale));
  }
  for (; i < n; ++i) out[i] = (x[i] - lo) / range;
}

void threshold_zero_avx2(const double* x, std::size_t n, double tau,
                         double* out) {
  const __m256d vtau = _mm256_set1_pd(tau);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d keep = _mm256_cmp_pd(v, vtau, _CMP_GE_OQ);
    _mm256_storeu_pd(out + i, _mm256_and_pd(v, keep));
  }
  for (; i < n; ++i) out[i] = x[i] >= tau ? x[i] : 0.0;
}

void column_sums_avx2(const double* m, std::size_t rows, std::size_t cols,
                      double* out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      __m256d acc = _mm256_loadu_pd(out + j);
      _mm256_storeu_pd(out + j, _mm256_add_pd(acc, _mm256_loadu_pd(row + j)));
    }
    for (; j < cols; ++j) out[j] += row[j];
  }
}

void row_dots_avx2(const double* profiles, std::size_t count, std::size_t n,
                   const double* weights, double* out) {
  for (std::size_t r = 0; r < count; ++r) {
    out[r] = dot_avx2(profiles + r * n, weights, n);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      Isa::kAvx2,     dot_avx2,          gram_avx2,
      min_max_avx2,   affine_avx2,       threshold_zero_avx2,
      column_sums_avx2, row_dots_avx2,
  };
  return table;
}

}  // namespace geoloc::kernels::detail
