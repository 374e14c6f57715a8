// AArch64 only. NEON is baseline there, so no runtime probe is needed.
#include <arm_neon.h>

#include "kernels_internal.hpp"

namespace geoloc::kernels::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void gram_neon(const double* a, std::size_t rows, const double* b,
               std::size_t cols, std::size_t dim, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = dot_neon(a + i * dim, b + j * dim, dim);
    }
  }
}

MinMax min_max_neon(const double* x, std::size_t n) {
  MinMax r{x[0], x[0]};
  std::size_t i = 0;
  if (n >= 2) {
    float64x2_t vmin = vld1q_f64(x);
    float64x2_t vmax = vmin;
    for (i = 2; i + 2 <= n; i += 2) {
      float64x2_t v = vld1q_f64(x + i);
      vmin = vminq_f64(vmin, v);
      vmax = vmaxq_f64(vmax, v);
    }
    r.min = vminvq_f64(vmin);
    r.max = vmaxvq_f64(vmax);
  }
  for (; i < n; ++i) {
    if (x[i] < r.min) r.min = x[i];
    if (x[i] > r.max) r.max = x[i];
  }
  return r;
}

void affine_neon(const double* x, std::size_t n, double lo, double range,
                 double* out) {
  const float64x2_t vlo = vdupq_n_f64(lo);
  const float64x2_t vscale = vdupq_n_f64(range);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vdivq_f64(vsubq_f64(vld1q_f64(x + i), vlo), vscale));
  }
  for (; i < n; ++i) out[i] = (x[i] - lo) / range;
}

void threshold_zero_neon(const double* x, std::size_t n, double tau,
                         double* out) {
  const float64x2_t vtau = vdupq_n_f64(tau);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(x + i);
    uint64x2_t keep = vcgeq_f64(v, vtau);
    vst1q_f64(out + i, vreinterpretq_f64_u64(
                           vandq_u64(vreinterpretq_u64_f64(v), keep)));
  }
  for (; i < n; ++i) out[i] = x[i] >= tau ? x[i] : 0.0;
}

void column_sums_neon(const double* m, std::size_t rows, std::size_t cols,
                      double* out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) {
      vst1q_f64(out + j, vaddq_f64(vld1q_f64(out + j), vld1q_f64(row + j)));
    }
    for (; j < cols; ++j) out[j] += row[j];
  }
}

void row_dots_neon(const double* profiles, std::size_t count, std::size_t n,
                   const double* weights, double* out) {
  for (std::size_t r = 0; r < count; ++r) {
    out[r] = dot_neon(profiles + r * n, weights, n);
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{
      Isa::kNeon,     dot_neon,          gram_neon,
      min_max_neon,   affine_neon,       threshold_zero_neon,
      column_sums_neon, row_dots_neon,
  };
  return table;
}

}  // namespace geoloc::kernels::detail
