#include "geoloc/kernels/kernels.hpp"

#include "kernels_internal.hpp"

namespace geoloc::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void gram_scalar(const double* a, std::size_t rows, const double* b,
                 std::size_t cols, std::size_t dim, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = dot_scalar(a + i * dim, b + j * dim, dim);
    }
  }
}

MinMax min_max_scalar(const double* x, std::size_t n) {
  MinMax r{x[0], x[0]};
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] < r.min) r.min = x[i];
    if (x[i] > r.max) r.max = x[i];
  }
  return r;
}

void affine_scalar(const double* x, std::size_t n, double lo,
                   double range, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - lo) / range;
}

void threshold_zero_scalar(const double* x, std::size_t n, double tau,
                           double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] >= tau ? x[i] : 0.0;
}

void column_sums_scalar(const double* m, std::size_t rows, std::size_t cols,
                        double* out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += row[j];
  }
}

void row_dots_scalar(const double* profiles, std::size_t count, std::size_t n,
                     const double* weights, double* out) {
  for (std::size_t r = 0; r < count; ++r) {
    out[r] = dot_scalar(profiles + r * n, weights, n);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::kScalar,     dot_scalar,         gram_scalar,
      min_max_scalar,   affine_scalar,      threshold_zero_scalar,
      column_sums_scalar, row_dots_scalar,
  };
  return table;
}

}  // namespace geoloc::kernels
