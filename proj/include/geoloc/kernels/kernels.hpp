#pragma once

// Data-parallel inner loops behind the locatability pipeline.
//
// Every kernel has a scalar reference implementation. SIMD variants are
// selected once per process from the CPU feature set; the choice can be
// pinned with the GEOLOC_ISA environment variable (scalar|avx2|neon) or
// set_active_isa(). All matrices are dense row-major doubles.

#include <cstddef>
#include <string_view>

namespace geoloc::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

struct MinMax {
  double min;
  double max;
};

struct KernelTable {
  Isa isa;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // out[i*cols + j] = dot(a row i, b row j); a is rows x dim, b is cols x dim.
  void (*gram)(const double* a, std::size_t rows, const double* b,
               std::size_t cols, std::size_t dim, double* out);

  // Requires n >= 1.
  MinMax (*min_max)(const double* x, std::size_t n);

  // out[i] = (x[i] - lo) / range. Division keeps (max - lo) / range == 1 exact.
  void (*affine)(const double* x, std::size_t n, double lo, double range,
                 double* out);

  // out[i] = x[i] >= tau ? x[i] : 0
  void (*threshold_zero)(const double* x, std::size_t n, double tau,
                         double* out);

  // out[j] = sum_i m[i*cols + j], accumulated in row order.
  void (*column_sums)(const double* m, std::size_t rows, std::size_t cols,
                      double* out);

  // out[r] = dot(profiles row r, weights); profiles is count x n.
  void (*row_dots)(const double* profiles, std::size_t count, std::size_t n,
                   const double* weights, double* out);
};

const KernelTable& scalar_table();

/// Null when the ISA was not compiled in or the CPU lacks it.
const KernelTable* table_for(Isa isa);

/// Best available table, honoring GEOLOC_ISA on first use.
const KernelTable& active();

/// Pins the active table. Returns false when `isa` is unavailable.
bool set_active_isa(Isa isa);

}  // namespace geoloc::kernels
