#include <atomic>
#include <cstdlib>
#include <string>

#include "geoloc/kernels/kernels.hpp"
#include "kernels_internal.hpp"

namespace geoloc::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(GEOLOC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* best_available() {
  if (const KernelTable* t = table_for(Isa::kAvx2)) return t;
  if (const KernelTable* t = table_for(Isa::kNeon)) return t;
  return &scalar_table();
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("GEOLOC_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2") {
      if (const KernelTable* t = table_for(Isa::kAvx2)) return t;
    }
    if (want == "neon") {
      if (const KernelTable* t = table_for(Isa::kNeon)) return t;
    }
  }
  return best_available();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &scalar_table();
    case Isa::kAvx2:
#if defined(GEOLOC_HAVE_AVX2)
      if (cpu_has_avx2()) return &detail::avx2_table();
#endif
      return nullptr;
    case Isa::kNeon:
#if defined(GEOLOC_HAVE_NEON)
      return &detail::neon_table();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool set_active_isa(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) return false;
  current().store(t, std::memory_order_release);
  return true;
}

}  // namespace geoloc::kernels
