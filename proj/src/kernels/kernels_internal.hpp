#pragma once

#include "geoloc/kernels/kernels.hpp"

namespace geoloc::kernels::detail {

// Defined only in translation units built for the matching target.
#if defined(GEOLOC_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(GEOLOC_HAVE_NEON)
const KernelTable& neon_table();
#endif

}  // namespace geoloc::kernels::detail
