#pragma once

#include "gdepth/kernels.hpp"

// Per-backend entry points wired into the dispatch table in kernels.cpp.
namespace gdepth::kernels::detail {

struct KernelTable {
    void (*axpby)(double, const double*, double, const double*, double*, size_t);
    void (*affine)(double, const double*, double, double*, size_t);
    void (*mul)(const double*, const double*, double*, size_t);
    void (*clamp)(const double*, double, double, double*, size_t);
    double (*sum)(const double*, size_t);
    double (*dot)(const double*, const double*, size_t);
    double (*sq_diff_sum)(const double*, const double*, size_t);
    MaskedSum (*masked_abs_diff_sum)(const double*, const double*, const uint8_t*, size_t);
    FitMoments (*masked_fit_moments)(const double*, const double*, const uint8_t*, size_t);
};

const KernelTable& scalar_table();
#ifdef GDEPTH_HAVE_AVX2
const KernelTable& avx2_table();
#endif

}  // namespace gdepth::kernels::detail
