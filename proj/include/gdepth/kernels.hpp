#pragma once

#include <cstddef>
#include <cstdint>

namespace gdepth::kernels {

// Flat-array arithmetic kernels behind every hot loop in the library.
// Each kernel has a scalar reference implementation and (on x86-64) an AVX2
// variant; the active backend is picked once at startup from CPUID and can be
// forced with the GDEPTH_KERNELS environment variable ("scalar" / "avx2") or
// set_backend(), which the equivalence tests use to compare backends.
//
// Contract relied on by the determinism tests: elementwise kernels (axpby,
// affine, mul, clamp) perform the exact same per-element operation sequence
// in every backend, so their results are bit-identical across backends.
// Reduction kernels (sum, dot, sq_diff_sum, masked_*) reassociate the
// accumulation and only agree to rounding; both backends are individually
// deterministic run-to-run.

enum class Backend { Scalar, Avx2 };

Backend active_backend();
void set_backend(Backend b);       // throws if the backend is unsupported here
bool backend_supported(Backend b);
const char* backend_name(Backend b);

struct MaskedSum {
    double sum = 0.0;
    size_t count = 0;
};

// Moments of (pred, gt) over masked entries, for least-squares affine fits.
struct FitMoments {
    double sum_p = 0.0;
    double sum_g = 0.0;
    double sum_pp = 0.0;
    double sum_pg = 0.0;
    size_t count = 0;
};

// out[i] = a*x[i] + b*y[i]
void axpby(double a, const double* x, double b, const double* y, double* out, size_t n);
// out[i] = a*x[i] + b
void affine(double a, const double* x, double b, double* out, size_t n);
// out[i] = x[i]*y[i]
void mul(const double* x, const double* y, double* out, size_t n);
// out[i] = min(max(x[i], lo), hi)
void clamp(const double* x, double lo, double hi, double* out, size_t n);

double sum(const double* x, size_t n);
double dot(const double* x, const double* y, size_t n);
// sum_i (x[i]-y[i])^2
double sq_diff_sum(const double* x, const double* y, size_t n);
// sum/count of |a[i]-b[i]| where mask[i] != 0
MaskedSum masked_abs_diff_sum(const double* a, const double* b, const uint8_t* mask, size_t n);
FitMoments masked_fit_moments(const double* pred, const double* gt, const uint8_t* mask, size_t n);

}  // namespace gdepth::kernels
