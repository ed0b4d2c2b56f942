#include <atomic>
#include <cstdlib>
#include <string>

#include "gdepth/errors.hpp"
#include "kernels_internal.hpp"

namespace gdepth::kernels {
namespace {

using detail::KernelTable;

bool cpu_has_avx2() {
#if defined(GDEPTH_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Backend detect_backend() {
    if (const char* env = std::getenv("GDEPTH_KERNELS")) {
        const std::string requested(env);
        if (requested == "scalar") return Backend::Scalar;
        if (requested == "avx2" && backend_supported(Backend::Avx2)) return Backend::Avx2;
        // Unknown or unsupported request: fall through to detection rather
        // than failing startup over an env var.
    }
    return backend_supported(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend> g_backend{detect_backend()};

const KernelTable& table_for(Backend b) {
#ifdef GDEPTH_HAVE_AVX2
    if (b == Backend::Avx2) return detail::avx2_table();
#endif
    (void)b;
    return detail::scalar_table();
}

const KernelTable& active_table() { return table_for(g_backend.load(std::memory_order_relaxed)); }

}  // namespace

bool backend_supported(Backend b) {
    switch (b) {
        case Backend::Scalar: return true;
        case Backend::Avx2: return cpu_has_avx2();
    }
    return false;
}

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (!backend_supported(b))
        throw InvalidArgumentError(std::string("kernel backend not supported on this host: ") + backend_name(b));
    g_backend.store(b, std::memory_order_relaxed);
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
    }
    return "unknown";
}

void axpby(double a, const double* x, double b, const double* y, double* out, size_t n) {
    active_table().axpby(a, x, b, y, out, n);
}

void affine(double a, const double* x, double b, double* out, size_t n) {
    active_table().affine(a, x, b, out, n);
}

void mul(const double* x, const double* y, double* out, size_t n) { active_table().mul(x, y, out, n); }

void clamp(const double* x, double lo, double hi, double* out, size_t n) {
    active_table().clamp(x, lo, hi, out, n);
}

double sum(const double* x, size_t n) { return active_table().sum(x, n); }

double dot(const double* x, const double* y, size_t n) { return active_table().dot(x, y, n); }

double sq_diff_sum(const double* x, const double* y, size_t n) {
    return active_table().sq_diff_sum(x, y, n);
}

MaskedSum masked_abs_diff_sum(const double* a, const double* b, const uint8_t* mask, size_t n) {
    return active_table().masked_abs_diff_sum(a, b, mask, n);
}

FitMoments masked_fit_moments(const double* pred, const double* gt, const uint8_t* mask, size_t n) {
    return active_table().masked_fit_moments(pred, gt, mask, n);
}

}  // namespace gdepth::kernels
