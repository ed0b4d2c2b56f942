// Reference backend. Deliberately plain loops: this is the semantics every
// other backend is tested against, so keep it obvious.

#include <algorithm>
#include <cmath>

#include "kernels_internal.hpp"

namespace gdepth::kernels::detail {
namespace {

void axpby_scalar(double a, const double* x, double b, const double* y, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void affine_scalar(double a, const double* x, double b, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a * x[i] + b;
}

void mul_scalar(const double* x, const double* y, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void clamp_scalar(const double* x, double lo, double hi, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = std::min(std::max(x[i], lo), hi);
}

double sum_scalar(const double* x, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double dot_scalar(const double* x, const double* y, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sq_diff_sum_scalar(const double* x, const double* y, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

MaskedSum masked_abs_diff_sum_scalar(const double* a, const double* b, const uint8_t* mask, size_t n) {
    MaskedSum r;
    for (size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        r.sum += std::fabs(a[i] - b[i]);
        ++r.count;
    }
    return r;
}

FitMoments masked_fit_moments_scalar(const double* pred, const double* gt, const uint8_t* mask, size_t n) {
    FitMoments m;
    for (size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        m.sum_p += pred[i];
        m.sum_g += gt[i];
        m.sum_pp += pred[i] * pred[i];
        m.sum_pg += pred[i] * gt[i];
        ++m.count;
    }
    return m;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table = {
        axpby_scalar,    affine_scalar,      mul_scalar,
        clamp_scalar,    sum_scalar,         dot_scalar,
        sq_diff_sum_scalar, masked_abs_diff_sum_scalar, masked_fit_moments_scalar,
    };
    return table;
}

}  // namespace gdepth::kernels::detail
