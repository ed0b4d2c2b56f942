// AVX2 backend (4 doubles per vector). Elementwise kernels use the same
// mul/add sequence per element as the scalar backend and no FMA, so they are
// bit-identical to it; reductions keep 4 independent lane accumulators and a
// sequential tail, which reassociates the sum relative to scalar.

#ifdef GDEPTH_HAVE_AVX2

#include <immintrin.h>

#include <bit>
#include <cmath>
#include <cstring>

#include "kernels_internal.hpp"

namespace gdepth::kernels::detail {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

// 4 mask bytes -> all-ones/all-zeros double lanes.
inline __m256d mask_lanes(const uint8_t* mask) {
    uint32_t packed;
    std::memcpy(&packed, mask, sizeof packed);
    __m128i bytes = _mm_cvtsi32_si128(static_cast<int>(packed));
    __m256i lanes = _mm256_cvtepu8_epi64(bytes);
    __m256i zero = _mm256_setzero_si256();
    __m256i ones = _mm256_cmpeq_epi64(zero, zero);
    __m256i nonzero = _mm256_andnot_si256(_mm256_cmpeq_epi64(lanes, zero), ones);
    return _mm256_castsi256_pd(nonzero);
}

inline __m256d abs_pd(__m256d v) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    return _mm256_andnot_pd(sign, v);
}

void axpby_avx2(double a, const double* x, double b, const double* y, double* out, size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const size_t main = n / 4 * 4;
    for (size_t i = 0; i < main; i += 4) {
        __m256d vx = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        __m256d vy = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(vx, vy));
    }
    for (size_t i = main; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void affine_avx2(double a, const double* x, double b, double* out, size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const size_t main = n / 4 * 4;
    for (size_t i = 0; i < main; i += 4) {
        __m256d vx = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(vx, vb));
    }
    for (size_t i = main; i < n; ++i) out[i] = a * x[i] + b;
}

void mul_avx2(const double* x, const double* y, double* out, size_t n) {
    const size_t main = n / 4 * 4;
    for (size_t i = 0; i < main; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (size_t i = main; i < n; ++i) out[i] = x[i] * y[i];
}

void clamp_avx2(const double* x, double lo, double hi, double* out, size_t n) {
    const __m256d vlo = _mm256_set1_pd(lo);
    const __m256d vhi = _mm256_set1_pd(hi);
    const size_t main = n / 4 * 4;
    for (size_t i = 0; i < main; i += 4) {
        __m256d v = _mm256_max_pd(_mm256_loadu_pd(x + i), vlo);
        _mm256_storeu_pd(out + i, _mm256_min_pd(v, vhi));
    }
    for (size_t i = main; i < n; ++i) out[i] = std::min(std::max(x[i], lo), hi);
}

double sum_avx2(const double* x, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const size_t main = n / 4 * 4;
    for (size_t i = 0; i < main; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double r = hsum(acc);
    for (size_t i = main; i < n; ++i) r += x[i];
    return r;
}

double dot_avx2(const double* x, const double* y, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const size_t main = n / 4 * 4;
    for (size_t i = 0; i < main; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    double r = hsum(acc);
    for (size_t i = main; i < n; ++i) r += x[i] * y[i];
    return r;
}

double sq_diff_sum_avx2(const double* x, const double* y, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const size_t main = n / 4 * 4;
    for (size_t i = 0; i < main; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double r = hsum(acc);
    for (size_t i = main; i < n; ++i) {
        const double d = x[i] - y[i];
        r += d * d;
    }
    return r;
}

MaskedSum masked_abs_diff_sum_avx2(const double* a, const double* b, const uint8_t* mask, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t count = 0;
    const size_t main = n / 4 * 4;
    for (size_t i = 0; i < main; i += 4) {
        __m256d lanes = mask_lanes(mask + i);
        __m256d d = abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        acc = _mm256_add_pd(acc, _mm256_and_pd(d, lanes));
        count += std::popcount(static_cast<unsigned>(_mm256_movemask_pd(lanes)));
    }
    MaskedSum r;
    r.sum = hsum(acc);
    r.count = count;
    for (size_t i = main; i < n; ++i) {
        if (!mask[i]) continue;
        r.sum += std::fabs(a[i] - b[i]);
        ++r.count;
    }
    return r;
}

FitMoments masked_fit_moments_avx2(const double* pred, const double* gt, const uint8_t* mask, size_t n) {
    __m256d sp = _mm256_setzero_pd();
    __m256d sg = _mm256_setzero_pd();
    __m256d spp = _mm256_setzero_pd();
    __m256d spg = _mm256_setzero_pd();
    size_t count = 0;
    const size_t main = n / 4 * 4;
    for (size_t i = 0; i < main; i += 4) {
        __m256d lanes = mask_lanes(mask + i);
        __m256d p = _mm256_and_pd(_mm256_loadu_pd(pred + i), lanes);
        __m256d g = _mm256_and_pd(_mm256_loadu_pd(gt + i), lanes);
        sp = _mm256_add_pd(sp, p);
        sg = _mm256_add_pd(sg, g);
        spp = _mm256_add_pd(spp, _mm256_mul_pd(p, p));
        spg = _mm256_add_pd(spg, _mm256_mul_pd(p, g));
        count += std::popcount(static_cast<unsigned>(_mm256_movemask_pd(lanes)));
    }
    FitMoments m;
    m.sum_p = hsum(sp);
    m.sum_g = hsum(sg);
    m.sum_pp = hsum(spp);
    m.sum_pg = hsum(spg);
    m.count = count;
    for (size_t i = main; i < n; ++i) {
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

const KernelTable& avx2_table() {
    static const KernelTable table = {
        axpby_avx2,    affine_avx2,      mul_avx2,
        clamp_avx2,    sum_avx2,         dot_avx2,
        sq_diff_sum_avx2, masked_abs_diff_sum_avx2, masked_fit_moments_avx2,
    };
    return table;
}

}  // namespace gdepth::kernels::detail

#endif  // GDEPTH_HAVE_AVX2
