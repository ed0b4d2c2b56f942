#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "gdepth/errors.hpp"
#include "gdepth/kernels.hpp"

namespace {

using namespace gdepth;

// Deterministic ugly-valued buffers: mixed signs, magnitudes spread over
// several decades, exact zeros sprinkled in.
std::vector<double> test_buffer(size_t n, uint32_t salt) {
    std::mt19937 rng(1234u + salt);
    std::uniform_real_distribution<double> mag(-6.0, 3.0);
    std::uniform_real_distribution<double> sign(-1.0, 1.0);
    std::vector<double> v(n);
    for (size_t i = 0; i < n; ++i) {
        if (i % 17 == 5) {
            v[i] = 0.0;
            continue;
        }
        const double s = sign(rng) < 0.0 ? -1.0 : 1.0;
        v[i] = s * std::pow(10.0, mag(rng));
    }
    return v;
}

std::vector<uint8_t> test_mask(size_t n, uint32_t salt) {
    std::mt19937 rng(99u + salt);
    std::vector<uint8_t> m(n);
    for (size_t i = 0; i < n; ++i) m[i] = (rng() % 3 != 0) ? 1 : 0;
    return m;
}

// Runs `body` once per supported backend, switching and restoring.
template <typename F>
void for_each_backend(F&& body) {
    const kernels::Backend original = kernels::active_backend();
    for (kernels::Backend b : {kernels::Backend::Scalar, kernels::Backend::Avx2}) {
        if (!kernels::backend_supported(b)) continue;
        kernels::set_backend(b);
        body(b);
    }
    kernels::set_backend(original);
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Sizes straddling the SIMD width boundaries: below one vector, exact
// multiples, and stragglers.
const size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 16, 31, 32, 33, 100, 1023};

}  // namespace

TEST_CASE("elementwise kernels are bitwise identical across backends") {
    if (!kernels::backend_supported(kernels::Backend::Avx2)) return;  // single-backend machine
    const kernels::Backend original = kernels::active_backend();

    for (size_t n : kSizes) {
        const std::vector<double> x = test_buffer(n, 1);
        const std::vector<double> y = test_buffer(n, 2);

        std::vector<double> axpby_ref(n), affine_ref(n), mul_ref(n), clamp_ref(n);
        kernels::set_backend(kernels::Backend::Scalar);
        kernels::axpby(1.7, x.data(), -0.3, y.data(), axpby_ref.data(), n);
        kernels::affine(-2.5, x.data(), 0.125, affine_ref.data(), n);
        kernels::mul(x.data(), y.data(), mul_ref.data(), n);
        kernels::clamp(x.data(), -1.0, 1.0, clamp_ref.data(), n);

        std::vector<double> axpby_v(n), affine_v(n), mul_v(n), clamp_v(n);
        kernels::set_backend(kernels::Backend::Avx2);
        kernels::axpby(1.7, x.data(), -0.3, y.data(), axpby_v.data(), n);
        kernels::affine(-2.5, x.data(), 0.125, affine_v.data(), n);
        kernels::mul(x.data(), y.data(), mul_v.data(), n);
        kernels::clamp(x.data(), -1.0, 1.0, clamp_v.data(), n);

        CHECK(bitwise_equal(axpby_ref, axpby_v));
        CHECK(bitwise_equal(affine_ref, affine_v));
        CHECK(bitwise_equal(mul_ref, mul_v));
        CHECK(bitwise_equal(clamp_ref, clamp_v));
    }
    kernels::set_backend(original);
}

TEST_CASE("reduction kernels agree across backends to 1e-13 relative") {
    if (!kernels::backend_supported(kernels::Backend::Avx2)) return;
    const kernels::Backend original = kernels::active_backend();

    for (size_t n : kSizes) {
        const std::vector<double> x = test_buffer(n, 3);
        const std::vector<double> y = test_buffer(n, 4);
        const std::vector<uint8_t> m = test_mask(n, 5);

        kernels::set_backend(kernels::Backend::Scalar);
        const double sum_s = kernels::sum(x.data(), n);
        const double dot_s = kernels::dot(x.data(), y.data(), n);
        const double sq_s = kernels::sq_diff_sum(x.data(), y.data(), n);
        const kernels::MaskedSum mad_s = kernels::masked_abs_diff_sum(x.data(), y.data(), m.data(), n);
        const kernels::FitMoments fm_s = kernels::masked_fit_moments(x.data(), y.data(), m.data(), n);

        kernels::set_backend(kernels::Backend::Avx2);
        const double sum_v = kernels::sum(x.data(), n);
        const double dot_v = kernels::dot(x.data(), y.data(), n);
        const double sq_v = kernels::sq_diff_sum(x.data(), y.data(), n);
        const kernels::MaskedSum mad_v = kernels::masked_abs_diff_sum(x.data(), y.data(), m.data(), n);
        const kernels::FitMoments fm_v = kernels::masked_fit_moments(x.data(), y.data(), m.data(), n);

        auto close = [](double a, double b) {
            const double scale = std::max({std::fabs(a), std::fabs(b), 1.0});
            return std::fabs(a - b) <= 1e-13 * scale;
        };
        CHECK(close(sum_s, sum_v));
        CHECK(close(dot_s, dot_v));
        CHECK(close(sq_s, sq_v));
        CHECK(close(mad_s.sum, mad_v.sum));
        CHECK(mad_s.count == mad_v.count);
        CHECK(close(fm_s.sum_p, fm_v.sum_p));
        CHECK(close(fm_s.sum_g, fm_v.sum_g));
        CHECK(close(fm_s.sum_pp, fm_v.sum_pp));
        CHECK(close(fm_s.sum_pg, fm_v.sum_pg));
        CHECK(fm_s.count == fm_v.count);
    }
    kernels::set_backend(original);
}

TEST_CASE("kernels compute the documented formulas") {
    for_each_backend([](kernels::Backend) {
        const std::vector<double> x = {1.0, -2.0, 0.5, 4.0};
        const std::vector<double> y = {2.0, 1.0, -1.0, 0.25};
        const size_t n = x.size();

        std::vector<double> out(n);
        kernels::axpby(2.0, x.data(), 3.0, y.data(), out.data(), n);
        CHECK(out[0] == doctest::Approx(8.0));
        CHECK(out[1] == doctest::Approx(-1.0));
        CHECK(out[2] == doctest::Approx(-2.0));
        CHECK(out[3] == doctest::Approx(8.75));

        kernels::affine(0.5, x.data(), 1.0, out.data(), n);
        CHECK(out[0] == doctest::Approx(1.5));
        CHECK(out[1] == doctest::Approx(0.0));

        kernels::mul(x.data(), y.data(), out.data(), n);
        CHECK(out[0] == doctest::Approx(2.0));
        CHECK(out[3] == doctest::Approx(1.0));

        kernels::clamp(x.data(), -1.0, 1.0, out.data(), n);
        CHECK(out[0] == 1.0);
        CHECK(out[1] == -1.0);
        CHECK(out[2] == 0.5);
        CHECK(out[3] == 1.0);

        CHECK(kernels::sum(x.data(), n) == doctest::Approx(3.5));
        CHECK(kernels::dot(x.data(), y.data(), n) == doctest::Approx(2.0 - 2.0 - 0.5 + 1.0));
        CHECK(kernels::sq_diff_sum(x.data(), y.data(), n) ==
              doctest::Approx(1.0 + 9.0 + 2.25 + 14.0625));

        const std::vector<uint8_t> mask = {1, 0, 1, 0};
        const kernels::MaskedSum ms = kernels::masked_abs_diff_sum(x.data(), y.data(), mask.data(), n);
        CHECK(ms.count == 2);
        CHECK(ms.sum == doctest::Approx(1.0 + 1.5));

        const kernels::FitMoments fm = kernels::masked_fit_moments(x.data(), y.data(), mask.data(), n);
        CHECK(fm.count == 2);
        CHECK(fm.sum_p == doctest::Approx(1.5));
        CHECK(fm.sum_g == doctest::Approx(1.0));
        CHECK(fm.sum_pp == doctest::Approx(1.25));
        CHECK(fm.sum_pg == doctest::Approx(1.5));
    });
}

TEST_CASE("elementwise kernels accept out aliasing an input") {
    for_each_backend([](kernels::Backend) {
        for (size_t n : {size_t{5}, size_t{32}, size_t{100}}) {
            std::vector<double> x = test_buffer(n, 7);
            const std::vector<double> y = test_buffer(n, 8);

            std::vector<double> expect(n);
            kernels::axpby(1.5, x.data(), -2.0, y.data(), expect.data(), n);
            std::vector<double> inplace = x;
            kernels::axpby(1.5, inplace.data(), -2.0, y.data(), inplace.data(), n);
            CHECK(bitwise_equal(expect, inplace));

            kernels::affine(3.0, x.data(), -1.0, expect.data(), n);
            inplace = x;
            kernels::affine(3.0, inplace.data(), -1.0, inplace.data(), n);
            CHECK(bitwise_equal(expect, inplace));

            kernels::clamp(x.data(), -0.5, 0.5, expect.data(), n);
            inplace = x;
            kernels::clamp(inplace.data(), -0.5, 0.5, inplace.data(), n);
            CHECK(bitwise_equal(expect, inplace));
        }
    });
}

TEST_CASE("reductions are deterministic run to run") {
    for_each_backend([](kernels::Backend) {
        const size_t n = 1023;
        const std::vector<double> x = test_buffer(n, 11);
        const std::vector<double> y = test_buffer(n, 12);
        const double first = kernels::dot(x.data(), y.data(), n);
        for (int rep = 0; rep < 5; ++rep)
            CHECK(kernels::dot(x.data(), y.data(), n) == first);
    });
}

TEST_CASE("a single non-finite element poisons sum") {
    // evaluate_guidance leans on this to detect non-finite fields with one
    // reduction instead of a per-element scan.
    for_each_backend([](kernels::Backend) {
        for (size_t n : {size_t{1}, size_t{9}, size_t{64}, size_t{100}}) {
            for (size_t bad : {size_t{0}, n / 2, n - 1}) {
                std::vector<double> x = test_buffer(n, 13);
                x[bad] = std::numeric_limits<double>::quiet_NaN();
                CHECK(!std::isfinite(kernels::sum(x.data(), n)));
                x[bad] = std::numeric_limits<double>::infinity();
                CHECK(!std::isfinite(kernels::sum(x.data(), n)));
            }
        }
    });
}

TEST_CASE("requesting an unsupported backend throws") {
    if (kernels::backend_supported(kernels::Backend::Avx2)) return;  // nothing unsupported here
    CHECK_THROWS_AS(kernels::set_backend(kernels::Backend::Avx2), gdepth::InvalidArgumentError);
}

TEST_CASE("backend names are stable identifiers") {
    CHECK(std::string(kernels::backend_name(kernels::Backend::Scalar)) == "scalar");
    CHECK(std::string(kernels::backend_name(kernels::Backend::Avx2)) == "avx2");
}
