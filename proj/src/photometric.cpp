#include "gdepth/photometric.hpp"

#include <cmath>

#include "gdepth/kernels.hpp"

namespace gdepth {

namespace {

struct MaskedSsim {
    double value = 0.0;          // mean SSIM over contributing windows
    size_t window_count = 0;     // contributing windows summed over channels
    std::vector<double> grad_b;  // image-buffer layout
};

// Extracts channel c of an interleaved image into a contiguous plane.
std::vector<double> channel_plane(const Image& img, int c) {
    const size_t n = static_cast<size_t>(img.width()) * img.height();
    std::vector<double> plane(n);
    const int ch = img.channels();
    const double* src = img.data().data();
    for (size_t i = 0; i < n; ++i) plane[i] = src[i * ch + c];
    return plane;
}

// Mean SSIM + gradient w.r.t. b over windows fully covered by `valid`.
// Statistics use population (1/N) normalization so constant patches have
// exactly zero variance and the closed-form constant-image value is exact.
MaskedSsim masked_ssim(const Image& a, const Image& b, const std::vector<uint8_t>& valid,
                       int window, double c1, double c2) {
    const int w = a.width(), h = a.height(), ch = a.channels();
    const int half = window / 2;
    const double n = static_cast<double>(window) * window;

    MaskedSsim out;
    out.grad_b.assign(a.data().size(), 0.0);

    std::vector<double> ab(static_cast<size_t>(w) * h);
    for (int c = 0; c < ch; ++c) {
        const std::vector<double> pa = channel_plane(a, c);
        const std::vector<double> pb = channel_plane(b, c);
        kernels::mul(pa.data(), pb.data(), ab.data(), ab.size());

        for (int i = half; i < h - half; ++i) {
            for (int j = half; j < w - half; ++j) {
                bool all_valid = true;
                double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
                for (int di = -half; di <= half && all_valid; ++di) {
                    const size_t row = static_cast<size_t>(i + di) * w + j;
                    for (int dj = -half; dj <= half; ++dj) {
                        const size_t q = row + dj;
                        if (!valid[q]) {
                            all_valid = false;
                            break;
                        }
                        sa += pa[q];
                        sb += pb[q];
                        saa += pa[q] * pa[q];
                        sbb += pb[q] * pb[q];
                        sab += ab[q];
                    }
                }
                if (!all_valid) continue;

                const double mu_a = sa / n, mu_b = sb / n;
                const double var_a = saa / n - mu_a * mu_a;
                const double var_b = sbb / n - mu_b * mu_b;
                const double cov = sab / n - mu_a * mu_b;
                const double a1 = 2.0 * mu_a * mu_b + c1;
                const double a2 = 2.0 * cov + c2;
                const double b1 = mu_a * mu_a + mu_b * mu_b + c1;
                const double b2 = var_a + var_b + c2;
                const double s = (a1 * a2) / (b1 * b2);
                out.value += s;
                ++out.window_count;

                // d s / d b_q = (2/n)[ (mu_a*a2 + (a_q - mu_a)*a1)/(b1*b2)
                //                      - s*(mu_b/b1 + (b_q - mu_b)/b2) ]
                const double inv_b1b2 = 1.0 / (b1 * b2);
                for (int di = -half; di <= half; ++di) {
                    const size_t row = static_cast<size_t>(i + di) * w + j;
                    for (int dj = -half; dj <= half; ++dj) {
                        const size_t q = row + dj;
                        const double g =
                            (2.0 / n) * ((mu_a * a2 + (pa[q] - mu_a) * a1) * inv_b1b2 -
                                         s * (mu_b / b1 + (pb[q] - mu_b) / b2));
                        out.grad_b[q * ch + c] += g;
                    }
                }
            }
        }
    }

    if (out.window_count > 0) {
        out.value /= static_cast<double>(out.window_count);
        const double inv = 1.0 / static_cast<double>(out.window_count);
        kernels::affine(inv, out.grad_b.data(), 0.0, out.grad_b.data(), out.grad_b.size());
    }
    return out;
}

void check_ssim_args(const Image& a, const Image& b, int window) {
    if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels())
        throw DimensionMismatchError("ssim inputs differ in shape");
    if (window < 3 || window % 2 == 0) throw InvalidArgumentError("ssim window must be odd and >= 3");
    if (window > a.width() || window > a.height())
        throw DimensionMismatchError("ssim window does not fit inside the images");
}

}  // namespace

void GeoLossConfig::validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgumentError("eta must lie in [0,1]");
    if (ssim_window < 3 || ssim_window % 2 == 0)
        throw InvalidArgumentError("ssim_window must be odd and >= 3");
    if (!(ssim_c1 > 0.0) || !(ssim_c2 > 0.0)) throw InvalidArgumentError("ssim constants must be positive");
    if (!(gamma >= 0.0)) throw InvalidArgumentError("gamma must be nonnegative");
}

SsimResult ssim(const Image& a, const Image& b, int window, double c1, double c2) {
    check_ssim_args(a, b, window);
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw InvalidArgumentError("ssim constants must be positive");
    const std::vector<uint8_t> all(static_cast<size_t>(a.width()) * a.height(), 1);
    MaskedSsim m = masked_ssim(a, b, all, window, c1, c2);
    return {m.value, std::move(m.grad_b)};
}

LossValue geo_loss(const Image& reference, const WarpResult& rendered, const GeoLossConfig& cfg,
                   const ScaleShiftParams& params) {
    cfg.validate();
    params.validate();
    const Image& rend = rendered.image;
    if (reference.width() != rend.width() || reference.height() != rend.height() ||
        reference.channels() != rend.channels())
        throw DimensionMismatchError("geo_loss images differ in shape");
    if (cfg.ssim_window > reference.width() || cfg.ssim_window > reference.height())
        throw DimensionMismatchError("ssim window does not fit inside the images");

    const int w = reference.width(), h = reference.height(), ch = reference.channels();
    const std::vector<uint8_t>& valid = rendered.validity;

    size_t n_valid = 0;
    for (uint8_t v : valid) n_valid += (v != 0);
    if (n_valid == 0) throw NoValidPixelsError("geo_loss: empty validity mask");

    LossValue out;
    out.grad_wrt_rendered.assign(reference.data().size(), 0.0);

    // L1 over valid pixels, averaged over pixels and channels.
    const double l1_norm = 1.0 / (static_cast<double>(n_valid) * ch);
    {
        double acc = 0.0;
        for (int c = 0; c < ch; ++c) {
            const std::vector<double> pr = channel_plane(reference, c);
            const std::vector<double> pd = channel_plane(rend, c);
            acc += kernels::masked_abs_diff_sum(pr.data(), pd.data(), valid.data(), pr.size()).sum;
        }
        out.l1_term = acc * l1_norm;
    }
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const size_t p = static_cast<size_t>(i) * w + j;
            if (!valid[p]) continue;
            for (int c = 0; c < ch; ++c) {
                const double diff = rend.at(i, j, c) - reference.at(i, j, c);
                const double sgn = (diff > 0.0) ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                out.grad_wrt_rendered[p * ch + c] = (1.0 - cfg.eta) * l1_norm * sgn;
            }
        }
    }

    // SSIM over fully valid windows; zero contributing windows mean the term
    // has no evidence and contributes nothing.
    MaskedSsim s = masked_ssim(reference, rend, valid, cfg.ssim_window, cfg.ssim_c1, cfg.ssim_c2);
    const double ssim_value = (s.window_count > 0) ? s.value : 1.0;
    out.ssim_term = (1.0 - ssim_value) / 2.0;
    if (s.window_count > 0) {
        kernels::axpby(1.0, out.grad_wrt_rendered.data(), -cfg.eta / 2.0, s.grad_b.data(),
                       out.grad_wrt_rendered.data(), out.grad_wrt_rendered.size());
    }

    out.reg_term = cfg.gamma * (params.s_raw * params.s_raw + params.t_raw * params.t_raw);
    out.total = cfg.eta * out.ssim_term + (1.0 - cfg.eta) * out.l1_term + out.reg_term;

    if (!std::isfinite(out.total))
        throw NonFiniteLossError("geo_loss produced a non-finite total");
    return out;
}

}  // namespace gdepth
