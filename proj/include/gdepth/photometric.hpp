#pragma once

#include <vector>

#include "gdepth/geometry.hpp"
#include "gdepth/metric.hpp"
#include "gdepth/warp.hpp"

namespace gdepth {

struct GeoLossConfig {
    double eta = 0.85;      // SSIM/L1 blend weight
    int ssim_window = 7;    // odd, >= 3; uniform (box) weights
    double ssim_c1 = 1e-4;  // (0.01)^2 for data range 1
    double ssim_c2 = 9e-4;  // (0.03)^2
    double gamma = 1e-2;    // scale/shift regularization weight

    void validate() const;
};

// total = eta*ssim_term + (1-eta)*l1_term + reg_term, with
// ssim_term = (1 - SSIM)/2, l1_term the masked mean absolute difference, and
// reg_term = gamma*(s_raw^2 + t_raw^2) on the raw (pre-softplus) parameters.
// grad_wrt_rendered is the exact derivative of the image terms with respect
// to each rendered sample (zero at invalid pixels; the regularizer does not
// depend on the image).
struct LossValue {
    double total = 0.0;
    double ssim_term = 0.0;
    double l1_term = 0.0;
    double reg_term = 0.0;
    std::vector<double> grad_wrt_rendered;  // layout matches the image buffer
};

struct SsimResult {
    double value = 0.0;
    std::vector<double> grad_wrt_b;  // d(mean SSIM)/d(b samples)
};

// Mean local SSIM under a sliding uniform window, per channel and averaged.
// Population (1/N) statistics per window; only windows fully inside both
// images contribute. Returns the exact gradient with respect to b.
SsimResult ssim(const Image& a, const Image& b, int window, double c1, double c2);

// The reprojection objective against the re-rendered view. Validity comes
// from the WarpResult: L1 averages over valid pixels, SSIM over windows whose
// every pixel is valid (a fully occluded/out-of-bounds rendering with no
// contributing window scores the SSIM term as zero evidence, i.e. SSIM = 1).
// Throws NoValidPixels when the validity mask is empty.
LossValue geo_loss(const Image& reference, const WarpResult& rendered, const GeoLossConfig& cfg,
                   const ScaleShiftParams& params);

}  // namespace gdepth
