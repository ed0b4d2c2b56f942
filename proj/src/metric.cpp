#include "gdepth/metric.hpp"

#include <algorithm>
#include <cmath>

#include "gdepth/kernels.hpp"
#include "gdepth/photometric.hpp"

namespace gdepth {

double softplus(double z) {
    // ln(1 + e^z); for large z the direct form overflows, so shift it out.
    if (z > 30.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double softplus_derivative(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void ScaleShiftParams::validate() const {
    if (!std::isfinite(s_raw) || !std::isfinite(t_raw))
        throw InvalidArgumentError("scale/shift parameters must be finite");
    if (!(g_s > 0.0) || !std::isfinite(g_s)) throw InvalidArgumentError("g_s must be positive");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidArgumentError("lr must be positive");
}

DepthMap to_metric(const DepthMap& relative, const ScaleShiftParams& params) {
    params.validate();
    for (size_t i = 0; i < relative.data().size(); ++i) {
        if (!relative.valid_mask()[i]) continue;
        const double v = relative.data()[i];
        if (v < 0.0 || v > 1.0)
            throw InvalidArgumentError("to_metric expects relative depth in [0,1]");
    }
    const double a = params.g_s * params.scale();
    const double b = params.g_s * params.shift();
    std::vector<double> metric(relative.data().size());
    kernels::affine(a, relative.data().data(), b, metric.data(), metric.size());
    return DepthMap(relative.width(), relative.height(), std::move(metric), relative.valid_mask());
}

ScaleShiftParams update_params(const ScaleShiftParams& params, double grad_s, double grad_t) {
    params.validate();
    if (!std::isfinite(grad_s) || !std::isfinite(grad_t))
        throw NonFiniteGradientError("scale/shift gradient is not finite");
    ScaleShiftParams next = params;
    next.s_raw = params.s_raw - params.lr * grad_s;
    next.t_raw = params.t_raw - params.lr * grad_t;
    return next;
}

std::vector<double> log_spaced_candidates(double g_min, double g_max, int n) {
    if (!(g_min > 0.0) || !(g_max >= g_min)) throw InvalidArgumentError("bad candidate range");
    if (n < 1) throw InvalidArgumentError("need at least one candidate");
    std::vector<double> out;
    out.reserve(n);
    if (n == 1) {
        out.push_back(g_min);
        return out;
    }
    const double log_lo = std::log(g_min), log_hi = std::log(g_max);
    for (int i = 0; i < n; ++i) {
        out.push_back(std::exp(log_lo + (log_hi - log_lo) * i / (n - 1)));
    }
    return out;
}

double global_scale_search(const ViewPair& pair, const DepthMap& relative,
                           const std::vector<double>& candidates, const GeoLossConfig& cfg) {
    if (candidates.empty()) throw InvalidArgumentError("global_scale_search needs candidates");
    for (double g : candidates) {
        if (!(g > 0.0) || !std::isfinite(g))
            throw InvalidArgumentError("scale candidates must be positive and finite");
    }

    // Image terms only: the sweep scores reprojection quality, not parameter
    // magnitude, so the regularizer is disabled for the comparison.
    GeoLossConfig sweep_cfg = cfg;
    sweep_cfg.gamma = 0.0;

    double best_g = 0.0;
    double best_loss = 0.0;
    bool have_best = false;
    for (double g : candidates) {
        ScaleShiftParams p;  // identity scale, near-zero shift
        p.t_raw = -40.0;     // softplus(-40) ~ 4e-18: depth = g * relative
        p.g_s = g;
        const DepthMap metric = to_metric(relative, p);
        WarpResult rendered = backward_warp(pair, metric);
        // Candidates are compared over the whole frame, with pixels that
        // found no correspondence kept at the renderer's zero fill. Scoring
        // only rendered pixels would let a scale that renders almost nothing
        // win on a few lucky samples; here lost coverage costs |reference|.
        std::fill(rendered.validity.begin(), rendered.validity.end(), uint8_t{1});
        const double loss = geo_loss(pair.left_image, rendered, sweep_cfg, p).total;
        if (!have_best || loss < best_loss || (loss == best_loss && g < best_g)) {
            have_best = true;
            best_loss = loss;
            best_g = g;
        }
    }
    return best_g;
}

}  // namespace gdepth
