#pragma once

#include <cmath>
#include <vector>

#include "gdepth/geometry.hpp"

namespace gdepth {

struct GeoLossConfig;  // photometric.hpp

double softplus(double z);
double softplus_derivative(double z);  // the logistic sigmoid

// s_raw of ln(e-1) makes softplus(s_raw) exactly 1; together with a strongly
// negative t_raw this is the identity configuration of to_metric.
inline double identity_scale_raw() { return std::log(std::exp(1.0) - 1.0); }

// Learnable scale/shift from relative to metric depth, plus the fixed global
// scale the sweep pre-selects and the gradient-descent step size. Positivity
// of the effective scale/shift comes from softplus, so the raw fields are
// unconstrained.
struct ScaleShiftParams {
    double s_raw = identity_scale_raw();
    double t_raw = -5.0;  // softplus(-5) ~ 6.7e-3: near-zero initial shift
    double g_s = 1.0;     // meters
    double lr = 1e-2;

    double scale() const { return softplus(s_raw); }
    double shift() const { return softplus(t_raw); }
    void validate() const;
};

// Per-pixel g_s * (softplus(s_raw)*x + softplus(t_raw)); strictly positive
// for any finite parameters. Input values must lie in [0, 1].
DepthMap to_metric(const DepthMap& relative, const ScaleShiftParams& params);

// One plain gradient-descent step on the raw parameters.
ScaleShiftParams update_params(const ScaleShiftParams& params, double grad_s, double grad_t);

// Geometric sequence of n candidates covering [g_min, g_max].
std::vector<double> log_spaced_candidates(double g_min, double g_max, int n);
inline std::vector<double> default_scale_candidates() { return log_spaced_candidates(0.5, 100.0, 24); }

// Sweeps the candidates, rendering backward_warp(pair, g·relative) with the
// identity scale/shift configuration and scoring the image terms of the
// reprojection loss (no regularizer). Returns the argmin; ties go to the
// smaller candidate and the result is independent of candidate order.
double global_scale_search(const ViewPair& pair, const DepthMap& relative,
                           const std::vector<double>& candidates, const GeoLossConfig& cfg);

}  // namespace gdepth
