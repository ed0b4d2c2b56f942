#pragma once

#include <cstddef>
#include <string>

#include "gdepth/geometry.hpp"

namespace gdepth {

// Depth accuracy over the jointly valid pixels of a (prediction, ground
// truth) pair; `aligned` records whether the prediction was affine-fitted to
// the ground truth before scoring.
struct MetricReport {
    double abs_rel = 0.0;
    double delta1 = 0.0;
    double rmse = 0.0;  // meters
    size_t n_pixels = 0;
    bool aligned = false;
};

// mean |pred - gt| / gt
double abs_rel(const DepthMap& pred, const DepthMap& gt);
// fraction with max(pred/gt, gt/pred) < 1.25
double delta1(const DepthMap& pred, const DepthMap& gt);
// sqrt(mean (pred - gt)^2)
double rmse(const DepthMap& pred, const DepthMap& gt);

struct AffineFit {
    double scale = 1.0;
    double shift = 0.0;
    DepthMap aligned;
};

// Closed-form least squares (a, b) minimizing sum (a*pred + b - gt)^2 over
// jointly valid pixels; requires at least two of them and a non-constant
// prediction. Fitted values that land non-positive are masked invalid in the
// aligned map (a DepthMap cannot carry them).
AffineFit affine_align(const DepthMap& pred, const DepthMap& gt);

// Mean absolute forward difference along x plus the same along y, each taken
// over pairs of horizontally/vertically adjacent valid pixels. A direction
// with no such pair contributes zero.
double total_variation(const DepthMap& depth);

MetricReport evaluate(const DepthMap& pred, const DepthMap& gt, bool align);

// Flat "key = value" block, one line per field.
std::string report_block(const MetricReport& r);
// One machine-readable record:
// "<label> abs_rel=<v> delta1=<v> rmse=<v> n_pixels=<n> aligned=<0|1>".
std::string report_record(const MetricReport& r, const std::string& label);

}  // namespace gdepth
