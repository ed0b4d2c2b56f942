#pragma once

#include <cstdint>
#include <vector>

#include "gdepth/geometry.hpp"

namespace gdepth {

// Where each source pixel lands in the target view, plus the analytic
// derivative of that landing point with respect to the source depth at the
// same pixel (the mapping is pixel-local in depth). Coordinates are stored
// even for out-of-bounds points (diagnostics); they are zeroed where the
// transformed point falls behind the target camera.
struct CorrespondenceField {
    int width = 0;
    int height = 0;
    std::vector<double> x;            // target x per source pixel
    std::vector<double> y;            // target y per source pixel
    std::vector<uint8_t> in_bounds;   // 1 where the point projects inside the target rect
    std::vector<double> dx_ddepth;    // d(target x)/d(source depth), meters^-1
    std::vector<double> dy_ddepth;

    size_t index(int row, int col) const { return static_cast<size_t>(row) * width + col; }
};

struct WarpResult {
    Image image;                        // re-rendered source view
    std::vector<uint8_t> validity;      // 1 where the sample is trustworthy
    // d(output channel)/d(source depth at the same pixel); layout matches the
    // image buffer ((y*W + x)*C + c), zero where invalid.
    std::vector<double> depth_jacobian;
};

// Projects every source pixel through dst^{-1}·src at the given depth.
// Pixels with invalid depth, non-positive target-camera depth, or a landing
// point outside [margin, size-1-margin] are masked out (no clamping — border
// clamping would bias the photometric loss).
CorrespondenceField map_coordinates(const CameraView& src, const CameraView& dst,
                                    const DepthMap& depth, double margin = 0.0);

// Bilinear gather of img at the field's coordinates. A sample is valid only
// if its interpolation cell lies fully inside the image and the field marks
// it in-bounds; invalid output pixels are zero.
struct SampledImage {
    Image image;
    std::vector<uint8_t> validity;
};
SampledImage bilinear_sample(const Image& img, const CorrespondenceField& coords);

// map_coordinates(left->right) composed with bilinear sampling of the right
// image: a re-rendering of the left view, with the exact chain-rule
// derivative of every output channel w.r.t. the left depth at that pixel.
WarpResult backward_warp(const ViewPair& pair, const DepthMap& depth_left, double margin = 0.0);

}  // namespace gdepth
