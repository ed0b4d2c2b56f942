#pragma once

#include <cstdint>
#include <vector>

#include "gdepth/geometry.hpp"
#include "gdepth/grid.hpp"

namespace gdepth {

enum class SceneLayout { FrontoPlane, SlantedPlane, SphereOnPlane, Heightfield };
enum class SceneTexture { Checker, SmoothNoise, Dots };

// Recipe for one procedural stereo scene on a rectified rig (both cameras
// axis-aligned, the right one displaced along +x by the baseline).
struct SceneSpec {
    SceneLayout layout = SceneLayout::Heightfield;
    double d_min = 4.0;   // meters
    double d_max = 8.0;
    SceneTexture texture = SceneTexture::SmoothNoise;
    double baseline = 0.5;  // meters
    double fx = 96.0;
    double fy = 96.0;
    double cx = -1.0;  // negative: use the image center
    double cy = -1.0;
    int width = 64;
    int height = 64;
    uint64_t seed = 0;

    void validate() const;
};

// A generated scene. The right image is rendered by backward-sampling the
// left image at the exact correspondences of the ground-truth surface, so
// backward_warp(pair, gt_depth_left) reproduces the left image up to
// interpolation error. Right pixels whose surface point is invisible from
// the left camera (occluded or out of frame) are filled from the nearest
// renderable pixel and flagged in right_fill_mask so tests can exclude them.
struct SyntheticScene {
    ViewPair pair;
    DepthMap gt_depth_left;
    DepthMap gt_relative_left;            // (d - d_min)/(d_max - d_min), in (0, 1)
    std::vector<uint8_t> right_fill_mask;  // 1 = filled, not backward-consistent
};

// Deterministic per spec.seed. Layout geometry is kept strictly inside
// [d_min, d_max] (2% margins), so the normalized relative depth never
// touches 0 or 1. Textures are smooth at the pixel scale and re-drawn (with
// a perturbed seed) until at least 90% of 7x7 windows clear an intensity
// variance floor, which the photometric loss needs.
SyntheticScene generate_scene(const SceneSpec& spec);

// n relative-depth fields from seeded variations of the template, affinely
// mapped to the latent range [-1, 1].
std::vector<Grid> generate_corpus(int n, const SceneSpec& spec_template, uint64_t seed);

}  // namespace gdepth
