#include "gdepth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

#include "gdepth/kernels.hpp"
#include "gdepth/rng.hpp"
#include "gdepth/warp.hpp"

namespace gdepth {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Layout geometry keeps this fraction of the depth span clear on both ends,
// so normalized relative depth stays strictly inside (0, 1).
constexpr double kDepthMarginFraction = 0.02;

// First-hit depth of the scene surface along camera rays. Both cameras of
// the rectified rig are axis-aligned with the world, and rays are built with
// ray.z == 1, so the hit parameter s IS the camera-frame depth.
class Surface {
  public:
    virtual ~Surface() = default;
    virtual double depth_from(const Vec3& origin, const Vec3& ray) const = 0;
};

class FrontoSurface final : public Surface {
  public:
    explicit FrontoSurface(double depth) : depth_(depth) {}
    double depth_from(const Vec3& origin, const Vec3&) const override {
        return depth_ - origin.z;
    }

  private:
    double depth_;
};

// Plane n.P = c with unnormalized normal n = (-tx, -ty, 1).
class SlantedSurface final : public Surface {
  public:
    SlantedSurface(double tx, double ty, double c) : n_{-tx, -ty, 1.0}, c_(c) {}
    double depth_from(const Vec3& origin, const Vec3& ray) const override {
        return (c_ - dot(n_, origin)) / dot(n_, ray);
    }

  private:
    Vec3 n_;
    double c_;
};

class SphereSurface final : public Surface {
  public:
    SphereSurface(Vec3 center, double radius, double backdrop)
        : center_(center), radius_(radius), backdrop_(backdrop) {}

    double depth_from(const Vec3& origin, const Vec3& ray) const override {
        const double s_plane = backdrop_ - origin.z;
        const Vec3 oc = origin - center_;
        const double a = dot(ray, ray);
        const double b = 2.0 * dot(oc, ray);
        const double c = dot(oc, oc) - radius_ * radius_;
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) return s_plane;
        const double s = (-b - std::sqrt(disc)) / (2.0 * a);  // near intersection
        if (s <= 0.0) return s_plane;
        return std::min(s, s_plane);
    }

  private:
    Vec3 center_;
    double radius_;
    double backdrop_;
};

// z = base + tx*x + ty*y + sum_k a_k cos(wx_k x + wy_k y + phase_k), solved
// along each ray by fixed-point iteration (the slopes are kept small enough
// that the iteration is a contraction).
class HeightfieldSurface final : public Surface {
  public:
    struct Wave {
        double amplitude = 0.0, wx = 0.0, wy = 0.0, phase = 0.0;
    };

    HeightfieldSurface(double base, double tx, double ty, std::vector<Wave> waves)
        : base_(base), tx_(tx), ty_(ty), waves_(std::move(waves)) {}

    double height(double x, double y) const {
        double z = base_ + tx_ * x + ty_ * y;
        for (const Wave& w : waves_) z += w.amplitude * std::cos(w.wx * x + w.wy * y + w.phase);
        return z;
    }

    double depth_from(const Vec3& origin, const Vec3& ray) const override {
        double s = base_ - origin.z;
        for (int it = 0; it < 120; ++it) {
            const double next = height(origin.x + s * ray.x, origin.y + s * ray.y) - origin.z;
            const bool settled = std::abs(next - s) < 1e-13;
            s = next;
            if (settled) break;
        }
        return s;
    }

  private:
    double base_;
    double tx_, ty_;
    std::vector<Wave> waves_;
};

struct RayExtents {
    double nx_max = 0.0;  // max |(j - cx)/fx| over the image
    double ny_max = 0.0;
};

RayExtents ray_extents(const SceneSpec& spec, double cx, double cy) {
    RayExtents e;
    e.nx_max = std::max(std::abs((0.0 - cx) / spec.fx), std::abs((spec.width - 1.0 - cx) / spec.fx));
    e.ny_max = std::max(std::abs((0.0 - cy) / spec.fy), std::abs((spec.height - 1.0 - cy) / spec.fy));
    return e;
}

std::unique_ptr<Surface> make_surface(const SceneSpec& spec, GaussianSource& rng,
                                      const RayExtents& ext) {
    const double span = spec.d_max - spec.d_min;
    const double margin = kDepthMarginFraction * span;
    const double lo = spec.d_min + margin;
    const double hi = spec.d_max - margin;
    const double mid = 0.5 * (spec.d_min + spec.d_max);

    switch (spec.layout) {
        case SceneLayout::FrontoPlane:
            // Pinned to the midpoint so rig arithmetic (disparity = f*b/d) is
            // exactly controllable from the depth range alone.
            return std::make_unique<FrontoSurface>(mid);

        case SceneLayout::SlantedPlane: {
            double tx = 0.6 * (rng.uniform() - 0.5);
            double ty = 0.6 * (rng.uniform() - 0.5);
            // Depth over the image is mid/(1 - tx*nx - ty*ny); shrink the tilt
            // until the corner extremes stay inside [lo, hi].
            const double u_max = std::abs(tx) * ext.nx_max + std::abs(ty) * ext.ny_max;
            if (u_max > 0.0) {
                const double u_hi = 1.0 - mid / hi;          // keeps mid/(1-u) <= hi
                const double u_lo = mid / lo - 1.0;          // keeps mid/(1+u) >= lo
                const double f = std::min(1.0, std::min(u_hi, u_lo) / u_max);
                tx *= f;
                ty *= f;
            }
            return std::make_unique<SlantedSurface>(tx, ty, mid);
        }

        case SceneLayout::SphereOnPlane: {
            const double backdrop = hi;
            const double radius = (0.15 + 0.2 * rng.uniform()) * span;
            const double cz_lo = lo + radius;
            const double cz_hi = std::max(cz_lo, backdrop - 0.25 * radius);
            const double cz = cz_lo + rng.uniform() * (cz_hi - cz_lo);
            const double cx_w = (rng.uniform() - 0.5) * cz * ext.nx_max;
            const double cy_w = (rng.uniform() - 0.5) * cz * ext.ny_max;
            return std::make_unique<SphereSurface>(Vec3{cx_w, cy_w, cz}, radius, backdrop);
        }

        case SceneLayout::Heightfield: {
            const double base = mid + 0.5 * span * (rng.uniform() - 0.5);
            double tx = 0.5 * (rng.uniform() - 0.5);
            double ty = 0.5 * (rng.uniform() - 0.5);
            // Wavelengths relative to the visible footprint at the far plane;
            // per-wave slope budgets shrink with frequency so the ray solver
            // stays contractive.
            const double footprint =
                2.0 * spec.d_max * std::max(ext.nx_max, ext.ny_max) + spec.baseline;
            const double rel_wavelength[4] = {1.6, 0.8, 0.45, 0.28};
            const double slope_budget[4] = {0.3, 0.2, 0.12, 0.07};
            std::vector<HeightfieldSurface::Wave> waves(4);
            double wave_amp_total = 0.0;
            for (int k = 0; k < 4; ++k) {
                const double wavelength = footprint * rel_wavelength[k] * (0.8 + 0.4 * rng.uniform());
                const double slope = slope_budget[k] * (0.5 + 0.5 * rng.uniform());
                const double theta = 2.0 * kPi * rng.uniform();
                const double omega = 2.0 * kPi / wavelength;
                waves[k].amplitude = slope / omega;
                waves[k].wx = omega * std::cos(theta);
                waves[k].wy = omega * std::sin(theta);
                waves[k].phase = 2.0 * kPi * rng.uniform();
                wave_amp_total += waves[k].amplitude;
            }
            // Conservative bound of the variable part over the visible volume;
            // rescale so [base - v, base + v] fits inside [lo, hi].
            const double x_reach = spec.d_max * ext.nx_max + spec.baseline;
            const double y_reach = spec.d_max * ext.ny_max;
            const double v = wave_amp_total + std::abs(tx) * x_reach + std::abs(ty) * y_reach;
            const double allowed = std::min(hi - base, base - lo);
            if (v > allowed && v > 0.0) {
                const double f = allowed / v;
                tx *= f;
                ty *= f;
                for (auto& w : waves) w.amplitude *= f;
            }
            return std::make_unique<HeightfieldSurface>(base, tx, ty, std::move(waves));
        }
    }
    throw InvalidArgumentError("unknown scene layout");
}

Grid depth_grid_for(const Surface& surface, const CameraView& view, const Vec3& origin) {
    Grid d(view.width(), view.height());
    for (int i = 0; i < view.height(); ++i) {
        for (int j = 0; j < view.width(); ++j) {
            const Vec3 ray = view.K_inv().apply(Vec3{static_cast<double>(j), static_cast<double>(i), 1.0});
            d.at(i, j) = surface.depth_from(origin, ray);
        }
    }
    return d;
}

// ---- Textures (painted in left screen space) -------------------------------

// Smooth square wave: +-1 plateaus with smoothstep transitions of width
// ~2*edge pixels around each period boundary.
double smooth_square(double x, double period, double edge) {
    const double raw = std::sin(kPi * x / period) * (period / (kPi * edge));
    const double t = 0.5 * (std::clamp(raw, -1.0, 1.0) + 1.0);
    return 2.0 * (t * t * (3.0 - 2.0 * t)) - 1.0;
}

Image paint_checker(int width, int height, GaussianSource& rng) {
    const double period = 10.0 + 8.0 * rng.uniform();
    const double edge = 2.0;
    const double ou = period * rng.uniform();
    const double ov = period * rng.uniform();
    Image img(width, height, 1);
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j)
            img.at(i, j) = 0.5 + 0.35 * smooth_square(j + ou, period, edge) *
                                     smooth_square(i + ov, period, edge);
    return img;
}

Image paint_smooth_noise(int width, int height, GaussianSource& rng) {
    constexpr int kWaves = 6;
    double amp[kWaves], fx[kWaves], fy[kWaves], phase[kWaves];
    double amp_total = 0.0;
    for (int k = 0; k < kWaves; ++k) {
        // Log-uniform wavelengths in [16, 48] px keep the image smooth at the
        // interpolation scale.
        const double wavelength = 16.0 * std::pow(3.0, rng.uniform());
        const double theta = 2.0 * kPi * rng.uniform();
        fx[k] = 2.0 * kPi * std::cos(theta) / wavelength;
        fy[k] = 2.0 * kPi * std::sin(theta) / wavelength;
        phase[k] = 2.0 * kPi * rng.uniform();
        amp[k] = 0.3 + 0.7 * rng.uniform();
        amp_total += amp[k];
    }
    for (int k = 0; k < kWaves; ++k) amp[k] *= 0.38 / amp_total;
    Image img(width, height, 1);
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j) {
            double v = 0.5;
            for (int k = 0; k < kWaves; ++k) v += amp[k] * std::cos(fx[k] * j + fy[k] * i + phase[k]);
            img.at(i, j) = v;
        }
    return img;
}

Image paint_dots(int width, int height, GaussianSource& rng, double density_boost) {
    const int n_dots = std::max(20, static_cast<int>(density_boost * width * height / 48.0));
    const double sigma = 2.5 + 1.5 * rng.uniform();
    std::vector<double> px(n_dots), py(n_dots);
    for (int k = 0; k < n_dots; ++k) {
        px[k] = rng.uniform() * (width - 1);
        py[k] = rng.uniform() * (height - 1);
    }
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    Image img(width, height, 1);
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n_dots; ++k) {
                const double dx = j - px[k], dy = i - py[k];
                acc += std::exp(-(dx * dx + dy * dy) * inv2s2);
            }
            // Smooth saturation instead of a hard cap, to stay interpolation
            // friendly where dots overlap.
            img.at(i, j) = 0.15 + 0.7 * (1.0 - std::exp(-acc));
        }
    return img;
}

// Fraction of fully-interior 7x7 windows whose population intensity variance
// clears the floor the photometric loss needs.
bool texture_rich_enough(const Image& img) {
    constexpr int kWin = 7;
    constexpr double kVarianceFloor = 1e-4;
    if (img.width() < kWin || img.height() < kWin) return false;
    size_t windows = 0, rich = 0;
    for (int i = 0; i + kWin <= img.height(); ++i)
        for (int j = 0; j + kWin <= img.width(); ++j) {
            double s = 0.0, s2 = 0.0;
            for (int y = 0; y < kWin; ++y)
                for (int x = 0; x < kWin; ++x) {
                    const double v = img.at(i + y, j + x);
                    s += v;
                    s2 += v * v;
                }
            const double n = kWin * kWin;
            const double var = s2 / n - (s / n) * (s / n);
            ++windows;
            if (var > kVarianceFloor) ++rich;
        }
    return rich >= static_cast<size_t>(0.9 * static_cast<double>(windows));
}

Image paint_texture(const SceneSpec& spec) {
    for (int attempt = 0; attempt < 10; ++attempt) {
        GaussianSource rng(spec.seed ^
                           (0x7e87a3d5b0c4f219ULL + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(attempt)));
        Image img = [&]() {
            switch (spec.texture) {
                case SceneTexture::Checker:
                    return paint_checker(spec.width, spec.height, rng);
                case SceneTexture::SmoothNoise:
                    return paint_smooth_noise(spec.width, spec.height, rng);
                case SceneTexture::Dots:
                    return paint_dots(spec.width, spec.height, rng, 1.0 + 0.25 * attempt);
            }
            throw InvalidArgumentError("unknown scene texture");
        }();
        if (texture_rich_enough(img)) return img;
    }
    throw InvalidArgumentError("texture generation kept failing the variance floor");
}

}  // namespace

void SceneSpec::validate() const {
    if (!std::isfinite(d_min) || !std::isfinite(d_max) || !(d_min > 0.0) || !(d_max > d_min))
        throw InvalidArgumentError("scene depth range needs 0 < d_min < d_max");
    if (!std::isfinite(baseline) || !(baseline > 0.0))
        throw InvalidArgumentError("scene baseline must be positive");
    if (!std::isfinite(fx) || !std::isfinite(fy) || !(fx > 0.0) || !(fy > 0.0))
        throw InvalidArgumentError("scene focal lengths must be positive");
    if (width < 8 || height < 8)
        throw InvalidArgumentError("scene images must be at least 8x8");
}

SyntheticScene generate_scene(const SceneSpec& spec) {
    spec.validate();
    const double cx = spec.cx < 0.0 ? 0.5 * (spec.width - 1) : spec.cx;
    const double cy = spec.cy < 0.0 ? 0.5 * (spec.height - 1) : spec.cy;
    const Mat3 K = make_intrinsics(spec.fx, spec.fy, cx, cy);
    const CameraView left(K, Mat4::identity(), spec.width, spec.height);
    const CameraView right(K, Mat4::translate(spec.baseline, 0.0, 0.0), spec.width, spec.height);
    const Vec3 right_origin{spec.baseline, 0.0, 0.0};

    GaussianSource rng(spec.seed);
    const RayExtents ext = ray_extents(spec, cx, cy);
    const std::unique_ptr<Surface> surface = make_surface(spec, rng, ext);

    Grid left_depth = depth_grid_for(*surface, left, Vec3{0.0, 0.0, 0.0});
    Grid right_depth = depth_grid_for(*surface, right, right_origin);
    Image left_image = paint_texture(spec);

    // Render the right view with the exact scheme backward_warp uses: map
    // every right pixel through its true depth into the left view and gather.
    DepthMap right_depth_map(spec.width, spec.height, right_depth.data);
    const CorrespondenceField to_left = map_coordinates(right, left, right_depth_map);
    SampledImage sampled = bilinear_sample(left_image, to_left);

    // A right pixel is renderable only if its surface point is the first hit
    // along the left ray too (no occluder) and the gather cell was valid.
    std::vector<uint8_t> fill_mask(right_depth.size(), 0);
    for (int i = 0; i < spec.height; ++i) {
        for (int j = 0; j < spec.width; ++j) {
            const size_t p = to_left.index(i, j);
            bool renderable = sampled.validity[p] != 0;
            if (renderable) {
                const Vec3 ray = right.K_inv().apply(
                    Vec3{static_cast<double>(j), static_cast<double>(i), 1.0});
                const Vec3 P = right_origin + right_depth.at(i, j) * ray;
                const Vec3 left_ray{P.x / P.z, P.y / P.z, 1.0};
                const double first_hit = surface->depth_from(Vec3{0.0, 0.0, 0.0}, left_ray);
                if (first_hit < P.z * (1.0 - 1e-6)) renderable = false;
            }
            if (!renderable) fill_mask[p] = 1;
        }
    }

    // Nearest-renderable fill, deterministic ring scan.
    Image right_image = sampled.image;
    for (int i = 0; i < spec.height; ++i) {
        for (int j = 0; j < spec.width; ++j) {
            if (fill_mask[to_left.index(i, j)] == 0) continue;
            bool found = false;
            for (int r = 1; r < std::max(spec.width, spec.height) && !found; ++r) {
                for (int di = -r; di <= r && !found; ++di) {
                    for (int dj = -r; dj <= r && !found; ++dj) {
                        if (std::max(std::abs(di), std::abs(dj)) != r) continue;  // ring only
                        const int y = i + di, x = j + dj;
                        if (y < 0 || y >= spec.height || x < 0 || x >= spec.width) continue;
                        if (fill_mask[to_left.index(y, x)] != 0) continue;
                        right_image.at(i, j) = sampled.image.at(y, x);
                        found = true;
                    }
                }
            }
            if (!found) right_image.at(i, j) = 0.5;  // fully occluded view; keep flagged
        }
    }

    const double span = spec.d_max - spec.d_min;
    std::vector<double> relative(left_depth.data.size());
    kernels::affine(1.0 / span, left_depth.data.data(), -spec.d_min / span, relative.data(),
                    relative.size());

    DepthMap gt_depth(spec.width, spec.height, std::move(left_depth.data));
    DepthMap gt_relative(spec.width, spec.height, std::move(relative));
    ViewPair pair(left, right, std::move(left_image), std::move(right_image));
    return SyntheticScene{std::move(pair), std::move(gt_depth), std::move(gt_relative),
                          std::move(fill_mask)};
}

std::vector<Grid> generate_corpus(int n, const SceneSpec& spec_template, uint64_t seed) {
    if (n < 1) throw InvalidArgumentError("corpus needs n >= 1");
    spec_template.validate();
    const double cx = spec_template.cx < 0.0 ? 0.5 * (spec_template.width - 1) : spec_template.cx;
    const double cy = spec_template.cy < 0.0 ? 0.5 * (spec_template.height - 1) : spec_template.cy;
    const Mat3 K = make_intrinsics(spec_template.fx, spec_template.fy, cx, cy);
    const CameraView left(K, Mat4::identity(), spec_template.width, spec_template.height);
    const double span = spec_template.d_max - spec_template.d_min;

    std::vector<Grid> fields;
    fields.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        SceneSpec spec = spec_template;
        spec.seed = seed + static_cast<uint64_t>(k);
        // Only the depth field is needed for a training example; skip the
        // texture and rendering work of generate_scene.
        GaussianSource rng(spec.seed);
        const RayExtents ext = ray_extents(spec, cx, cy);
        const std::unique_ptr<Surface> surface = make_surface(spec, rng, ext);
        Grid depth = depth_grid_for(*surface, left, Vec3{0.0, 0.0, 0.0});
        Grid field(spec.width, spec.height);
        // depth -> relative in (0,1) -> latent in (-1,1).
        kernels::affine(2.0 / span, depth.data.data(), -2.0 * spec.d_min / span - 1.0,
                        field.data.data(), field.size());
        fields.push_back(std::move(field));
    }
    return fields;
}

}  // namespace gdepth
