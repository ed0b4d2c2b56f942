#include "gdepth/warp.hpp"

#include <cmath>

namespace gdepth {

namespace {

bool same_bits(const CameraView& a, const CameraView& b) {
    return a.K().m == b.K().m && a.E().m == b.E().m && a.width() == b.width() &&
           a.height() == b.height();
}

// One bilinear tap: value and spatial gradient per channel at (x, y).
// The caller guarantees x in [0, W-1], y in [0, H-1]; the cell index is
// clamped so an exactly-on-edge coordinate uses the last interior cell with
// fractional weight 1, which leaves the value exact and the gradient finite.
struct Tap {
    double value;
    double ddx;
    double ddy;
};

inline Tap sample_channel(const Image& img, int c, double x, double y) {
    const int w = img.width(), h = img.height();
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    if (x0 > w - 2) x0 = w - 2;
    if (x0 < 0) x0 = 0;
    if (y0 > h - 2) y0 = h - 2;
    if (y0 < 0) y0 = 0;
    const int x1 = (w > 1) ? x0 + 1 : x0;
    const int y1 = (h > 1) ? y0 + 1 : y0;
    const double fx = x - x0;
    const double fy = y - y0;

    const double v00 = img.at(y0, x0, c);
    const double v01 = img.at(y0, x1, c);
    const double v10 = img.at(y1, x0, c);
    const double v11 = img.at(y1, x1, c);

    Tap t;
    t.value = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11);
    t.ddx = (1.0 - fy) * (v01 - v00) + fy * (v11 - v10);
    t.ddy = (1.0 - fx) * (v10 - v00) + fx * (v11 - v01);
    return t;
}

inline bool cell_inside(const Image& img, double x, double y) {
    return x >= 0.0 && y >= 0.0 && x <= img.width() - 1.0 && y <= img.height() - 1.0;
}

}  // namespace

CorrespondenceField map_coordinates(const CameraView& src, const CameraView& dst,
                                    const DepthMap& depth, double margin) {
    if (depth.width() != src.width() || depth.height() != src.height())
        throw DimensionMismatchError("depth map does not match the source view size");

    const int w = src.width(), h = src.height();
    CorrespondenceField f;
    f.width = w;
    f.height = h;
    f.x.assign(static_cast<size_t>(w) * h, 0.0);
    f.y.assign(static_cast<size_t>(w) * h, 0.0);
    f.in_bounds.assign(static_cast<size_t>(w) * h, 0);
    f.dx_ddepth.assign(static_cast<size_t>(w) * h, 0.0);
    f.dy_ddepth.assign(static_cast<size_t>(w) * h, 0.0);

    const double x_lo = margin, x_hi = dst.width() - 1.0 - margin;
    const double y_lo = margin, y_hi = dst.height() - 1.0 - margin;

    // Identical views map every pixel to itself; doing that arithmetic-free
    // keeps the identity warp bit-exact (rounding through K^{-1}..K would
    // perturb integer coordinates in the last ulp).
    if (same_bits(src, dst)) {
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const size_t idx = f.index(i, j);
                if (!depth.valid_mask()[idx]) continue;
                f.x[idx] = j;
                f.y[idx] = i;
                f.in_bounds[idx] = (j >= x_lo && j <= x_hi && i >= y_lo && i <= y_hi) ? 1 : 0;
            }
        }
        return f;
    }

    const Mat4 rel = relative_transform(src, dst);
    const Vec3 t = rel.translation();
    const Mat3& k_dst = dst.K();
    const Mat3& k_src_inv = src.K_inv();

    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const size_t idx = f.index(i, j);
            if (!depth.valid_mask()[idx]) continue;
            const double d = depth.data()[idx];

            // p(dst) = d * q + t with q = R * K_src^{-1} * (x, y, 1); the
            // depth derivative of p is q itself.
            const Vec3 ray = k_src_inv.apply(Vec3{static_cast<double>(j), static_cast<double>(i), 1.0});
            const Vec3 q = rel.rotate(ray);
            const Vec3 p{d * q.x + t.x, d * q.y + t.y, d * q.z + t.z};
            if (!(p.z > 0.0)) continue;  // behind the target camera

            const Vec3 hp = k_dst.apply(p);
            const Vec3 hq = k_dst.apply(q);
            const double inv_z = 1.0 / hp.z;
            const double u = hp.x * inv_z;
            const double v = hp.y * inv_z;

            f.x[idx] = u;
            f.y[idx] = v;
            // Quotient rule on u = hp.x/hp.z with d(hp)/d(depth) = hq.
            f.dx_ddepth[idx] = (hq.x * hp.z - hp.x * hq.z) * inv_z * inv_z;
            f.dy_ddepth[idx] = (hq.y * hp.z - hp.y * hq.z) * inv_z * inv_z;
            f.in_bounds[idx] = (u >= x_lo && u <= x_hi && v >= y_lo && v <= y_hi) ? 1 : 0;
        }
    }
    return f;
}

SampledImage bilinear_sample(const Image& img, const CorrespondenceField& coords) {
    const int w = coords.width, h = coords.height;
    const int ch = img.channels();
    SampledImage out{Image(w, h, ch, 0.0), std::vector<uint8_t>(static_cast<size_t>(w) * h, 0)};

    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const size_t idx = coords.index(i, j);
            if (!coords.in_bounds[idx]) continue;
            const double x = coords.x[idx], y = coords.y[idx];
            if (!cell_inside(img, x, y)) continue;
            for (int c = 0; c < ch; ++c) {
                out.image.at(i, j, c) = sample_channel(img, c, x, y).value;
            }
            out.validity[idx] = 1;
        }
    }
    return out;
}

WarpResult backward_warp(const ViewPair& pair, const DepthMap& depth_left, double margin) {
    if (depth_left.width() != pair.left_image.width() ||
        depth_left.height() != pair.left_image.height())
        throw DimensionMismatchError("depth map does not match the left image size");

    const CorrespondenceField field = map_coordinates(pair.left, pair.right, depth_left, margin);
    const Image& right = pair.right_image;
    const int w = field.width, h = field.height, ch = right.channels();

    WarpResult out{Image(w, h, ch, 0.0), std::vector<uint8_t>(static_cast<size_t>(w) * h, 0),
                   std::vector<double>(static_cast<size_t>(w) * h * ch, 0.0)};

    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const size_t idx = field.index(i, j);
            if (!field.in_bounds[idx]) continue;
            const double x = field.x[idx], y = field.y[idx];
            if (!cell_inside(right, x, y)) continue;
            const double dxdd = field.dx_ddepth[idx];
            const double dydd = field.dy_ddepth[idx];
            for (int c = 0; c < ch; ++c) {
                const Tap t = sample_channel(right, c, x, y);
                out.image.at(i, j, c) = t.value;
                out.depth_jacobian[idx * ch + c] = t.ddx * dxdd + t.ddy * dydd;
            }
            out.validity[idx] = 1;
        }
    }
    return out;
}

}  // namespace gdepth
