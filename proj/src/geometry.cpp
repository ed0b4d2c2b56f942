#include "gdepth/geometry.hpp"

#include <cmath>

#include "gdepth/kernels.hpp"

namespace gdepth {

namespace {

constexpr double kRotationOrthoTol = 1e-9;

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace

Vec3 Mat3::apply(Vec3 v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

Mat3 Mat3::mul(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += at(i, k) * o.at(k, j);
            r.at(i, j) = acc;
        }
    }
    return r;
}

double Mat3::det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat3 Mat3::inverse() const {
    const double d = det();
    if (!std::isfinite(d) || std::fabs(d) < 1e-300)
        throw InvalidArgumentError("3x3 matrix is not invertible");
    const double inv = 1.0 / d;
    Mat3 r;
    r.m[0] = (m[4] * m[8] - m[5] * m[7]) * inv;
    r.m[1] = (m[2] * m[7] - m[1] * m[8]) * inv;
    r.m[2] = (m[1] * m[5] - m[2] * m[4]) * inv;
    r.m[3] = (m[5] * m[6] - m[3] * m[8]) * inv;
    r.m[4] = (m[0] * m[8] - m[2] * m[6]) * inv;
    r.m[5] = (m[2] * m[3] - m[0] * m[5]) * inv;
    r.m[6] = (m[3] * m[7] - m[4] * m[6]) * inv;
    r.m[7] = (m[1] * m[6] - m[0] * m[7]) * inv;
    r.m[8] = (m[0] * m[4] - m[1] * m[3]) * inv;
    return r;
}

Vec3 Mat4::transform_point(Vec3 p) const {
    return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
            m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
            m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
}

Vec3 Mat4::rotate(Vec3 v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[4] * v.x + m[5] * v.y + m[6] * v.z,
            m[8] * v.x + m[9] * v.y + m[10] * v.z};
}

Mat4 Mat4::mul(const Mat4& o) const {
    Mat4 r;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += at(i, k) * o.at(k, j);
            r.at(i, j) = acc;
        }
    }
    return r;
}

Mat4 Mat4::rigid_inverse() const {
    // [R t; 0 1]^{-1} = [R^T -R^T t; 0 1]
    Mat4 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) r.at(i, j) = at(j, i);
    }
    const Vec3 t = translation();
    for (int i = 0; i < 3; ++i) {
        r.at(i, 3) = -(at(0, i) * t.x + at(1, i) * t.y + at(2, i) * t.z);
    }
    r.at(3, 0) = r.at(3, 1) = r.at(3, 2) = 0.0;
    r.at(3, 3) = 1.0;
    return r;
}

Mat4 Mat4::translate(double x, double y, double z) {
    Mat4 r;
    r.at(0, 3) = x;
    r.at(1, 3) = y;
    r.at(2, 3) = z;
    return r;
}

Mat4 Mat4::rotate_y(double radians) {
    Mat4 r;
    const double c = std::cos(radians), s = std::sin(radians);
    r.at(0, 0) = c;
    r.at(0, 2) = s;
    r.at(2, 0) = -s;
    r.at(2, 2) = c;
    return r;
}

Mat4 Mat4::rotate_x(double radians) {
    Mat4 r;
    const double c = std::cos(radians), s = std::sin(radians);
    r.at(1, 1) = c;
    r.at(1, 2) = -s;
    r.at(2, 1) = s;
    r.at(2, 2) = c;
    return r;
}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width <= 0 || height <= 0) throw InvalidArgumentError("Image dimensions must be positive");
    if (channels != 1 && channels != 3) throw InvalidArgumentError("Image must have 1 or 3 channels");
    const size_t expected = static_cast<size_t>(width) * height * channels;
    if (data_.size() != expected)
        throw DimensionMismatchError("Image data size does not match width*height*channels");
    if (!all_finite(data_)) throw InvalidArgumentError("Image samples must be finite");
    kernels::clamp(data_.data(), 0.0, 1.0, data_.data(), data_.size());
}

Image::Image(int width, int height, int channels, double fill)
    : Image(width, height, channels,
            std::vector<double>(static_cast<size_t>(width) * height * channels, fill)) {}

DepthMap::DepthMap(int width, int height, std::vector<double> depths, std::vector<uint8_t> valid)
    : width_(width), height_(height), depths_(std::move(depths)), valid_(std::move(valid)) {
    if (width <= 0 || height <= 0) throw InvalidArgumentError("DepthMap dimensions must be positive");
    const size_t expected = static_cast<size_t>(width) * height;
    if (depths_.size() != expected || valid_.size() != expected)
        throw DimensionMismatchError("DepthMap buffers do not match width*height");
    for (size_t i = 0; i < depths_.size(); ++i) {
        if (!valid_[i]) {
            depths_[i] = 0.0;  // keep the buffer finite regardless of caller input
            continue;
        }
        if (!std::isfinite(depths_[i])) throw InvalidArgumentError("valid depth must be finite");
        if (depths_[i] <= 0.0) throw NonPositiveDepthError("valid depth must be strictly positive");
    }
}

DepthMap::DepthMap(int width, int height, std::vector<double> depths)
    : DepthMap(width, height, std::move(depths),
               std::vector<uint8_t>(static_cast<size_t>(width) * height, 1)) {}

DepthMap::DepthMap(int width, int height, double fill)
    : DepthMap(width, height, std::vector<double>(static_cast<size_t>(width) * height, fill)) {}

size_t DepthMap::valid_count() const {
    size_t n = 0;
    for (uint8_t v : valid_) n += (v != 0);
    return n;
}

Mat3 make_intrinsics(double fx, double fy, double cx, double cy) {
    Mat3 k;
    k.at(0, 0) = fx;
    k.at(1, 1) = fy;
    k.at(0, 2) = cx;
    k.at(1, 2) = cy;
    return k;
}

CameraView::CameraView(Mat3 K, Mat4 E, int width, int height)
    : K_(K), E_(E), width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw InvalidArgumentError("CameraView size must be positive");
    for (double v : K.m) {
        if (!std::isfinite(v)) throw InvalidArgumentError("intrinsics must be finite");
    }
    for (double v : E.m) {
        if (!std::isfinite(v)) throw InvalidArgumentError("extrinsic must be finite");
    }
    if (K.at(0, 0) <= 0.0 || K.at(1, 1) <= 0.0)
        throw InvalidArgumentError("focal lengths must be positive");
    K_inv_ = K.inverse();

    if (E.at(3, 0) != 0.0 || E.at(3, 1) != 0.0 || E.at(3, 2) != 0.0 || E.at(3, 3) != 1.0)
        throw InvalidArgumentError("extrinsic bottom row must be (0,0,0,1)");
    // R^T R == I within tolerance, det(R) == +1: rejects reflections, scales
    // and shears so rigid_inverse() stays exact.
    double det = 0.0;
    {
        const Vec3 r0 = E.rotation_row(0), r1 = E.rotation_row(1), r2 = E.rotation_row(2);
        const Vec3 rows[3] = {r0, r1, r2};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double want = (i == j) ? 1.0 : 0.0;
                if (std::fabs(dot(rows[i], rows[j]) - want) > kRotationOrthoTol)
                    throw InvalidArgumentError("extrinsic rotation is not orthonormal");
            }
        }
        det = r0.x * (r1.y * r2.z - r1.z * r2.y) - r0.y * (r1.x * r2.z - r1.z * r2.x) +
              r0.z * (r1.x * r2.y - r1.y * r2.x);
    }
    if (det <= 0.0) throw InvalidArgumentError("extrinsic rotation must have determinant +1");
}

ViewPair::ViewPair(CameraView l, CameraView r, Image li, Image ri)
    : left(std::move(l)), right(std::move(r)), left_image(std::move(li)), right_image(std::move(ri)) {
    if (left_image.width() != left.width() || left_image.height() != left.height())
        throw DimensionMismatchError("left image size does not match left view");
    if (right_image.width() != right.width() || right_image.height() != right.height())
        throw DimensionMismatchError("right image size does not match right view");
    if (left_image.channels() != right_image.channels())
        throw DimensionMismatchError("view pair images must share a channel count");
}

Mat4 relative_transform(const CameraView& src, const CameraView& dst) {
    return dst.E().rigid_inverse().mul(src.E());
}

ProjectedPoint project_point(const CameraView& view, Vec3 p_cam) {
    if (!(p_cam.z > 0.0))
        throw NonPositiveDepthError("cannot project a point at or behind the camera");
    const Vec3 h = view.K().apply(p_cam);
    return {{h.x / h.z, h.y / h.z}, p_cam.z};
}

Vec3 unproject_pixel(const CameraView& view, Vec2 pixel, double depth) {
    if (!(depth > 0.0) || !std::isfinite(depth))
        throw NonPositiveDepthError("unprojection depth must be positive and finite");
    return depth * view.K_inv().apply(Vec3{pixel.x, pixel.y, 1.0});
}

}  // namespace gdepth
