#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gdepth/errors.hpp"
#include "gdepth/grid.hpp"

namespace gdepth {

// Coordinate conventions used throughout:
//  - camera frames are right-handed with +z forward (in front of the camera),
//    +x right, +y down;
//  - a pixel at row i, column j is sampled at continuous coordinates
//    (x=j, y=i), i.e. integer coordinates sit at pixel centers;
//  - extrinsics are camera-to-world rigid transforms.

struct Vec2 {
    double x = 0.0, y = 0.0;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

struct Mat3 {
    // Row-major.
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double at(int r, int c) const { return m[r * 3 + c]; }
    double& at(int r, int c) { return m[r * 3 + c]; }
    Vec3 apply(Vec3 v) const;
    Mat3 mul(const Mat3& o) const;
    double det() const;
    Mat3 inverse() const;  // throws InvalidArgument on a singular matrix
};

struct Mat4 {
    // Row-major homogeneous transform; bottom row must stay (0,0,0,1).
    std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    double at(int r, int c) const { return m[r * 4 + c]; }
    double& at(int r, int c) { return m[r * 4 + c]; }
    Vec3 rotation_row(int r) const { return {at(r, 0), at(r, 1), at(r, 2)}; }
    Vec3 translation() const { return {at(0, 3), at(1, 3), at(2, 3)}; }
    Vec3 transform_point(Vec3 p) const;
    Vec3 rotate(Vec3 v) const;  // applies the 3x3 block only
    Mat4 mul(const Mat4& o) const;
    Mat4 rigid_inverse() const;  // valid only for rigid transforms

    static Mat4 identity() { return Mat4{}; }
    static Mat4 translate(double x, double y, double z);
    static Mat4 rotate_y(double radians);
    static Mat4 rotate_x(double radians);
};

// Intensity image, values in [0, 1]. Channel-interleaved row-major storage:
// index(y, x, c) = (y*width + x)*channels + c. The constructor rejects
// non-finite samples and clamps everything into range.
class Image {
  public:
    Image(int width, int height, int channels, std::vector<double> data);
    Image(int width, int height, int channels, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    size_t sample_count() const { return data_.size(); }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& mutable_data() { return data_; }

    double at(int y, int x, int c = 0) const {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }
    double& at(int y, int x, int c = 0) {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }

  private:
    int width_, height_, channels_;
    std::vector<double> data_;
};

// Per-pixel depth in meters plus a validity mask. Valid entries must be
// strictly positive and finite; entries under an invalid mask bit are
// normalized to 0 so the stored buffer never carries NaN/Inf.
class DepthMap {
  public:
    DepthMap(int width, int height, std::vector<double> depths, std::vector<uint8_t> valid);
    DepthMap(int width, int height, std::vector<double> depths);  // all valid
    DepthMap(int width, int height, double fill);

    int width() const { return width_; }
    int height() const { return height_; }
    size_t pixel_count() const { return depths_.size(); }
    const std::vector<double>& data() const { return depths_; }
    const std::vector<uint8_t>& valid_mask() const { return valid_; }

    double at(int y, int x) const { return depths_[static_cast<size_t>(y) * width_ + x]; }
    bool valid_at(int y, int x) const { return valid_[static_cast<size_t>(y) * width_ + x] != 0; }
    size_t valid_count() const;

  private:
    int width_, height_;
    std::vector<double> depths_;
    std::vector<uint8_t> valid_;
};

// Calibrated camera: intrinsics K, camera-to-world extrinsic E, sensor size.
// Construction validates fx,fy > 0, K invertibility, a rigid E (orthonormal
// rotation within 1e-9, determinant +1, homogeneous bottom row).
class CameraView {
  public:
    CameraView(Mat3 K, Mat4 E, int width, int height);

    const Mat3& K() const { return K_; }
    const Mat3& K_inv() const { return K_inv_; }
    const Mat4& E() const { return E_; }
    int width() const { return width_; }
    int height() const { return height_; }
    double fx() const { return K_.at(0, 0); }
    double fy() const { return K_.at(1, 1); }
    double cx() const { return K_.at(0, 2); }
    double cy() const { return K_.at(1, 2); }

  private:
    Mat3 K_;
    Mat3 K_inv_;
    Mat4 E_;
    int width_, height_;
};

Mat3 make_intrinsics(double fx, double fy, double cx, double cy);

// Two calibrated views of the same scene with their captured images.
struct ViewPair {
    CameraView left;
    CameraView right;
    Image left_image;
    Image right_image;

    ViewPair(CameraView l, CameraView r, Image li, Image ri);
};

// Rigid transform taking src-camera coordinates to dst-camera coordinates:
// E_dst^{-1} * E_src.
Mat4 relative_transform(const CameraView& src, const CameraView& dst);

struct ProjectedPoint {
    Vec2 pixel;
    double depth = 0.0;  // z in the camera frame, meters
};

// Perspective projection of a camera-space point to continuous pixel
// coordinates. Throws NonPositiveDepth for points at or behind the camera.
ProjectedPoint project_point(const CameraView& view, Vec3 p_cam);

// Back-projects pixel (x, y) at the given depth (z distance, meters) to
// camera space: depth * K^{-1} * (x, y, 1).
Vec3 unproject_pixel(const CameraView& view, Vec2 pixel, double depth);

}  // namespace gdepth
