#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "gdepth/errors.hpp"
#include "gdepth/geometry.hpp"

namespace {

using namespace gdepth;

constexpr double kPi = 3.14159265358979323846;

CameraView simple_view(double fx = 50.0, double fy = 60.0, double cx = 31.5, double cy = 23.5,
                       Mat4 extrinsic = Mat4::identity(), int w = 64, int h = 48) {
    return CameraView(make_intrinsics(fx, fy, cx, cy), extrinsic, w, h);
}

bool mat4_near_identity(const Mat4& m, double tol) {
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const double want = (i == j) ? 1.0 : 0.0;
            if (std::fabs(m.at(i, j) - want) > tol) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("Mat3 inverse composes to the identity") {
    Mat3 m;
    m.m = {2.0, 1.0, 0.5, -1.0, 3.0, 0.25, 0.0, -0.5, 1.5};
    const Mat3 inv = m.inverse();
    const Mat3 prod = m.mul(inv);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double want = (i == j) ? 1.0 : 0.0;
            CHECK(prod.at(i, j) == doctest::Approx(want).epsilon(1e-12));
        }
    }
    // Cofactor expansion oracle: det computed by a different association.
    const double oracle = 2.0 * (3.0 * 1.5 - 0.25 * -0.5) - 1.0 * (-1.0 * 1.5 - 0.25 * 0.0) +
                          0.5 * (-1.0 * -0.5 - 3.0 * 0.0);
    CHECK(m.det() == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("singular Mat3 inversion throws") {
    Mat3 m;
    m.m = {1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 0.0};  // row1 = 2*row0
    CHECK_THROWS_AS(m.inverse(), InvalidArgumentError);
}

TEST_CASE("Mat3 apply matches explicit arithmetic") {
    Mat3 m;
    m.m = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0};
    const Vec3 v = m.apply({1.0, -1.0, 2.0});
    CHECK(v.x == doctest::Approx(1.0 - 2.0 + 6.0));
    CHECK(v.y == doctest::Approx(4.0 - 5.0 + 12.0));
    CHECK(v.z == doctest::Approx(7.0 - 8.0 + 20.0));
}

TEST_CASE("axis rotations follow the right-handed convention") {
    // +z forward, +x right, +y down. rotate_y(+pi/2) carries +z onto +x.
    const Mat4 ry = Mat4::rotate_y(kPi / 2.0);
    const Vec3 fz = ry.rotate({0.0, 0.0, 1.0});
    CHECK(fz.x == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fz.y == doctest::Approx(0.0));
    CHECK(std::fabs(fz.z) < 1e-15);

    // rotate_x(+pi/2) carries +y onto +z.
    const Mat4 rx = Mat4::rotate_x(kPi / 2.0);
    const Vec3 fy = rx.rotate({0.0, 1.0, 0.0});
    CHECK(std::fabs(fy.y) < 1e-15);
    CHECK(fy.z == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("Mat4 transform_point is rotate plus translate") {
    const Mat4 e = Mat4::translate(1.0, -2.0, 0.5).mul(Mat4::rotate_y(0.3));
    const Vec3 p{0.7, -0.2, 2.0};
    const Vec3 full = e.transform_point(p);
    const Vec3 pieces = e.rotate(p) + e.translation();
    CHECK(full.x == doctest::Approx(pieces.x).epsilon(1e-15));
    CHECK(full.y == doctest::Approx(pieces.y).epsilon(1e-15));
    CHECK(full.z == doctest::Approx(pieces.z).epsilon(1e-15));
}

TEST_CASE("rigid_inverse inverts a rotation-translation chain") {
    const Mat4 e = Mat4::translate(0.4, 1.2, -0.9)
                       .mul(Mat4::rotate_y(0.37))
                       .mul(Mat4::rotate_x(-0.21));
    CHECK(mat4_near_identity(e.mul(e.rigid_inverse()), 1e-14));
    CHECK(mat4_near_identity(e.rigid_inverse().mul(e), 1e-14));

    // Round-tripping a point through the pair lands back where it started.
    const Vec3 p{1.5, -0.3, 4.0};
    const Vec3 back = e.rigid_inverse().transform_point(e.transform_point(p));
    CHECK(back.x == doctest::Approx(p.x).epsilon(1e-13));
    CHECK(back.y == doctest::Approx(p.y).epsilon(1e-13));
    CHECK(back.z == doctest::Approx(p.z).epsilon(1e-13));
}

TEST_CASE("Image constructor clamps into range and rejects non-finite samples") {
    Image img(2, 1, 1, std::vector<double>{-0.25, 1.75});
    CHECK(img.at(0, 0) == 0.0);
    CHECK(img.at(0, 1) == 1.0);

    CHECK_THROWS_AS(Image(2, 1, 1, std::vector<double>{0.5, std::numeric_limits<double>::quiet_NaN()}),
                    InvalidArgumentError);
    CHECK_THROWS_AS(Image(2, 1, 1, std::vector<double>{0.5, std::numeric_limits<double>::infinity()}),
                    InvalidArgumentError);
    CHECK_THROWS_AS(Image(2, 1, 2, std::vector<double>(4, 0.0)), InvalidArgumentError);  // 2 channels
    CHECK_THROWS_AS(Image(2, 2, 1, std::vector<double>(3, 0.0)), DimensionMismatchError);
    CHECK_THROWS_AS(Image(0, 2, 1, std::vector<double>{}), InvalidArgumentError);
}

TEST_CASE("DepthMap enforces strictly positive finite depth on valid pixels") {
    CHECK_THROWS_AS(DepthMap(2, 1, std::vector<double>{1.0, 0.0}), NonPositiveDepthError);
    CHECK_THROWS_AS(DepthMap(2, 1, std::vector<double>{1.0, -3.0}), NonPositiveDepthError);
    CHECK_THROWS_AS(DepthMap(2, 1, std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()}),
                    InvalidArgumentError);

    // Garbage under an invalid mask bit is tolerated and normalized to zero.
    DepthMap d(2, 1, std::vector<double>{2.5, std::numeric_limits<double>::quiet_NaN()},
               std::vector<uint8_t>{1, 0});
    CHECK(d.at(0, 0) == 2.5);
    CHECK(d.at(0, 1) == 0.0);
    CHECK(d.valid_at(0, 0));
    CHECK(!d.valid_at(0, 1));
    CHECK(d.valid_count() == 1);
    CHECK(d.pixel_count() == 2);
}

TEST_CASE("CameraView rejects malformed intrinsics and non-rigid extrinsics") {
    const Mat3 k = make_intrinsics(50.0, 60.0, 31.5, 23.5);
    CHECK_NOTHROW(CameraView(k, Mat4::identity(), 64, 48));

    CHECK_THROWS_AS(CameraView(make_intrinsics(0.0, 60.0, 31.5, 23.5), Mat4::identity(), 64, 48),
                    InvalidArgumentError);
    CHECK_THROWS_AS(CameraView(make_intrinsics(50.0, -1.0, 31.5, 23.5), Mat4::identity(), 64, 48),
                    InvalidArgumentError);

    // Scaled rotation: rows stay orthogonal but are no longer unit length.
    Mat4 scaled = Mat4::rotate_y(0.2);
    for (int j = 0; j < 3; ++j) scaled.at(0, j) *= 1.0 + 1e-4;
    CHECK_THROWS_AS(CameraView(k, scaled, 64, 48), InvalidArgumentError);

    // Reflection: orthonormal rows but determinant -1.
    Mat4 mirror;
    mirror.at(0, 0) = -1.0;
    CHECK_THROWS_AS(CameraView(k, mirror, 64, 48), InvalidArgumentError);

    Mat4 bad_bottom;
    bad_bottom.at(3, 0) = 1e-3;
    CHECK_THROWS_AS(CameraView(k, bad_bottom, 64, 48), InvalidArgumentError);

    CHECK_THROWS_AS(CameraView(k, Mat4::identity(), 0, 48), InvalidArgumentError);
}

TEST_CASE("make_intrinsics places parameters on the projective layout") {
    const Mat3 k = make_intrinsics(100.0, 120.0, 32.0, 24.0);
    CHECK(k.at(0, 0) == 100.0);
    CHECK(k.at(1, 1) == 120.0);
    CHECK(k.at(0, 2) == 32.0);
    CHECK(k.at(1, 2) == 24.0);
    CHECK(k.at(2, 2) == 1.0);
    CHECK(k.at(0, 1) == 0.0);
    CHECK(k.at(1, 0) == 0.0);
}

TEST_CASE("relative_transform maps src camera coordinates into dst") {
    // A pure-baseline stereo rig: right camera offset +x in world space.
    const CameraView left = simple_view();
    const CameraView right = simple_view(50.0, 60.0, 31.5, 23.5, Mat4::translate(0.5, 0.0, 0.0));

    const Mat4 l2r = relative_transform(left, right);
    // A point on the left optical axis appears shifted by -baseline in x.
    const Vec3 p = l2r.transform_point({0.0, 0.0, 4.0});
    CHECK(p.x == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(p.y == doctest::Approx(0.0));
    CHECK(p.z == doctest::Approx(4.0).epsilon(1e-15));

    // General oracle: E_dst^{-1} * E_src assembled by hand.
    const CameraView src = simple_view(50.0, 60.0, 31.5, 23.5,
                                       Mat4::translate(0.2, -0.1, 0.3).mul(Mat4::rotate_y(0.15)));
    const CameraView dst = simple_view(50.0, 60.0, 31.5, 23.5,
                                       Mat4::translate(-0.4, 0.2, 0.0).mul(Mat4::rotate_x(-0.08)));
    const Mat4 got = relative_transform(src, dst);
    const Mat4 want = dst.E().rigid_inverse().mul(src.E());
    for (int i = 0; i < 16; ++i) CHECK(got.m[i] == doctest::Approx(want.m[i]).epsilon(1e-14));
}

TEST_CASE("project then unproject returns the original point to 1e-12") {
    const CameraView view = simple_view(83.0, 97.0, 30.7, 25.2);
    for (double z : {0.5, 2.0, 7.3, 42.0}) {
        for (double x : {-1.2, 0.0, 0.8}) {
            for (double y : {-0.9, 0.3}) {
                const Vec3 p{x, y, z};
                const ProjectedPoint proj = project_point(view, p);
                CHECK(proj.depth == z);
                const Vec3 back = unproject_pixel(view, proj.pixel, proj.depth);
                CHECK(std::fabs(back.x - p.x) < 1e-12);
                CHECK(std::fabs(back.y - p.y) < 1e-12);
                CHECK(std::fabs(back.z - p.z) < 1e-12);
            }
        }
    }
}

TEST_CASE("unproject then project returns the original pixel to 1e-12") {
    const CameraView view = simple_view(125.0, 110.0, 63.5, 47.5, Mat4::identity(), 128, 96);
    for (double px : {0.0, 17.25, 63.5, 127.0}) {
        for (double py : {0.0, 42.75, 95.0}) {
            for (double depth : {0.3, 5.0, 31.0}) {
                const Vec3 cam = unproject_pixel(view, {px, py}, depth);
                CHECK(cam.z == doctest::Approx(depth).epsilon(1e-15));
                const ProjectedPoint proj = project_point(view, cam);
                CHECK(std::fabs(proj.pixel.x - px) < 1e-12);
                CHECK(std::fabs(proj.pixel.y - py) < 1e-12);
            }
        }
    }
}

TEST_CASE("projection rejects points at or behind the camera") {
    const CameraView view = simple_view();
    CHECK_THROWS_AS(project_point(view, {0.0, 0.0, 0.0}), NonPositiveDepthError);
    CHECK_THROWS_AS(project_point(view, {1.0, 1.0, -2.0}), NonPositiveDepthError);
    CHECK_THROWS_AS(unproject_pixel(view, {10.0, 10.0}, 0.0), NonPositiveDepthError);
    CHECK_THROWS_AS(unproject_pixel(view, {10.0, 10.0}, -1.0), NonPositiveDepthError);
}

TEST_CASE("ViewPair validates image sizes against the views") {
    const CameraView left = simple_view();
    const CameraView right = simple_view(50.0, 60.0, 31.5, 23.5, Mat4::translate(0.5, 0.0, 0.0));
    CHECK_NOTHROW(ViewPair(left, right, Image(64, 48, 1, 0.5), Image(64, 48, 1, 0.5)));
    CHECK_THROWS_AS(ViewPair(left, right, Image(32, 48, 1, 0.5), Image(64, 48, 1, 0.5)),
                    DimensionMismatchError);
    CHECK_THROWS_AS(ViewPair(left, right, Image(64, 48, 1, 0.5), Image(64, 48, 3, 0.5)),
                    DimensionMismatchError);
}
