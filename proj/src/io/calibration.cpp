#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gdepth/errors.hpp"
#include "gdepth/io.hpp"

namespace gdepth {

namespace {

// Per-entry tolerance for accepting a stored extrinsic as rigid. Anything
// inside it is re-orthonormalized; anything outside it is rejected, because
// a visibly sheared or reflected "rotation" is bad input, not rounding.
constexpr double kRigidTol = 1e-6;

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_number(const std::string& tok, const std::string& path, const std::string& what) {
    size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        throw MalformedHeaderError(path + ": bad value '" + tok + "' for " + what);
    }
    if (used != tok.size() || !std::isfinite(v))
        throw MalformedHeaderError(path + ": bad value '" + tok + "' for " + what);
    return v;
}

int parse_integer(const std::string& tok, const std::string& path, const std::string& what) {
    size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &used);
    } catch (const std::exception&) {
        throw MalformedHeaderError(path + ": bad value '" + tok + "' for " + what);
    }
    if (used != tok.size())
        throw MalformedHeaderError(path + ": bad value '" + tok + "' for " + what);
    return v;
}

// Strips '#' comments and splits the remainder on whitespace.
std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::string tok;
        while (words >> tok) tokens.push_back(tok);
    }
    return tokens;
}

struct CameraFields {
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    std::array<double, 16> ext{};
    bool have_fx = false, have_fy = false, have_cx = false, have_cy = false;
    bool have_width = false, have_height = false, have_ext = false;
};

Vec3 normalized(Vec3 v, const std::string& path, const std::string& name) {
    const double len = std::sqrt(dot(v, v));
    if (len <= 0.0)
        throw NonRigidExtrinsicError(path + ": camera '" + name + "' rotation row has zero length");
    return (1.0 / len) * v;
}

Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

CameraView build_view(const std::string& path, const std::string& name, const CameraFields& cam) {
    const char* missing = nullptr;
    if (!cam.have_fx)
        missing = "fx=";
    else if (!cam.have_fy)
        missing = "fy=";
    else if (!cam.have_cx)
        missing = "cx=";
    else if (!cam.have_cy)
        missing = "cy=";
    else if (!cam.have_width)
        missing = "width=";
    else if (!cam.have_height)
        missing = "height=";
    else if (!cam.have_ext)
        missing = "extrinsic";
    if (missing)
        throw MissingFieldError(path + ": camera '" + name + "' is missing " + missing);

    Mat4 E;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) E.at(r, c) = cam.ext[r * 4 + c];

    for (int c = 0; c < 4; ++c) {
        const double want = (c == 3) ? 1.0 : 0.0;
        if (std::fabs(E.at(3, c) - want) > kRigidTol)
            throw NonRigidExtrinsicError(path + ": camera '" + name +
                                         "' extrinsic bottom row is not (0, 0, 0, 1)");
    }
    const Vec3 rows[3] = {E.rotation_row(0), E.rotation_row(1), E.rotation_row(2)};
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const double want = (a == b) ? 1.0 : 0.0;
            if (std::fabs(dot(rows[a], rows[b]) - want) > kRigidTol)
                throw NonRigidExtrinsicError(path + ": camera '" + name +
                                             "' rotation is not orthonormal within " + num(kRigidTol));
        }
    }
    const double det =
        rows[0].x * (rows[1].y * rows[2].z - rows[1].z * rows[2].y) -
        rows[0].y * (rows[1].x * rows[2].z - rows[1].z * rows[2].x) +
        rows[0].z * (rows[1].x * rows[2].y - rows[1].y * rows[2].x);
    if (det <= 0.0)
        throw NonRigidExtrinsicError(path + ": camera '" + name +
                                     "' rotation is a reflection (determinant " + num(det) + ")");

    // The text survived the tolerance checks; rebuild an exactly orthonormal,
    // right-handed basis from it so downstream construction (which is far
    // stricter) accepts values that merely lost digits in serialization.
    Vec3 r0 = normalized(rows[0], path, name);
    Vec3 r1 = rows[1] - dot(rows[1], r0) * r0;
    r1 = normalized(r1, path, name);
    const Vec3 r2 = cross(r0, r1);
    const Vec3 fixed[3] = {r0, r1, r2};
    for (int r = 0; r < 3; ++r) {
        E.at(r, 0) = fixed[r].x;
        E.at(r, 1) = fixed[r].y;
        E.at(r, 2) = fixed[r].z;
    }
    E.at(3, 0) = 0.0;
    E.at(3, 1) = 0.0;
    E.at(3, 2) = 0.0;
    E.at(3, 3) = 1.0;

    return CameraView(make_intrinsics(cam.fx, cam.fy, cam.cx, cam.cy), E, cam.width, cam.height);
}

}  // namespace

void write_calibration(const std::string& path, const CameraView& left, const CameraView& right) {
    std::string out = "# stereo rig: intrinsics plus row-major camera-to-world extrinsics\n";
    const CameraView* views[2] = {&left, &right};
    const char* names[2] = {"left", "right"};
    for (int v = 0; v < 2; ++v) {
        const CameraView& cam = *views[v];
        out += "camera ";
        out += names[v];
        out += "\n";
        out += "fx= " + num(cam.fx()) + "  fy= " + num(cam.fy()) + "\n";
        out += "cx= " + num(cam.cx()) + "  cy= " + num(cam.cy()) + "\n";
        out += "width= " + std::to_string(cam.width()) + "  height= " +
               std::to_string(cam.height()) + "\n";
        out += "extrinsic\n";
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                out += num(cam.E().at(r, c));
                out += (c == 3) ? "\n" : " ";
            }
        }
    }
    write_file_atomic(path, out);
}

CalibratedRig read_calibration(const std::string& path) {
    const std::vector<std::string> tokens = tokenize(read_file(path));
    if (tokens.empty()) throw MissingFieldError(path + ": no 'camera' blocks");

    std::map<std::string, CameraFields> blocks;
    size_t i = 0;
    while (i < tokens.size()) {
        if (tokens[i] != "camera")
            throw MalformedHeaderError(path + ": expected 'camera', got '" + tokens[i] + "'");
        if (++i >= tokens.size()) throw TruncatedDataError(path + ": 'camera' without a name");
        const std::string name = tokens[i++];
        if (name != "left" && name != "right")
            throw MalformedHeaderError(path + ": camera name must be 'left' or 'right', got '" +
                                       name + "'");
        if (blocks.count(name))
            throw MalformedHeaderError(path + ": duplicate 'camera " + name + "' block");
        CameraFields& cam = blocks[name];

        while (i < tokens.size() && tokens[i] != "camera") {
            const std::string tok = tokens[i++];
            if (tok == "extrinsic") {
                for (int k = 0; k < 16; ++k) {
                    if (i >= tokens.size())
                        throw TruncatedDataError(path + ": extrinsic for '" + name + "' ends after " +
                                                 std::to_string(k) + " of 16 numbers");
                    cam.ext[static_cast<size_t>(k)] =
                        parse_number(tokens[i++], path, "extrinsic entry");
                }
                cam.have_ext = true;
                continue;
            }
            const size_t eq = tok.find('=');
            if (eq == std::string::npos)
                throw MalformedHeaderError(path + ": unexpected token '" + tok + "' in camera '" +
                                           name + "'");
            const std::string key = tok.substr(0, eq);
            std::string value = tok.substr(eq + 1);
            if (value.empty()) {
                if (i >= tokens.size()) throw TruncatedDataError(path + ": '" + key + "=' without a value");
                value = tokens[i++];
            }
            if (key == "fx") {
                cam.fx = parse_number(value, path, "fx=");
                cam.have_fx = true;
            } else if (key == "fy") {
                cam.fy = parse_number(value, path, "fy=");
                cam.have_fy = true;
            } else if (key == "cx") {
                cam.cx = parse_number(value, path, "cx=");
                cam.have_cx = true;
            } else if (key == "cy") {
                cam.cy = parse_number(value, path, "cy=");
                cam.have_cy = true;
            } else if (key == "width") {
                cam.width = parse_integer(value, path, "width=");
                cam.have_width = true;
            } else if (key == "height") {
                cam.height = parse_integer(value, path, "height=");
                cam.have_height = true;
            } else {
                throw MalformedHeaderError(path + ": unknown field '" + key + "='");
            }
        }
    }

    const auto left = blocks.find("left");
    if (left == blocks.end()) throw MissingFieldError(path + ": no 'camera left' block");
    const auto right = blocks.find("right");
    if (right == blocks.end()) throw MissingFieldError(path + ": no 'camera right' block");
    return CalibratedRig{build_view(path, "left", left->second),
                         build_view(path, "right", right->second)};
}

}  // namespace gdepth
