#pragma once

// File formats used by the command-line tools: PFM depth maps, binary
// PGM/PPM images, and a line-based text format for the calibrated rig.
// Every writer goes through an atomic temp-then-rename step so a crashed
// run never leaves a half-written artifact behind.

#include <string>

#include "gdepth/geometry.hpp"

namespace gdepth {

// Writes `bytes` to `path` via a sibling temporary file and a rename.
// Throws IoError when the file cannot be created, written, or renamed.
void write_file_atomic(const std::string& path, const std::string& bytes);

// Reads a whole file into memory. Throws IoError when it cannot be opened.
std::string read_file(const std::string& path);

// --- PFM depth maps -------------------------------------------------------
//
// Grayscale "Pf" maps only: header `Pf`, `<width> <height>`, then a scale
// line whose sign encodes byte order (negative = little-endian, the only
// order we write). Samples are 32-bit floats, rows stored bottom-to-top.
// Invalid pixels are written as +infinity; on read, any non-finite or
// non-positive sample becomes an invalid pixel. A color "PF" header is
// rejected by name rather than silently mangled.

void write_pfm(const std::string& path, const DepthMap& depth);
DepthMap read_pfm(const std::string& path);

// --- PGM / PPM images -----------------------------------------------------
//
// Binary P5 (one channel) and P6 (three channels) with maxval <= 255.
// Samples map linearly between bytes and [0, 1].

void write_image(const std::string& path, const Image& image);
Image read_image(const std::string& path);

// --- Calibration rig ------------------------------------------------------
//
// Line-based text; `#` starts a comment that runs to the end of the line.
// Each camera is a block of key/value tokens:
//
//   camera left
//   fx= 96  fy= 96  cx= 31.5  cy= 31.5
//   width= 64  height= 64
//   extrinsic
//   1 0 0 0
//   0 1 0 0
//   0 0 1 0
//   0 0 0 1
//
// Keys may appear in any order inside a block, values may share lines, and
// `fx=96` (no space) is accepted too. The 16 extrinsic numbers are the
// row-major camera-to-world transform. Both a `left` and a `right` block
// are required. A block missing any field raises MissingField; a rotation
// that is not orthonormal within 1e-6 per entry, or whose determinant is
// not positive, raises NonRigidExtrinsic. Rotations inside that tolerance
// are re-orthonormalized before the views are built, so text that merely
// lost digits to rounding parses cleanly.

struct CalibratedRig {
    CameraView left;
    CameraView right;
};

void write_calibration(const std::string& path, const CameraView& left, const CameraView& right);
CalibratedRig read_calibration(const std::string& path);

}  // namespace gdepth
