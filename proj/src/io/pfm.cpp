#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <vector>

#include "gdepth/errors.hpp"
#include "gdepth/io.hpp"

namespace gdepth {

namespace {

// Pulls the next whitespace-delimited token out of the header region.
std::string next_token(const std::string& bytes, size_t& pos, const std::string& path) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw TruncatedDataError(path + ": header ends early");
    return bytes.substr(start, pos - start);
}

int parse_dim(const std::string& tok, const std::string& path) {
    size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &used);
    } catch (const std::exception&) {
        throw MalformedHeaderError(path + ": bad dimension '" + tok + "'");
    }
    if (used != tok.size() || v <= 0)
        throw MalformedHeaderError(path + ": bad dimension '" + tok + "'");
    return v;
}

// Assembled by value, so the resulting integer holds the IEEE-754 bit
// pattern regardless of host byte order.
float float_from_bytes(const unsigned char* b, bool little_endian) {
    uint32_t bits;
    if (little_endian) {
        bits = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
               (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    } else {
        bits = static_cast<uint32_t>(b[3]) | (static_cast<uint32_t>(b[2]) << 8) |
               (static_cast<uint32_t>(b[1]) << 16) | (static_cast<uint32_t>(b[0]) << 24);
    }
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
}

}  // namespace

void write_pfm(const std::string& path, const DepthMap& depth) {
    const int w = depth.width();
    const int h = depth.height();
    std::string out;
    out.reserve(32 + static_cast<size_t>(w) * h * 4);
    out += "Pf\n";
    out += std::to_string(w) + " " + std::to_string(h) + "\n";
    out += "-1.0\n";  // negative scale: samples are little-endian

    // Rows are stored bottom-to-top; invalid pixels travel as +infinity.
    for (int y = h - 1; y >= 0; --y) {
        for (int x = 0; x < w; ++x) {
            const float f = depth.valid_at(y, x) ? static_cast<float>(depth.at(y, x))
                                                 : std::numeric_limits<float>::infinity();
            uint32_t bits;
            std::memcpy(&bits, &f, sizeof bits);
            out.push_back(static_cast<char>(bits & 0xff));
            out.push_back(static_cast<char>((bits >> 8) & 0xff));
            out.push_back(static_cast<char>((bits >> 16) & 0xff));
            out.push_back(static_cast<char>((bits >> 24) & 0xff));
        }
    }
    write_file_atomic(path, out);
}

DepthMap read_pfm(const std::string& path) {
    const std::string bytes = read_file(path);
    size_t pos = 0;

    const std::string magic = next_token(bytes, pos, path);
    if (magic == "PF")
        throw MalformedHeaderError(path + ": color 'PF' maps are not supported, expected grayscale 'Pf'");
    if (magic != "Pf")
        throw MalformedHeaderError(path + ": not a PFM file (magic '" + magic + "')");

    const int w = parse_dim(next_token(bytes, pos, path), path);
    const int h = parse_dim(next_token(bytes, pos, path), path);
    if (static_cast<size_t>(w) * h > (size_t{1} << 26))
        throw MalformedHeaderError(path + ": implausible dimensions");

    const std::string scale_tok = next_token(bytes, pos, path);
    double scale = 0.0;
    {
        size_t used = 0;
        try {
            scale = std::stod(scale_tok, &used);
        } catch (const std::exception&) {
            throw MalformedHeaderError(path + ": bad scale '" + scale_tok + "'");
        }
        if (used != scale_tok.size() || !std::isfinite(scale) || scale == 0.0)
            throw MalformedHeaderError(path + ": bad scale '" + scale_tok + "'");
    }
    // Only the sign matters here: it selects the byte order. The magnitude
    // is a nominal units factor that this toolchain neither emits nor needs.
    const bool little_endian = scale < 0.0;

    // Exactly one whitespace byte separates the header from the samples.
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw MalformedHeaderError(path + ": missing separator before sample data");
    ++pos;

    const size_t need = static_cast<size_t>(w) * h * 4;
    if (bytes.size() - pos < need)
        throw TruncatedDataError(path + ": sample data ends early (" +
                                 std::to_string(bytes.size() - pos) + " of " +
                                 std::to_string(need) + " bytes)");
    if (bytes.size() - pos > need)
        throw MalformedHeaderError(path + ": trailing bytes after sample data");

    std::vector<double> depths(static_cast<size_t>(w) * h, 0.0);
    std::vector<uint8_t> valid(depths.size(), 0);
    const unsigned char* raw = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
    for (int y = h - 1; y >= 0; --y) {
        for (int x = 0; x < w; ++x) {
            const float f = float_from_bytes(raw, little_endian);
            raw += 4;
            const size_t i = static_cast<size_t>(y) * w + x;
            if (std::isfinite(f) && f > 0.0f) {
                depths[i] = static_cast<double>(f);
                valid[i] = 1;
            }
        }
    }
    return DepthMap(w, h, std::move(depths), std::move(valid));
}

}  // namespace gdepth
