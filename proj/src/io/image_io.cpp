#include <cctype>
#include <cmath>
#include <vector>

#include "gdepth/errors.hpp"
#include "gdepth/io.hpp"

namespace gdepth {

namespace {

// PNM headers allow '#' comments anywhere between tokens.
std::string next_pnm_token(const std::string& bytes, size_t& pos, const std::string& path) {
    for (;;) {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (pos < bytes.size() && bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    const size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw TruncatedDataError(path + ": header ends early");
    return bytes.substr(start, pos - start);
}

int parse_pnm_int(const std::string& tok, const std::string& path, const char* what) {
    size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &used);
    } catch (const std::exception&) {
        throw MalformedHeaderError(path + ": bad " + what + " '" + tok + "'");
    }
    if (used != tok.size() || v <= 0)
        throw MalformedHeaderError(path + ": bad " + what + " '" + tok + "'");
    return v;
}

}  // namespace

void write_image(const std::string& path, const Image& image) {
    const int w = image.width();
    const int h = image.height();
    const int ch = image.channels();
    std::string out = (ch == 3) ? "P6\n" : "P5\n";
    out += std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.reserve(out.size() + static_cast<size_t>(w) * h * ch);
    const std::vector<double>& data = image.data();
    const size_t n = image.sample_count();
    for (size_t i = 0; i < n; ++i) {
        // Image samples are already clamped to [0, 1] on construction.
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(data[i] * 255.0))));
    }
    write_file_atomic(path, out);
}

Image read_image(const std::string& path) {
    const std::string bytes = read_file(path);
    size_t pos = 0;

    const std::string magic = next_pnm_token(bytes, pos, path);
    int channels = 0;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw MalformedHeaderError(path + ": expected binary PGM 'P5' or PPM 'P6', got '" + magic + "'");

    const int w = parse_pnm_int(next_pnm_token(bytes, pos, path), path, "width");
    const int h = parse_pnm_int(next_pnm_token(bytes, pos, path), path, "height");
    if (static_cast<size_t>(w) * h > (size_t{1} << 26))
        throw MalformedHeaderError(path + ": implausible dimensions");
    const int maxval = parse_pnm_int(next_pnm_token(bytes, pos, path), path, "maxval");
    if (maxval > 255)
        throw MalformedHeaderError(path + ": 16-bit samples (maxval " + std::to_string(maxval) +
                                   ") are not supported");

    // Exactly one whitespace byte separates the header from the samples.
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw MalformedHeaderError(path + ": missing separator before sample data");
    ++pos;

    const size_t need = static_cast<size_t>(w) * h * channels;
    if (bytes.size() - pos < need)
        throw TruncatedDataError(path + ": sample data ends early (" +
                                 std::to_string(bytes.size() - pos) + " of " +
                                 std::to_string(need) + " bytes)");
    if (bytes.size() - pos > need)
        throw MalformedHeaderError(path + ": trailing bytes after sample data");

    std::vector<double> data(need);
    const double inv = 1.0 / static_cast<double>(maxval);
    for (size_t i = 0; i < need; ++i)
        data[i] = static_cast<double>(static_cast<unsigned char>(bytes[pos + i])) * inv;
    return Image(w, h, channels, std::move(data));
}

}  // namespace gdepth
