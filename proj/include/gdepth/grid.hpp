#pragma once

#include <cstddef>
#include <vector>

#include "gdepth/errors.hpp"

namespace gdepth {

// Dense row-major scalar field. This is the raw storage shared by latents,
// gradients and masks-of-doubles; the domain types (Image, DepthMap) add
// their own invariants on top.
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Grid() = default;
    Grid(int w, int h, double fill = 0.0) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0) throw InvalidArgumentError("Grid dimensions must be positive");
    }

    size_t size() const { return data.size(); }
    double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }

    bool same_shape(const Grid& other) const {
        return width == other.width && height == other.height;
    }
};

inline void require_same_shape(const Grid& a, const Grid& b, const char* what) {
    if (!a.same_shape(b))
        throw DimensionMismatchError(std::string(what) + ": grids have different shapes");
}

}  // namespace gdepth
