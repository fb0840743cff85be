#pragma once

#include <cstdint>
#include <vector>

namespace edgeloc {

/// 8-bit grayscale raster, row-major.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;

    RasterImage() = default;
    RasterImage(int w, int h, uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

    uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    uint8_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return pixels.size(); }

    bool operator==(const RasterImage&) const = default;
};

/// Binary edge mask, row-major, values strictly {0, 1}.
struct EdgeMap {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;

    EdgeMap() = default;
    EdgeMap(int w, int h) : width(w), height(h), bits(static_cast<size_t>(w) * h, 0) {}

    uint8_t at(int x, int y) const { return bits[static_cast<size_t>(y) * width + x]; }
    uint8_t& at(int x, int y) { return bits[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return bits.size(); }

    bool operator==(const EdgeMap&) const = default;
};

}  // namespace edgeloc
