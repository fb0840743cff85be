#pragma once

#include <string>

#include "edgeloc/image.hpp"

namespace edgeloc {

struct CannyParams {
    double low_threshold = 100.0;   // raw Sobel magnitude on 8-bit input
    double high_threshold = 200.0;  // raw Sobel magnitude on 8-bit input
    int sobel_kernel = 3;           // odd, >= 3
    double gaussian_sigma = 1.0;    // pixels

    bool operator==(const CannyParams&) const = default;
};

/// Canny edge detection: Gaussian smoothing, Sobel gradients, 4-bin
/// non-maximum suppression, double-threshold hysteresis (8-connected).
/// Pixels within sobel_kernel/2 of the border are never edges.
EdgeMap canny(const RasterImage& img, const CannyParams& p = {});

/// Loads an externally produced edge map; pixels > 127 become 1.
struct PixelSize {
    int width = 0;
    int height = 0;
};
EdgeMap import_edge_map(const std::string& path, PixelSize expected_size);

/// Stores an edge map as P5 PGM with values {0, 255}.
void write_edge_map(const std::string& path, const EdgeMap& edges);

/// Fraction of pixels that are edges.
double edge_fraction(const EdgeMap& edges);

}  // namespace edgeloc
