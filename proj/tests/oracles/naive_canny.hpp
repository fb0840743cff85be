#pragma once

#include "edgeloc/image.hpp"

namespace oracle {

// Single-threaded, single-function Canny written independently of the library
// implementation (plain nested loops, direction if-chain, sweep-to-fixpoint
// hysteresis). Floating-point accumulation order matches the documented
// contract, so results must be bit-identical.
edgeloc::EdgeMap naive_canny(const edgeloc::RasterImage& img, double low, double high, int kernel,
                             double sigma);

}  // namespace oracle
