#include "edgeloc/edgemap.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "edgeloc/errors.hpp"
#include "edgeloc/image_io.hpp"
#include "edgeloc/parallel.hpp"

namespace edgeloc {
namespace {

void validate(const RasterImage& img, const CannyParams& p) {
    if (img.width <= 0 || img.height <= 0) fail(ErrorCategory::format, "invalid canny parameters");
    if (p.low_threshold < 0 || p.low_threshold > p.high_threshold)
        fail(ErrorCategory::format, "invalid canny parameters");
    if (p.sobel_kernel < 3 || p.sobel_kernel % 2 == 0)
        fail(ErrorCategory::format, "invalid canny parameters");
    if (p.gaussian_sigma <= 0) fail(ErrorCategory::format, "invalid canny parameters");
}

int clamp_idx(int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); }

// Separable Gaussian blur, radius 2, replicate border.
std::vector<double> gaussian_blur(const RasterImage& img, double sigma) {
    constexpr int R = 2;
    double kernel[2 * R + 1];
    double sum = 0.0;
    for (int i = -R; i <= R; ++i) {
        kernel[i + R] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += kernel[i + R];
    }
    for (double& k : kernel) k /= sum;

    const int w = img.width, h = img.height;
    std::vector<double> tmp(static_cast<size_t>(w) * h);
    std::vector<double> out(static_cast<size_t>(w) * h);

    parallel_for(static_cast<size_t>(h), [&](size_t y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -R; i <= R; ++i)
                acc += kernel[i + R] * img.at(clamp_idx(x + i, w), static_cast<int>(y));
            tmp[y * w + x] = acc;
        }
    });
    parallel_for(static_cast<size_t>(h), [&](size_t y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -R; i <= R; ++i)
                acc += kernel[i + R] * tmp[static_cast<size_t>(clamp_idx(static_cast<int>(y) + i, h)) * w + x];
            out[y * w + x] = acc;
        }
    });
    return out;
}

// Sobel kernels of odd size K, built from the binomial smoothing vector and
// the central-difference derivative of the next-lower binomial row.
void sobel_kernels(int K, std::vector<double>& smooth, std::vector<double>& deriv) {
    smooth.assign(static_cast<size_t>(K), 0.0);
    smooth[0] = 1.0;
    for (int n = 1; n < K; ++n)
        for (int i = n; i > 0; --i) smooth[static_cast<size_t>(i)] += smooth[static_cast<size_t>(i) - 1];

    std::vector<double> base(static_cast<size_t>(K) - 1, 0.0);
    base[0] = 1.0;
    for (int n = 1; n <= K - 2; ++n)
        for (int i = n; i > 0; --i) base[static_cast<size_t>(i)] += base[static_cast<size_t>(i) - 1];
    deriv.assign(static_cast<size_t>(K), 0.0);
    for (int i = 0; i < K - 1; ++i) {
        deriv[static_cast<size_t>(i) + 1] += base[static_cast<size_t>(i)];
        deriv[static_cast<size_t>(i)] -= base[static_cast<size_t>(i)];
    }
}

}  // namespace

EdgeMap canny(const RasterImage& img, const CannyParams& p) {
    validate(img, p);
    const int w = img.width, h = img.height;
    const int K = p.sobel_kernel;
    const int R = K / 2;

    std::vector<double> smoothed = gaussian_blur(img, p.gaussian_sigma);

    std::vector<double> sx, sd;
    sobel_kernels(K, sx, sd);

    // Gradients; undefined (zero) on the R-pixel border.
    std::vector<double> mag(static_cast<size_t>(w) * h, 0.0);
    std::vector<uint8_t> bin(static_cast<size_t>(w) * h, 0);
    parallel_for(static_cast<size_t>(h), [&](size_t yy) {
        const int y = static_cast<int>(yy);
        if (y < R || y >= h - R) return;
        for (int x = R; x < w - R; ++x) {
            double gx = 0.0, gy = 0.0;
            for (int j = -R; j <= R; ++j) {
                for (int i = -R; i <= R; ++i) {
                    const double v = smoothed[static_cast<size_t>(y + j) * w + (x + i)];
                    gx += sd[static_cast<size_t>(i) + R] * sx[static_cast<size_t>(j) + R] * v;
                    gy += sx[static_cast<size_t>(i) + R] * sd[static_cast<size_t>(j) + R] * v;
                }
            }
            const size_t idx = static_cast<size_t>(y) * w + x;
            mag[idx] = std::sqrt(gx * gx + gy * gy);
            double angle = std::atan2(gy, gx);
            if (angle < 0) angle += std::numbers::pi;
            if (angle >= std::numbers::pi) angle -= std::numbers::pi;
            bin[idx] = static_cast<uint8_t>(
                static_cast<int>((angle + std::numbers::pi / 8.0) / (std::numbers::pi / 4.0)) % 4);
        }
    });

    // Non-maximum suppression along the quantized gradient direction.
    // Tie rule: keep iff strictly greater than the previous neighbor and at
    // least equal to the next, so a two-pixel plateau keeps one pixel.
    static constexpr int NBR[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
    std::vector<uint8_t> cls(static_cast<size_t>(w) * h, 0);  // 0 none, 1 weak, 2 strong
    parallel_for(static_cast<size_t>(h), [&](size_t yy) {
        const int y = static_cast<int>(yy);
        if (y < R + 1 || y >= h - R - 1) return;
        for (int x = R + 1; x < w - R - 1; ++x) {
            const size_t idx = static_cast<size_t>(y) * w + x;
            const double m = mag[idx];
            if (m < p.low_threshold) continue;
            const int dx = NBR[bin[idx]][0], dy = NBR[bin[idx]][1];
            const double prev = mag[static_cast<size_t>(y - dy) * w + (x - dx)];
            const double next = mag[static_cast<size_t>(y + dy) * w + (x + dx)];
            if (m > prev && m >= next) cls[idx] = m >= p.high_threshold ? 2 : 1;
        }
    });

    // Hysteresis: weak pixels survive only if 8-connected to a strong pixel.
    EdgeMap edges(w, h);
    std::vector<size_t> stack;
    for (size_t i = 0; i < cls.size(); ++i) {
        if (cls[i] != 2 || edges.bits[i]) continue;
        edges.bits[i] = 1;
        stack.push_back(i);
        while (!stack.empty()) {
            const size_t cur = stack.back();
            stack.pop_back();
            const int cx = static_cast<int>(cur % w), cy = static_cast<int>(cur / w);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = cx + dx, ny = cy + dy;
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const size_t nidx = static_cast<size_t>(ny) * w + nx;
                    if (cls[nidx] != 0 && !edges.bits[nidx]) {
                        edges.bits[nidx] = 1;
                        stack.push_back(nidx);
                    }
                }
            }
        }
    }
    return edges;
}

EdgeMap import_edge_map(const std::string& path, PixelSize expected_size) {
    RasterImage img = read_raster(path);
    if (img.width != expected_size.width || img.height != expected_size.height)
        fail(ErrorCategory::mismatch, "edge map size mismatch");
    EdgeMap edges(img.width, img.height);
    for (size_t i = 0; i < img.size(); ++i) edges.bits[i] = img.pixels[i] > 127 ? 1 : 0;
    return edges;
}

void write_edge_map(const std::string& path, const EdgeMap& edges) {
    RasterImage img(edges.width, edges.height);
    for (size_t i = 0; i < edges.size(); ++i) img.pixels[i] = edges.bits[i] ? 255 : 0;
    write_pgm(path, img);
}

double edge_fraction(const EdgeMap& edges) {
    if (edges.size() == 0) return 0.0;
    size_t n = 0;
    for (uint8_t b : edges.bits) n += b;
    return static_cast<double>(n) / static_cast<double>(edges.size());
}

}  // namespace edgeloc
