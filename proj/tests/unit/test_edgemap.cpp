#include <doctest.h>

#include <filesystem>
#include <string>

#include "edgeloc/edgemap.hpp"
#include "edgeloc/errors.hpp"
#include "edgeloc/image_io.hpp"
#include "edgeloc/rng.hpp"
#include "oracles/naive_canny.hpp"

using namespace edgeloc;

namespace {

RasterImage noise_image(int w, int h, uint64_t seed) {
    RasterImage img(w, h, 0);
    Rng rng(seed);
    for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.below(256));
    return img;
}

RasterImage vertical_step(int w, int h, uint8_t lo, uint8_t hi) {
    RasterImage img(w, h, lo);
    for (int y = 0; y < h; ++y)
        for (int x = w / 2; x < w; ++x) img.at(x, y) = hi;
    return img;
}

}  // namespace

TEST_CASE("uniform image has no edges") {
    RasterImage img(32, 32, 128);
    EdgeMap e = canny(img);
    CHECK(edge_fraction(e) == 0.0);
}

TEST_CASE("vertical step yields one thin vertical line at the step") {
    RasterImage img = vertical_step(64, 64, 0, 255);
    EdgeMap e = canny(img);
    REQUIRE(e.width == 64);
    REQUIRE(e.height == 64);
    // Every interior row crosses the edge exactly once, at the step column.
    for (int y = 4; y < 60; ++y) {
        int count = 0, where = -1;
        for (int x = 0; x < 64; ++x)
            if (e.at(x, y)) {
                ++count;
                where = x;
            }
        CHECK(count == 1);
        CHECK(std::abs(where - 32) <= 1);
    }
    // Border rows carry no edges (kernel margin).
    for (int x = 0; x < 64; ++x) {
        CHECK(e.at(x, 0) == 0);
        CHECK(e.at(x, 63) == 0);
    }
}

TEST_CASE("horizontal line fixture matches the oracle") {
    RasterImage img(48, 48, 30);
    for (int x = 0; x < 48; ++x) img.at(x, 24) = 220;
    EdgeMap ours = canny(img);
    CannyParams d;
    EdgeMap ref =
        oracle::naive_canny(img, d.low_threshold, d.high_threshold, d.sobel_kernel, d.gaussian_sigma);
    CHECK(ours.bits == ref.bits);
    CHECK(edge_fraction(ours) > 0.0);
}

TEST_CASE("noise images are bit-identical to the independent oracle") {
    for (uint64_t seed = 0; seed < 8; ++seed) {
        RasterImage img = noise_image(64, 64, seed + 100);
        CannyParams p;
        if (seed % 2 == 1) p = CannyParams{60.0, 140.0, 3, 1.4};
        if (seed == 6) p = CannyParams{100.0, 200.0, 5, 2.0};
        EdgeMap ours = canny(img, p);
        EdgeMap ref = oracle::naive_canny(img, p.low_threshold, p.high_threshold, p.sobel_kernel,
                                          p.gaussian_sigma);
        REQUIRE(ours.width == ref.width);
        CHECK(ours.bits == ref.bits);
    }
}

TEST_CASE("output is invariant to a uniform intensity shift") {
    RasterImage a = noise_image(40, 40, 9);
    RasterImage b = a;
    // Shift all intensities by +20 without overflow.
    for (auto& p : a.pixels) p = static_cast<uint8_t>(p / 2);
    b = a;
    for (auto& p : b.pixels) p = static_cast<uint8_t>(p + 20);
    EdgeMap ea = canny(a);
    EdgeMap eb = canny(b);
    CHECK(ea.bits == eb.bits);
}

TEST_CASE("binarizing the edge map again changes nothing") {
    RasterImage img = noise_image(32, 32, 12);
    EdgeMap e = canny(img);
    // The edge map as a {0,255} image has edges exactly at intensity steps;
    // importing it back reproduces the same mask.
    std::string path =
        (std::filesystem::temp_directory_path() / "edgeloc_edge_round.pgm").string();
    write_edge_map(path, e);
    EdgeMap back = import_edge_map(path, {32, 32});
    CHECK(back.bits == e.bits);
    std::filesystem::remove(path);
}

TEST_CASE("invalid parameters are rejected") {
    RasterImage img = noise_image(16, 16, 13);
    CHECK_THROWS_WITH_AS(canny(img, {-1.0, 200.0, 3, 1.0}),
                         doctest::Contains("invalid canny parameters"), Error);
    CHECK_THROWS_WITH_AS(canny(img, {200.0, 100.0, 3, 1.0}),
                         doctest::Contains("invalid canny parameters"), Error);
    CHECK_THROWS_WITH_AS(canny(img, {100.0, 200.0, 4, 1.0}),
                         doctest::Contains("invalid canny parameters"), Error);
    CHECK_THROWS_WITH_AS(canny(img, {100.0, 200.0, 1, 1.0}),
                         doctest::Contains("invalid canny parameters"), Error);
    CHECK_THROWS_WITH_AS(canny(img, {100.0, 200.0, 3, 0.0}),
                         doctest::Contains("invalid canny parameters"), Error);
}

TEST_CASE("import_edge_map checks the expected size") {
    RasterImage img = noise_image(16, 16, 14);
    EdgeMap e = canny(img);
    std::string path =
        (std::filesystem::temp_directory_path() / "edgeloc_edge_size.pgm").string();
    write_edge_map(path, e);
    CHECK_THROWS_WITH_AS(import_edge_map(path, {32, 32}),
                         doctest::Contains("edge map size mismatch"), Error);
    std::filesystem::remove(path);
}

TEST_CASE("import thresholds at 127") {
    RasterImage img(4, 1, 0);
    img.pixels = {0, 127, 128, 255};
    std::string path =
        (std::filesystem::temp_directory_path() / "edgeloc_edge_thresh.pgm").string();
    write_pgm(path, img);
    EdgeMap e = import_edge_map(path, {4, 1});
    CHECK(e.bits == std::vector<uint8_t>{0, 0, 1, 1});
    std::filesystem::remove(path);
}

TEST_CASE("edge_fraction counts set bits") {
    EdgeMap e(10, 10);
    CHECK(edge_fraction(e) == 0.0);
    e.bits[3] = 1;
    e.bits[97] = 1;
    CHECK(edge_fraction(e) == doctest::Approx(0.02));
}
