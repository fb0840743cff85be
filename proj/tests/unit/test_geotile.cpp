#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "edgeloc/errors.hpp"
#include "edgeloc/geotile.hpp"
#include "edgeloc/rng.hpp"

using namespace edgeloc;

namespace {

RasterImage noise_image(int w, int h, uint64_t seed) {
    RasterImage img(w, h, 0);
    Rng rng(seed);
    for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.below(256));
    return img;
}

std::string temp_dir(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace

TEST_CASE("pixel/world transform follows the affine convention") {
    GeoTransform t{1000.0, 2000.0, 0.2};
    WorldPoint origin = pixel_to_world(t, {0.0, 0.0});
    CHECK(origin.easting == doctest::Approx(1000.0));
    CHECK(origin.northing == doctest::Approx(2000.0));

    WorldPoint w = pixel_to_world(t, {10.0, 5.0});
    CHECK(w.easting == doctest::Approx(1002.0));
    CHECK(w.northing == doctest::Approx(1999.0));

    PixelPoint back = world_to_pixel(t, {1002.0, 1999.0});
    CHECK(back.x == doctest::Approx(10.0));
    CHECK(back.y == doctest::Approx(5.0));
}

TEST_CASE("pixel/world round trip is identity to 10 nanometers") {
    // Coordinates sit near 1e6, so eps-level noise reaches the low 1e-9s;
    // 1e-8 m still pins the transform as an exact inverse pair.
    GeoTransform t{356037.5, 6689123.25, 0.2};
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        PixelPoint p{rng.uniform(-5000.0, 5000.0), rng.uniform(-5000.0, 5000.0)};
        PixelPoint q = world_to_pixel(t, pixel_to_world(t, p));
        CHECK(std::abs(q.x - p.x) * t.resolution < 1e-8);
        CHECK(std::abs(q.y - p.y) * t.resolution < 1e-8);

        WorldPoint w{rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6)};
        WorldPoint v = pixel_to_world(t, world_to_pixel(t, w));
        CHECK(std::abs(v.easting - w.easting) < 1e-8);
        CHECK(std::abs(v.northing - w.northing) < 1e-8);
    }
}

TEST_CASE("tile grid stride rounds to nearest and never drops below 1") {
    CHECK(TileGridSpec{256, 0.875}.stride() == 32);
    CHECK(TileGridSpec{256, 0.0}.stride() == 256);
    CHECK(TileGridSpec{256, 0.995}.stride() == 1);  // 1.28 rounds to 1
    CHECK(TileGridSpec{256, 0.999}.stride() == 1);  // 0.256 clamps to 1
    CHECK(TileGridSpec{64, 0.5}.stride() == 32);
}

TEST_CASE("generate_tiles counts follow floor((extent - tile)/stride) + 1") {
    GeoTransform t{0.0, 0.0, 1.0};

    SUBCASE("512x512, tile 256, overlap 0.875 -> 9x9") {
        auto tiles = generate_tiles(noise_image(512, 512, 1), t, {256, 0.875});
        CHECK(tiles.size() == 81);
    }
    SUBCASE("single exact tile") {
        auto tiles = generate_tiles(noise_image(256, 256, 2), t, {256, 0.5});
        REQUIRE(tiles.size() == 1);
        // Center of a 256-wide image is pixel 127.5.
        CHECK(tiles[0].center_easting == doctest::Approx(127.5));
        CHECK(tiles[0].center_northing == doctest::Approx(-127.5));
    }
    SUBCASE("overlap 0 gives disjoint tiles") {
        auto tiles = generate_tiles(noise_image(512, 512, 3), t, {256, 0.0});
        CHECK(tiles.size() == 4);
    }
    SUBCASE("remainder pixels are dropped") {
        auto tiles = generate_tiles(noise_image(300, 300, 4), t, {256, 0.0});
        CHECK(tiles.size() == 1);
    }
}

TEST_CASE("tiles carry row-major ids, exact pixels, and stride-spaced centers") {
    RasterImage img = noise_image(96, 96, 5);
    GeoTransform t{100.0, 200.0, 0.5};
    TileGridSpec spec{64, 0.5};
    auto tiles = generate_tiles(img, t, spec);
    REQUIRE(tiles.size() == 4);

    for (size_t i = 0; i < tiles.size(); ++i) CHECK(tiles[i].id == i);

    // Pixel content matches the source crop.
    const int stride = spec.stride();
    for (int ty = 0; ty < 2; ++ty)
        for (int tx = 0; tx < 2; ++tx) {
            const Tile& tile = tiles[static_cast<size_t>(ty) * 2 + tx];
            REQUIRE(tile.pixels.width == 64);
            REQUIRE(tile.pixels.height == 64);
            bool equal = true;
            for (int y = 0; y < 64 && equal; ++y)
                for (int x = 0; x < 64; ++x)
                    if (tile.pixels.at(x, y) != img.at(tx * stride + x, ty * stride + y)) {
                        equal = false;
                        break;
                    }
            CHECK(equal);
        }

    // Adjacent centers differ by stride * resolution along one axis.
    CHECK(tiles[1].center_easting - tiles[0].center_easting ==
          doctest::Approx(stride * t.resolution));
    CHECK(tiles[1].center_northing == doctest::Approx(tiles[0].center_northing));
    CHECK(tiles[0].center_northing - tiles[2].center_northing ==
          doctest::Approx(stride * t.resolution));

    // Center equals the transform applied to the tile's pixel center.
    WorldPoint c = pixel_to_world(t, {31.5, 31.5});
    CHECK(tiles[0].center_easting == doctest::Approx(c.easting));
    CHECK(tiles[0].center_northing == doctest::Approx(c.northing));
}

TEST_CASE("adjacent tiles share the overlap band") {
    RasterImage img = noise_image(128, 64, 6);
    auto tiles = generate_tiles(img, {0, 0, 1.0}, {64, 0.5});
    REQUIRE(tiles.size() == 3);
    // Tile 0 columns [32,64) equal tile 1 columns [0,32).
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 32; ++x) {
            REQUIRE(tiles[0].pixels.at(32 + x, y) == tiles[1].pixels.at(x, y));
        }
}

TEST_CASE("generate_tiles is deterministic") {
    RasterImage img = noise_image(256, 256, 7);
    GeoTransform t{5.0, 9.0, 0.25};
    auto a = generate_tiles(img, t, {64, 0.75});
    auto b = generate_tiles(img, t, {64, 0.75});
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].pixels == b[i].pixels);
        CHECK(a[i].center_easting == b[i].center_easting);
        CHECK(a[i].center_northing == b[i].center_northing);
    }
}

TEST_CASE("raster smaller than one tile is rejected") {
    RasterImage img = noise_image(63, 200, 8);
    CHECK_THROWS_WITH_AS(generate_tiles(img, {0, 0, 1.0}, {64, 0.0}),
                         doctest::Contains("raster too small"), Error);
}

TEST_CASE("tile set survives a write/read round trip") {
    RasterImage img = noise_image(96, 96, 9);
    GeoTransform t{1234.5, 6789.0, 0.2};
    auto tiles = generate_tiles(img, t, {64, 0.5});
    std::string dir = temp_dir("edgeloc_test_tiles");

    write_tile_set(dir, tiles);
    auto back = read_tile_set(dir);
    REQUIRE(back.size() == tiles.size());
    for (size_t i = 0; i < tiles.size(); ++i) {
        CHECK(back[i].id == tiles[i].id);
        CHECK(back[i].pixels == tiles[i].pixels);
        CHECK(back[i].center_easting == doctest::Approx(tiles[i].center_easting));
        CHECK(back[i].center_northing == doctest::Approx(tiles[i].center_northing));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("reading a missing tile set reports an io error") {
    CHECK_THROWS_AS(read_tile_set("/nonexistent/edgeloc_tiles"), Error);
}
