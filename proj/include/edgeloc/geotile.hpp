#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgeloc/image.hpp"

namespace edgeloc {

/// Maps pixel coordinates to world coordinates (meters).
/// Pixel (0,0) samples the origin; northing decreases as the row index grows.
struct GeoTransform {
    double origin_easting = 0.0;
    double origin_northing = 0.0;
    double resolution = 1.0;  // meters per pixel, > 0

    bool operator==(const GeoTransform&) const = default;
};

struct WorldPoint {
    double easting = 0.0;
    double northing = 0.0;
};

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
};

WorldPoint pixel_to_world(const GeoTransform& t, PixelPoint px);
PixelPoint world_to_pixel(const GeoTransform& t, WorldPoint w);

/// A fixed-size crop of a reference raster with its world-space center.
struct Tile {
    uint32_t id = 0;
    RasterImage pixels;
    double center_easting = 0.0;
    double center_northing = 0.0;
};

struct TileGridSpec {
    int tile_size = 256;
    double overlap_fraction = 0.0;  // in [0, 1)

    /// round(tile_size * (1 - overlap)), never below 1.
    int stride() const;
};

/// Cuts the raster into overlapping tiles, row-major, ids 0..n-1.
/// Remainder pixels that do not fill a whole tile are dropped.
std::vector<Tile> generate_tiles(const RasterImage& img, const GeoTransform& t,
                                 const TileGridSpec& spec);

/// Writes tiles as PGM files plus a manifest.json of [{id, easting, northing}].
void write_tile_set(const std::string& dir, const std::vector<Tile>& tiles);

/// Reads a tile set written by write_tile_set.
std::vector<Tile> read_tile_set(const std::string& dir);

}  // namespace edgeloc
