#pragma once

#include <optional>
#include <string>

#include "edgeloc/geotile.hpp"
#include "edgeloc/image.hpp"

namespace edgeloc {

/// Reads a binary (P5) PGM with maxval 255. Throws Error(format) on anything else.
RasterImage read_pgm(const std::string& path);

/// Writes a binary (P5) PGM with maxval 255.
void write_pgm(const std::string& path, const RasterImage& img);

/// Reads an 8-bit PNG; color and 16-bit inputs are reduced to 8-bit grayscale.
RasterImage read_png(const std::string& path);

/// Dispatches on extension: .pgm and .png are supported.
RasterImage read_raster(const std::string& path);

/// Reads a 4-line world file: resolution, origin easting, origin northing, row sign.
/// The row sign must be -1 (northing decreases with row index).
GeoTransform read_world_file(const std::string& path);

void write_world_file(const std::string& path, const GeoTransform& gt);

/// World-file path for a raster: the extension is replaced with ".wld".
std::string world_file_path(const std::string& raster_path);

struct GeoreferencedImage {
    RasterImage image;
    GeoTransform transform;
};

/// Reads a raster together with its ".wld" sidecar.
GeoreferencedImage read_georeferenced(const std::string& path);

/// Writes a PGM raster together with its ".wld" sidecar.
void write_georeferenced(const std::string& path, const RasterImage& img, const GeoTransform& gt);

}  // namespace edgeloc
