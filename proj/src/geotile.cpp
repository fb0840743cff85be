#include "edgeloc/geotile.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "edgeloc/errors.hpp"
#include "edgeloc/image_io.hpp"
#include "edgeloc/parallel.hpp"

namespace edgeloc {

WorldPoint pixel_to_world(const GeoTransform& t, PixelPoint px) {
    return {t.origin_easting + px.x * t.resolution, t.origin_northing - px.y * t.resolution};
}

PixelPoint world_to_pixel(const GeoTransform& t, WorldPoint w) {
    return {(w.easting - t.origin_easting) / t.resolution,
            (t.origin_northing - w.northing) / t.resolution};
}

int TileGridSpec::stride() const {
    int s = static_cast<int>(std::lround(tile_size * (1.0 - overlap_fraction)));
    return s < 1 ? 1 : s;
}

std::vector<Tile> generate_tiles(const RasterImage& img, const GeoTransform& t,
                                 const TileGridSpec& spec) {
    const int T = spec.tile_size;
    if (img.width < T || img.height < T) fail(ErrorCategory::format, "raster too small");
    if (t.resolution <= 0.0) fail(ErrorCategory::format, "resolution must be positive");

    const int stride = spec.stride();
    const int nx = (img.width - T) / stride + 1;
    const int ny = (img.height - T) / stride + 1;

    std::vector<Tile> tiles(static_cast<size_t>(nx) * ny);
    parallel_for(tiles.size(), [&](size_t i) {
        const int tx = static_cast<int>(i) % nx;
        const int ty = static_cast<int>(i) / nx;
        const int x0 = tx * stride;
        const int y0 = ty * stride;

        Tile& tile = tiles[i];
        tile.id = static_cast<uint32_t>(i);
        tile.pixels = RasterImage(T, T);
        for (int y = 0; y < T; ++y) {
            const uint8_t* src = &img.pixels[static_cast<size_t>(y0 + y) * img.width + x0];
            std::copy(src, src + T, &tile.pixels.pixels[static_cast<size_t>(y) * T]);
        }
        // Pixel centers sit at integer coordinates, so the tile center is the
        // mean of the first and last covered pixel.
        WorldPoint c = pixel_to_world(t, {x0 + (T - 1) / 2.0, y0 + (T - 1) / 2.0});
        tile.center_easting = c.easting;
        tile.center_northing = c.northing;
    });
    return tiles;
}

void write_tile_set(const std::string& dir, const std::vector<Tile>& tiles) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = nlohmann::json::array();
    for (const Tile& tile : tiles) {
        char name[32];
        std::snprintf(name, sizeof(name), "tile_%06u.pgm", tile.id);
        write_pgm(dir + "/" + name, tile.pixels);
        manifest.push_back({{"id", tile.id},
                            {"easting", tile.center_easting},
                            {"northing", tile.center_northing}});
    }
    std::ofstream out(dir + "/manifest.json");
    if (!out) fail(ErrorCategory::io, "cannot write " + dir + "/manifest.json");
    out << manifest.dump(2) << "\n";
}

std::vector<Tile> read_tile_set(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) fail(ErrorCategory::io, "cannot read " + dir + "/manifest.json");
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::format, std::string("bad tile manifest: ") + e.what());
    }
    if (!manifest.is_array()) fail(ErrorCategory::format, "bad tile manifest: expected array");

    std::vector<Tile> tiles;
    tiles.reserve(manifest.size());
    for (const auto& entry : manifest) {
        Tile tile;
        tile.id = entry.at("id").get<uint32_t>();
        tile.center_easting = entry.at("easting").get<double>();
        tile.center_northing = entry.at("northing").get<double>();
        char name[32];
        std::snprintf(name, sizeof(name), "tile_%06u.pgm", tile.id);
        tile.pixels = read_pgm(dir + "/" + name);
        tiles.push_back(std::move(tile));
    }
    return tiles;
}

}  // namespace edgeloc
