#pragma once

#include <cstdint>
#include <vector>

#include "edgeloc/geotile.hpp"
#include "edgeloc/image.hpp"

namespace edgeloc {

struct TerrainSpec {
    uint64_t seed = 0;
    int extent = 2048;                 // pixels, >= 512
    double resolution = 0.2;           // meters per pixel
    double field_density = 3000.0;     // Voronoi sites per square km
    double road_density = 30.0;        // roads per km of terrain side
    double building_density = 1500.0;  // building outlines per square km
    int texture_noise = 2;             // per-pixel intensity jitter, 0 disables
    double origin_easting = 100000.0;
    double origin_northing = 200000.0;
};

/// Rendered terrain plus the generator state season_shift needs.
struct Terrain {
    TerrainSpec spec;
    RasterImage image;
    GeoTransform transform;
    std::vector<uint32_t> region_labels;  // per pixel: Voronoi region id
    std::vector<uint8_t> overlay;         // per pixel: 0 field, 1 road, 2 building
    std::vector<uint8_t> region_level;    // per region: palette index
};

/// Piecewise-constant Voronoi fields at two intensity levels, dark road
/// polylines, dark building outlines, optional sub-threshold texture noise.
Terrain generate_terrain(const TerrainSpec& spec);

struct SeasonShiftParams {
    uint64_t seed = 0;
    bool permute_levels = true;   // swap the two field palette levels
    int max_jitter = 5;           // per-region intensity offset bound
    double contrast_jitter = 0.0; // per-region contrast factor bound around 1
};

/// Remaps field intensities per region; roads, buildings, and all region
/// boundaries are preserved. Defaults keep every boundary edge strong while
/// destroying grayscale similarity between the two "years".
RasterImage season_shift(const Terrain& t, const SeasonShiftParams& p);
inline RasterImage season_shift(const Terrain& t, uint64_t seed) {
    return season_shift(t, SeasonShiftParams{.seed = seed});
}

struct TrajectoryPreset {
    char name = 'B';
    double altitude_m = 2000.0;
    double distance_m = 12000.0;
    double band_width_m = 1000.0;
    double overlap_fraction = 0.875;  // pose-to-pose footprint overlap
};

/// Named flight profiles (altitude, path length, corridor, overlap).
TrajectoryPreset trajectory_preset(char name);

/// Shrinks distance and corridor proportionally to fit max_distance_m.
TrajectoryPreset scale_preset(const TrajectoryPreset& p, double max_distance_m);

struct Pose {
    double easting = 0.0;
    double northing = 0.0;
    double altitude_m = 0.0;
    double heading_deg = 0.0;
};

struct PerturbationSpec {
    double rotation_deg = 0.0;     // heading error
    double altitude_drop_m = 0.0;  // unplanned descent, crops the footprint
};

/// Straight west-to-east path across the raster with seeded lateral jitter
/// bounded by band_width/2. Pose spacing = footprint * (1 - overlap).
std::vector<Pose> sample_trajectory(const TrajectoryPreset& preset, const GeoTransform& gt,
                                    int extent_px, int view_size, uint64_t seed);

/// Nadir view of `view_size` pixels at the raster's resolution, rotated by
/// heading + rotation. An altitude drop crops the central (alt-drop)/alt
/// fraction of the rendered view and rescales it back (bilinear).
RasterImage render_view(const RasterImage& raster, const GeoTransform& gt, const Pose& pose,
                        int view_size, const PerturbationSpec& pert = {});

inline RasterImage render_view(const Terrain& t, const Pose& pose, int view_size,
                               const PerturbationSpec& pert = {}) {
    return render_view(t.image, t.transform, pose, view_size, pert);
}

}  // namespace edgeloc
