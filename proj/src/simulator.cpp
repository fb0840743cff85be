#include "edgeloc/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

#include "edgeloc/errors.hpp"
#include "edgeloc/parallel.hpp"
#include "edgeloc/rng.hpp"

namespace edgeloc {
namespace {

// Two field levels, both in strong contrast to the dark (0) roads/buildings
// and to each other, so every boundary survives edge detection in both
// seasons even after per-region jitter.
constexpr int kPalette[2] = {95, 195};
constexpr double kRoadWidthM = 1.0;
constexpr int kBuildingWall = 2;  // outline thickness, pixels

// Rng stream salts; one stream per feature family keeps draws independent of
// the other families' counts.
constexpr uint64_t kSaltSites = 0x517e5a11ULL;
constexpr uint64_t kSaltLevels = 0x1e7e15b2ULL;
constexpr uint64_t kSaltRoads = 0x50ad5c3fULL;
constexpr uint64_t kSaltBuildings = 0xb01d54e9ULL;
constexpr uint64_t kSaltNoise = 0x4015ed87ULL;
constexpr uint64_t kSaltSeason = 0x5ea50d21ULL;

uint8_t clamp_u8(double v) {
    const long r = std::lround(v);
    return static_cast<uint8_t>(r < 0 ? 0 : (r > 255 ? 255 : r));
}

double point_segment_dist2(double px, double py, double ax, double ay, double bx, double by) {
    const double vx = bx - ax, vy = by - ay;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
    return dx * dx + dy * dy;
}

void stamp_segment(std::vector<uint8_t>& overlay, int extent, double ax, double ay, double bx,
                   double by, double half_width, uint8_t code) {
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - half_width - 1)));
    const int x1 = std::min(extent - 1, static_cast<int>(std::ceil(std::max(ax, bx) + half_width + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - half_width - 1)));
    const int y1 = std::min(extent - 1, static_cast<int>(std::ceil(std::max(ay, by) + half_width + 1)));
    const double hw2 = half_width * half_width;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (point_segment_dist2(x, y, ax, ay, bx, by) <= hw2)
                overlay[static_cast<size_t>(y) * extent + x] = code;
}

}  // namespace

Terrain generate_terrain(const TerrainSpec& spec) {
    if (spec.extent < 512) fail(ErrorCategory::usage, "terrain extent too small");
    if (spec.resolution <= 0.0) fail(ErrorCategory::usage, "resolution must be positive");
    if (spec.field_density <= 0.0) fail(ErrorCategory::usage, "field density must be positive");

    const int E = spec.extent;
    const double side_m = E * spec.resolution;
    const double area_km2 = (side_m / 1000.0) * (side_m / 1000.0);

    Terrain t;
    t.spec = spec;
    t.image = RasterImage(E, E);
    t.transform = {spec.origin_easting, spec.origin_northing, spec.resolution};

    // Jittered-grid Voronoi sites: one site per grid cell, so the nearest
    // site of any pixel is within the surrounding 5x5 cell block.
    const double cell_m = std::sqrt(1e6 / spec.field_density);
    const double cell_px = cell_m / spec.resolution;
    const int nx = std::max(1, static_cast<int>(std::ceil(E / cell_px)));
    const int ny = nx;
    std::vector<double> site_x(static_cast<size_t>(nx) * ny), site_y(site_x.size());
    t.region_level.resize(site_x.size());
    for (int gy = 0; gy < ny; ++gy) {
        for (int gx = 0; gx < nx; ++gx) {
            const size_t s = static_cast<size_t>(gy) * nx + gx;
            const uint64_t h = pixel_hash(spec.seed ^ kSaltSites, gx, gy);
            site_x[s] = (gx + (h & 0xffffffffULL) * 0x1.0p-32) * cell_px;
            site_y[s] = (gy + (h >> 32) * 0x1.0p-32) * cell_px;
            t.region_level[s] =
                static_cast<uint8_t>(pixel_hash(spec.seed ^ kSaltLevels, gx, gy) & 1);
        }
    }

    t.region_labels.resize(t.image.size());
    parallel_for(static_cast<size_t>(E), [&](size_t yy) {
        const int y = static_cast<int>(yy);
        const int gy = std::min(ny - 1, static_cast<int>(y / cell_px));
        for (int x = 0; x < E; ++x) {
            const int gx = std::min(nx - 1, static_cast<int>(x / cell_px));
            uint32_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int cy = std::max(0, gy - 2); cy <= std::min(ny - 1, gy + 2); ++cy) {
                for (int cx = std::max(0, gx - 2); cx <= std::min(nx - 1, gx + 2); ++cx) {
                    const size_t s = static_cast<size_t>(cy) * nx + cx;
                    const double dx = x - site_x[s], dy = y - site_y[s];
                    const double d2 = dx * dx + dy * dy;
                    // Sites scan in ascending id, so the first minimum wins ties.
                    if (d2 < best_d) {
                        best_d = d2;
                        best = static_cast<uint32_t>(s);
                    }
                }
            }
            t.region_labels[yy * E + x] = best;
        }
    });

    // Roads: two-segment polylines crossing the whole raster.
    t.overlay.assign(t.image.size(), 0);
    const double road_half = std::max(1.0, kRoadWidthM / spec.resolution / 2.0);
    const long n_roads = std::lround(spec.road_density * side_m / 1000.0);
    Rng road_rng(spec.seed ^ kSaltRoads);
    for (long r = 0; r < n_roads; ++r) {
        const bool horizontal = (road_rng.next() & 1) != 0;
        const double a = road_rng.uniform(0, E - 1);
        const double b = road_rng.uniform(0, E - 1);
        const double mid_along = road_rng.uniform(E * 0.25, E * 0.75);
        const double mid_across = road_rng.uniform(0, E - 1);
        if (horizontal) {
            stamp_segment(t.overlay, E, 0, a, mid_along, mid_across, road_half, 1);
            stamp_segment(t.overlay, E, mid_along, mid_across, E - 1, b, road_half, 1);
        } else {
            stamp_segment(t.overlay, E, a, 0, mid_across, mid_along, road_half, 1);
            stamp_segment(t.overlay, E, mid_across, mid_along, b, E - 1, road_half, 1);
        }
    }

    // Buildings: axis-aligned rectangular outlines.
    const long n_buildings = std::lround(spec.building_density * area_km2);
    Rng bld_rng(spec.seed ^ kSaltBuildings);
    for (long bld = 0; bld < n_buildings; ++bld) {
        const double cx = bld_rng.uniform(0, E - 1);
        const double cy = bld_rng.uniform(0, E - 1);
        const double hw = bld_rng.uniform(4.0, 10.0) / spec.resolution / 2.0;
        const double hh = bld_rng.uniform(4.0, 10.0) / spec.resolution / 2.0;
        const int x0 = std::max(0, static_cast<int>(std::lround(cx - hw)));
        const int x1 = std::min(E - 1, static_cast<int>(std::lround(cx + hw)));
        const int y0 = std::max(0, static_cast<int>(std::lround(cy - hh)));
        const int y1 = std::min(E - 1, static_cast<int>(std::lround(cy + hh)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const bool wall = x - x0 < kBuildingWall || x1 - x < kBuildingWall ||
                                  y - y0 < kBuildingWall || y1 - y < kBuildingWall;
                if (wall) t.overlay[static_cast<size_t>(y) * E + x] = 2;
            }
        }
    }

    const int tn = spec.texture_noise;
    parallel_for(t.image.size(), [&](size_t i) {
        if (t.overlay[i] != 0) {
            t.image.pixels[i] = 0;
            return;
        }
        int v = kPalette[t.region_level[t.region_labels[i]]];
        if (tn > 0) {
            const int x = static_cast<int>(i) % E, y = static_cast<int>(i / E);
            v += static_cast<int>(pixel_hash(spec.seed ^ kSaltNoise, x, y) %
                                  static_cast<uint64_t>(2 * tn + 1)) -
                 tn;
        }
        t.image.pixels[i] = clamp_u8(v);
    });
    return t;
}

RasterImage season_shift(const Terrain& t, const SeasonShiftParams& p) {
    if (t.region_labels.size() != t.image.size() || t.region_level.empty())
        fail(ErrorCategory::usage, "terrain region labels unavailable");

    // Per-region remaps, drawn in region order from one stream.
    Rng rng(p.seed ^ kSaltSeason);
    const size_t regions = t.region_level.size();
    std::vector<double> new_base(regions), contrast(regions), old_base(regions);
    for (size_t r = 0; r < regions; ++r) {
        const int level = t.region_level[r];
        const int remapped = p.permute_levels ? 1 - level : level;
        const double jitter = rng.uniform_int(-p.max_jitter, p.max_jitter);
        contrast[r] = 1.0 + rng.uniform(-p.contrast_jitter, p.contrast_jitter);
        old_base[r] = kPalette[level];
        new_base[r] = kPalette[remapped] + jitter;
    }

    RasterImage out(t.image.width, t.image.height);
    parallel_for(out.size(), [&](size_t i) {
        if (t.overlay[i] != 0) {
            out.pixels[i] = t.image.pixels[i];
            return;
        }
        const uint32_t r = t.region_labels[i];
        out.pixels[i] = clamp_u8(new_base[r] + contrast[r] * (t.image.pixels[i] - old_base[r]));
    });
    return out;
}

TrajectoryPreset trajectory_preset(char name) {
    switch (name) {
        case 'A': return {'A', 40.0, 150.0, 10.0, 0.995};
        case 'B': return {'B', 2000.0, 12000.0, 1000.0, 0.875};
        case 'C': return {'C', 4000.0, 50000.0, 5000.0, 0.875};
        case 'D': return {'D', 2000.0, 2000.0, 2000.0, 0.875};
        default: fail(ErrorCategory::usage, std::string("unknown trajectory preset: ") + name);
    }
}

TrajectoryPreset scale_preset(const TrajectoryPreset& p, double max_distance_m) {
    if (max_distance_m <= 0.0) fail(ErrorCategory::usage, "scale distance must be positive");
    if (p.distance_m <= max_distance_m) return p;
    TrajectoryPreset out = p;
    const double f = max_distance_m / p.distance_m;
    out.distance_m = max_distance_m;
    out.band_width_m = p.band_width_m * f;
    return out;
}

std::vector<Pose> sample_trajectory(const TrajectoryPreset& preset, const GeoTransform& gt,
                                    int extent_px, int view_size, uint64_t seed) {
    if (preset.overlap_fraction < 0.0 || preset.overlap_fraction >= 1.0)
        fail(ErrorCategory::usage, "overlap fraction must be in [0, 1)");
    if (preset.altitude_m <= 0.0) fail(ErrorCategory::usage, "altitude must be positive");

    const double footprint_m = view_size * gt.resolution;
    const double spacing = footprint_m * (1.0 - preset.overlap_fraction);
    const double side_m = extent_px * gt.resolution;
    // Margin covers the rotated footprint's half-diagonal plus the corridor.
    const double margin = footprint_m * 0.75 + preset.band_width_m / 2.0;
    if (preset.distance_m > side_m - 2.0 * margin)
        fail(ErrorCategory::usage, "trajectory does not fit terrain");

    const size_t count = static_cast<size_t>(std::floor(preset.distance_m / spacing)) + 1;
    const double start_e = gt.origin_easting + margin;
    const double center_n = gt.origin_northing - side_m / 2.0;

    Rng rng(seed);
    std::vector<Pose> poses(count);
    for (size_t i = 0; i < count; ++i) {
        const double jitter = rng.uniform(-preset.band_width_m / 2.0, preset.band_width_m / 2.0);
        poses[i] = {start_e + static_cast<double>(i) * spacing, center_n + jitter,
                    preset.altitude_m, 0.0};
    }
    return poses;
}

namespace {

double bilinear(const RasterImage& img, double x, double y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0, fy = y - y0;
    const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
    const double bot = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

// Exact unit vectors at quarter turns keep those rotations lossless.
void rotation_components(double deg, double& c, double& s) {
    double r = std::fmod(deg, 360.0);
    if (r < 0) r += 360.0;
    if (r == 0.0) {
        c = 1.0; s = 0.0;
    } else if (r == 90.0) {
        c = 0.0; s = 1.0;
    } else if (r == 180.0) {
        c = -1.0; s = 0.0;
    } else if (r == 270.0) {
        c = 0.0; s = -1.0;
    } else {
        const double rad = r * std::numbers::pi / 180.0;
        c = std::cos(rad);
        s = std::sin(rad);
    }
}

}  // namespace

RasterImage render_view(const RasterImage& raster, const GeoTransform& gt, const Pose& pose,
                        int view_size, const PerturbationSpec& pert) {
    if (view_size < 2) fail(ErrorCategory::usage, "view size too small");
    if (pert.altitude_drop_m < 0.0) fail(ErrorCategory::usage, "altitude drop must be >= 0");
    if (pert.altitude_drop_m >= pose.altitude_m)
        fail(ErrorCategory::usage, "altitude drop exceeds altitude");

    const PixelPoint pc = world_to_pixel(gt, {pose.easting, pose.northing});
    double c, s;
    rotation_components(pose.heading_deg + pert.rotation_deg, c, s);

    const int V = view_size;
    const double half = (V - 1) / 2.0;
    RasterImage view(V, V);
    std::atomic<bool> oob{false};
    parallel_for(static_cast<size_t>(V), [&](size_t rr) {
        const int r = static_cast<int>(rr);
        for (int col = 0; col < V; ++col) {
            const double dx = col - half, dy = r - half;
            const double sx = pc.x + dx * c - dy * s;
            const double sy = pc.y + dx * s + dy * c;
            if (sx < 0.0 || sx > raster.width - 1 || sy < 0.0 || sy > raster.height - 1) {
                oob.store(true);
                return;
            }
            view.at(col, r) = clamp_u8(bilinear(raster, sx, sy));
        }
    });
    if (oob.load()) fail(ErrorCategory::usage, "view out of bounds");

    if (pert.altitude_drop_m == 0.0) return view;

    // Altitude drop: crop the central fraction and rescale to full size.
    const double scale = (pose.altitude_m - pert.altitude_drop_m) / pose.altitude_m;
    const double off = V * (1.0 - scale) / 2.0;
    RasterImage dropped(V, V);
    parallel_for(static_cast<size_t>(V), [&](size_t rr) {
        const int r = static_cast<int>(rr);
        const double sy = off + (r + 0.5) * scale - 0.5;
        for (int col = 0; col < V; ++col) {
            const double sx = off + (col + 0.5) * scale - 0.5;
            dropped.at(col, r) = clamp_u8(bilinear(view, sx, sy));
        }
    });
    return dropped;
}

}  // namespace edgeloc
