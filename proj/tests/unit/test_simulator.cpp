#include <doctest.h>

#include <cmath>
#include <set>

#include "edgeloc/edgemap.hpp"
#include "edgeloc/errors.hpp"
#include "edgeloc/simulator.hpp"
#include "oracles/reference_math.hpp"

using namespace edgeloc;

namespace {

TerrainSpec small_spec(uint64_t seed) {
    TerrainSpec s;
    s.seed = seed;
    s.extent = 512;
    return s;
}

}  // namespace

TEST_CASE("terrain generation is seed-deterministic") {
    Terrain a = generate_terrain(small_spec(9));
    Terrain b = generate_terrain(small_spec(9));
    CHECK(a.image == b.image);
    CHECK(a.region_labels == b.region_labels);
    CHECK(a.overlay == b.overlay);

    Terrain c = generate_terrain(small_spec(10));
    CHECK_FALSE(a.image == c.image);
}

TEST_CASE("degenerate spec produces a uniform raster") {
    TerrainSpec s = small_spec(3);
    s.field_density = 1e-9;  // one Voronoi site
    s.road_density = 0.0;
    s.building_density = 0.0;
    s.texture_noise = 0;
    Terrain t = generate_terrain(s);
    std::set<uint8_t> values(t.image.pixels.begin(), t.image.pixels.end());
    CHECK(values.size() == 1);
}

TEST_CASE("terrain extent below 512 is rejected") {
    TerrainSpec s = small_spec(1);
    s.extent = 256;
    CHECK_THROWS_WITH_AS(generate_terrain(s), doctest::Contains("terrain extent too small"),
                         Error);
}

TEST_CASE("default spec yields a moderate canny edge fraction") {
    // Bound pinned from the reference generator; guards against both a
    // featureless and an oversegmented terrain.
    Terrain t = generate_terrain(small_spec(0));
    double f = edge_fraction(canny(t.image));
    CHECK(f > 0.005);
    CHECK(f < 0.2);
}

TEST_CASE("season shift is deterministic and geometry-preserving") {
    Terrain t = generate_terrain(small_spec(5));

    SUBCASE("same seed twice gives identical output") {
        CHECK(season_shift(t, 77) == season_shift(t, 77));
    }
    SUBCASE("zero-perturbation parameters are the identity") {
        SeasonShiftParams p;
        p.seed = 1;
        p.permute_levels = false;
        p.max_jitter = 0;
        p.contrast_jitter = 0.0;
        CHECK(season_shift(t, p) == t.image);
    }
    SUBCASE("roads and buildings are untouched") {
        RasterImage shifted = season_shift(t, 42);
        for (size_t i = 0; i < t.overlay.size(); ++i)
            if (t.overlay[i] != 0) {
                REQUIRE(shifted.pixels[i] == t.image.pixels[i]);
            }
    }
    SUBCASE("region-boundary edges survive the shift") {
        RasterImage shifted = season_shift(t, 42);
        EdgeMap before = canny(t.image);
        EdgeMap after = canny(shifted);
        // >= 90% of original edge pixels lie within 1 px of a shifted edge.
        size_t kept = 0, total = 0;
        for (int y = 0; y < before.height; ++y)
            for (int x = 0; x < before.width; ++x) {
                if (!before.at(x, y)) continue;
                ++total;
                bool near = false;
                for (int dy = -1; dy <= 1 && !near; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = x + dx, ny = y + dy;
                        if (nx >= 0 && ny >= 0 && nx < after.width && ny < after.height &&
                            after.at(nx, ny)) {
                            near = true;
                            break;
                        }
                    }
                kept += near;
            }
        REQUIRE(total > 0);
        CHECK(double(kept) / double(total) >= 0.9);
    }
}

TEST_CASE("render_view at an aligned pose is an exact crop") {
    Terrain t = generate_terrain(small_spec(6));
    // Pose centered at pixel center (x0+31.5, y0+31.5) samples exactly.
    const int x0 = 100, y0 = 60;
    WorldPoint c = pixel_to_world(t.transform, {x0 + 31.5, y0 + 31.5});
    Pose pose{c.easting, c.northing, 2000.0, 0.0};
    RasterImage view = render_view(t, pose, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) REQUIRE(view.at(x, y) == t.image.at(x0 + x, y0 + y));
}

TEST_CASE("quarter-turn rotations are lossless") {
    Terrain t = generate_terrain(small_spec(7));
    WorldPoint c = pixel_to_world(t.transform, {200 + 31.5, 200 + 31.5});
    Pose pose{c.easting, c.northing, 2000.0, 0.0};
    RasterImage base = render_view(t, pose, 64);

    PerturbationSpec rot90;
    rot90.rotation_deg = 90.0;
    RasterImage turned = render_view(t, pose, 64, rot90);
    // Sampling axes rotate by 90 degrees: turned(col,r) = base(V-1-r, col).
    bool match = true;
    for (int r = 0; r < 64 && match; ++r)
        for (int col = 0; col < 64; ++col)
            if (turned.at(col, r) != base.at(63 - r, col)) {
                match = false;
                break;
            }
    CHECK(match);

    PerturbationSpec rot360;
    rot360.rotation_deg = 360.0;
    CHECK(render_view(t, pose, 64, rot360) == base);
}

TEST_CASE("altitude drop matches the independent crop+resize oracle") {
    Terrain t = generate_terrain(small_spec(8));
    WorldPoint c = pixel_to_world(t.transform, {150 + 31.5, 150 + 31.5});
    Pose pose{c.easting, c.northing, 2000.0, 0.0};
    RasterImage base = render_view(t, pose, 64);

    for (double drop : {200.0, 500.0, 1000.0}) {
        PerturbationSpec pert;
        pert.altitude_drop_m = drop;
        RasterImage dropped = render_view(t, pose, 64, pert);
        RasterImage ref = oracle::crop_resize_reference(base, (2000.0 - drop) / 2000.0);
        CHECK(dropped == ref);
    }
}

TEST_CASE("render_view validates pose and perturbation") {
    Terrain t = generate_terrain(small_spec(9));
    WorldPoint inside = pixel_to_world(t.transform, {100.0, 100.0});
    Pose pose{inside.easting, inside.northing, 2000.0, 0.0};

    SUBCASE("view out of bounds") {
        WorldPoint edge = pixel_to_world(t.transform, {5.0, 100.0});
        Pose bad{edge.easting, edge.northing, 2000.0, 0.0};
        CHECK_THROWS_WITH_AS(render_view(t, bad, 64), doctest::Contains("view out of bounds"),
                             Error);
    }
    SUBCASE("drop must stay below altitude") {
        PerturbationSpec pert;
        pert.altitude_drop_m = 2000.0;
        CHECK_THROWS_WITH_AS(render_view(t, pose, 64, pert),
                             doctest::Contains("altitude drop exceeds altitude"), Error);
        pert.altitude_drop_m = -1.0;
        CHECK_THROWS_WITH_AS(render_view(t, pose, 64, pert),
                             doctest::Contains("altitude drop must be >= 0"), Error);
    }
}

TEST_CASE("trajectory presets carry the published parameters") {
    TrajectoryPreset b = trajectory_preset('B');
    CHECK(b.altitude_m == 2000.0);
    CHECK(b.distance_m == 12000.0);
    CHECK(b.band_width_m == 1000.0);
    CHECK(b.overlap_fraction == 0.875);
    TrajectoryPreset a = trajectory_preset('A');
    CHECK(a.altitude_m == 40.0);
    CHECK(a.overlap_fraction == 0.995);
    CHECK_THROWS_WITH_AS(trajectory_preset('Z'), doctest::Contains("unknown trajectory preset"),
                         Error);
}

TEST_CASE("scale_preset shrinks distance and corridor proportionally") {
    TrajectoryPreset b = trajectory_preset('B');
    TrajectoryPreset s = scale_preset(b, 120.0);
    CHECK(s.distance_m == doctest::Approx(120.0));
    CHECK(s.band_width_m == doctest::Approx(10.0));
    CHECK(s.altitude_m == b.altitude_m);
    // Already-fitting presets pass through unchanged.
    TrajectoryPreset same = scale_preset(s, 500.0);
    CHECK(same.distance_m == doctest::Approx(120.0));
}

TEST_CASE("sample_trajectory spacing, count, and jitter bounds") {
    GeoTransform gt{1000.0, 5000.0, 0.2};
    TrajectoryPreset p{'B', 2000.0, 60.0, 8.0, 0.875};
    const int extent = 512, view = 64;
    // footprint 12.8 m, spacing 1.6 m -> count floor(60/1.6)+1 = 38.
    auto poses = sample_trajectory(p, gt, extent, view, 3);
    REQUIRE(poses.size() == 38);

    const double footprint = view * gt.resolution;
    const double margin = footprint * 0.75 + p.band_width_m / 2.0;
    const double center_n = gt.origin_northing - extent * gt.resolution / 2.0;
    CHECK(poses[0].easting == doctest::Approx(gt.origin_easting + margin));
    for (size_t i = 0; i < poses.size(); ++i) {
        CHECK(poses[i].altitude_m == 2000.0);
        CHECK(poses[i].heading_deg == 0.0);
        CHECK(std::abs(poses[i].northing - center_n) <= p.band_width_m / 2.0 + 1e-12);
        if (i > 0)
            CHECK(poses[i].easting - poses[i - 1].easting ==
                  doctest::Approx(footprint * 0.125));
    }

    SUBCASE("same seed reproduces the same poses") {
        auto again = sample_trajectory(p, gt, extent, view, 3);
        REQUIRE(again.size() == poses.size());
        for (size_t i = 0; i < poses.size(); ++i) {
            CHECK(again[i].easting == poses[i].easting);
            CHECK(again[i].northing == poses[i].northing);
        }
    }
    SUBCASE("zero band width flies perfectly straight") {
        TrajectoryPreset straight = p;
        straight.band_width_m = 0.0;
        auto line = sample_trajectory(straight, gt, extent, view, 3);
        for (const Pose& q : line) CHECK(q.northing == center_n);
    }
    SUBCASE("oversized trajectory is rejected") {
        TrajectoryPreset big = p;
        big.distance_m = 1e6;
        CHECK_THROWS_WITH_AS(sample_trajectory(big, gt, extent, view, 3),
                             doctest::Contains("trajectory does not fit terrain"), Error);
    }
    SUBCASE("invalid overlap is rejected") {
        TrajectoryPreset bad = p;
        bad.overlap_fraction = 1.0;
        CHECK_THROWS_WITH_AS(sample_trajectory(bad, gt, extent, view, 3),
                             doctest::Contains("overlap fraction must be in [0, 1)"), Error);
    }
}

TEST_CASE("all views along a preset trajectory render in bounds") {
    Terrain t = generate_terrain(small_spec(11));
    TrajectoryPreset p = scale_preset(trajectory_preset('B'), 60.0);
    auto poses = sample_trajectory(p, t.transform, t.spec.extent, 64, 4);
    REQUIRE(!poses.empty());
    for (const Pose& pose : poses) {
        RasterImage v = render_view(t, pose, 64);
        CHECK(v.width == 64);
    }
}
