#include "edgeloc/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "edgeloc/digest.hpp"
#include "edgeloc/errors.hpp"
#include "edgeloc/image_io.hpp"
#include "edgeloc/parallel.hpp"

namespace edgeloc {
namespace {

std::string view_file_name(size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%06zu.pgm", i);
    return buf;
}

nlohmann::json canny_to_json(const CannyParams& p) {
    return {{"low", p.low_threshold},
            {"high", p.high_threshold},
            {"kernel", p.sobel_kernel},
            {"sigma", p.gaussian_sigma}};
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::io, "cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCategory::format, "bad json file: " + path);
    }
    return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::io, "cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace

void write_run_manifest(const std::string& path, const std::string& stage,
                        const nlohmann::json& config,
                        const std::vector<std::pair<std::string, std::string>>& input_files) {
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [name, file] : input_files) inputs[name] = file_digest(file);
    const nlohmann::json j = {
        {"tool", kToolName},
        {"tool_version", kToolVersion},
        {"format_versions",
         {{"model", kModelFormatVersion}, {"index", kIndexFormatVersion}}},
        {"stage", stage},
        {"config", config},
        {"config_digest", fnv1a64_hex(config.dump())},
        {"inputs", inputs},
    };
    write_json_file(path, j);
}

std::string manifest_path_for(const std::string& artifact_path) {
    return artifact_path + ".manifest.json";
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCategory::io, "cannot create directory " + dir);
}

std::string path_join(const std::string& dir, const std::string& name) {
    if (dir.empty()) return name;
    if (dir.back() == '/') return dir + name;
    return dir + "/" + name;
}

// --- Pose sets ---------------------------------------------------------------

void write_poses_json(const std::string& path, const PoseSet& set) {
    nlohmann::json frames = nlohmann::json::array();
    for (size_t i = 0; i < set.poses.size(); ++i) {
        const Pose& p = set.poses[i];
        frames.push_back({{"id", i},
                          {"easting", p.easting},
                          {"northing", p.northing},
                          {"altitude_m", p.altitude_m},
                          {"heading_deg", p.heading_deg}});
    }
    const nlohmann::json j = {
        {"view_size", set.view_size},
        {"preset",
         {{"name", std::string(1, set.preset.name)},
          {"altitude_m", set.preset.altitude_m},
          {"distance_m", set.preset.distance_m},
          {"band_width_m", set.preset.band_width_m},
          {"overlap_fraction", set.preset.overlap_fraction}}},
        {"frames", frames},
    };
    write_json_file(path, j);
}

PoseSet read_poses_json(const std::string& path) {
    const nlohmann::json j = read_json_file(path);
    PoseSet set;
    try {
        set.view_size = j.at("view_size").get<int>();
        const nlohmann::json& pj = j.at("preset");
        const std::string name = pj.at("name").get<std::string>();
        set.preset.name = name.empty() ? '?' : name[0];
        set.preset.altitude_m = pj.at("altitude_m").get<double>();
        set.preset.distance_m = pj.at("distance_m").get<double>();
        set.preset.band_width_m = pj.at("band_width_m").get<double>();
        set.preset.overlap_fraction = pj.at("overlap_fraction").get<double>();
        for (const nlohmann::json& fj : j.at("frames")) {
            Pose p;
            p.easting = fj.at("easting").get<double>();
            p.northing = fj.at("northing").get<double>();
            p.altitude_m = fj.at("altitude_m").get<double>();
            p.heading_deg = fj.at("heading_deg").get<double>();
            set.poses.push_back(p);
        }
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCategory::format, "bad poses file: " + path);
    }
    return set;
}

TrajectoryPreset fit_preset_to_terrain(const TrajectoryPreset& p, double side_m,
                                       double footprint_m) {
    // sample_trajectory needs margin = 0.75*footprint + band/2 on each side.
    const double needed = p.distance_m + 1.5 * footprint_m + p.band_width_m;
    if (needed <= side_m) return p;
    const double avail = side_m - 1.5 * footprint_m;
    if (avail <= 0.0) fail(ErrorCategory::usage, "trajectory does not fit terrain");
    // Band shrinks with distance, so solve s*(distance + band) <= avail; the
    // 0.98 keeps the scaled plan strictly inside the margin checks.
    const double s = 0.98 * avail / (p.distance_m + p.band_width_m);
    if (s <= 0.0 || s * p.distance_m <= 0.0)
        fail(ErrorCategory::usage, "trajectory does not fit terrain");
    return scale_preset(p, s * p.distance_m);
}

// --- Stages ------------------------------------------------------------------

SimulateSummary run_simulate(const SimulateJob& job) {
    if (job.out_dir.empty()) fail(ErrorCategory::usage, "simulate needs an output directory");
    ensure_directory(job.out_dir);

    const Terrain t = generate_terrain(job.terrain);
    SeasonShiftParams season = job.season;
    if (season.seed == 0) season.seed = job.terrain.seed;
    const RasterImage year2 = season_shift(t, season);

    SimulateSummary sum;
    sum.terrain_year1 = path_join(job.out_dir, "terrain_year1.pgm");
    sum.terrain_year2 = path_join(job.out_dir, "terrain_year2.pgm");
    write_georeferenced(sum.terrain_year1, t.image, t.transform);
    write_georeferenced(sum.terrain_year2, year2, t.transform);

    const double side_m = job.terrain.extent * job.terrain.resolution;
    const double footprint_m = job.view_size * job.terrain.resolution;
    const TrajectoryPreset preset =
        fit_preset_to_terrain(trajectory_preset(job.preset), side_m, footprint_m);
    PoseSet set;
    set.view_size = job.view_size;
    set.preset = preset;
    set.poses = sample_trajectory(preset, t.transform, job.terrain.extent, job.view_size,
                                  job.terrain.seed);
    sum.poses_path = path_join(job.out_dir, "poses.json");
    write_poses_json(sum.poses_path, set);
    sum.n_poses = set.poses.size();

    if (job.render_views) {
        sum.views_year1_dir = path_join(job.out_dir, "views_year1");
        sum.views_year2_dir = path_join(job.out_dir, "views_year2");
        ensure_directory(sum.views_year1_dir);
        ensure_directory(sum.views_year2_dir);
        for (size_t i = 0; i < set.poses.size(); ++i) {
            const std::string name = view_file_name(i);
            write_pgm(path_join(sum.views_year1_dir, name),
                      render_view(t.image, t.transform, set.poses[i], job.view_size));
            write_pgm(path_join(sum.views_year2_dir, name),
                      render_view(year2, t.transform, set.poses[i], job.view_size));
        }
    }

    const nlohmann::json config = {
        {"terrain",
         {{"seed", job.terrain.seed},
          {"extent", job.terrain.extent},
          {"resolution", job.terrain.resolution},
          {"field_density", job.terrain.field_density},
          {"road_density", job.terrain.road_density},
          {"building_density", job.terrain.building_density},
          {"texture_noise", job.terrain.texture_noise},
          {"origin_easting", job.terrain.origin_easting},
          {"origin_northing", job.terrain.origin_northing}}},
        {"season",
         {{"seed", season.seed},
          {"permute_levels", season.permute_levels},
          {"max_jitter", season.max_jitter},
          {"contrast_jitter", season.contrast_jitter}}},
        {"preset",
         {{"name", std::string(1, preset.name)},
          {"altitude_m", preset.altitude_m},
          {"distance_m", preset.distance_m},
          {"band_width_m", preset.band_width_m},
          {"overlap_fraction", preset.overlap_fraction}}},
        {"view_size", job.view_size},
        {"render_views", job.render_views},
    };
    write_run_manifest(path_join(job.out_dir, "run_manifest.json"), "simulate", config);
    return sum;
}

size_t run_tile(const TileJob& job) {
    if (job.out_dir.empty()) fail(ErrorCategory::usage, "tile needs an output directory");
    const GeoreferencedImage geo = read_georeferenced(job.raster_path);
    const std::vector<Tile> tiles = generate_tiles(geo.image, geo.transform, job.grid);
    ensure_directory(job.out_dir);
    write_tile_set(job.out_dir, tiles);

    const nlohmann::json config = {
        {"raster", job.raster_path},
        {"tile_size", job.grid.tile_size},
        {"overlap_fraction", job.grid.overlap_fraction},
        {"stride", job.grid.stride()},
    };
    write_run_manifest(path_join(job.out_dir, "run_manifest.json"), "tile", config,
                       {{"raster", job.raster_path}});
    return tiles.size();
}

double run_edges(const EdgesJob& job) {
    const RasterImage img = read_raster(job.input_path);
    const EdgeMap edges = canny(img, job.canny);
    write_edge_map(job.out_path, edges);
    // Keep the georeference if the input had one; edge maps are rasters too.
    const std::string wld = world_file_path(job.input_path);
    if (std::filesystem::exists(wld))
        write_world_file(world_file_path(job.out_path), read_world_file(wld));

    const nlohmann::json config = {{"input", job.input_path}, {"canny", canny_to_json(job.canny)}};
    write_run_manifest(manifest_path_for(job.out_path), "edges", config,
                       {{"input", job.input_path}});
    return edge_fraction(edges);
}

TrainSummary run_train(const TrainJob& job) {
    if (job.out_path.empty()) fail(ErrorCategory::usage, "train needs an output path");
    const std::vector<Tile> tiles = read_tile_set(job.tiles_dir);
    if (tiles.empty()) fail(ErrorCategory::usage, "no tiles to train on");

    EncoderModel model;
    model.backend = job.backend;
    model.input_rep = job.input_rep;
    model.canny_params = job.canny;
    model.input_width = tiles.front().pixels.width;
    model.input_height = tiles.front().pixels.height;
    model.train_config = job.train;

    std::vector<FlatView> views(tiles.size());
    parallel_for(tiles.size(), [&](size_t i) { views[i] = prepare_input(model, tiles[i].pixels); });

    TrainSummary sum;
    switch (job.backend) {
        case Backend::autoencoder: {
            TrainedAutoencoder trained = train_autoencoder(views, job.train, job.latent_dim);
            model.autoencoder = std::move(trained.model);
            model.loss_history = std::move(trained.loss_history);
            break;
        }
        case Backend::triplet: {
            if (job.tiles2_dir.empty())
                fail(ErrorCategory::usage, "triplet training needs a second tile set");
            const std::vector<Tile> tiles2 = read_tile_set(job.tiles2_dir);
            if (tiles2.size() != tiles.size())
                fail(ErrorCategory::mismatch, "tile sets cover different grids");
            std::vector<TrainingView> data(2 * tiles.size());
            parallel_for(tiles.size(), [&](size_t i) {
                if (tiles2[i].id != tiles[i].id ||
                    tiles2[i].pixels.width != tiles.front().pixels.width ||
                    tiles2[i].pixels.height != tiles.front().pixels.height)
                    fail(ErrorCategory::mismatch, "tile sets cover different grids");
                data[2 * i] = {static_cast<int>(tiles[i].id), 0, views[i]};
                data[2 * i + 1] = {static_cast<int>(tiles2[i].id), 1,
                                   prepare_input(model, tiles2[i].pixels)};
            });
            TrainedTriplet trained =
                train_triplet(data, job.train, job.hidden_dim, job.latent_dim, job.margin);
            model.triplet = std::move(trained.model);
            model.loss_history = std::move(trained.loss_history);
            break;
        }
        case Backend::bovw: {
            std::vector<std::vector<double>> descriptors;
            for (const FlatView& v : views) {
                std::vector<std::vector<double>> d =
                    extract_descriptors(v, job.patch_size, job.grid_stride);
                descriptors.insert(descriptors.end(), std::make_move_iterator(d.begin()),
                                   std::make_move_iterator(d.end()));
            }
            model.codebook = fit_codebook(descriptors, job.codebook_size, job.train.seed);
            model.codebook.patch_size = job.patch_size;
            model.codebook.grid_stride = job.grid_stride;
            break;
        }
    }
    sum.final_loss = model.loss_history.empty() ? 0.0 : model.loss_history.back();
    sum.n_views = views.size();

    save_model(job.out_path, model);
    sum.model_path = job.out_path;

    nlohmann::json config = {
        {"tiles_dir", job.tiles_dir},
        {"backend", to_string(job.backend)},
        {"input", to_string(job.input_rep)},
        {"canny", canny_to_json(job.canny)},
        {"latent_dim", job.latent_dim},
        {"train",
         {{"epochs", job.train.epochs},
          {"batch_size", job.train.batch_size},
          {"learning_rate", job.train.learning_rate},
          {"weight_decay", job.train.weight_decay},
          {"seed", job.train.seed}}},
    };
    if (job.backend == Backend::triplet) {
        config["tiles2_dir"] = job.tiles2_dir;
        config["hidden_dim"] = job.hidden_dim;
        config["margin"] = job.margin;
    }
    if (job.backend == Backend::bovw) {
        config["codebook_size"] = job.codebook_size;
        config["patch_size"] = job.patch_size;
        config["grid_stride"] = job.grid_stride;
    }
    std::vector<std::pair<std::string, std::string>> inputs = {
        {"tiles_manifest", path_join(job.tiles_dir, "manifest.json")}};
    if (job.backend == Backend::triplet)
        inputs.push_back({"tiles2_manifest", path_join(job.tiles2_dir, "manifest.json")});
    write_run_manifest(manifest_path_for(job.out_path), "train", config, inputs);
    return sum;
}

IndexSummary run_index(const IndexJob& job) {
    if (job.out_path.empty()) fail(ErrorCategory::usage, "index needs an output path");
    const EncoderModel model = load_model(job.model_path);
    const std::vector<Tile> tiles = read_tile_set(job.tiles_dir);
    const ReferenceIndex idx = build_index(model, tiles);

    IndexSidecar info;
    info.model_digest = file_digest(job.model_path);
    info.model_path = job.model_path;
    info.tile_size = tiles.empty() ? 0 : tiles.front().pixels.width;
    const std::string tile_manifest = path_join(job.tiles_dir, "run_manifest.json");
    if (std::filesystem::exists(tile_manifest)) {
        try {
            info.overlap_fraction =
                read_json_file(tile_manifest).at("config").at("overlap_fraction").get<double>();
        } catch (const nlohmann::json::exception&) {
        }
    }
    save_index(job.out_path, idx, info);

    const nlohmann::json config = {
        {"model", job.model_path},
        {"tiles_dir", job.tiles_dir},
        {"tile_size", info.tile_size},
        {"overlap_fraction", info.overlap_fraction},
    };
    write_run_manifest(manifest_path_for(job.out_path), "index", config,
                       {{"model", job.model_path},
                        {"tiles_manifest", path_join(job.tiles_dir, "manifest.json")}});
    return {job.out_path, idx.count(), idx.dim};
}

LoadedIndex load_checked_index(const std::string& index_path, const std::string& model_path) {
    LoadedIndex li = load_index(index_path);
    if (li.info.model_digest.empty())
        fail(ErrorCategory::format, "index is missing its model digest");
    if (file_digest(model_path) != li.info.model_digest)
        fail(ErrorCategory::mismatch, "model does not match index");
    return li;
}

LocalizationResult run_localize(const LocalizeJob& job, nlohmann::json* result_json) {
    const LoadedIndex li = load_checked_index(job.index_path, job.model_path);
    const EncoderModel model = load_model(job.model_path);
    const RasterImage view = read_raster(job.view_path);
    const LocalizationResult res = localize(li.index, embed_view(model, view), job.opts);

    const nlohmann::json j = {
        {"view", job.view_path},
        {"predicted_easting", res.predicted_easting},
        {"predicted_northing", res.predicted_northing},
        {"best_id", res.best_id},
        {"top_score", res.top_score},
        {"lowe_ratio", std::isinf(res.lowe_ratio) ? nlohmann::json("inf")
                                                  : nlohmann::json(res.lowe_ratio)},
        {"accepted", res.accepted},
        {"estimator", res.estimator == Estimator::weighted ? "weighted" : "argmax"},
        {"weighted_fallback", res.weighted_fallback},
        {"model_digest", li.info.model_digest},
        {"index", job.index_path},
    };
    if (!job.out_path.empty()) write_json_file(job.out_path, j);
    if (result_json) *result_json = j;
    return res;
}

namespace {

nlohmann::json eval_config_json(const std::string& index_path, const std::string& model_path,
                                const std::string& poses_path, double radius, bool gated,
                                const LocalizeOptions& opts) {
    return {
        {"index", index_path},
        {"model", model_path},
        {"poses", poses_path},
        {"radius_m", radius},
        {"gated", gated},
        {"threshold", opts.threshold},
        {"estimator", opts.estimator == Estimator::weighted ? "weighted" : "argmax"},
        {"weighted_k", opts.weighted_k},
    };
}

}  // namespace

EvalReport run_evaluate(const EvaluateJob& job) {
    if (job.out_dir.empty()) fail(ErrorCategory::usage, "evaluate needs an output directory");
    const LoadedIndex li = load_checked_index(job.index_path, job.model_path);
    const EncoderModel model = load_model(job.model_path);
    const PoseSet set = read_poses_json(job.poses_path);

    std::vector<RasterImage> views(set.poses.size());
    std::vector<WorldPoint> truth(set.poses.size());
    for (size_t i = 0; i < set.poses.size(); ++i) {
        views[i] = read_raster(path_join(job.views_dir, view_file_name(i)));
        truth[i] = {set.poses[i].easting, set.poses[i].northing};
    }

    const EvalReport report =
        evaluate_views(views, truth, model, li.index, job.opts, job.radius, job.gated);

    ensure_directory(job.out_dir);
    write_report_json(path_join(job.out_dir, "report.json"), report);
    write_report_csv(path_join(job.out_dir, "report.csv"), report);

    nlohmann::json config =
        eval_config_json(job.index_path, job.model_path, job.poses_path, job.radius, job.gated,
                         job.opts);
    config["views_dir"] = job.views_dir;
    write_run_manifest(path_join(job.out_dir, "run_manifest.json"), "evaluate", config,
                       {{"model", job.model_path},
                        {"index", job.index_path},
                        {"poses", job.poses_path}});
    return report;
}

SweepResult run_sweep_job(const SweepJob& job) {
    if (job.out_dir.empty()) fail(ErrorCategory::usage, "sweep needs an output directory");
    const LoadedIndex li = load_checked_index(job.index_path, job.model_path);
    const EncoderModel model = load_model(job.model_path);
    const GeoreferencedImage geo = read_georeferenced(job.raster_path);
    const PoseSet set = read_poses_json(job.poses_path);

    const SweepResult sweep =
        run_sweep(geo.image, geo.transform, set.poses, set.view_size, model, li.index, job.opts,
                  job.radius, job.gated, job.axis, job.values);

    ensure_directory(job.out_dir);
    write_sweep_json(path_join(job.out_dir, "sweep.json"), sweep);
    write_sweep_csv(path_join(job.out_dir, "sweep.csv"), sweep);
    write_sweep_svg(path_join(job.out_dir, "sweep.svg"), sweep);

    nlohmann::json config =
        eval_config_json(job.index_path, job.model_path, job.poses_path, job.radius, job.gated,
                         job.opts);
    config["raster"] = job.raster_path;
    config["axis"] = to_string(job.axis);
    config["values"] = job.values;
    write_run_manifest(path_join(job.out_dir, "run_manifest.json"), "sweep", config,
                       {{"model", job.model_path},
                        {"index", job.index_path},
                        {"poses", job.poses_path},
                        {"raster", job.raster_path}});
    return sweep;
}

ComparisonRecord run_compare(const CompareJob& job) {
    const EvalReport a = read_report_json(job.report_a);
    const EvalReport b = read_report_json(job.report_b);
    const ComparisonRecord cmp = compare_pipelines(a, b);
    if (!job.out_path.empty()) write_comparison_json(job.out_path, cmp);
    return cmp;
}

}  // namespace edgeloc
