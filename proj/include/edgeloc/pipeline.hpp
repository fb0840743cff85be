#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "edgeloc/edgemap.hpp"
#include "edgeloc/embed_index.hpp"
#include "edgeloc/encoder.hpp"
#include "edgeloc/evaluate.hpp"
#include "edgeloc/geotile.hpp"
#include "edgeloc/simulator.hpp"

namespace edgeloc {

inline constexpr const char* kToolName = "edgeloc";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr uint32_t kModelFormatVersion = 1;
inline constexpr uint32_t kIndexFormatVersion = 1;

// --- Run manifests -----------------------------------------------------------

/// Writes the stage manifest: resolved config, its digest, and digests of the
/// named file inputs. Carries no timestamps, so reruns are byte-identical.
void write_run_manifest(const std::string& path, const std::string& stage,
                        const nlohmann::json& config,
                        const std::vector<std::pair<std::string, std::string>>& input_files = {});

/// Manifest location for a single-file artifact: "<artifact>.manifest.json".
std::string manifest_path_for(const std::string& artifact_path);

/// Creates the directory (and parents) if missing.
void ensure_directory(const std::string& dir);

std::string path_join(const std::string& dir, const std::string& name);

// --- Pose sets ---------------------------------------------------------------

struct PoseSet {
    int view_size = 0;
    TrajectoryPreset preset;
    std::vector<Pose> poses;
};

void write_poses_json(const std::string& path, const PoseSet& set);
PoseSet read_poses_json(const std::string& path);

/// Shrinks the preset (distance and corridor together) until the flight plus
/// render margins fits inside a square terrain of side_m meters. Presets that
/// already fit are returned unchanged.
TrajectoryPreset fit_preset_to_terrain(const TrajectoryPreset& p, double side_m,
                                       double footprint_m);

// --- Stages ------------------------------------------------------------------

struct SimulateJob {
    TerrainSpec terrain;
    SeasonShiftParams season;  // .seed defaults to the terrain seed when 0
    char preset = 'B';
    int view_size = 256;
    bool render_views = true;
    std::string out_dir;
};

struct SimulateSummary {
    std::string terrain_year1, terrain_year2, poses_path;
    std::string views_year1_dir, views_year2_dir;
    size_t n_poses = 0;
};

/// Terrain + season-shifted terrain + trajectory + per-pose nadir views for
/// both years. Everything derives from job.terrain.seed.
SimulateSummary run_simulate(const SimulateJob& job);

struct TileJob {
    std::string raster_path;  // PGM/PNG with a world file alongside
    TileGridSpec grid;
    std::string out_dir;
};

size_t run_tile(const TileJob& job);

struct EdgesJob {
    std::string input_path;
    std::string out_path;
    CannyParams canny;
};

/// Writes the binary edge map as 0/255 PGM; returns the edge fraction.
double run_edges(const EdgesJob& job);

struct TrainJob {
    std::string tiles_dir;
    std::string tiles2_dir;  // second appearance variant, triplet backend only
    Backend backend = Backend::autoencoder;
    InputRep input_rep = InputRep::gray;
    CannyParams canny;
    int latent_dim = 64;
    int hidden_dim = 256;
    double margin = 0.2;
    int codebook_size = 256;
    int patch_size = 8;
    int grid_stride = 4;
    TrainConfig train;
    std::string out_path;
};

struct TrainSummary {
    std::string model_path;
    size_t n_views = 0;
    double final_loss = 0.0;  // 0 for bovw
};

TrainSummary run_train(const TrainJob& job);

struct IndexJob {
    std::string model_path;
    std::string tiles_dir;
    std::string out_path;
};

struct IndexSummary {
    std::string index_path;
    size_t n_embeddings = 0;
    int dim = 0;
};

IndexSummary run_index(const IndexJob& job);

struct LocalizeJob {
    std::string index_path;
    std::string model_path;
    std::string view_path;
    LocalizeOptions opts;
    std::string out_path;  // optional JSON result file
};

LocalizationResult run_localize(const LocalizeJob& job, nlohmann::json* result_json = nullptr);

struct EvaluateJob {
    std::string index_path;
    std::string model_path;
    std::string views_dir;
    std::string poses_path;
    double radius = 10.0;
    bool gated = true;
    LocalizeOptions opts;
    std::string out_dir;
};

EvalReport run_evaluate(const EvaluateJob& job);

struct SweepJob {
    std::string index_path;
    std::string model_path;
    std::string raster_path;
    std::string poses_path;
    SweepAxis axis = SweepAxis::rotation;
    std::vector<double> values;
    double radius = 10.0;
    bool gated = true;
    LocalizeOptions opts;
    std::string out_dir;
};

SweepResult run_sweep_job(const SweepJob& job);

struct CompareJob {
    std::string report_a;
    std::string report_b;
    std::string out_path;  // optional JSON comparison file
};

ComparisonRecord run_compare(const CompareJob& job);

/// Loads index + model, refusing when the model file's content digest differs
/// from the one recorded at index build time.
LoadedIndex load_checked_index(const std::string& index_path, const std::string& model_path);

}  // namespace edgeloc
