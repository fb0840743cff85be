#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edgeloc/errors.hpp"
#include "edgeloc/parallel.hpp"
#include "edgeloc/pipeline.hpp"

namespace {

using namespace edgeloc;

const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::usage: return "usage";
        case ErrorCategory::io: return "io";
        case ErrorCategory::format: return "format";
        case ErrorCategory::mismatch: return "mismatch";
        case ErrorCategory::numeric: return "numeric";
        case ErrorCategory::internal: break;
    }
    return "internal";
}

Estimator estimator_from(const std::string& s) {
    if (s == "argmax") return Estimator::argmax;
    if (s == "weighted") return Estimator::weighted;
    fail(ErrorCategory::usage, "unknown estimator: " + s);
}

// Shared retrieval flags (localize / evaluate / sweep).
struct GateFlags {
    double threshold = 1.13;
    std::string estimator = "argmax";
    int topk = 16;

    void attach(CLI::App* sub) {
        sub->add_option("--threshold", threshold, "acceptance threshold on the top-2 score ratio")
            ->capture_default_str();
        sub->add_option("--estimator", estimator, "position estimator")
            ->check(CLI::IsMember({"argmax", "weighted"}))
            ->capture_default_str();
        sub->add_option("--topk", topk, "neighbors used by the weighted estimator")
            ->capture_default_str();
    }

    LocalizeOptions options() const {
        return {threshold, estimator_from(estimator), topk};
    }
};

void attach_canny_flags(CLI::App* sub, CannyParams& p) {
    sub->add_option("--low", p.low_threshold, "hysteresis low threshold")->capture_default_str();
    sub->add_option("--high", p.high_threshold, "hysteresis high threshold")
        ->capture_default_str();
    sub->add_option("--kernel", p.sobel_kernel, "odd derivative kernel size")
        ->capture_default_str();
    sub->add_option("--sigma", p.gaussian_sigma, "Gaussian blur sigma")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"edgeloc: season-robust aerial relocalization over edge maps"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    app.set_config("--config", "", "read option defaults from a TOML/INI file");
    app.get_config_formatter_base()->comment('#');

    int threads = 1;
    app.add_option("--threads", threads,
                   "worker threads; results are bit-identical for every value")
        ->capture_default_str();

    int exit_code = 0;
    const auto apply_globals = [&] { set_thread_count(threads); };

    // --- simulate ------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "generate terrain, a season-shifted copy, a "
                                               "trajectory, and per-pose views");
    auto sim_job = std::make_shared<SimulateJob>();
    std::string sim_preset = "B";
    bool sim_no_views = false;
    bool sim_no_permute = false;
    sim->add_option("--out", sim_job->out_dir, "output directory")->required();
    sim->add_option("--seed", sim_job->terrain.seed, "master seed")
        ->envname("EDGELOC_SEED")
        ->capture_default_str();
    sim->add_option("--extent", sim_job->terrain.extent, "terrain side in pixels (>= 512)")
        ->capture_default_str();
    sim->add_option("--resolution", sim_job->terrain.resolution, "meters per pixel")
        ->capture_default_str();
    sim->add_option("--field-density", sim_job->terrain.field_density,
                    "Voronoi field sites per square km")
        ->capture_default_str();
    sim->add_option("--road-density", sim_job->terrain.road_density,
                    "roads per km of terrain side")
        ->capture_default_str();
    sim->add_option("--building-density", sim_job->terrain.building_density,
                    "building outlines per square km")
        ->capture_default_str();
    sim->add_option("--texture-noise", sim_job->terrain.texture_noise,
                    "per-pixel intensity jitter, 0 disables")
        ->capture_default_str();
    sim->add_option("--origin-easting", sim_job->terrain.origin_easting, "world origin easting")
        ->capture_default_str();
    sim->add_option("--origin-northing", sim_job->terrain.origin_northing,
                    "world origin northing")
        ->capture_default_str();
    sim->add_option("--preset", sim_preset, "trajectory preset A|B|C|D")
        ->check(CLI::IsMember({"A", "B", "C", "D"}))
        ->capture_default_str();
    sim->add_option("--view-size", sim_job->view_size, "rendered view side in pixels")
        ->capture_default_str();
    sim->add_flag("--no-views", sim_no_views, "skip rendering per-pose views");
    sim->add_option("--season-seed", sim_job->season.seed,
                    "season shift seed (0 = reuse master seed)")
        ->capture_default_str();
    sim->add_flag("--no-permute", sim_no_permute, "keep field palette levels in place");
    sim->add_option("--season-jitter", sim_job->season.max_jitter,
                    "per-region intensity offset bound")
        ->capture_default_str();
    sim->add_option("--season-contrast", sim_job->season.contrast_jitter,
                    "per-region contrast factor bound around 1")
        ->capture_default_str();
    sim->callback([&, sim_job] {
        apply_globals();
        sim_job->preset = sim_preset[0];
        sim_job->render_views = !sim_no_views;
        sim_job->season.permute_levels = !sim_no_permute;
        const SimulateSummary sum = run_simulate(*sim_job);
        std::cout << "terrain " << sum.terrain_year1 << "\n";
        std::cout << "terrain " << sum.terrain_year2 << "\n";
        std::cout << "poses " << sum.poses_path << " (" << sum.n_poses << " frames)\n";
        if (!sum.views_year1_dir.empty())
            std::cout << "views " << sum.views_year1_dir << " " << sum.views_year2_dir << "\n";
    });

    // --- tile ----------------------------------------------------------------
    auto* til = app.add_subcommand("tile", "cut a georeferenced raster into reference tiles");
    auto tile_job = std::make_shared<TileJob>();
    tile_job->grid.overlap_fraction = 0.5;
    til->add_option("--raster", tile_job->raster_path, "input raster (.pgm/.png with .wld)")
        ->required();
    til->add_option("--out", tile_job->out_dir, "output tile directory")->required();
    til->add_option("--tile-size", tile_job->grid.tile_size, "tile side in pixels")
        ->capture_default_str();
    til->add_option("--overlap", tile_job->grid.overlap_fraction,
                    "fractional overlap between neighbor tiles, in [0,1)")
        ->capture_default_str();
    til->callback([&, tile_job] {
        apply_globals();
        const size_t n = run_tile(*tile_job);
        std::cout << "tiles " << tile_job->out_dir << " (" << n << " tiles)\n";
    });

    // --- edges ---------------------------------------------------------------
    auto* edg = app.add_subcommand("edges", "extract a binary edge map from a raster");
    auto edges_job = std::make_shared<EdgesJob>();
    edg->add_option("--input", edges_job->input_path, "input raster (.pgm/.png)")->required();
    edg->add_option("--out", edges_job->out_path, "output edge map (.pgm, 0/255)")->required();
    attach_canny_flags(edg, edges_job->canny);
    edg->callback([&, edges_job] {
        apply_globals();
        const double fraction = run_edges(*edges_job);
        std::cout << "edges " << edges_job->out_path << " (fraction "
                  << nlohmann::json(fraction).dump() << ")\n";
    });

    // --- train ---------------------------------------------------------------
    auto* trn = app.add_subcommand("train", "train an encoder on a tile set");
    auto train_job = std::make_shared<TrainJob>();
    std::string trn_backend = "ae", trn_input = "canny";
    bool paper_scale = false;
    train_job->train.epochs = 50;
    trn->add_option("--tiles", train_job->tiles_dir, "training tile directory")->required();
    trn->add_option("--tiles2", train_job->tiles2_dir,
                    "second-variant tile directory (triplet backend)");
    trn->add_option("--out", train_job->out_path, "output model path")->required();
    trn->add_option("--backend", trn_backend, "encoder backend")
        ->check(CLI::IsMember({"ae", "triplet", "bovw"}))
        ->capture_default_str();
    trn->add_option("--input", trn_input, "input representation")
        ->check(CLI::IsMember({"gray", "canny", "import"}))
        ->capture_default_str();
    attach_canny_flags(trn, train_job->canny);
    auto* latent_opt = trn->add_option("--latent", train_job->latent_dim, "embedding dimension")
                           ->capture_default_str();
    trn->add_option("--hidden", train_job->hidden_dim, "hidden layer width (triplet)")
        ->capture_default_str();
    trn->add_option("--margin", train_job->margin, "triplet margin")->capture_default_str();
    auto* codebook_opt =
        trn->add_option("--codebook", train_job->codebook_size, "visual word count (bovw)")
            ->capture_default_str();
    trn->add_option("--patch", train_job->patch_size, "descriptor patch side (bovw)")
        ->capture_default_str();
    trn->add_option("--stride", train_job->grid_stride, "descriptor grid stride (bovw)")
        ->capture_default_str();
    auto* epochs_opt =
        trn->add_option("--epochs", train_job->train.epochs, "training epochs")
            ->capture_default_str();
    trn->add_option("--batch", train_job->train.batch_size, "batch size")->capture_default_str();
    auto* lr_opt = trn->add_option("--lr", train_job->train.learning_rate, "learning rate");
    auto* decay_opt =
        trn->add_option("--decay", train_job->train.weight_decay, "decoupled weight decay");
    trn->add_option("--seed", train_job->train.seed, "training seed")
        ->envname("EDGELOC_SEED")
        ->capture_default_str();
    trn->add_flag("--paper-scale", paper_scale,
                  "full-scale settings: 1024-dim embeddings, 200 epochs");
    trn->callback([&, train_job, latent_opt, codebook_opt, epochs_opt, lr_opt, decay_opt] {
        apply_globals();
        train_job->backend = backend_from_string(trn_backend);
        train_job->input_rep = input_rep_from_string(trn_input);
        const TrainConfig defaults = default_train_config(train_job->backend);
        if (!lr_opt->count()) train_job->train.learning_rate = defaults.learning_rate;
        if (!decay_opt->count()) train_job->train.weight_decay = defaults.weight_decay;
        if (paper_scale) {
            if (!epochs_opt->count()) train_job->train.epochs = 200;
            if (!latent_opt->count()) train_job->latent_dim = 1024;
            if (!codebook_opt->count()) train_job->codebook_size = 1024;
        }
        const TrainSummary sum = run_train(*train_job);
        std::cout << "model " << sum.model_path << " (" << sum.n_views << " views, final loss "
                  << nlohmann::json(sum.final_loss).dump() << ")\n";
    });

    // --- index ---------------------------------------------------------------
    auto* idx = app.add_subcommand("index", "embed a tile set into a reference index");
    auto index_job = std::make_shared<IndexJob>();
    idx->add_option("--model", index_job->model_path, "trained model path")->required();
    idx->add_option("--tiles", index_job->tiles_dir, "reference tile directory")->required();
    idx->add_option("--out", index_job->out_path, "output index path")->required();
    idx->callback([&, index_job] {
        apply_globals();
        const IndexSummary sum = run_index(*index_job);
        std::cout << "index " << sum.index_path << " (" << sum.n_embeddings << " embeddings, dim "
                  << sum.dim << ")\n";
    });

    // --- localize --------------------------------------------------------------
    auto* loc = app.add_subcommand("localize", "localize a single view against an index");
    auto loc_job = std::make_shared<LocalizeJob>();
    auto loc_gate = std::make_shared<GateFlags>();
    loc->add_option("--index", loc_job->index_path, "reference index path")->required();
    loc->add_option("--model", loc_job->model_path, "model that built the index")->required();
    loc->add_option("--view", loc_job->view_path, "query view raster")->required();
    loc->add_option("--out", loc_job->out_path, "optional JSON result path");
    loc_gate->attach(loc);
    loc->callback([&, loc_job, loc_gate] {
        apply_globals();
        loc_job->opts = loc_gate->options();
        nlohmann::json j;
        run_localize(*loc_job, &j);
        std::cout << j.dump(2) << "\n";
    });

    // --- evaluate --------------------------------------------------------------
    auto* evl = app.add_subcommand("evaluate", "score localization over a rendered trajectory");
    auto eval_job = std::make_shared<EvaluateJob>();
    auto eval_gate = std::make_shared<GateFlags>();
    bool eval_ungated = false;
    evl->add_option("--index", eval_job->index_path, "reference index path")->required();
    evl->add_option("--model", eval_job->model_path, "model that built the index")->required();
    evl->add_option("--views", eval_job->views_dir, "directory of query views")->required();
    evl->add_option("--poses", eval_job->poses_path, "poses.json with ground truth")->required();
    evl->add_option("--out", eval_job->out_dir, "output report directory")->required();
    evl->add_option("--radius", eval_job->radius, "correctness radius in meters")
        ->capture_default_str();
    evl->add_flag("--ungated", eval_ungated, "score all frames instead of accepted ones");
    eval_gate->attach(evl);
    evl->callback([&, eval_job, eval_gate] {
        apply_globals();
        eval_job->gated = !eval_ungated;
        eval_job->opts = eval_gate->options();
        const EvalReport r = run_evaluate(*eval_job);
        std::cout << "frames " << r.n_frames << " accepted " << r.n_accepted << " accuracy "
                  << nlohmann::json(r.accuracy).dump() << " retention "
                  << nlohmann::json(r.retention).dump() << "\n";
    });

    // --- sweep -----------------------------------------------------------------
    auto* swp = app.add_subcommand("sweep", "re-render views along a perturbation axis and "
                                            "score each value");
    auto sweep_job = std::make_shared<SweepJob>();
    auto sweep_gate = std::make_shared<GateFlags>();
    std::string sweep_axis = "rotation";
    bool sweep_ungated = false;
    swp->add_option("--index", sweep_job->index_path, "reference index path")->required();
    swp->add_option("--model", sweep_job->model_path, "model that built the index")->required();
    swp->add_option("--raster", sweep_job->raster_path, "georeferenced raster to render from")
        ->required();
    swp->add_option("--poses", sweep_job->poses_path, "poses.json with ground truth")->required();
    swp->add_option("--out", sweep_job->out_dir, "output directory")->required();
    swp->add_option("--axis", sweep_axis, "perturbation axis")
        ->check(CLI::IsMember({"rotation", "altitude"}))
        ->capture_default_str();
    swp->add_option("--values", sweep_job->values, "strictly increasing perturbation values")
        ->required()
        ->delimiter(',');
    swp->add_option("--radius", sweep_job->radius, "correctness radius in meters")
        ->capture_default_str();
    swp->add_flag("--ungated", sweep_ungated, "score all frames instead of accepted ones");
    sweep_gate->attach(swp);
    swp->callback([&, sweep_job, sweep_gate] {
        apply_globals();
        sweep_job->axis = sweep_axis_from_string(sweep_axis);
        sweep_job->gated = !sweep_ungated;
        sweep_job->opts = sweep_gate->options();
        const SweepResult s = run_sweep_job(*sweep_job);
        for (const SweepPoint& p : s.points)
            std::cout << to_string(s.axis) << " " << nlohmann::json(p.value).dump() << " accuracy "
                      << nlohmann::json(p.report.accuracy).dump() << " retention "
                      << nlohmann::json(p.report.retention).dump() << "\n";
    });

    // --- compare -----------------------------------------------------------------
    auto* cmp = app.add_subcommand("compare", "frame-aligned comparison of two evaluation "
                                              "reports");
    auto cmp_job = std::make_shared<CompareJob>();
    cmp->add_option("--a", cmp_job->report_a, "first report.json")->required();
    cmp->add_option("--b", cmp_job->report_b, "second report.json")->required();
    cmp->add_option("--out", cmp_job->out_path, "optional JSON comparison path");
    cmp->callback([&, cmp_job] {
        apply_globals();
        const ComparisonRecord r = run_compare(*cmp_job);
        const nlohmann::json j = {{"accuracy_a", r.accuracy_a}, {"accuracy_b", r.accuracy_b},
                                  {"difference", r.difference}, {"wins_a", r.wins_a},
                                  {"wins_b", r.wins_b},         {"ties", r.ties}};
        std::cout << j.dump(2) << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: usage: " << e.what() << "\n";
        return static_cast<int>(ErrorCategory::usage);
    } catch (const Error& e) {
        std::cerr << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return static_cast<int>(ErrorCategory::internal);
    }
    return exit_code;
}
