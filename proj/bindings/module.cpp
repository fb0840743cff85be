#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "edgeloc/errors.hpp"
#include "edgeloc/pipeline.hpp"

namespace py = pybind11;
using namespace edgeloc;

namespace {

RasterImage to_raster(const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2D uint8 array");
    RasterImage img;
    img.height = static_cast<int>(a.shape(0));
    img.width = static_cast<int>(a.shape(1));
    img.pixels.assign(a.data(), a.data() + static_cast<size_t>(img.width) * img.height);
    return img;
}

py::array_t<uint8_t> to_array(const RasterImage& img) {
    py::array_t<uint8_t> a({img.height, img.width});
    std::copy(img.pixels.begin(), img.pixels.end(), a.mutable_data());
    return a;
}

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

using Image = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Season-robust aerial relocalization over edge maps";

    py::register_exception<Error>(m, "EdgelocError");

    m.def("version", [] { return std::string(kToolVersion); });

    m.def(
        "canny",
        [](const Image& img, int low, int high, int kernel, double sigma) {
            const EdgeMap e = canny(to_raster(img), CannyParams{static_cast<double>(low),
                                                                static_cast<double>(high), kernel,
                                                                sigma});
            py::array_t<uint8_t> a({e.height, e.width});
            std::copy(e.bits.begin(), e.bits.end(), a.mutable_data());
            return a;
        },
        py::arg("image"), py::arg("low") = 100, py::arg("high") = 200, py::arg("kernel") = 3,
        py::arg("sigma") = 1.0,
        "Binary edge map (uint8 0/1) of a 2D uint8 grayscale image.");

    py::class_<Terrain>(m, "Terrain")
        .def_property_readonly("image", [](const Terrain& t) { return to_array(t.image); })
        .def_property_readonly("resolution", [](const Terrain& t) { return t.transform.resolution; })
        .def_property_readonly(
            "origin",
            [](const Terrain& t) {
                return py::make_tuple(t.transform.origin_easting, t.transform.origin_northing);
            })
        .def(
            "season",
            [](const Terrain& t, uint64_t seed, bool permute, int jitter, double contrast) {
                return to_array(season_shift(
                    t, SeasonShiftParams{seed, permute, jitter, contrast}));
            },
            py::arg("seed"), py::arg("permute") = true, py::arg("jitter") = 5,
            py::arg("contrast") = 0.0, "Season-shifted copy of the terrain image.")
        .def(
            "render",
            [](const Terrain& t, double easting, double northing, double altitude, int view_size,
               double heading, double rotation, double drop) {
                return to_array(render_view(t, Pose{easting, northing, altitude, heading},
                                            view_size, PerturbationSpec{rotation, drop}));
            },
            py::arg("easting"), py::arg("northing"), py::arg("altitude") = 2000.0,
            py::arg("view_size") = 64, py::arg("heading") = 0.0, py::arg("rotation") = 0.0,
            py::arg("drop") = 0.0, "Nadir view centered on a world position.");

    m.def(
        "generate_terrain",
        [](uint64_t seed, int extent, double resolution, double field_density,
           double road_density, double building_density, int texture_noise, double origin_easting,
           double origin_northing) {
            return generate_terrain(TerrainSpec{seed, extent, resolution, field_density,
                                                road_density, building_density, texture_noise,
                                                origin_easting, origin_northing});
        },
        py::arg("seed") = 0, py::arg("extent") = 2048, py::arg("resolution") = 0.2,
        py::arg("field_density") = 3000.0, py::arg("road_density") = 30.0,
        py::arg("building_density") = 1500.0, py::arg("texture_noise") = 2,
        py::arg("origin_easting") = 100000.0, py::arg("origin_northing") = 200000.0);

    py::class_<EncoderModel>(m, "Model")
        .def_property_readonly("backend",
                               [](const EncoderModel& mdl) { return to_string(mdl.backend); })
        .def_property_readonly("input",
                               [](const EncoderModel& mdl) { return to_string(mdl.input_rep); })
        .def_property_readonly("loss_history",
                               [](const EncoderModel& mdl) { return mdl.loss_history; })
        .def(
            "embed",
            [](const EncoderModel& mdl, const Image& view) {
                return to_array(embed_view(mdl, to_raster(view)));
            },
            py::arg("view"), "L2-normalized embedding of a raw grayscale view.")
        .def("save", [](const EncoderModel& mdl, const std::string& path) { save_model(path, mdl); },
             py::arg("path"));

    m.def("load_model", &load_model, py::arg("path"));

    m.def(
        "train_autoencoder",
        [](const std::vector<Image>& views, int latent, const std::string& input, int epochs,
           int batch, double lr, double decay, uint64_t seed, int low, int high) {
            if (views.empty()) throw std::invalid_argument("no training views");
            EncoderModel mdl;
            mdl.backend = Backend::autoencoder;
            mdl.input_rep = input_rep_from_string(input);
            mdl.canny_params.low_threshold = low;
            mdl.canny_params.high_threshold = high;
            RasterImage first = to_raster(views.front());
            mdl.input_width = first.width;
            mdl.input_height = first.height;
            std::vector<FlatView> data;
            for (const Image& v : views) data.push_back(prepare_input(mdl, to_raster(v)));
            TrainConfig cfg = default_train_config(Backend::autoencoder);
            cfg.epochs = epochs;
            cfg.batch_size = batch;
            cfg.learning_rate = lr;
            cfg.weight_decay = decay;
            cfg.seed = seed;
            mdl.train_config = cfg;
            TrainedAutoencoder trained = train_autoencoder(data, cfg, latent);
            mdl.autoencoder = std::move(trained.model);
            mdl.loss_history = std::move(trained.loss_history);
            return mdl;
        },
        py::arg("views"), py::arg("latent") = 16, py::arg("input") = "gray",
        py::arg("epochs") = 10, py::arg("batch") = 32, py::arg("lr") = 3e-4,
        py::arg("decay") = 0.01, py::arg("seed") = 0, py::arg("low") = 100, py::arg("high") = 200,
        "Train an affine autoencoder on grayscale views (or their edge maps).");

    py::class_<ReferenceIndex>(m, "Index")
        .def_static(
            "build",
            [](const EncoderModel& mdl, const std::vector<Image>& images,
               const std::vector<double>& eastings, const std::vector<double>& northings) {
                if (images.size() != eastings.size() || images.size() != northings.size())
                    throw std::invalid_argument("images and positions differ in length");
                std::vector<Tile> tiles(images.size());
                for (size_t i = 0; i < images.size(); ++i)
                    tiles[i] = {static_cast<uint32_t>(i), to_raster(images[i]), eastings[i],
                                northings[i]};
                return build_index(mdl, tiles);
            },
            py::arg("model"), py::arg("images"), py::arg("eastings"), py::arg("northings"))
        .def_property_readonly("count", [](const ReferenceIndex& idx) { return idx.count(); })
        .def_property_readonly("dim", [](const ReferenceIndex& idx) { return idx.dim; })
        .def(
            "query",
            [](const ReferenceIndex& idx, const EncoderModel& mdl, const Image& view, int k) {
                std::vector<std::pair<uint32_t, double>> out;
                for (const ScoredId& s : query_topk(idx, embed_view(mdl, to_raster(view)), k))
                    out.emplace_back(s.id, s.score);
                return out;
            },
            py::arg("model"), py::arg("view"), py::arg("k") = 5,
            "Top-k (tile id, score) matches for a view.")
        .def(
            "localize",
            [](const ReferenceIndex& idx, const EncoderModel& mdl, const Image& view,
               double threshold, const std::string& estimator, int topk) {
                LocalizeOptions opts;
                opts.threshold = threshold;
                opts.estimator =
                    estimator == "weighted" ? Estimator::weighted : Estimator::argmax;
                opts.weighted_k = topk;
                const LocalizationResult r = localize(idx, embed_view(mdl, to_raster(view)), opts);
                py::dict d;
                d["easting"] = r.predicted_easting;
                d["northing"] = r.predicted_northing;
                d["best_id"] = r.best_id;
                d["top_score"] = r.top_score;
                d["lowe_ratio"] = r.lowe_ratio;
                d["accepted"] = r.accepted;
                return d;
            },
            py::arg("model"), py::arg("view"), py::arg("threshold") = 1.13,
            py::arg("estimator") = "argmax", py::arg("topk") = 16,
            "Gated position estimate for a view.");
}
