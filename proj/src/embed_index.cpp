#include "edgeloc/embed_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "edgeloc/binio.hpp"
#include "edgeloc/errors.hpp"
#include "edgeloc/parallel.hpp"

namespace edgeloc {
namespace {

constexpr uint32_t kIndexVersion = 1;

void check_query(const ReferenceIndex& idx, const Embedding& q) {
    if (idx.count() == 0) fail(ErrorCategory::usage, "empty index");
    if (static_cast<int>(q.size()) != idx.dim)
        fail(ErrorCategory::mismatch, "query dimension does not match index");
}

std::vector<ScoredId> scored_all(const ReferenceIndex& idx, const Embedding& q) {
    const size_t m = idx.count();
    const size_t d = static_cast<size_t>(idx.dim);
    std::vector<ScoredId> scored(m);
    parallel_for(m, [&](size_t i) {
        const double* row = &idx.embeddings[i * d];
        double acc = 0.0;
        for (size_t j = 0; j < d; ++j) acc += row[j] * q[j];
        scored[i] = {idx.ids[i], acc};
    });
    return scored;
}

}  // namespace

std::vector<ScoredId> query_topk(const ReferenceIndex& idx, const Embedding& q, int k) {
    check_query(idx, q);
    if (k < 1 || static_cast<size_t>(k) > idx.count())
        fail(ErrorCategory::usage, "k out of range");
    std::vector<ScoredId> scored = scored_all(idx, q);
    auto better = [](const ScoredId& a, const ScoredId& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    };
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), better);
    scored.resize(static_cast<size_t>(k));
    return scored;
}

double lowe_ratio(const std::vector<double>& descending_scores) {
    if (descending_scores.empty()) fail(ErrorCategory::usage, "empty score list");
    if (descending_scores.size() == 1 || descending_scores[1] <= 0.0)
        return std::numeric_limits<double>::infinity();
    return descending_scores[0] / descending_scores[1];
}

LocalizationResult localize(const ReferenceIndex& idx, const Embedding& q,
                            const LocalizeOptions& opts) {
    check_query(idx, q);
    const int want = opts.estimator == Estimator::weighted ? std::max(2, opts.weighted_k) : 2;
    const int k = std::min(static_cast<int>(idx.count()), want);
    const std::vector<ScoredId> top = query_topk(idx, q, k);

    LocalizationResult res;
    res.estimator = opts.estimator;
    res.best_id = top[0].id;
    res.top_score = top[0].score;
    res.lowe_ratio = top.size() > 1 ? lowe_ratio({top[0].score, top[1].score})
                                    : std::numeric_limits<double>::infinity();
    res.accepted = res.lowe_ratio >= opts.threshold;

    // Positions are looked up by row; ids are unique per index contract.
    auto row_of = [&](uint32_t id) {
        for (size_t i = 0; i < idx.count(); ++i)
            if (idx.ids[i] == id) return i;
        fail(ErrorCategory::internal, "id missing from index");
    };

    if (opts.estimator == Estimator::weighted) {
        double wsum = 0.0, esum = 0.0, nsum = 0.0;
        for (const ScoredId& s : top) {
            const double w = std::max(s.score, 0.0);
            if (w <= 0.0) continue;
            const size_t row = row_of(s.id);
            wsum += w;
            esum += w * idx.eastings[row];
            nsum += w * idx.northings[row];
        }
        if (wsum > 0.0) {
            res.predicted_easting = esum / wsum;
            res.predicted_northing = nsum / wsum;
            return res;
        }
        res.weighted_fallback = true;
    }
    const size_t row = row_of(top[0].id);
    res.predicted_easting = idx.eastings[row];
    res.predicted_northing = idx.northings[row];
    return res;
}

ReferenceIndex build_index(const EncoderModel& model, const std::vector<Tile>& tiles) {
    if (tiles.empty()) fail(ErrorCategory::usage, "no tiles to index");
    const size_t m = tiles.size();
    const int dim = model.backend == Backend::autoencoder ? model.autoencoder.latent_dim
                    : model.backend == Backend::triplet   ? model.triplet.output_dim
                                                          : model.codebook.k;
    if (dim < 1) fail(ErrorCategory::usage, "model has no embedding dimension");

    // Featureless tiles (all-zero input under an edge backend) are legal map
    // content, not a configuration error; drop them and keep the rest.
    std::vector<double> rows(m * static_cast<size_t>(dim), 0.0);
    std::vector<uint8_t> usable(m, 0);
    parallel_for(m, [&](size_t i) {
        try {
            const Embedding e = embed_view(model, tiles[i].pixels);
            std::copy(e.begin(), e.end(), rows.begin() + i * e.size());
            usable[i] = 1;
        } catch (const Error& err) {
            if (err.category() != ErrorCategory::numeric) throw;
        }
    });

    ReferenceIndex idx;
    idx.dim = dim;
    for (size_t i = 0; i < m; ++i) {
        if (!usable[i]) continue;
        const double* row = &rows[i * static_cast<size_t>(dim)];
        idx.embeddings.insert(idx.embeddings.end(), row, row + dim);
        idx.eastings.push_back(tiles[i].center_easting);
        idx.northings.push_back(tiles[i].center_northing);
        idx.ids.push_back(tiles[i].id);
    }
    if (idx.ids.empty()) fail(ErrorCategory::numeric, "no tile produced a usable embedding");
    return idx;
}

void save_index(const std::string& path, const ReferenceIndex& idx, const IndexSidecar& info) {
    BinWriter w(path);
    w.bytes("ELIX", 4);
    w.u32(kIndexVersion);
    w.u32(static_cast<uint32_t>(idx.dim));
    w.u32(static_cast<uint32_t>(idx.count()));
    w.f32_block(idx.embeddings);
    for (size_t i = 0; i < idx.count(); ++i) {
        w.f64(idx.eastings[i]);
        w.f64(idx.northings[i]);
    }
    for (uint32_t id : idx.ids) w.u32(id);
    w.close();

    nlohmann::json side;
    side["model_digest"] = info.model_digest;
    side["model_path"] = info.model_path;
    side["tile_size"] = info.tile_size;
    side["overlap_fraction"] = info.overlap_fraction;
    std::ofstream out(path + ".json");
    if (!out) fail(ErrorCategory::io, "cannot write " + path + ".json");
    out << side.dump(2) << "\n";
}

LoadedIndex load_index(const std::string& path) {
    BinReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::string(magic, 4) != "ELIX") fail(ErrorCategory::format, "bad index file: " + path);
    const uint32_t version = r.u32();
    if (version != kIndexVersion)
        fail(ErrorCategory::format, "unsupported index format version " + std::to_string(version));

    LoadedIndex out;
    ReferenceIndex& idx = out.index;
    idx.dim = static_cast<int>(r.u32());
    const size_t m = r.u32();
    if (idx.dim < 1) fail(ErrorCategory::format, "bad index file: " + path);
    idx.embeddings = r.f32_block(m * static_cast<size_t>(idx.dim));
    idx.eastings.resize(m);
    idx.northings.resize(m);
    for (size_t i = 0; i < m; ++i) {
        idx.eastings[i] = r.f64();
        idx.northings[i] = r.f64();
    }
    idx.ids.resize(m);
    for (size_t i = 0; i < m; ++i) idx.ids[i] = r.u32();

    std::ifstream side(path + ".json");
    if (side) {
        try {
            nlohmann::json j;
            side >> j;
            out.info.model_digest = j.value("model_digest", std::string());
            out.info.model_path = j.value("model_path", std::string());
            out.info.tile_size = j.value("tile_size", 0);
            out.info.overlap_fraction = j.value("overlap_fraction", 0.0);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCategory::format, std::string("bad index sidecar: ") + e.what());
        }
    }
    return out;
}

}  // namespace edgeloc
