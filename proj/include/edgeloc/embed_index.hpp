#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgeloc/encoder.hpp"
#include "edgeloc/geotile.hpp"

namespace edgeloc {

/// Reference embeddings with world positions; rows are L2-normalized.
struct ReferenceIndex {
    int dim = 0;
    std::vector<double> embeddings;  // m x dim, row-major
    std::vector<double> eastings;    // m
    std::vector<double> northings;   // m
    std::vector<uint32_t> ids;       // m

    size_t count() const { return ids.size(); }
};

struct ScoredId {
    uint32_t id = 0;
    double score = 0.0;
};

/// Exact top-k by dot product, descending; ties broken by ascending id.
std::vector<ScoredId> query_topk(const ReferenceIndex& idx, const Embedding& q, int k);

/// Highest score / second-highest. Singleton list or second <= 0 yields +inf.
double lowe_ratio(const std::vector<double>& descending_scores);

enum class Estimator : uint8_t { argmax = 0, weighted = 1 };

struct LocalizeOptions {
    double threshold = 1.13;
    Estimator estimator = Estimator::argmax;
    int weighted_k = 16;
};

struct LocalizationResult {
    double predicted_easting = 0.0;
    double predicted_northing = 0.0;
    uint32_t best_id = 0;
    double top_score = 0.0;
    double lowe_ratio = 0.0;
    bool accepted = false;
    Estimator estimator = Estimator::argmax;
    bool weighted_fallback = false;  // all top-k weights were zero
};

LocalizationResult localize(const ReferenceIndex& idx, const Embedding& q,
                            const LocalizeOptions& opts = {});

/// Embeds every tile with the model; positions are the tile world centers.
/// Tiles whose content cannot be embedded (a featureless tile under an edge
/// backend has an all-zero input) are skipped, not fatal; other embedding
/// errors still propagate. At least one tile must survive.
ReferenceIndex build_index(const EncoderModel& model, const std::vector<Tile>& tiles);

struct IndexSidecar {
    std::string model_digest;  // content hash of the model file
    std::string model_path;
    int tile_size = 0;
    double overlap_fraction = 0.0;
};

void save_index(const std::string& path, const ReferenceIndex& idx, const IndexSidecar& info);

struct LoadedIndex {
    ReferenceIndex index;
    IndexSidecar info;
};

LoadedIndex load_index(const std::string& path);

}  // namespace edgeloc
