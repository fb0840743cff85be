#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "edgeloc/embed_index.hpp"
#include "edgeloc/errors.hpp"
#include "edgeloc/rng.hpp"
#include "oracles/reference_math.hpp"

using namespace edgeloc;

namespace {

ReferenceIndex make_index(const std::vector<std::vector<double>>& rows,
                          const std::vector<double>& es, const std::vector<double>& ns) {
    ReferenceIndex idx;
    idx.dim = static_cast<int>(rows.front().size());
    for (size_t i = 0; i < rows.size(); ++i) {
        double norm = 0;
        for (double x : rows[i]) norm += x * x;
        norm = std::sqrt(norm);
        for (double x : rows[i]) idx.embeddings.push_back(x / norm);
        idx.eastings.push_back(es[i]);
        idx.northings.push_back(ns[i]);
        idx.ids.push_back(static_cast<uint32_t>(i));
    }
    return idx;
}

}  // namespace

TEST_CASE("query_topk returns scores descending with id ties ascending") {
    // Two identical rows (ids 1, 2) tie; id order must break the tie.
    ReferenceIndex idx = make_index({{1, 0}, {0.6, 0.8}, {0.6, 0.8}, {0, 1}}, {0, 1, 2, 3},
                                    {0, 0, 0, 0});
    auto top = query_topk(idx, {0.6, 0.8}, 4);
    REQUIRE(top.size() == 4);
    CHECK(top[0].id == 1);
    CHECK(top[1].id == 2);
    CHECK(top[0].score == doctest::Approx(1.0));
    CHECK(top[1].score == doctest::Approx(1.0));
    CHECK(top[2].score > top[3].score);

    SUBCASE("matches the brute-force oracle on random data") {
        Rng rng(61);
        std::vector<std::vector<double>> rows;
        std::vector<double> es, ns;
        for (int i = 0; i < 50; ++i) {
            rows.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
            es.push_back(i);
            ns.push_back(-i);
        }
        ReferenceIndex big = make_index(rows, es, ns);
        // Re-read the normalized rows for the oracle.
        std::vector<std::vector<double>> nrows(50);
        for (int i = 0; i < 50; ++i)
            nrows[i].assign(big.embeddings.begin() + i * 3, big.embeddings.begin() + (i + 1) * 3);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> q{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            auto ours = query_topk(big, q, 7);
            auto ref = oracle::brute_topk(nrows, q, 7);
            REQUIRE(ours.size() == ref.size());
            for (size_t i = 0; i < ours.size(); ++i)
                CHECK(ours[i].id == static_cast<uint32_t>(ref[i]));
        }
    }

    SUBCASE("k out of range is rejected") {
        CHECK_THROWS_WITH_AS(query_topk(idx, {1, 0}, 0), doctest::Contains("k out of range"),
                             Error);
        CHECK_THROWS_WITH_AS(query_topk(idx, {1, 0}, 5), doctest::Contains("k out of range"),
                             Error);
    }
    SUBCASE("dimension mismatch is rejected") {
        CHECK_THROWS_WITH_AS(query_topk(idx, {1, 0, 0}, 2),
                             doctest::Contains("query dimension does not match index"), Error);
    }
}

TEST_CASE("lowe_ratio handles the documented edge cases") {
    CHECK(lowe_ratio({0.9, 0.8}) == doctest::Approx(1.125));
    CHECK(lowe_ratio({0.7, 0.7}) == doctest::Approx(1.0));
    CHECK(std::isinf(lowe_ratio({0.5})));
    CHECK(std::isinf(lowe_ratio({0.5, 0.0})));
    CHECK(std::isinf(lowe_ratio({0.5, -0.2})));
    CHECK_THROWS_WITH_AS(lowe_ratio({}), doctest::Contains("empty score list"), Error);
}

TEST_CASE("localize argmax picks the best row and gates on the ratio") {
    // Ratio 0.9/0.8 = 1.125 < 1.13: rejected but still localized.
    ReferenceIndex idx = make_index({{1, 0}, {0.6, 0.8}}, {100, 200}, {50, 60});
    // Query chosen so scores are 0.9 and 0.6*0.9+0.8*res... use explicit values:
    // q = (0.9, sqrt(1-0.81)) gives top scores 0.9 (row0) and fixed second.
    Embedding q{1, 0};
    LocalizationResult r = localize(idx, q, {});
    CHECK(r.best_id == 0);
    CHECK(r.predicted_easting == 100);
    CHECK(r.predicted_northing == 50);
    CHECK(r.top_score == doctest::Approx(1.0));
    CHECK(r.lowe_ratio == doctest::Approx(1.0 / 0.6));
    CHECK(r.accepted);  // 1.667 >= 1.13

    SUBCASE("ratio below threshold is not accepted") {
        ReferenceIndex tight = make_index({{0.9, std::sqrt(0.19)}, {0.8, 0.6}}, {1, 2}, {3, 4});
        // cos(q, row0)=0.9 vs cos(q, row1)=0.8 exactly with q=(1,0).
        LocalizationResult res = localize(tight, {1, 0}, {});
        CHECK(res.lowe_ratio == doctest::Approx(1.125));
        CHECK_FALSE(res.accepted);
        CHECK(res.best_id == 0);
    }
    SUBCASE("singleton index yields an infinite ratio and acceptance") {
        ReferenceIndex one = make_index({{1, 0}}, {7}, {8});
        LocalizationResult res = localize(one, {0.5, 0.5}, {});
        CHECK(std::isinf(res.lowe_ratio));
        CHECK(res.accepted);
        CHECK(res.predicted_easting == 7);
    }
    SUBCASE("empty index is rejected") {
        ReferenceIndex empty;
        empty.dim = 2;
        CHECK_THROWS_WITH_AS(localize(empty, {1, 0}, {}), doctest::Contains("empty index"),
                             Error);
    }
}

TEST_CASE("localize weighted averages the top-k positions by positive score") {
    // Two symmetric rows around the query: weights equal -> midpoint.
    ReferenceIndex idx = make_index({{1, 0}, {0, 1}}, {0, 10}, {0, 20});
    LocalizeOptions opts;
    opts.estimator = Estimator::weighted;
    opts.weighted_k = 2;
    Embedding q{std::sqrt(0.5), std::sqrt(0.5)};
    LocalizationResult r = localize(idx, q, opts);
    CHECK(r.estimator == Estimator::weighted);
    CHECK_FALSE(r.weighted_fallback);
    CHECK(r.predicted_easting == doctest::Approx(5.0));
    CHECK(r.predicted_northing == doctest::Approx(10.0));

    SUBCASE("negative scores carry zero weight") {
        ReferenceIndex mixed = make_index({{1, 0}, {-1, 0}, {0.8, 0.6}}, {0, 100, 10}, {0, 100, 10});
        LocalizeOptions o;
        o.estimator = Estimator::weighted;
        o.weighted_k = 3;
        LocalizationResult res = localize(mixed, {1, 0}, o);
        // Row 1 scores -1: excluded. Weighted mean of rows 0 (w=1, at 0) and 2 (w=0.8, at 10).
        CHECK(res.predicted_easting == doctest::Approx(8.0 / 1.8));
        CHECK_FALSE(res.weighted_fallback);
    }
    SUBCASE("all-nonpositive scores fall back to argmax") {
        ReferenceIndex neg = make_index({{-1, 0}, {0, -1}}, {5, 9}, {6, 10});
        LocalizeOptions o;
        o.estimator = Estimator::weighted;
        o.weighted_k = 2;
        LocalizationResult res = localize(neg, {1, 0}, o);
        CHECK(res.weighted_fallback);
        // Best (least negative) row still names the prediction.
        CHECK(res.predicted_easting == doctest::Approx(9.0));
    }
}

TEST_CASE("scores are invariant to query scale through normalization") {
    Rng rng(62);
    std::vector<std::vector<double>> rows;
    std::vector<double> es, ns;
    for (int i = 0; i < 10; ++i) {
        rows.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                        rng.uniform(-1, 1)});
        es.push_back(i);
        ns.push_back(i);
    }
    ReferenceIndex idx = make_index(rows, es, ns);
    Embedding q{0.3, -0.2, 0.5, 0.1};
    double norm = std::sqrt(0.09 + 0.04 + 0.25 + 0.01);
    Embedding qn;
    for (double x : q) qn.push_back(x / norm);
    // The index contract takes normalized queries; the ranking must be
    // identical for any positive rescaling of the normalized query.
    auto a = query_topk(idx, qn, 5);
    Embedding q2;
    for (double x : qn) q2.push_back(x * 3.7);
    auto b = query_topk(idx, q2, 5);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
}

TEST_CASE("index save/load round trips and keeps the sidecar") {
    Rng rng(63);
    std::vector<std::vector<double>> rows;
    std::vector<double> es, ns;
    for (int i = 0; i < 12; ++i) {
        rows.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        es.push_back(1000.0 + i * 3.25);
        ns.push_back(2000.0 - i * 1.5);
    }
    ReferenceIndex idx = make_index(rows, es, ns);
    IndexSidecar info;
    info.model_digest = "abc123";
    info.model_path = "/models/m.elmd";
    info.tile_size = 64;
    info.overlap_fraction = 0.875;

    std::string path = (std::filesystem::temp_directory_path() / "edgeloc_index.elix").string();
    save_index(path, idx, info);
    LoadedIndex back = load_index(path);

    CHECK(back.info.model_digest == "abc123");
    CHECK(back.info.model_path == "/models/m.elmd");
    CHECK(back.info.tile_size == 64);
    CHECK(back.info.overlap_fraction == doctest::Approx(0.875));
    REQUIRE(back.index.count() == idx.count());
    CHECK(back.index.dim == idx.dim);
    for (size_t i = 0; i < idx.count(); ++i) {
        CHECK(back.index.ids[i] == idx.ids[i]);
        // Positions are stored as f64 exactly; embeddings as f32.
        CHECK(back.index.eastings[i] == idx.eastings[i]);
        CHECK(back.index.northings[i] == idx.northings[i]);
    }
    for (size_t i = 0; i < idx.embeddings.size(); ++i)
        CHECK(back.index.embeddings[i] == doctest::Approx(idx.embeddings[i]).epsilon(1e-6));

    SUBCASE("bad magic is a format error") {
        std::ofstream(path, std::ios::binary) << "XXXX";
        CHECK_THROWS_WITH_AS(load_index(path), doctest::Contains("bad index file"), Error);
    }
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".json");
}

TEST_CASE("build_index embeds every tile at its world center") {
    // Identity-ish affine model on 2x2 gray views.
    EncoderModel m;
    m.backend = Backend::autoencoder;
    m.input_rep = InputRep::gray;
    m.input_width = m.input_height = 2;
    m.autoencoder.input_size = 4;
    m.autoencoder.latent_dim = 4;
    m.autoencoder.encode_weights = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    m.autoencoder.encode_bias = {0, 0, 0, 0};
    m.autoencoder.decode_weights = m.autoencoder.encode_weights;
    m.autoencoder.decode_bias = {0, 0, 0, 0};

    std::vector<Tile> tiles;
    for (int i = 0; i < 4; ++i) {
        Tile t;
        t.id = static_cast<uint32_t>(i);
        t.pixels = RasterImage(2, 2, 0);
        t.pixels.pixels[i] = 255;  // one-hot per tile
        t.center_easting = i * 10.0;
        t.center_northing = -i * 5.0;
        tiles.push_back(t);
    }
    ReferenceIndex idx = build_index(m, tiles);
    REQUIRE(idx.count() == 4);
    CHECK(idx.dim == 4);

    // Self-retrieval: each tile's own embedding must return that tile.
    for (int i = 0; i < 4; ++i) {
        Embedding q = embed_view(m, tiles[i].pixels);
        auto top = query_topk(idx, q, 1);
        CHECK(top[0].id == static_cast<uint32_t>(i));
        LocalizationResult r = localize(idx, q, {});
        CHECK(r.predicted_easting == tiles[i].center_easting);
        CHECK(r.predicted_northing == tiles[i].center_northing);
    }

    CHECK_THROWS_WITH_AS(build_index(m, {}), doctest::Contains("no tiles to index"), Error);
}
