#include "edgeloc/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "edgeloc/binio.hpp"
#include "edgeloc/errors.hpp"
#include "edgeloc/parallel.hpp"
#include "edgeloc/rng.hpp"

namespace edgeloc {
namespace {

constexpr double kLeakySlope = 0.01;
constexpr uint32_t kModelVersion = 1;

// y = W x + b, W is rows x cols row-major.
void affine(const std::vector<double>& W, const std::vector<double>& b,
            const std::vector<double>& x, std::vector<double>& y) {
    const size_t rows = b.size(), cols = x.size();
    y.resize(rows);
    parallel_for(rows, [&](size_t r) {
        const double* wr = &W[r * cols];
        double acc = b[r];
        for (size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    });
}

// y = W^T g, W is rows x cols row-major; y has cols entries.
void affine_transposed(const std::vector<double>& W, const std::vector<double>& g, size_t cols,
                       std::vector<double>& y) {
    const size_t rows = g.size();
    y.assign(cols, 0.0);
    parallel_for(cols, [&](size_t c) {
        double acc = 0.0;
        for (size_t r = 0; r < rows; ++r) acc += W[r * cols + c] * g[r];
        y[c] = acc;
    });
}

// G += outer(u, v), G is u.size() x v.size() row-major.
void add_outer(std::vector<double>& G, const std::vector<double>& u,
               const std::vector<double>& v) {
    parallel_for(u.size(), [&](size_t r) {
        double* gr = &G[r * v.size()];
        const double ur = u[r];
        for (size_t c = 0; c < v.size(); ++c) gr[c] += ur * v[c];
    });
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double squared_distance(const double* a, const double* b, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// Parameter blocks in pack order; weight matrices are subject to decay.
struct ParamBlock {
    std::vector<double>* values;
    bool is_weight;
};

std::vector<ParamBlock> blocks(AutoencoderModel& m) {
    return {{&m.encode_weights, true},
            {&m.encode_bias, false},
            {&m.decode_weights, true},
            {&m.decode_bias, false}};
}

std::vector<ParamBlock> blocks(TripletModel& m) {
    return {{&m.w1, true}, {&m.b1, false}, {&m.w2, true}, {&m.b2, false}};
}

size_t total_size(const std::vector<ParamBlock>& bs) {
    size_t n = 0;
    for (const auto& b : bs) n += b.values->size();
    return n;
}

std::vector<double> pack(const std::vector<ParamBlock>& bs) {
    std::vector<double> flat;
    flat.reserve(total_size(bs));
    for (const auto& b : bs) flat.insert(flat.end(), b.values->begin(), b.values->end());
    return flat;
}

void unpack(const std::vector<ParamBlock>& bs, const std::vector<double>& flat) {
    if (flat.size() != total_size(bs)) fail(ErrorCategory::usage, "parameter size mismatch");
    size_t off = 0;
    for (const auto& b : bs) {
        std::copy(flat.begin() + off, flat.begin() + off + b.values->size(), b.values->begin());
        off += b.values->size();
    }
}

// Uniform init with the fan-balanced limit; biases stay zero.
void init_weights(std::vector<double>& W, size_t fan_out, size_t fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : W) w = rng.uniform(-limit, limit);
}

// Decoupled-weight-decay adaptive-moment optimizer over parameter blocks.
class AdamW {
  public:
    AdamW(size_t n, double weight_decay) : m_(n, 0.0), v_(n, 0.0), decay_(weight_decay) {}

    void step(const std::vector<ParamBlock>& bs, const std::vector<double>& grad, double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(kBeta1, t_);
        const double bc2 = 1.0 - std::pow(kBeta2, t_);
        size_t off = 0;
        for (const auto& b : bs) {
            std::vector<double>& p = *b.values;
            const bool decay = b.is_weight && decay_ > 0.0;
            for (size_t i = 0; i < p.size(); ++i) {
                const double g = grad[off + i];
                m_[off + i] = kBeta1 * m_[off + i] + (1.0 - kBeta1) * g;
                v_[off + i] = kBeta2 * v_[off + i] + (1.0 - kBeta2) * g * g;
                const double mhat = m_[off + i] / bc1;
                const double vhat = v_[off + i] / bc2;
                double upd = mhat / (std::sqrt(vhat) + kEps);
                if (decay) upd += decay_ * p[i];
                p[i] -= lr * upd;
            }
            off += p.size();
        }
    }

  private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    std::vector<double> m_, v_;
    double decay_;
    long t_ = 0;
};

// Halves the learning rate after `patience` epochs without a min_delta
// improvement over the best loss seen so far.
class PlateauScheduler {
  public:
    PlateauScheduler(double factor, int patience, double min_delta)
        : factor_(factor), patience_(patience), min_delta_(min_delta) {}

    void observe(double loss, double& lr) {
        if (loss < best_ - min_delta_) {
            best_ = loss;
            wait_ = 0;
            return;
        }
        if (++wait_ >= patience_) {
            lr *= factor_;
            wait_ = 0;
        }
    }

  private:
    double factor_;
    int patience_;
    double min_delta_;
    double best_ = std::numeric_limits<double>::infinity();
    int wait_ = 0;
};

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.learning_rate <= 0.0 ||
        cfg.plateau_patience < 1 || cfg.plateau_factor <= 0.0 || cfg.weight_decay < 0.0)
        fail(ErrorCategory::usage, "invalid training configuration");
}

void check_batch_dims(const std::vector<FlatView>& batch, int input_size) {
    for (const FlatView& v : batch) {
        if (static_cast<int>(v.values.size()) != input_size)
            fail(ErrorCategory::mismatch, "view dimensions do not match model");
    }
}

}  // namespace

FlatView flatten(const RasterImage& img) {
    FlatView v;
    v.width = img.width;
    v.height = img.height;
    v.binary = false;
    v.values.resize(img.size());
    for (size_t i = 0; i < img.size(); ++i) v.values[i] = img.pixels[i] / 255.0;
    return v;
}

FlatView flatten(const EdgeMap& edges) {
    FlatView v;
    v.width = edges.width;
    v.height = edges.height;
    v.binary = true;
    v.values.resize(edges.size());
    for (size_t i = 0; i < edges.size(); ++i) v.values[i] = edges.bits[i];
    return v;
}

// --- Autoencoder -------------------------------------------------------------

std::vector<double> autoencoder_reconstruct(const AutoencoderModel& m,
                                            const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != m.input_size)
        fail(ErrorCategory::mismatch, "view dimensions do not match model");
    std::vector<double> z, y;
    affine(m.encode_weights, m.encode_bias, x, z);
    affine(m.decode_weights, m.decode_bias, z, y);
    if (m.output_activation == OutputActivation::logistic)
        for (double& v : y) v = sigmoid(v);
    return y;
}

double autoencoder_loss(const AutoencoderModel& m, const std::vector<FlatView>& batch) {
    if (batch.empty()) fail(ErrorCategory::usage, "empty batch");
    check_batch_dims(batch, m.input_size);
    double total = 0.0;
    for (const FlatView& v : batch) {
        std::vector<double> y = autoencoder_reconstruct(m, v.values);
        total += squared_distance(y.data(), v.values.data(), y.size());
    }
    return total / static_cast<double>(batch.size());
}

double autoencoder_loss_grad(const AutoencoderModel& m, const std::vector<FlatView>& batch,
                             std::vector<double>& grad) {
    if (batch.empty()) fail(ErrorCategory::usage, "empty batch");
    check_batch_dims(batch, m.input_size);
    const size_t n = static_cast<size_t>(m.input_size);
    const size_t d = static_cast<size_t>(m.latent_dim);

    std::vector<double> gWe(d * n, 0.0), gbe(d, 0.0), gWd(n * d, 0.0), gbd(n, 0.0);
    std::vector<double> z, pre, dpre(n), dz;
    double total = 0.0;

    for (const FlatView& v : batch) {
        const std::vector<double>& x = v.values;
        affine(m.encode_weights, m.encode_bias, x, z);
        affine(m.decode_weights, m.decode_bias, z, pre);
        if (m.output_activation == OutputActivation::logistic) {
            for (size_t i = 0; i < n; ++i) {
                const double y = sigmoid(pre[i]);
                const double r = y - x[i];
                total += r * r;
                dpre[i] = 2.0 * r * y * (1.0 - y);
            }
        } else {
            for (size_t i = 0; i < n; ++i) {
                const double r = pre[i] - x[i];
                total += r * r;
                dpre[i] = 2.0 * r;
            }
        }
        add_outer(gWd, dpre, z);
        for (size_t i = 0; i < n; ++i) gbd[i] += dpre[i];
        affine_transposed(m.decode_weights, dpre, d, dz);
        add_outer(gWe, dz, x);
        for (size_t i = 0; i < d; ++i) gbe[i] += dz[i];
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    grad.clear();
    grad.reserve(d * n + d + n * d + n);
    for (double g : gWe) grad.push_back(g * inv);
    for (double g : gbe) grad.push_back(g * inv);
    for (double g : gWd) grad.push_back(g * inv);
    for (double g : gbd) grad.push_back(g * inv);
    return total * inv;
}

TrainedAutoencoder train_autoencoder(const std::vector<FlatView>& data, const TrainConfig& cfg,
                                     int latent_dim) {
    validate_train_config(cfg);
    if (data.empty()) fail(ErrorCategory::usage, "no training data");
    if (latent_dim < 1) fail(ErrorCategory::usage, "latent dimension must be positive");
    const int n = static_cast<int>(data.front().values.size());
    check_batch_dims(data, n);

    TrainedAutoencoder out;
    AutoencoderModel& m = out.model;
    m.input_size = n;
    m.latent_dim = latent_dim;
    m.output_activation =
        data.front().binary ? OutputActivation::logistic : OutputActivation::linear;
    m.encode_weights.resize(static_cast<size_t>(latent_dim) * n);
    m.encode_bias.assign(static_cast<size_t>(latent_dim), 0.0);
    m.decode_weights.resize(static_cast<size_t>(n) * latent_dim);
    m.decode_bias.assign(static_cast<size_t>(n), 0.0);

    Rng rng(cfg.seed);
    init_weights(m.encode_weights, static_cast<size_t>(latent_dim), static_cast<size_t>(n), rng);
    init_weights(m.decode_weights, static_cast<size_t>(n), static_cast<size_t>(latent_dim), rng);

    // Start centered: decode_bias reproduces the per-pixel data mean at zero
    // latent, encode_bias cancels the mean's projection. Early-epoch latents
    // then carry per-input structure instead of one shared offset, which the
    // retrieval cosine would otherwise saturate on.
    std::vector<double> mean(static_cast<size_t>(n), 0.0);
    for (const FlatView& v : data)
        for (int i = 0; i < n; ++i) mean[static_cast<size_t>(i)] += v.values[static_cast<size_t>(i)];
    for (double& x : mean) x /= static_cast<double>(data.size());
    for (int i = 0; i < n; ++i) {
        const double mu = mean[static_cast<size_t>(i)];
        m.decode_bias[static_cast<size_t>(i)] =
            m.output_activation == OutputActivation::logistic
                ? std::log(std::clamp(mu, 1e-3, 1.0 - 1e-3) / (1.0 - std::clamp(mu, 1e-3, 1.0 - 1e-3)))
                : mu;
    }
    for (int r = 0; r < latent_dim; ++r) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            acc += m.encode_weights[static_cast<size_t>(r) * n + i] * mean[static_cast<size_t>(i)];
        m.encode_bias[static_cast<size_t>(r)] = -acc;
    }

    auto bs = blocks(m);
    AdamW opt(total_size(bs), cfg.weight_decay);
    PlateauScheduler sched(cfg.plateau_factor, cfg.plateau_patience, cfg.plateau_min_delta);
    double lr = cfg.learning_rate;

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<FlatView> batch;
    std::vector<double> grad;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_total = 0.0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
            const double loss = autoencoder_loss_grad(m, batch, grad);
            epoch_total += loss * static_cast<double>(batch.size());
            opt.step(bs, grad, lr);
        }
        const double epoch_loss = epoch_total / static_cast<double>(data.size());
        if (!std::isfinite(epoch_loss)) fail(ErrorCategory::numeric, "training diverged");
        out.loss_history.push_back(epoch_loss);
        sched.observe(epoch_loss, lr);
    }
    return out;
}

// --- Triplet ------------------------------------------------------------------

Embedding triplet_forward(const TripletModel& m, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != m.input_size)
        fail(ErrorCategory::mismatch, "view dimensions do not match model");
    std::vector<double> z1, h, e;
    affine(m.w1, m.b1, x, z1);
    h = z1;
    for (double& v : h) v = v > 0.0 ? v : kLeakySlope * v;
    affine(m.w2, m.b2, h, e);
    return e;
}

double triplet_loss(const Embedding& xa, const Embedding& xp, const Embedding& xn, double alpha) {
    if (xa.size() != xp.size() || xa.size() != xn.size())
        fail(ErrorCategory::mismatch, "embedding dimensions differ");
    if (alpha <= 0.0) fail(ErrorCategory::usage, "margin must be positive");
    const double dp = squared_distance(xa.data(), xp.data(), xa.size());
    const double dn = squared_distance(xa.data(), xn.data(), xa.size());
    return std::max(0.0, dp - dn + alpha);
}

std::vector<TripletAssignment> mine_hard_negatives(const TripletModel& m,
                                                   const std::vector<TrainingView>& batch) {
    int distinct = 0;
    for (size_t i = 0; i < batch.size(); ++i) {
        bool seen = false;
        for (size_t j = 0; j < i; ++j) seen |= batch[j].position == batch[i].position;
        if (!seen) ++distinct;
    }
    if (distinct < 2) fail(ErrorCategory::usage, "cannot mine negatives");

    std::vector<Embedding> emb(batch.size());
    parallel_for(batch.size(), [&](size_t i) { emb[i] = triplet_forward(m, batch[i].view.values); });

    std::vector<TripletAssignment> out;
    for (size_t a = 0; a < batch.size(); ++a) {
        int positive = -1;
        for (size_t j = 0; j < batch.size(); ++j) {
            if (j != a && batch[j].position == batch[a].position &&
                batch[j].variant != batch[a].variant) {
                positive = static_cast<int>(j);
                break;
            }
        }
        if (positive < 0) continue;

        int negative = -1;
        double best = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < batch.size(); ++j) {
            if (batch[j].position == batch[a].position || batch[j].variant != batch[a].variant)
                continue;
            const double d2 = squared_distance(emb[a].data(), emb[j].data(), emb[a].size());
            if (d2 < best) {
                best = d2;
                negative = static_cast<int>(j);
            }
        }
        if (negative < 0) continue;
        out.push_back({static_cast<int>(a), positive, negative});
    }
    return out;
}

double triplet_batch_loss_grad(const TripletModel& m, const std::vector<TrainingView>& batch,
                               const std::vector<TripletAssignment>& triplets,
                               std::vector<double>& grad) {
    if (triplets.empty()) fail(ErrorCategory::usage, "empty batch");
    const size_t n = static_cast<size_t>(m.input_size);
    const size_t hd = static_cast<size_t>(m.hidden_dim);
    const size_t d = static_cast<size_t>(m.output_dim);

    std::vector<std::vector<double>> z1(batch.size()), h(batch.size()), e(batch.size());
    parallel_for(batch.size(), [&](size_t i) {
        if (batch[i].view.values.size() != n)
            fail(ErrorCategory::mismatch, "view dimensions do not match model");
        affine(m.w1, m.b1, batch[i].view.values, z1[i]);
        h[i] = z1[i];
        for (double& v : h[i]) v = v > 0.0 ? v : kLeakySlope * v;
        affine(m.w2, m.b2, h[i], e[i]);
    });

    // Upstream gradient on each sample's embedding, summed over triplets.
    std::vector<std::vector<double>> de(batch.size(), std::vector<double>(d, 0.0));
    double total = 0.0;
    for (const TripletAssignment& t : triplets) {
        const auto &ea = e[t.anchor], &ep = e[t.positive], &en = e[t.negative];
        const double dp = squared_distance(ea.data(), ep.data(), d);
        const double dn = squared_distance(ea.data(), en.data(), d);
        const double l = dp - dn + m.alpha;
        if (l <= 0.0) continue;
        total += l;
        for (size_t i = 0; i < d; ++i) {
            de[t.anchor][i] += 2.0 * (en[i] - ep[i]);
            de[t.positive][i] -= 2.0 * (ea[i] - ep[i]);
            de[t.negative][i] += 2.0 * (ea[i] - en[i]);
        }
    }

    std::vector<double> gW1(hd * n, 0.0), gb1(hd, 0.0), gW2(d * hd, 0.0), gb2(d, 0.0);
    std::vector<double> dh, dz1(hd);
    for (size_t s = 0; s < batch.size(); ++s) {
        bool active = false;
        for (double g : de[s]) active |= g != 0.0;
        if (!active) continue;
        add_outer(gW2, de[s], h[s]);
        for (size_t i = 0; i < d; ++i) gb2[i] += de[s][i];
        affine_transposed(m.w2, de[s], hd, dh);
        for (size_t i = 0; i < hd; ++i) dz1[i] = dh[i] * (z1[s][i] > 0.0 ? 1.0 : kLeakySlope);
        add_outer(gW1, dz1, batch[s].view.values);
        for (size_t i = 0; i < hd; ++i) gb1[i] += dz1[i];
    }

    const double inv = 1.0 / static_cast<double>(triplets.size());
    grad.clear();
    grad.reserve(hd * n + hd + d * hd + d);
    for (double g : gW1) grad.push_back(g * inv);
    for (double g : gb1) grad.push_back(g * inv);
    for (double g : gW2) grad.push_back(g * inv);
    for (double g : gb2) grad.push_back(g * inv);
    return total * inv;
}

TrainedTriplet train_triplet(const std::vector<TrainingView>& data, const TrainConfig& cfg,
                             int hidden_dim, int output_dim, double alpha) {
    validate_train_config(cfg);
    if (data.empty()) fail(ErrorCategory::usage, "no training data");
    if (hidden_dim < 1 || output_dim < 1) fail(ErrorCategory::usage, "model dimensions invalid");
    if (alpha <= 0.0) fail(ErrorCategory::usage, "margin must be positive");
    const int n = static_cast<int>(data.front().view.values.size());

    // Index samples by (position, variant); both variants must be present for
    // every position so each anchor has a positive.
    std::vector<int> positions;
    for (const TrainingView& v : data) {
        if (static_cast<int>(v.view.values.size()) != n)
            fail(ErrorCategory::mismatch, "view dimensions do not match model");
        if (v.variant != 0 && v.variant != 1)
            fail(ErrorCategory::usage, "variant labels must be 0 or 1");
        if (std::find(positions.begin(), positions.end(), v.position) == positions.end())
            positions.push_back(v.position);
    }
    if (positions.size() < 2) fail(ErrorCategory::usage, "cannot mine negatives");
    std::vector<std::vector<size_t>> by_pos_var[2];
    by_pos_var[0].resize(positions.size());
    by_pos_var[1].resize(positions.size());
    for (size_t i = 0; i < data.size(); ++i) {
        const size_t p = static_cast<size_t>(
            std::find(positions.begin(), positions.end(), data[i].position) - positions.begin());
        by_pos_var[data[i].variant][p].push_back(i);
    }
    for (size_t p = 0; p < positions.size(); ++p) {
        if (by_pos_var[0][p].empty() || by_pos_var[1][p].empty())
            fail(ErrorCategory::usage, "every position needs views from both variants");
    }

    TrainedTriplet out;
    TripletModel& m = out.model;
    m.input_size = n;
    m.hidden_dim = hidden_dim;
    m.output_dim = output_dim;
    m.alpha = alpha;
    m.w1.resize(static_cast<size_t>(hidden_dim) * n);
    m.b1.assign(static_cast<size_t>(hidden_dim), 0.0);
    m.w2.resize(static_cast<size_t>(output_dim) * hidden_dim);
    m.b2.assign(static_cast<size_t>(output_dim), 0.0);

    Rng rng(cfg.seed);
    init_weights(m.w1, static_cast<size_t>(hidden_dim), static_cast<size_t>(n), rng);
    init_weights(m.w2, static_cast<size_t>(output_dim), static_cast<size_t>(hidden_dim), rng);

    auto bs = blocks(m);
    AdamW opt(total_size(bs), cfg.weight_decay);
    PlateauScheduler sched(cfg.plateau_factor, cfg.plateau_patience, cfg.plateau_min_delta);
    double lr = cfg.learning_rate;

    // A batch draws batch_size/2 positions and one view per variant from each.
    const size_t per_batch = std::max<size_t>(2, static_cast<size_t>(cfg.batch_size) / 2);
    std::vector<size_t> pos_order(positions.size());
    std::iota(pos_order.begin(), pos_order.end(), 0);
    std::vector<TrainingView> batch;
    std::vector<double> grad;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(pos_order);
        double epoch_total = 0.0;
        size_t epoch_triplets = 0;
        for (size_t start = 0; start < pos_order.size(); start += per_batch) {
            size_t end = std::min(pos_order.size(), start + per_batch);
            if (end - start < 2) start = end - 2;  // final batch keeps two positions
            batch.clear();
            for (size_t i = start; i < end; ++i) {
                const size_t p = pos_order[i];
                for (int var = 0; var < 2; ++var) {
                    const auto& pool = by_pos_var[var][p];
                    batch.push_back(data[pool[rng.below(pool.size())]]);
                }
            }
            const auto triplets = mine_hard_negatives(m, batch);
            if (triplets.empty()) continue;
            const double loss = triplet_batch_loss_grad(m, batch, triplets, grad);
            epoch_total += loss * static_cast<double>(triplets.size());
            epoch_triplets += triplets.size();
            opt.step(bs, grad, lr);
        }
        const double epoch_loss =
            epoch_triplets ? epoch_total / static_cast<double>(epoch_triplets) : 0.0;
        if (!std::isfinite(epoch_loss)) fail(ErrorCategory::numeric, "training diverged");
        out.loss_history.push_back(epoch_loss);
        sched.observe(epoch_loss, lr);
    }
    return out;
}

// --- Bag of visual words -------------------------------------------------------

std::vector<std::vector<double>> extract_descriptors(const FlatView& v, int patch_size,
                                                     int grid_stride) {
    if (patch_size < 1 || grid_stride < 1) fail(ErrorCategory::usage, "invalid descriptor spec");
    if (v.width < patch_size || v.height < patch_size)
        fail(ErrorCategory::usage, "image smaller than patch size");
    std::vector<std::vector<double>> out;
    for (int y0 = 0; y0 + patch_size <= v.height; y0 += grid_stride) {
        for (int x0 = 0; x0 + patch_size <= v.width; x0 += grid_stride) {
            std::vector<double> desc(static_cast<size_t>(patch_size) * patch_size);
            for (int dy = 0; dy < patch_size; ++dy)
                for (int dx = 0; dx < patch_size; ++dx)
                    desc[static_cast<size_t>(dy) * patch_size + dx] =
                        v.values[static_cast<size_t>(y0 + dy) * v.width + (x0 + dx)];
            out.push_back(std::move(desc));
        }
    }
    return out;
}

namespace {

size_t nearest_centroid(const BovwCodebook& cb, const double* x) {
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < cb.k; ++c) {
        const double d2 = squared_distance(
            &cb.centroids[static_cast<size_t>(c) * cb.descriptor_dim], x,
            static_cast<size_t>(cb.descriptor_dim));
        if (d2 < best_d) {
            best_d = d2;
            best = static_cast<size_t>(c);
        }
    }
    return best;
}

}  // namespace

BovwCodebook fit_codebook(const std::vector<std::vector<double>>& descriptors, int k,
                          uint64_t seed) {
    return fit_codebook_traced(descriptors, k, seed, nullptr);
}

BovwCodebook fit_codebook_traced(const std::vector<std::vector<double>>& descriptors, int k,
                                 uint64_t seed, std::vector<double>* objective_trace) {
    if (k < 1) fail(ErrorCategory::usage, "cluster count must be positive");
    if (descriptors.size() < static_cast<size_t>(k))
        fail(ErrorCategory::usage, "fewer descriptors than clusters");
    const size_t N = descriptors.size();
    const size_t dim = descriptors.front().size();
    for (const auto& d : descriptors)
        if (d.size() != dim) fail(ErrorCategory::mismatch, "descriptor dimensions differ");

    BovwCodebook cb;
    cb.k = k;
    cb.descriptor_dim = static_cast<int>(dim);
    cb.centroids.assign(static_cast<size_t>(k) * dim, 0.0);
    auto centroid = [&](int c) { return &cb.centroids[static_cast<size_t>(c) * dim]; };

    // Distance-weighted seeding.
    Rng rng(seed);
    std::vector<double> mind2(N, std::numeric_limits<double>::infinity());
    size_t first = rng.below(N);
    std::copy(descriptors[first].begin(), descriptors[first].end(), centroid(0));
    for (size_t i = 0; i < N; ++i)
        mind2[i] = squared_distance(descriptors[i].data(), centroid(0), dim);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : mind2) total += d;
        size_t pick;
        if (total > 0.0) {
            const double r = rng.next_double() * total;
            double cum = 0.0;
            pick = N - 1;
            for (size_t i = 0; i < N; ++i) {
                cum += mind2[i];
                if (cum > r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.below(N);
        }
        std::copy(descriptors[pick].begin(), descriptors[pick].end(), centroid(c));
        for (size_t i = 0; i < N; ++i) {
            const double d2 = squared_distance(descriptors[i].data(), centroid(c), dim);
            if (d2 < mind2[i]) mind2[i] = d2;
        }
    }

    std::vector<int> assign(N, -1), prev(N, -1);
    std::vector<double> dist(N, 0.0);
    for (int iter = 0; iter < 100; ++iter) {
        parallel_for(N, [&](size_t i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d2 = squared_distance(descriptors[i].data(), centroid(c), dim);
                if (d2 < best_d) {
                    best_d = d2;
                    best = c;
                }
            }
            assign[i] = best;
            dist[i] = best_d;
        });
        if (objective_trace) {
            double obj = 0.0;
            for (double d : dist) obj += d;
            objective_trace->push_back(obj);
        }
        if (assign == prev) break;
        prev = assign;

        std::vector<double> sums(static_cast<size_t>(k) * dim, 0.0);
        std::vector<size_t> counts(static_cast<size_t>(k), 0);
        for (size_t i = 0; i < N; ++i) {
            double* s = &sums[static_cast<size_t>(assign[i]) * dim];
            for (size_t j = 0; j < dim; ++j) s[j] += descriptors[i][j];
            ++counts[static_cast<size_t>(assign[i])];
        }
        std::vector<uint8_t> taken(N, 0);
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) {
                const double inv = 1.0 / static_cast<double>(counts[static_cast<size_t>(c)]);
                for (size_t j = 0; j < dim; ++j)
                    centroid(c)[j] = sums[static_cast<size_t>(c) * dim + j] * inv;
            }
        }
        // Empty clusters grab the point farthest from its own centroid.
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) continue;
            size_t far = 0;
            double far_d = -1.0;
            for (size_t i = 0; i < N; ++i) {
                if (taken[i]) continue;
                const double d2 = squared_distance(
                    descriptors[i].data(), centroid(assign[i]), dim);
                if (d2 > far_d) {
                    far_d = d2;
                    far = i;
                }
            }
            taken[far] = 1;
            std::copy(descriptors[far].begin(), descriptors[far].end(), centroid(c));
        }
    }
    return cb;
}

Embedding embed_bovw(const FlatView& v, const BovwCodebook& cb) {
    if (cb.k < 1 || cb.centroids.empty()) fail(ErrorCategory::usage, "codebook not fitted");
    const auto descriptors = extract_descriptors(v, cb.patch_size, cb.grid_stride);
    Embedding hist(static_cast<size_t>(cb.k), 0.0);
    for (const auto& d : descriptors) hist[nearest_centroid(cb, d.data())] += 1.0;
    double norm = 0.0;
    for (double h : hist) norm += h * h;
    norm = std::sqrt(norm);
    for (double& h : hist) h /= norm;
    return hist;
}

// --- Unified model --------------------------------------------------------------

FlatView prepare_input(const EncoderModel& m, const RasterImage& view) {
    if (view.width != m.input_width || view.height != m.input_height)
        fail(ErrorCategory::mismatch, "view dimensions do not match model");
    switch (m.input_rep) {
        case InputRep::gray:
            return flatten(view);
        case InputRep::canny:
            return flatten(canny(view, m.canny_params));
        case InputRep::imported: {
            EdgeMap edges(view.width, view.height);
            for (size_t i = 0; i < view.size(); ++i) edges.bits[i] = view.pixels[i] > 127 ? 1 : 0;
            return flatten(edges);
        }
    }
    fail(ErrorCategory::internal, "unknown input representation");
}

Embedding embed(const EncoderModel& m, const FlatView& v) {
    Embedding e;
    switch (m.backend) {
        case Backend::autoencoder: {
            if (static_cast<int>(v.values.size()) != m.autoencoder.input_size)
                fail(ErrorCategory::mismatch, "view dimensions do not match model");
            affine(m.autoencoder.encode_weights, m.autoencoder.encode_bias, v.values, e);
            break;
        }
        case Backend::triplet:
            e = triplet_forward(m.triplet, v.values);
            break;
        case Backend::bovw:
            e = embed_bovw(v, m.codebook);
            break;
    }
    double norm = 0.0;
    for (double x : e) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 1e-12)) fail(ErrorCategory::numeric, "cannot normalize zero embedding");
    for (double& x : e) x /= norm;
    return e;
}

Embedding embed_view(const EncoderModel& m, const RasterImage& view) {
    return embed(m, prepare_input(m, view));
}

// --- Model file -------------------------------------------------------------------

void save_model(const std::string& path, const EncoderModel& m) {
    BinWriter w(path);
    w.bytes("ELMD", 4);
    w.u32(kModelVersion);
    w.u8(static_cast<uint8_t>(m.backend));
    w.u8(static_cast<uint8_t>(m.input_rep));
    w.u32(static_cast<uint32_t>(m.input_width));
    w.u32(static_cast<uint32_t>(m.input_height));
    w.f64(m.canny_params.low_threshold);
    w.f64(m.canny_params.high_threshold);
    w.u32(static_cast<uint32_t>(m.canny_params.sobel_kernel));
    w.f64(m.canny_params.gaussian_sigma);
    switch (m.backend) {
        case Backend::autoencoder: {
            const AutoencoderModel& a = m.autoencoder;
            w.u8(static_cast<uint8_t>(a.output_activation));
            w.u32(static_cast<uint32_t>(a.latent_dim));
            w.u32(static_cast<uint32_t>(a.input_size));
            w.f32_block(a.encode_weights);
            w.f32_block(a.encode_bias);
            w.f32_block(a.decode_weights);
            w.f32_block(a.decode_bias);
            break;
        }
        case Backend::triplet: {
            const TripletModel& t = m.triplet;
            w.u32(static_cast<uint32_t>(t.hidden_dim));
            w.u32(static_cast<uint32_t>(t.output_dim));
            w.u32(static_cast<uint32_t>(t.input_size));
            w.f64(t.alpha);
            w.f32_block(t.w1);
            w.f32_block(t.b1);
            w.f32_block(t.w2);
            w.f32_block(t.b2);
            break;
        }
        case Backend::bovw: {
            const BovwCodebook& c = m.codebook;
            w.u32(static_cast<uint32_t>(c.k));
            w.u32(static_cast<uint32_t>(c.descriptor_dim));
            w.u32(static_cast<uint32_t>(c.patch_size));
            w.u32(static_cast<uint32_t>(c.grid_stride));
            w.f32_block(c.centroids);
            break;
        }
    }
    w.close();

    nlohmann::json side;
    side["backend"] = to_string(m.backend);
    side["input"] = to_string(m.input_rep);
    side["input_width"] = m.input_width;
    side["input_height"] = m.input_height;
    side["canny"] = {{"low", m.canny_params.low_threshold},
                     {"high", m.canny_params.high_threshold},
                     {"kernel", m.canny_params.sobel_kernel},
                     {"sigma", m.canny_params.gaussian_sigma}};
    side["train_config"] = {{"epochs", m.train_config.epochs},
                            {"batch_size", m.train_config.batch_size},
                            {"learning_rate", m.train_config.learning_rate},
                            {"weight_decay", m.train_config.weight_decay},
                            {"plateau_patience", m.train_config.plateau_patience},
                            {"plateau_factor", m.train_config.plateau_factor},
                            {"plateau_min_delta", m.train_config.plateau_min_delta},
                            {"seed", m.train_config.seed}};
    side["loss_history"] = m.loss_history;
    std::ofstream out(path + ".json");
    if (!out) fail(ErrorCategory::io, "cannot write " + path + ".json");
    out << side.dump(2) << "\n";
}

EncoderModel load_model(const std::string& path) {
    BinReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::string(magic, 4) != "ELMD") fail(ErrorCategory::format, "bad model file: " + path);
    const uint32_t version = r.u32();
    if (version != kModelVersion)
        fail(ErrorCategory::format, "unsupported model format version " + std::to_string(version));

    EncoderModel m;
    const uint8_t backend = r.u8();
    if (backend < 1 || backend > 3) fail(ErrorCategory::format, "bad model file: " + path);
    m.backend = static_cast<Backend>(backend);
    const uint8_t rep = r.u8();
    if (rep > 2) fail(ErrorCategory::format, "bad model file: " + path);
    m.input_rep = static_cast<InputRep>(rep);
    m.input_width = static_cast<int>(r.u32());
    m.input_height = static_cast<int>(r.u32());
    m.canny_params.low_threshold = r.f64();
    m.canny_params.high_threshold = r.f64();
    m.canny_params.sobel_kernel = static_cast<int>(r.u32());
    m.canny_params.gaussian_sigma = r.f64();

    switch (m.backend) {
        case Backend::autoencoder: {
            AutoencoderModel& a = m.autoencoder;
            const uint8_t act = r.u8();
            if (act > 1) fail(ErrorCategory::format, "bad model file: " + path);
            a.output_activation = static_cast<OutputActivation>(act);
            a.latent_dim = static_cast<int>(r.u32());
            a.input_size = static_cast<int>(r.u32());
            const size_t d = static_cast<size_t>(a.latent_dim), n = static_cast<size_t>(a.input_size);
            a.encode_weights = r.f32_block(d * n);
            a.encode_bias = r.f32_block(d);
            a.decode_weights = r.f32_block(n * d);
            a.decode_bias = r.f32_block(n);
            break;
        }
        case Backend::triplet: {
            TripletModel& t = m.triplet;
            t.hidden_dim = static_cast<int>(r.u32());
            t.output_dim = static_cast<int>(r.u32());
            t.input_size = static_cast<int>(r.u32());
            t.alpha = r.f64();
            const size_t hd = static_cast<size_t>(t.hidden_dim), d = static_cast<size_t>(t.output_dim),
                         n = static_cast<size_t>(t.input_size);
            t.w1 = r.f32_block(hd * n);
            t.b1 = r.f32_block(hd);
            t.w2 = r.f32_block(d * hd);
            t.b2 = r.f32_block(d);
            break;
        }
        case Backend::bovw: {
            BovwCodebook& c = m.codebook;
            c.k = static_cast<int>(r.u32());
            c.descriptor_dim = static_cast<int>(r.u32());
            c.patch_size = static_cast<int>(r.u32());
            c.grid_stride = static_cast<int>(r.u32());
            c.centroids = r.f32_block(static_cast<size_t>(c.k) * c.descriptor_dim);
            break;
        }
    }

    std::ifstream side(path + ".json");
    if (side) {
        try {
            nlohmann::json j;
            side >> j;
            if (j.contains("train_config")) {
                const auto& t = j["train_config"];
                m.train_config.epochs = t.value("epochs", m.train_config.epochs);
                m.train_config.batch_size = t.value("batch_size", m.train_config.batch_size);
                m.train_config.learning_rate =
                    t.value("learning_rate", m.train_config.learning_rate);
                m.train_config.weight_decay = t.value("weight_decay", m.train_config.weight_decay);
                m.train_config.plateau_patience =
                    t.value("plateau_patience", m.train_config.plateau_patience);
                m.train_config.plateau_factor =
                    t.value("plateau_factor", m.train_config.plateau_factor);
                m.train_config.plateau_min_delta =
                    t.value("plateau_min_delta", m.train_config.plateau_min_delta);
                m.train_config.seed = t.value("seed", m.train_config.seed);
            }
            if (j.contains("loss_history"))
                m.loss_history = j["loss_history"].get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCategory::format, std::string("bad model sidecar: ") + e.what());
        }
    }
    return m;
}

std::vector<double> pack_parameters(const AutoencoderModel& m) {
    return pack(blocks(const_cast<AutoencoderModel&>(m)));
}
void unpack_parameters(AutoencoderModel& m, const std::vector<double>& flat) {
    unpack(blocks(m), flat);
}
std::vector<double> pack_parameters(const TripletModel& m) {
    return pack(blocks(const_cast<TripletModel&>(m)));
}
void unpack_parameters(TripletModel& m, const std::vector<double>& flat) {
    unpack(blocks(m), flat);
}

TrainConfig default_train_config(Backend backend) {
    TrainConfig cfg;
    if (backend == Backend::triplet) {
        cfg.learning_rate = 1e-3;
        cfg.weight_decay = 0.0;
    }
    return cfg;
}

const char* to_string(Backend b) {
    switch (b) {
        case Backend::autoencoder: return "ae";
        case Backend::triplet: return "triplet";
        case Backend::bovw: return "bovw";
    }
    return "unknown";
}

const char* to_string(InputRep r) {
    switch (r) {
        case InputRep::gray: return "gray";
        case InputRep::canny: return "canny";
        case InputRep::imported: return "import";
    }
    return "unknown";
}

Backend backend_from_string(const std::string& s) {
    if (s == "ae" || s == "autoencoder") return Backend::autoencoder;
    if (s == "triplet") return Backend::triplet;
    if (s == "bovw") return Backend::bovw;
    fail(ErrorCategory::usage, "unknown backend: " + s);
}

InputRep input_rep_from_string(const std::string& s) {
    if (s == "gray") return InputRep::gray;
    if (s == "canny") return InputRep::canny;
    if (s == "import" || s == "imported") return InputRep::imported;
    fail(ErrorCategory::usage, "unknown input representation: " + s);
}

}  // namespace edgeloc
