#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgeloc/edgemap.hpp"
#include "edgeloc/image.hpp"

namespace edgeloc {

using Embedding = std::vector<double>;

/// Flattened encoder input with intensities scaled to [0,1].
struct FlatView {
    int width = 0;
    int height = 0;
    bool binary = false;
    std::vector<double> values;
};

FlatView flatten(const RasterImage& img);
FlatView flatten(const EdgeMap& edges);

enum class OutputActivation : uint8_t { linear = 0, logistic = 1 };

/// Affine encoder/decoder pair trained to reconstruct its input.
struct AutoencoderModel {
    int input_size = 0;  // n = width * height
    int latent_dim = 0;  // d
    OutputActivation output_activation = OutputActivation::linear;
    std::vector<double> encode_weights;  // d x n, row-major
    std::vector<double> encode_bias;     // d
    std::vector<double> decode_weights;  // n x d, row-major
    std::vector<double> decode_bias;     // n
};

/// Two-layer perceptron with a leaky-rectifier hidden layer and linear output.
struct TripletModel {
    int input_size = 0;
    int hidden_dim = 256;
    int output_dim = 0;
    double alpha = 0.2;  // margin, > 0
    std::vector<double> w1;  // hidden x n, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // d x hidden, row-major
    std::vector<double> b2;  // d
};

struct BovwCodebook {
    int k = 0;
    int descriptor_dim = 0;
    int patch_size = 8;
    int grid_stride = 4;
    std::vector<double> centroids;  // k x descriptor_dim, row-major
};

struct TrainConfig {
    int epochs = 200;
    int batch_size = 32;
    double learning_rate = 3e-4;
    double weight_decay = 0.01;  // decoupled, weight matrices only
    int plateau_patience = 10;
    double plateau_factor = 0.5;
    double plateau_min_delta = 1e-6;
    uint64_t seed = 0;
};

// --- Autoencoder -----------------------------------------------------------

/// D(E(x)): latent = We*x + be, reconstruction = act(Wd*latent + bd).
std::vector<double> autoencoder_reconstruct(const AutoencoderModel& m,
                                            const std::vector<double>& x);

/// Mean over the batch of the squared L2 reconstruction error.
double autoencoder_loss(const AutoencoderModel& m, const std::vector<FlatView>& batch);

/// Loss plus its gradient, flattened in pack_parameters order.
double autoencoder_loss_grad(const AutoencoderModel& m, const std::vector<FlatView>& batch,
                             std::vector<double>& grad);

struct TrainedAutoencoder {
    AutoencoderModel model;
    std::vector<double> loss_history;  // epoch mean training loss
};

TrainedAutoencoder train_autoencoder(const std::vector<FlatView>& data, const TrainConfig& cfg,
                                     int latent_dim);

// --- Triplet ----------------------------------------------------------------

/// Raw (unnormalized) forward pass.
Embedding triplet_forward(const TripletModel& m, const std::vector<double>& x);

/// max(0, |xa-xp|^2 - |xa-xn|^2 + alpha).
double triplet_loss(const Embedding& xa, const Embedding& xp, const Embedding& xn, double alpha);

/// One encoder input tagged with its ground position and appearance variant.
struct TrainingView {
    int position = 0;
    int variant = 0;
    FlatView view;
};

struct TripletAssignment {
    int anchor = 0;
    int positive = 0;
    int negative = 0;  // indices into the batch
};

/// Per anchor: positive = lowest-index same-position other-variant sample;
/// negative = nearest (raw embedding distance) same-variant sample at a
/// different position, ties by lowest index. Anchors without a positive or
/// negative candidate are skipped.
std::vector<TripletAssignment> mine_hard_negatives(const TripletModel& m,
                                                   const std::vector<TrainingView>& batch);

/// Mean triplet loss over fixed assignments, plus its parameter gradient.
double triplet_batch_loss_grad(const TripletModel& m, const std::vector<TrainingView>& batch,
                               const std::vector<TripletAssignment>& triplets,
                               std::vector<double>& grad);

struct TrainedTriplet {
    TripletModel model;
    std::vector<double> loss_history;
};

TrainedTriplet train_triplet(const std::vector<TrainingView>& data, const TrainConfig& cfg,
                             int hidden_dim, int output_dim, double alpha = 0.2);

// --- Bag of visual words ----------------------------------------------------

/// Dense-grid patch descriptors: raw intensities in [0,1], row-major per patch.
std::vector<std::vector<double>> extract_descriptors(const FlatView& v, int patch_size,
                                                     int grid_stride);

/// Seeded k-means: distance-weighted init, assignment fixpoint or 100
/// iterations, empty clusters reseeded from the farthest point.
BovwCodebook fit_codebook(const std::vector<std::vector<double>>& descriptors, int k,
                          uint64_t seed);

/// fit_codebook that also records the clustering objective (sum of squared
/// distances) observed at each assignment step.
BovwCodebook fit_codebook_traced(const std::vector<std::vector<double>>& descriptors, int k,
                                 uint64_t seed, std::vector<double>* objective_trace);

/// L2-normalized histogram of nearest-centroid assignments.
Embedding embed_bovw(const FlatView& v, const BovwCodebook& cb);

// --- Unified model ----------------------------------------------------------

enum class Backend : uint8_t { autoencoder = 1, triplet = 2, bovw = 3 };
enum class InputRep : uint8_t { gray = 0, canny = 1, imported = 2 };

/// A trained backend plus the input representation it was trained on.
struct EncoderModel {
    Backend backend = Backend::autoencoder;
    InputRep input_rep = InputRep::gray;
    CannyParams canny_params;
    int input_width = 0;
    int input_height = 0;
    AutoencoderModel autoencoder;  // active backend's member is populated
    TripletModel triplet;
    BovwCodebook codebook;
    TrainConfig train_config;
    std::vector<double> loss_history;
};

/// Applies the model's input representation to a raw grayscale view.
/// For `imported`, the view is itself an edge image (pixels > 127 are edges).
FlatView prepare_input(const EncoderModel& m, const RasterImage& view);

/// Backend forward pass followed by L2 normalization.
Embedding embed(const EncoderModel& m, const FlatView& v);

/// prepare_input + embed.
Embedding embed_view(const EncoderModel& m, const RasterImage& view);

void save_model(const std::string& path, const EncoderModel& m);
EncoderModel load_model(const std::string& path);

/// Flat parameter serialization order shared by gradients and finite
/// differences: encode_weights, encode_bias, decode_weights, decode_bias.
std::vector<double> pack_parameters(const AutoencoderModel& m);
void unpack_parameters(AutoencoderModel& m, const std::vector<double>& flat);
/// Order: w1, b1, w2, b2.
std::vector<double> pack_parameters(const TripletModel& m);
void unpack_parameters(TripletModel& m, const std::vector<double>& flat);

/// Backend defaults: autoencoder lr 3e-4 / decay 0.01, triplet lr 1e-3 /
/// decay 0, bovw ignores training-loop fields.
TrainConfig default_train_config(Backend backend);

const char* to_string(Backend b);
const char* to_string(InputRep r);
Backend backend_from_string(const std::string& s);
InputRep input_rep_from_string(const std::string& s);

}  // namespace edgeloc
