#pragma once

#include "latentga/dataset.hpp"
#include "latentga/nn.hpp"

#include <map>
#include <string>
#include <vector>

namespace latentga {

/// Dense autoencoder: encoder 784-512-264-128 (relu, relu, mish) and a
/// mirrored decoder 128-264-512-784 (relu, relu, sigmoid). The sigmoid
/// head keeps decoded pixels inside (0,1).
struct Autoencoder {
    nn::LayerStack encoder;
    nn::LayerStack decoder;
    std::map<std::string, double> metadata;

    std::size_t latent_dim() const { return encoder.out_dim(); }
    std::size_t input_dim() const { return encoder.in_dim(); }

    /// Fresh Glorot-initialized model with the standard architecture.
    static Autoencoder init(Rng& rng);
};

/// Dense classifier 784-512-256-10 ending in logits.
struct Classifier {
    nn::LayerStack net;
    std::map<std::string, double> metadata;

    std::size_t num_classes() const { return net.out_dim(); }

    static Classifier init(Rng& rng);
};

struct EpochStats {
    std::size_t epoch = 0;     // 0 = before any update
    double train_loss = 0.0;   // mean batch loss seen this epoch (epoch 0: evaluated)
    double holdout_loss = 0.0; // -1 when no holdout slice exists
    double train_accuracy = -1.0; // classifier only
};

struct AeTrainOptions {
    std::size_t batch_size = 128;
    /// Optional L1 activity penalty on the latent activations; 0 disables.
    double l1_latent_weight = 0.0;
    /// Monitoring slice taken from the end of the training set and
    /// excluded from updates (clamped to n/5 for small sets).
    std::size_t holdout = 5000;
};

struct AeTrainResult {
    Autoencoder model;
    std::vector<EpochStats> trace;
};

/// Adam + BCE reconstruction training. Throws TrainingError naming the
/// epoch if the loss turns non-finite.
AeTrainResult train_autoencoder(const Dataset& train, std::size_t epochs, double lr, Rng& rng,
                                const AeTrainOptions& opts = {});

struct ClfTrainOptions {
    std::size_t batch_size = 128;
};

struct ClfTrainResult {
    Classifier model;
    std::vector<EpochStats> trace;
};

ClfTrainResult train_classifier(const Dataset& train, std::size_t epochs, double lr, Rng& rng,
                                const ClfTrainOptions& opts = {});

Tensor encode(const Autoencoder& ae, const Tensor& x);
Tensor decode(const Autoencoder& ae, const Tensor& code);
Tensor reconstruct(const Autoencoder& ae, const Tensor& x);

/// Softmax class probabilities. This is the only classifier access the
/// attack engine consumes.
Tensor predict_proba(const Classifier& clf, const Tensor& x);
int predict_label(const Classifier& clf, const Tensor& x);

double evaluate_accuracy(const Classifier& clf, const Dataset& d);
/// Mean BCE between images and their reconstructions over the first
/// `limit` items (0 = all).
double mean_reconstruction_bce(const Autoencoder& ae, const Dataset& d, std::size_t limit = 0);
/// Mean per-pixel absolute reconstruction error over the first `limit` items.
double mean_abs_reconstruction_error(const Autoencoder& ae, const Dataset& d, std::size_t limit = 0);

/// Self-describing text model file (format_version, kind, dims,
/// activations, weights, biases, metadata). Weights are written as
/// shortest round-trip decimals, so save -> load reproduces forward
/// outputs bit-for-bit.
void save_model(const Autoencoder& ae, const std::string& path);
void save_model(const Classifier& clf, const std::string& path);
Autoencoder load_autoencoder(const std::string& path);
Classifier load_classifier(const std::string& path);
/// Kind tag of a model file ("autoencoder" or "classifier") without
/// loading the weights.
std::string peek_model_kind(const std::string& path);

} // namespace latentga
