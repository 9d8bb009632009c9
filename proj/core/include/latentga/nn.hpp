#pragma once

#include "latentga/rng.hpp"
#include "latentga/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace latentga {
namespace nn {

enum class Activation { Identity, Relu, Mish, Sigmoid, Softmax };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// x * tanh(softplus(x)), softplus computed overflow-safely.
double mish(double x);
double sigmoid(double x);

/// Fully connected layer; weights are [in x out], bias is [out].
struct DenseLayer {
    Tensor weights;
    Tensor bias;
    Activation activation = Activation::Identity;

    std::size_t in_dim() const { return weights.shape[0]; }
    std::size_t out_dim() const { return weights.shape[1]; }

    /// Glorot-uniform weights in [-sqrt(6/(in+out)), +sqrt(6/(in+out))), zero bias.
    static DenseLayer glorot(std::size_t in, std::size_t out, Activation act, Rng& rng);
};

/// Ordered dense layers; adjacent out/in dimensions must agree.
struct LayerStack {
    std::vector<DenseLayer> layers;

    LayerStack() = default;
    explicit LayerStack(std::vector<DenseLayer> ls);

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }
    std::size_t depth() const { return layers.size(); }
    void validate() const;
};

/// Per-layer pre-activations and activations of one forward pass,
/// sufficient for the backward pass. Tied to the stack it was made with.
struct ForwardCache {
    Tensor input;              // [batch x in]
    std::vector<Tensor> pre;   // z per layer
    std::vector<Tensor> post;  // a per layer
    const LayerStack* source = nullptr;
};

/// Forward through the stack. Rank-1 input is treated as a single-row
/// batch and the output rank mirrors the input rank.
Tensor forward(const LayerStack& stack, const Tensor& input);
Tensor forward(const LayerStack& stack, const Tensor& input, ForwardCache& cache);

struct Gradients {
    std::vector<Tensor> weights;  // same shapes as stack parameters
    std::vector<Tensor> biases;
    Tensor input;                 // d loss / d input, same shape as cache.input
};

/// Analytic gradients of a scalar loss w.r.t. every parameter and the
/// input, given d loss / d output. Throws on a cache not produced by
/// `stack` or with mismatched shapes.
Gradients backward(const LayerStack& stack, const ForwardCache& cache, const Tensor& loss_grad);

/// Propagate through layers [first, last) only (used to inject penalty
/// terms at an interior layer). Returns d loss / d input-of-layer-`first`
/// and accumulates parameter gradients for that range into `grads`,
/// which must already hold zero (or partial) tensors of the right shapes.
Tensor backward_range(const LayerStack& stack, const ForwardCache& cache, Tensor grad,
                      std::size_t first, std::size_t last, Gradients& grads);

Gradients zero_gradients(const LayerStack& stack);

/// Mean over elements of -[t*ln(p) + (1-t)*ln(1-p)], p clamped to
/// [1e-7, 1 - 1e-7].
double bce_loss(const Tensor& pred, const Tensor& target);
Tensor bce_loss_grad(const Tensor& pred, const Tensor& target);

/// -ln(softmax(logits)[label]) with max-subtraction stabilization.
double cross_entropy_loss(const Tensor& logits, std::size_t label);
/// Mean cross-entropy over a [batch x classes] logits matrix.
double cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels);
/// d mean-cross-entropy / d logits: (softmax - onehot) / batch.
Tensor cross_entropy_grad(const Tensor& logits, const std::vector<int>& labels);

/// Row-wise stable softmax (rank-1 treated as one row).
Tensor softmax(const Tensor& logits);

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second-moment accumulators for one stack; step counter
/// increases by exactly 1 per update.
class AdamState {
public:
    AdamState(const LayerStack& stack, AdamConfig config = {});

    /// Standard bias-corrected Adam update, in place.
    void step(LayerStack& stack, const Gradients& grads);

    std::uint64_t steps() const { return t_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    std::uint64_t t_ = 0;
    std::vector<Tensor> m_w_, v_w_, m_b_, v_b_;
};

/// Single-tensor Adam update; exposed for direct oracle tests.
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::uint64_t t,
                 const AdamConfig& config);

/// d cross_entropy(stack(input), label) / d input for a logits-headed
/// classifier stack. Rank-1 in, rank-1 out.
Tensor input_gradient(const LayerStack& stack, const Tensor& input, std::size_t label);

} // namespace nn
} // namespace latentga
