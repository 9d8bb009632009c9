#include "latentga/nn.hpp"

#include "latentga/errors.hpp"

#include <cmath>

namespace latentga {
namespace nn {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Mish: return "mish";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "mish") return Activation::Mish;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "softmax") return Activation::Softmax;
    throw FormatError("unknown activation tag '" + name + "'");
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {
double softplus(double x) {
    // ln(1 + e^x) without overflow for large |x|.
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}
} // namespace

double mish(double x) { return x * std::tanh(softplus(x)); }

namespace {

double mish_derivative(double x) {
    const double t = std::tanh(softplus(x));
    return t + x * sigmoid(x) * (1.0 - t * t);
}

void apply_activation(Activation act, const Tensor& z, Tensor& a) {
    a = z;
    switch (act) {
        case Activation::Identity:
            break;
        case Activation::Relu:
            for (double& v : a.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Mish:
            for (double& v : a.data) v = mish(v);
            break;
        case Activation::Sigmoid:
            for (double& v : a.data) v = sigmoid(v);
            break;
        case Activation::Softmax: {
            const std::size_t rows = a.shape[0], cols = a.shape[1];
            for (std::size_t r = 0; r < rows; ++r) {
                double* row = a.row(r);
                double mx = row[0];
                for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
                double sum = 0.0;
                for (std::size_t c = 0; c < cols; ++c) {
                    row[c] = std::exp(row[c] - mx);
                    sum += row[c];
                }
                for (std::size_t c = 0; c < cols; ++c) row[c] /= sum;
            }
            break;
        }
    }
}

// dz = da (.) act'(z); for softmax the full Jacobian-vector product.
Tensor activation_backward(Activation act, const Tensor& z, const Tensor& a, const Tensor& da) {
    Tensor dz = da;
    switch (act) {
        case Activation::Identity:
            break;
        case Activation::Relu:
            for (std::size_t i = 0; i < dz.data.size(); ++i)
                if (z.data[i] <= 0.0) dz.data[i] = 0.0;
            break;
        case Activation::Mish:
            for (std::size_t i = 0; i < dz.data.size(); ++i) dz.data[i] *= mish_derivative(z.data[i]);
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < dz.data.size(); ++i)
                dz.data[i] *= a.data[i] * (1.0 - a.data[i]);
            break;
        case Activation::Softmax: {
            const std::size_t rows = a.shape[0], cols = a.shape[1];
            for (std::size_t r = 0; r < rows; ++r) {
                const double* s = a.row(r);
                const double* g = da.row(r);
                double dot = 0.0;
                for (std::size_t c = 0; c < cols; ++c) dot += g[c] * s[c];
                double* out = dz.row(r);
                for (std::size_t c = 0; c < cols; ++c) out[c] = s[c] * (g[c] - dot);
            }
            break;
        }
    }
    return dz;
}

Tensor as_batch(const Tensor& t) {
    if (t.rank() == 2) return t;
    Tensor b = t;
    b.shape = {1, t.size()};
    return b;
}

} // namespace

DenseLayer DenseLayer::glorot(std::size_t in, std::size_t out, Activation act, Rng& rng) {
    DenseLayer layer;
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    layer.weights = Tensor::zeros(in, out);
    for (double& w : layer.weights.data) w = rng.uniform(-limit, limit);
    layer.bias = Tensor::zeros(out);
    layer.activation = act;
    return layer;
}

LayerStack::LayerStack(std::vector<DenseLayer> ls) : layers(std::move(ls)) { validate(); }

void LayerStack::validate() const {
    if (layers.empty()) throw ShapeError("layer stack must not be empty");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.weights.rank() != 2 || l.bias.rank() != 1 || l.bias.size() != l.out_dim())
            throw ShapeError("layer " + std::to_string(i) + ": weight/bias shapes inconsistent");
        if (i > 0 && layers[i - 1].out_dim() != l.in_dim())
            throw ShapeError("layer " + std::to_string(i) + ": in_dim " + std::to_string(l.in_dim()) +
                             " does not match previous out_dim " +
                             std::to_string(layers[i - 1].out_dim()));
    }
}

Tensor forward(const LayerStack& stack, const Tensor& input, ForwardCache& cache) {
    const Tensor x = as_batch(input);
    if (x.shape[1] != stack.in_dim())
        throw ShapeError("forward: input dim " + std::to_string(x.shape[1]) +
                         " does not match stack in_dim " + std::to_string(stack.in_dim()));
    cache.input = x;
    cache.pre.clear();
    cache.post.clear();
    cache.pre.reserve(stack.depth());
    cache.post.reserve(stack.depth());
    cache.source = &stack;

    const Tensor* cur = &cache.input;
    for (const auto& layer : stack.layers) {
        Tensor z = matmul(*cur, layer.weights);
        for (std::size_t r = 0; r < z.shape[0]; ++r) {
            double* zr = z.row(r);
            for (std::size_t c = 0; c < z.shape[1]; ++c) zr[c] += layer.bias.data[c];
        }
        Tensor a;
        apply_activation(layer.activation, z, a);
        cache.pre.push_back(std::move(z));
        cache.post.push_back(std::move(a));
        cur = &cache.post.back();
    }

    Tensor out = cache.post.back();
    if (input.rank() == 1) out.shape = {out.size()};
    return out;
}

Tensor forward(const LayerStack& stack, const Tensor& input) {
    ForwardCache cache;
    return forward(stack, input, cache);
}

Gradients zero_gradients(const LayerStack& stack) {
    Gradients g;
    g.weights.reserve(stack.depth());
    g.biases.reserve(stack.depth());
    for (const auto& l : stack.layers) {
        g.weights.push_back(Tensor::zeros(l.in_dim(), l.out_dim()));
        g.biases.push_back(Tensor::zeros(l.out_dim()));
    }
    return g;
}

Tensor backward_range(const LayerStack& stack, const ForwardCache& cache, Tensor grad,
                      std::size_t first, std::size_t last, Gradients& grads) {
    for (std::size_t li = last; li-- > first;) {
        const DenseLayer& layer = stack.layers[li];
        const Tensor dz = activation_backward(layer.activation, cache.pre[li], cache.post[li], grad);
        const Tensor& below = li == 0 ? cache.input : cache.post[li - 1];
        grads.weights[li] = matmul_transA(below, dz);
        Tensor db = Tensor::zeros(layer.out_dim());
        for (std::size_t r = 0; r < dz.shape[0]; ++r) {
            const double* dr = dz.row(r);
            for (std::size_t c = 0; c < dz.shape[1]; ++c) db.data[c] += dr[c];
        }
        grads.biases[li] = std::move(db);
        grad = matmul_transB(dz, layer.weights);
    }
    return grad;
}

Gradients backward(const LayerStack& stack, const ForwardCache& cache, const Tensor& loss_grad) {
    if (cache.source != &stack || cache.pre.size() != stack.depth())
        throw ContractError("backward: cache was not produced by this stack's forward pass");
    const Tensor g = as_batch(loss_grad);
    if (!g.same_shape(cache.post.back()))
        throw ShapeError("backward: loss gradient shape " + g.shape_str() +
                         " does not match output shape " + cache.post.back().shape_str());
    Gradients grads = zero_gradients(stack);
    grads.input = backward_range(stack, cache, g, 0, stack.depth(), grads);
    if (loss_grad.rank() == 1) grads.input.shape = {grads.input.size()};
    return grads;
}

double bce_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target))
        throw ShapeError("bce_loss: shapes disagree, " + pred.shape_str() + " vs " + target.shape_str());
    constexpr double eps = 1e-7;
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double p = std::min(1.0 - eps, std::max(eps, pred.data[i]));
        const double t = target.data[i];
        sum -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    return sum / static_cast<double>(pred.data.size());
}

Tensor bce_loss_grad(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target))
        throw ShapeError("bce_loss_grad: shapes disagree, " + pred.shape_str() + " vs " +
                         target.shape_str());
    constexpr double eps = 1e-7;
    Tensor g = pred;
    const double n = static_cast<double>(pred.data.size());
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        const double p = std::min(1.0 - eps, std::max(eps, pred.data[i]));
        g.data[i] = (p - target.data[i]) / (p * (1.0 - p)) / n;
    }
    return g;
}

double cross_entropy_loss(const Tensor& logits, std::size_t label) {
    if (logits.rank() != 1) throw ShapeError("cross_entropy_loss: expected rank-1 logits");
    if (label >= logits.size())
        throw RangeError("cross_entropy_loss: label " + std::to_string(label) + " out of range for " +
                         std::to_string(logits.size()) + " classes");
    double mx = logits.data[0];
    for (double v : logits.data) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits.data) sum += std::exp(v - mx);
    return mx + std::log(sum) - logits.data[label];
}

double cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2 || logits.shape[0] != labels.size())
        throw ShapeError("cross_entropy_loss: logits " + logits.shape_str() + " vs " +
                         std::to_string(labels.size()) + " labels");
    double total = 0.0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        Tensor row = Tensor::zeros(logits.shape[1]);
        for (std::size_t c = 0; c < logits.shape[1]; ++c) row.data[c] = logits.at(r, c);
        total += cross_entropy_loss(row, static_cast<std::size_t>(labels[r]));
    }
    return total / static_cast<double>(labels.size());
}

Tensor cross_entropy_grad(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2 || logits.shape[0] != labels.size())
        throw ShapeError("cross_entropy_grad: logits " + logits.shape_str() + " vs " +
                         std::to_string(labels.size()) + " labels");
    Tensor g = softmax(logits);
    const double inv_batch = 1.0 / static_cast<double>(labels.size());
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= g.shape[1])
            throw RangeError("cross_entropy_grad: label " + std::to_string(labels[r]) +
                             " out of range for " + std::to_string(g.shape[1]) + " classes");
        g.at(r, static_cast<std::size_t>(labels[r])) -= 1.0;
        double* gr = g.row(r);
        for (std::size_t c = 0; c < g.shape[1]; ++c) gr[c] *= inv_batch;
    }
    return g;
}

Tensor softmax(const Tensor& logits) {
    Tensor x = as_batch(logits);
    Tensor out;
    apply_activation(Activation::Softmax, x, out);
    if (logits.rank() == 1) out.shape = {out.size()};
    return out;
}

AdamState::AdamState(const LayerStack& stack, AdamConfig config) : config_(config) {
    for (const auto& l : stack.layers) {
        m_w_.push_back(Tensor::zeros(l.in_dim(), l.out_dim()));
        v_w_.push_back(Tensor::zeros(l.in_dim(), l.out_dim()));
        m_b_.push_back(Tensor::zeros(l.out_dim()));
        v_b_.push_back(Tensor::zeros(l.out_dim()));
    }
}

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::uint64_t t,
                 const AdamConfig& config) {
    if (!param.same_shape(grad) || !param.same_shape(m) || !param.same_shape(v))
        throw ShapeError("adam_update: parameter/gradient/moment shapes disagree");
    const double b1 = config.beta1, b2 = config.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.data.size(); ++i) {
        const double g = grad.data[i];
        m.data[i] = b1 * m.data[i] + (1.0 - b1) * g;
        v.data[i] = b2 * v.data[i] + (1.0 - b2) * g * g;
        const double m_hat = m.data[i] / bc1;
        const double v_hat = v.data[i] / bc2;
        param.data[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

void AdamState::step(LayerStack& stack, const Gradients& grads) {
    if (grads.weights.size() != stack.depth())
        throw ShapeError("adam step: gradient layer count does not match stack");
    ++t_;
    for (std::size_t i = 0; i < stack.depth(); ++i) {
        adam_update(stack.layers[i].weights, grads.weights[i], m_w_[i], v_w_[i], t_, config_);
        adam_update(stack.layers[i].bias, grads.biases[i], m_b_[i], v_b_[i], t_, config_);
    }
}

Tensor input_gradient(const LayerStack& stack, const Tensor& input, std::size_t label) {
    ForwardCache cache;
    const Tensor logits = forward(stack, input, cache);
    const Tensor g = cross_entropy_grad(as_batch(logits), {static_cast<int>(label)});
    Gradients grads = backward(stack, cache, g);
    Tensor out = std::move(grads.input);
    if (input.rank() == 1) out.shape = {out.size()};
    return out;
}

} // namespace nn
} // namespace latentga
