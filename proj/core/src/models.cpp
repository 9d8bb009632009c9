#include "latentga/models.hpp"

#include "latentga/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace latentga {

using nn::Activation;
using nn::DenseLayer;
using nn::LayerStack;

namespace {

constexpr int kFormatVersion = 1;

LayerStack combined_stack(const Autoencoder& ae) {
    std::vector<DenseLayer> layers = ae.encoder.layers;
    layers.insert(layers.end(), ae.decoder.layers.begin(), ae.decoder.layers.end());
    return LayerStack(std::move(layers));
}

Autoencoder split_stack(LayerStack net, std::size_t encoder_depth) {
    Autoencoder ae;
    ae.encoder = LayerStack(std::vector<DenseLayer>(net.layers.begin(),
                                                    net.layers.begin() + encoder_depth));
    ae.decoder = LayerStack(std::vector<DenseLayer>(net.layers.begin() + encoder_depth,
                                                    net.layers.end()));
    return ae;
}

std::size_t effective_holdout(std::size_t n, std::size_t requested) {
    if (n < 10 || requested == 0) return 0;
    return std::min(requested, n / 5);
}

double eval_bce(const LayerStack& net, const Dataset& d) {
    if (d.size() == 0) return -1.0;
    double sum = 0.0;
    std::size_t count = 0;
    const std::size_t chunk = 256;
    for (std::size_t begin = 0; begin < d.size(); begin += chunk) {
        std::vector<std::size_t> idx;
        for (std::size_t i = begin; i < std::min(d.size(), begin + chunk); ++i) idx.push_back(i);
        const Batch b = gather(d, idx);
        const Tensor pred = nn::forward(net, b.images);
        sum += nn::bce_loss(pred, b.images) * static_cast<double>(idx.size());
        count += idx.size();
    }
    return sum / static_cast<double>(count);
}

} // namespace

Autoencoder Autoencoder::init(Rng& rng) {
    Autoencoder ae;
    ae.encoder = LayerStack({DenseLayer::glorot(784, 512, Activation::Relu, rng),
                             DenseLayer::glorot(512, 264, Activation::Relu, rng),
                             DenseLayer::glorot(264, 128, Activation::Mish, rng)});
    ae.decoder = LayerStack({DenseLayer::glorot(128, 264, Activation::Relu, rng),
                             DenseLayer::glorot(264, 512, Activation::Relu, rng),
                             DenseLayer::glorot(512, 784, Activation::Sigmoid, rng)});
    return ae;
}

Classifier Classifier::init(Rng& rng) {
    Classifier clf;
    clf.net = LayerStack({DenseLayer::glorot(784, 512, Activation::Relu, rng),
                          DenseLayer::glorot(512, 256, Activation::Relu, rng),
                          DenseLayer::glorot(256, 10, Activation::Identity, rng)});
    return clf;
}

AeTrainResult train_autoencoder(const Dataset& train, std::size_t epochs, double lr, Rng& rng,
                                const AeTrainOptions& opts) {
    if (epochs < 1) throw ConfigError("train_autoencoder: epochs must be >= 1");
    if (train.size() == 0) throw ConfigError("train_autoencoder: empty training set");
    if (opts.batch_size < 1) throw ConfigError("train_autoencoder: batch_size must be >= 1");

    const std::size_t holdout = effective_holdout(train.size(), opts.holdout);
    const Dataset fit = train.head(train.size() - holdout);
    const Dataset monitor = train.slice(train.size() - holdout, train.size());

    Autoencoder fresh = Autoencoder::init(rng);
    const std::size_t encoder_depth = fresh.encoder.depth();
    LayerStack net = combined_stack(fresh);
    nn::AdamState adam(net, {.learning_rate = lr});

    AeTrainResult result;
    result.trace.push_back({0, eval_bce(net, fit), eval_bce(net, monitor), -1.0});

    const double l1 = opts.l1_latent_weight;
    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        BatchStream stream = batches(fit, opts.batch_size, rng);
        double loss_sum = 0.0;
        for (std::size_t bi = 0; bi < stream.count(); ++bi) {
            const Batch b = stream.get(bi);
            nn::ForwardCache cache;
            const Tensor pred = nn::forward(net, b.images, cache);
            double loss = nn::bce_loss(pred, b.images);
            const Tensor& latent = cache.post[encoder_depth - 1];
            if (l1 > 0.0) {
                double abs_sum = 0.0;
                for (double v : latent.data) abs_sum += std::abs(v);
                loss += l1 * abs_sum / static_cast<double>(latent.shape[0]);
            }
            if (!std::isfinite(loss))
                throw TrainingError("autoencoder training diverged at epoch " + std::to_string(epoch));

            nn::Gradients grads = nn::zero_gradients(net);
            Tensor g = nn::backward_range(net, cache, nn::bce_loss_grad(pred, b.images),
                                          encoder_depth, net.depth(), grads);
            if (l1 > 0.0) {
                const double scale = l1 / static_cast<double>(latent.shape[0]);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    g.data[i] += scale * (latent.data[i] > 0.0 ? 1.0 : (latent.data[i] < 0.0 ? -1.0 : 0.0));
            }
            nn::backward_range(net, cache, std::move(g), 0, encoder_depth, grads);
            adam.step(net, grads);
            loss_sum += loss;
        }
        result.trace.push_back({epoch, loss_sum / static_cast<double>(stream.count()),
                                eval_bce(net, monitor), -1.0});
    }

    result.model = split_stack(std::move(net), encoder_depth);
    result.model.metadata["epochs"] = static_cast<double>(epochs);
    result.model.metadata["learning_rate"] = lr;
    result.model.metadata["l1_latent_weight"] = l1;
    if (!result.trace.empty()) result.model.metadata["final_holdout_bce"] = result.trace.back().holdout_loss;
    return result;
}

ClfTrainResult train_classifier(const Dataset& train, std::size_t epochs, double lr, Rng& rng,
                                const ClfTrainOptions& opts) {
    if (epochs < 1) throw ConfigError("train_classifier: epochs must be >= 1");
    if (train.size() == 0) throw ConfigError("train_classifier: empty training set");
    if (opts.batch_size < 1) throw ConfigError("train_classifier: batch_size must be >= 1");

    ClfTrainResult result;
    result.model = Classifier::init(rng);
    LayerStack& net = result.model.net;
    nn::AdamState adam(net, {.learning_rate = lr});

    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        BatchStream stream = batches(train, opts.batch_size, rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t bi = 0; bi < stream.count(); ++bi) {
            const Batch b = stream.get(bi);
            nn::ForwardCache cache;
            const Tensor logits = nn::forward(net, b.images, cache);
            const double loss = nn::cross_entropy_loss(logits, b.labels);
            if (!std::isfinite(loss))
                throw TrainingError("classifier training diverged at epoch " + std::to_string(epoch));
            for (std::size_t r = 0; r < b.labels.size(); ++r) {
                const double* row = logits.row(r);
                std::size_t best = 0;
                for (std::size_t c = 1; c < logits.shape[1]; ++c)
                    if (row[c] > row[best]) best = c;
                if (static_cast<int>(best) == b.labels[r]) ++correct;
            }
            nn::Gradients grads = nn::backward(net, cache, nn::cross_entropy_grad(logits, b.labels));
            adam.step(net, grads);
            loss_sum += loss;
        }
        result.trace.push_back({epoch, loss_sum / static_cast<double>(stream.count()), -1.0,
                                static_cast<double>(correct) / static_cast<double>(train.size())});
    }

    result.model.metadata["epochs"] = static_cast<double>(epochs);
    result.model.metadata["learning_rate"] = lr;
    return result;
}

Tensor encode(const Autoencoder& ae, const Tensor& x) { return nn::forward(ae.encoder, x); }

Tensor decode(const Autoencoder& ae, const Tensor& code) { return nn::forward(ae.decoder, code); }

Tensor reconstruct(const Autoencoder& ae, const Tensor& x) { return decode(ae, encode(ae, x)); }

Tensor predict_proba(const Classifier& clf, const Tensor& x) {
    return nn::softmax(nn::forward(clf.net, x));
}

int predict_label(const Classifier& clf, const Tensor& x) {
    const Tensor p = predict_proba(clf, x);
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p.data[i] > p.data[best]) best = i;
    return static_cast<int>(best);
}

double evaluate_accuracy(const Classifier& clf, const Dataset& d) {
    if (d.size() == 0) throw ConfigError("evaluate_accuracy: empty dataset");
    std::size_t correct = 0;
    const std::size_t chunk = 256;
    for (std::size_t begin = 0; begin < d.size(); begin += chunk) {
        std::vector<std::size_t> idx;
        for (std::size_t i = begin; i < std::min(d.size(), begin + chunk); ++i) idx.push_back(i);
        const Batch b = gather(d, idx);
        const Tensor logits = nn::forward(clf.net, b.images);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const double* row = logits.row(r);
            std::size_t best = 0;
            for (std::size_t c = 1; c < logits.shape[1]; ++c)
                if (row[c] > row[best]) best = c;
            if (static_cast<int>(best) == b.labels[r]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(d.size());
}

double mean_reconstruction_bce(const Autoencoder& ae, const Dataset& d, std::size_t limit) {
    const Dataset use = limit == 0 ? d : d.head(limit);
    return eval_bce(combined_stack(ae), use);
}

double mean_abs_reconstruction_error(const Autoencoder& ae, const Dataset& d, std::size_t limit) {
    const Dataset use = limit == 0 ? d : d.head(limit);
    if (use.size() == 0) throw ConfigError("mean_abs_reconstruction_error: empty dataset");
    const LayerStack net = combined_stack(ae);
    double sum = 0.0;
    const std::size_t chunk = 256;
    for (std::size_t begin = 0; begin < use.size(); begin += chunk) {
        std::vector<std::size_t> idx;
        for (std::size_t i = begin; i < std::min(use.size(), begin + chunk); ++i) idx.push_back(i);
        const Batch b = gather(use, idx);
        const Tensor pred = nn::forward(net, b.images);
        for (std::size_t i = 0; i < pred.data.size(); ++i)
            sum += std::abs(pred.data[i] - b.images.data[i]);
    }
    return sum / static_cast<double>(use.size() * 784);
}

// ---------------------------------------------------------------------------
// Model file IO

namespace {

void format_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

void write_stack_arrays(std::string& out, const LayerStack& net) {
    std::size_t w_total = 0, b_total = 0;
    for (const auto& l : net.layers) {
        w_total += l.weights.size();
        b_total += l.bias.size();
    }
    out += "weights " + std::to_string(w_total) + "\n";
    for (const auto& l : net.layers) {
        for (std::size_t i = 0; i < l.weights.size(); ++i) {
            if (i) out += ' ';
            format_double(out, l.weights.data[i]);
        }
        out += '\n';
    }
    out += "biases " + std::to_string(b_total) + "\n";
    for (const auto& l : net.layers) {
        for (std::size_t i = 0; i < l.bias.size(); ++i) {
            if (i) out += ' ';
            format_double(out, l.bias.data[i]);
        }
        out += '\n';
    }
}

void write_model_file(const std::string& path, const std::string& kind,
                      const std::vector<std::size_t>& dims, const LayerStack& net,
                      const std::map<std::string, double>& metadata) {
    std::string out;
    out.reserve(1 << 20);
    out += "format_version " + std::to_string(kFormatVersion) + "\n";
    out += "kind " + kind + "\n";
    out += "dims";
    for (std::size_t d : dims) out += " " + std::to_string(d);
    out += "\nactivations";
    for (const auto& l : net.layers) out += std::string(" ") + nn::activation_name(l.activation);
    out += "\n";
    write_stack_arrays(out, net);
    out += "metadata " + std::to_string(metadata.size()) + "\n";
    for (const auto& [k, v] : metadata) {
        out += k + " ";
        format_double(out, v);
        out += "\n";
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed for " + path);
}

/// Whitespace tokenizer over the whole file with byte offsets for
/// error reporting.
class TokenReader {
public:
    TokenReader(std::string text, std::string path)
        : text_(std::move(text)), path_(std::move(path)) {}

    std::string next() {
        skip_ws();
        if (pos_ >= text_.size())
            throw FormatError(path_ + ": unexpected end of file at byte " + std::to_string(pos_));
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return text_.substr(start, pos_ - start);
    }

    void expect(const std::string& word) {
        const std::size_t at = offset_of_next();
        const std::string tok = next();
        if (tok != word)
            throw FormatError(path_ + ": expected '" + word + "' but found '" + tok + "' at byte " +
                              std::to_string(at));
    }

    std::size_t next_count() {
        const std::size_t at = offset_of_next();
        const std::string tok = next();
        std::size_t value = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw FormatError(path_ + ": expected an integer, found '" + tok + "' at byte " +
                              std::to_string(at));
        return value;
    }

    double next_double() {
        const std::size_t at = offset_of_next();
        const std::string tok = next();
        double value = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw FormatError(path_ + ": expected a number, found '" + tok + "' at byte " +
                              std::to_string(at));
        return value;
    }

    std::size_t offset_of_next() {
        skip_ws();
        return pos_;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::string text_;
    std::string path_;
    std::size_t pos_ = 0;
};

struct ParsedModel {
    std::string kind;
    std::vector<std::size_t> dims;
    LayerStack net;
    std::map<std::string, double> metadata;
};

ParsedModel parse_model_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    TokenReader r(buf.str(), path);

    r.expect("format_version");
    const std::size_t version = r.next_count();
    if (version != kFormatVersion)
        throw FormatError(path + ": unsupported format_version " + std::to_string(version) +
                          " (this build reads version " + std::to_string(kFormatVersion) + ")");
    r.expect("kind");
    ParsedModel m;
    m.kind = r.next();
    if (m.kind != "autoencoder" && m.kind != "classifier")
        throw FormatError(path + ": unknown model kind '" + m.kind + "'");

    r.expect("dims");
    // dims line: count follows from the activations line, so read greedily
    // until the "activations" keyword.
    std::vector<std::string> dim_tokens;
    for (;;) {
        const std::string tok = r.next();
        if (tok == "activations") break;
        dim_tokens.push_back(tok);
    }
    for (const auto& tok : dim_tokens) {
        std::size_t v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || v == 0)
            throw FormatError(path + ": bad dimension '" + tok + "'");
        m.dims.push_back(v);
    }
    if (m.dims.size() < 2) throw FormatError(path + ": needs at least 2 dims");

    std::vector<Activation> acts;
    for (std::size_t i = 0; i + 1 < m.dims.size(); ++i) acts.push_back(nn::activation_from_name(r.next()));

    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < m.dims.size(); ++i) {
        DenseLayer l;
        l.weights = Tensor::zeros(m.dims[i], m.dims[i + 1]);
        l.bias = Tensor::zeros(m.dims[i + 1]);
        l.activation = acts[i];
        layers.push_back(std::move(l));
    }

    r.expect("weights");
    std::size_t w_total = 0;
    for (const auto& l : layers) w_total += l.weights.size();
    const std::size_t w_declared = r.next_count();
    if (w_declared != w_total)
        throw FormatError(path + ": weight count " + std::to_string(w_declared) +
                          " does not match dims (expected " + std::to_string(w_total) + ")");
    for (auto& l : layers)
        for (auto& w : l.weights.data) w = r.next_double();

    r.expect("biases");
    std::size_t b_total = 0;
    for (const auto& l : layers) b_total += l.bias.size();
    const std::size_t b_declared = r.next_count();
    if (b_declared != b_total)
        throw FormatError(path + ": bias count " + std::to_string(b_declared) +
                          " does not match dims (expected " + std::to_string(b_total) + ")");
    for (auto& l : layers)
        for (auto& b : l.bias.data) b = r.next_double();

    r.expect("metadata");
    const std::size_t n_meta = r.next_count();
    for (std::size_t i = 0; i < n_meta; ++i) {
        const std::string key = r.next();
        m.metadata[key] = r.next_double();
    }

    m.net = LayerStack(std::move(layers));
    return m;
}

} // namespace

void save_model(const Autoencoder& ae, const std::string& path) {
    std::vector<std::size_t> dims;
    dims.push_back(ae.encoder.in_dim());
    for (const auto& l : ae.encoder.layers) dims.push_back(l.out_dim());
    for (const auto& l : ae.decoder.layers) dims.push_back(l.out_dim());
    write_model_file(path, "autoencoder", dims, combined_stack(ae), ae.metadata);
}

void save_model(const Classifier& clf, const std::string& path) {
    std::vector<std::size_t> dims;
    dims.push_back(clf.net.in_dim());
    for (const auto& l : clf.net.layers) dims.push_back(l.out_dim());
    write_model_file(path, "classifier", dims, clf.net, clf.metadata);
}

Autoencoder load_autoencoder(const std::string& path) {
    ParsedModel m = parse_model_file(path);
    if (m.kind != "autoencoder")
        throw FormatError(path + ": expected an autoencoder file, found kind '" + m.kind + "'");
    if (m.dims.size() % 2 == 0)
        throw FormatError(path + ": autoencoder dims must have an odd length (symmetric around the latent layer)");
    const std::size_t mid = m.dims.size() / 2;
    for (std::size_t i = 0; i < m.dims.size(); ++i)
        if (m.dims[i] != m.dims[m.dims.size() - 1 - i])
            throw FormatError(path + ": decoder dims do not mirror encoder dims");
    if (m.net.layers[mid - 1].activation != Activation::Mish)
        throw FormatError(path + ": latent layer activation must be mish");
    if (m.net.layers.back().activation != Activation::Sigmoid)
        throw FormatError(path + ": decoder output activation must be sigmoid");
    Autoencoder ae = split_stack(std::move(m.net), mid);
    ae.metadata = std::move(m.metadata);
    return ae;
}

Classifier load_classifier(const std::string& path) {
    ParsedModel m = parse_model_file(path);
    if (m.kind != "classifier")
        throw FormatError(path + ": expected a classifier file, found kind '" + m.kind + "'");
    Classifier clf;
    clf.net = std::move(m.net);
    clf.metadata = std::move(m.metadata);
    return clf;
}

std::string peek_model_kind(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::string text(256, '\0');
    f.read(text.data(), static_cast<std::streamsize>(text.size()));
    text.resize(static_cast<std::size_t>(f.gcount()));
    TokenReader r(std::move(text), path);
    r.expect("format_version");
    r.next_count();
    r.expect("kind");
    return r.next();
}

} // namespace latentga
