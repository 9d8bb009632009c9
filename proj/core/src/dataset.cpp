#include "latentga/dataset.hpp"

#include "latentga/errors.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

namespace latentga {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4))
        throw IoError("truncated IDX header in " + path);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

} // namespace

Dataset Dataset::head(std::size_t n) const { return slice(0, n); }

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
    Dataset d;
    d.split = split;
    const std::size_t b = std::min(begin, size());
    const std::size_t e = std::min(std::max(end, b), size());
    d.images.assign(images.begin() + b, images.begin() + e);
    d.labels.assign(labels.begin() + b, labels.begin() + e);
    return d;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, Split split) {
    auto img_in = open_binary(images_path);
    const std::uint32_t img_magic = read_be32(img_in, images_path);
    if (img_magic != kImagesMagic)
        throw FormatError(images_path + ": bad image magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", img_magic);
            return std::string(buf);
        }());
    const std::uint32_t n_images = read_be32(img_in, images_path);
    const std::uint32_t rows = read_be32(img_in, images_path);
    const std::uint32_t cols = read_be32(img_in, images_path);
    if (rows != 28 || cols != 28)
        throw FormatError(images_path + ": expected 28x28 images, got " + std::to_string(rows) +
                          "x" + std::to_string(cols));

    auto lbl_in = open_binary(labels_path);
    const std::uint32_t lbl_magic = read_be32(lbl_in, labels_path);
    if (lbl_magic != kLabelsMagic)
        throw FormatError(labels_path + ": bad label magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", lbl_magic);
            return std::string(buf);
        }());
    const std::uint32_t n_labels = read_be32(lbl_in, labels_path);
    if (n_images != n_labels)
        throw FormatError("image/label counts disagree: " + std::to_string(n_images) + " in " +
                          images_path + " vs " + std::to_string(n_labels) + " in " + labels_path);

    Dataset d;
    d.split = split;
    d.images.reserve(n_images);
    d.labels.reserve(n_images);
    std::vector<unsigned char> raw(784);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        if (!img_in.read(reinterpret_cast<char*>(raw.data()), 784))
            throw IoError(images_path + ": truncated at image " + std::to_string(i));
        Tensor img = Tensor::zeros(784);
        for (std::size_t p = 0; p < 784; ++p) img.data[p] = raw[p] / 255.0;
        unsigned char lb;
        if (!lbl_in.read(reinterpret_cast<char*>(&lb), 1))
            throw IoError(labels_path + ": truncated at label " + std::to_string(i));
        const int label = lb;
        if (label > 9) throw FormatError(labels_path + ": label " + std::to_string(label) + " out of 0..9");
        d.images.push_back(std::move(img));
        d.labels.push_back(label);
    }
    return d;
}

Dataset load_mnist(const std::string& data_dir, Split split) {
    const std::string prefix = split == Split::Train ? "train" : "t10k";
    return load_idx(data_dir + "/" + prefix + "-images-idx3-ubyte",
                    data_dir + "/" + prefix + "-labels-idx1-ubyte", split);
}

std::size_t BatchStream::count() const {
    if (batch_size_ == 0 || order_.empty()) return 0;
    return (order_.size() + batch_size_ - 1) / batch_size_;
}

Batch BatchStream::get(std::size_t batch_index) const {
    const std::size_t begin = batch_index * batch_size_;
    const std::size_t end = std::min(order_.size(), begin + batch_size_);
    std::vector<std::size_t> idx(order_.begin() + begin, order_.begin() + end);
    return gather(*data_, idx);
}

BatchStream batches(const Dataset& d, std::size_t batch_size, Rng& rng) {
    if (batch_size < 1) throw RangeError("batches: batch_size must be >= 1");
    BatchStream s;
    s.data_ = &d;
    s.batch_size_ = batch_size;
    s.order_.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) s.order_[i] = i;
    rng.shuffle(s.order_);
    return s;
}

Batch gather(const Dataset& d, const std::vector<std::size_t>& indices) {
    Batch b;
    b.images = Tensor::zeros(indices.size(), 784);
    b.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const Tensor& img = d.images[indices[r]];
        std::copy(img.data.begin(), img.data.end(), b.images.row(r));
        b.labels.push_back(d.labels[indices[r]]);
    }
    return b;
}

void export_pgm(const Tensor& image, const std::string& path) {
    if (image.size() != 784)
        throw ShapeError("export_pgm: expected 784 pixels, got " + std::to_string(image.size()));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "P5\n28 28\n255\n";
    for (double p : image.data) {
        const double clamped = std::min(1.0, std::max(0.0, p));
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(clamped * 255.0))));
    }
    if (!out) throw IoError("write failed for " + path);
}

} // namespace latentga
