#pragma once

#include "latentga/rng.hpp"
#include "latentga/tensor.hpp"

#include <string>
#include <vector>

namespace latentga {

enum class Split { Train, Test };

/// Normalized MNIST split: 784-pixel images in [0,1] with labels 0..9,
/// in file order. Immutable after load.
struct Dataset {
    std::vector<Tensor> images;
    std::vector<int> labels;
    Split split = Split::Train;

    std::size_t size() const { return images.size(); }

    /// File-order prefix (used for small smoke runs).
    Dataset head(std::size_t n) const;

    /// Items [begin, end), clamped to the dataset size.
    Dataset slice(std::size_t begin, std::size_t end) const;
};

/// Parse an IDX image/label file pair (big-endian magic 0x00000803 /
/// 0x00000801, 28x28 payload). Pixels are divided by 255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 Split split = Split::Train);

/// Conventional file names of the canonical distribution, resolved
/// against a data directory.
Dataset load_mnist(const std::string& data_dir, Split split);

struct Batch {
    Tensor images;  // [batch x 784]
    std::vector<int> labels;
};

/// One shuffled epoch over a dataset. Materializes one batch at a time;
/// the final partial batch is included. The order is fully determined by
/// the rng passed to `batches`.
class BatchStream {
public:
    std::size_t count() const;
    Batch get(std::size_t batch_index) const;

private:
    friend BatchStream batches(const Dataset& d, std::size_t batch_size, Rng& rng);
    const Dataset* data_ = nullptr;
    std::vector<std::size_t> order_;
    std::size_t batch_size_ = 0;
};

BatchStream batches(const Dataset& d, std::size_t batch_size, Rng& rng);

/// Gather specific items into one [n x 784] matrix.
Batch gather(const Dataset& d, const std::vector<std::size_t>& indices);

/// Write a 784-pixel image as binary PGM (P5, 28x28, maxval 255,
/// pixel = round(p * 255)).
void export_pgm(const Tensor& image, const std::string& path);

} // namespace latentga
