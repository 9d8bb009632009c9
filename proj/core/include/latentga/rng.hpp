#pragma once

#include "latentga/tensor.hpp"

#include <cstdint>

namespace latentga {

/// Seedable 64-bit generator with a fixed, documented algorithm:
/// xoshiro256** (Blackman & Vigna), state expanded from the seed with
/// splitmix64. The same seed yields the same draw sequence on every
/// platform; none of the <random> distribution machinery is used, since
/// its output is implementation-defined.
///
/// Single-owner: one Rng must never be drawn from by two threads at once.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double();

    /// Uniform in [lo, hi); lo == hi returns lo. Throws RangeError if lo > hi.
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n); n must be positive.
    std::size_t next_below(std::size_t n);

    /// true with probability p (p <= 0 never, p >= 1 always).
    bool bernoulli(double p);

    /// Rank-1 tensor of n i.i.d. draws in [lo, hi).
    Tensor uniform_vector(double lo, double hi, std::size_t n);

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = next_below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_[4];
};

} // namespace latentga
