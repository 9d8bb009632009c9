#include "latentga/rng.hpp"

#include "latentga/errors.hpp"

namespace latentga {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    if (lo > hi) throw RangeError("uniform: lo > hi (" + std::to_string(lo) + " > " + std::to_string(hi) + ")");
    if (lo == hi) return lo;
    return lo + (hi - lo) * next_double();
}

std::size_t Rng::next_below(std::size_t n) {
    if (n == 0) throw RangeError("next_below: n must be positive");
    // Lemire multiply-shift; bias is negligible for n far below 2^64.
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
}

bool Rng::bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return next_double() < p;
}

Tensor Rng::uniform_vector(double lo, double hi, std::size_t n) {
    if (lo > hi) throw RangeError("uniform_vector: lo > hi");
    Tensor t = Tensor::zeros(n);
    for (std::size_t i = 0; i < n; ++i) t.data[i] = uniform(lo, hi);
    return t;
}

} // namespace latentga
