#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ipvi/tensor.hpp"

namespace ipvi {

/// Deterministic random stream. The engine is std::mt19937_64 (bit-stable
/// across platforms by the standard); the distributions are hand-rolled
/// because the standard library's are implementation-defined. Identical seed
/// + identical call sequence gives an identical stream everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform();

    /// Standard normal via Box-Muller (second value of each pair is cached).
    double normal();

    /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::size_t index(std::size_t n);

    Tensor normal_tensor(const Shape& shape);
    std::vector<std::size_t> permutation(std::size_t n);

    /// Exact state capture for checkpoints (engine text + Box-Muller cache).
    std::string serialize() const;
    void restore(const std::string& state);

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ipvi
