#pragma once

#include <cstdint>
#include <random>

namespace kpo {

// Seeds are split by (stream, index) through SplitMix64 so that instance
// generation, initial conditions and jump records drawn from the same user
// seed never share an engine state.
enum class Stream : std::uint64_t {
    Instance = 0x1a5d,
    InitialCondition = 0x2b6e,
    QuantumJump = 0x3c7f,
    Auxiliary = 0x4d80,
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

// mt19937_64 engine with distribution transforms written out explicitly;
// std::normal_distribution and friends are not portable across standard
// libraries, which would break bit reproducibility of stored results.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0)
        : engine_(derive_seed(seed, stream, index)) {}

    std::uint64_t next() { return engine_(); }
    double uniform();                       // [0, 1)
    double normal();                        // standard normal, Box-Muller
    std::uint64_t below(std::uint64_t n);   // uniform on {0, ..., n-1}

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace kpo
