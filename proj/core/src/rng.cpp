#include "kpo/rng.hpp"

#include <cmath>
#include <numbers>

namespace kpo {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
    std::uint64_t state = seed;
    std::uint64_t a = splitmix64(state);
    state = a ^ static_cast<std::uint64_t>(stream);
    std::uint64_t b = splitmix64(state);
    state = b ^ (index * 0xd1342543de82ef95ULL + 1);
    return splitmix64(state);
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
}

std::uint64_t Rng::below(std::uint64_t n) {
    // rejection on the top of the range removes modulo bias
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

} // namespace kpo
