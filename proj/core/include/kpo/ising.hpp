#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace kpo {

enum class ProblemClass { SK7, DenseMaxCut, CubicMaxCut, Custom };

std::string to_string(ProblemClass cls);
ProblemClass parse_problem_class(std::string_view name);

// Symmetric, zero-diagonal Ising couplings normalized to max |C_ij| = 1.
// The all-zero matrix is only accepted for the Custom class.
class CouplingMatrix {
public:
    CouplingMatrix(Eigen::MatrixXd entries, ProblemClass cls = ProblemClass::Custom,
                   std::optional<std::uint64_t> seed = std::nullopt);

    // Divides by the largest off-diagonal magnitude before validating.
    static CouplingMatrix normalized(Eigen::MatrixXd raw, ProblemClass cls = ProblemClass::Custom,
                                     std::optional<std::uint64_t> seed = std::nullopt);

    int n() const { return static_cast<int>(entries_.rows()); }
    const Eigen::MatrixXd& entries() const { return entries_; }
    double operator()(int i, int j) const { return entries_(i, j); }
    ProblemClass problem_class() const { return cls_; }
    std::optional<std::uint64_t> seed() const { return seed_; }
    bool is_zero() const;

private:
    Eigen::MatrixXd entries_;
    ProblemClass cls_;
    std::optional<std::uint64_t> seed_;
};

using SpinConfiguration = std::vector<int>;

// bit i set <=> spin i is -1; usable for n <= 64
std::uint64_t encode_spins(const SpinConfiguration& s);
SpinConfiguration decode_spins(std::uint64_t bits, int n);
SpinConfiguration flip(const SpinConfiguration& s);

struct GroundStateSet {
    double energy = 0.0;
    std::vector<SpinConfiguration> configurations;
    std::vector<std::uint64_t> codes;   // sorted encode_spins() of each member

    bool contains(const SpinConfiguration& s) const;
    bool contains_code(std::uint64_t code) const;
};

// Sum over ordered pairs i != j of C_ij s_i s_j.
double ising_energy(const CouplingMatrix& c, const SpinConfiguration& s);

inline constexpr int kMaxBruteForceSpins = 24;
GroundStateSet brute_force_ground_states(const CouplingMatrix& c);

CouplingMatrix gen_sk7(int n, std::uint64_t seed);
CouplingMatrix gen_dense_maxcut(int n, std::uint64_t seed);
CouplingMatrix gen_cubic_maxcut(int n, std::uint64_t seed);
CouplingMatrix generate_instance(ProblemClass cls, int n, std::uint64_t seed);

} // namespace kpo
