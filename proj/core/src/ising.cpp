#include "kpo/ising.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "kpo/errors.hpp"
#include "kpo/rng.hpp"

namespace kpo {

std::string to_string(ProblemClass cls) {
    switch (cls) {
    case ProblemClass::SK7: return "sk7";
    case ProblemClass::DenseMaxCut: return "dense";
    case ProblemClass::CubicMaxCut: return "cubic";
    case ProblemClass::Custom: return "custom";
    }
    return "custom";
}

ProblemClass parse_problem_class(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (s == "sk7") return ProblemClass::SK7;
    if (s == "dense" || s == "dense-maxcut" || s == "densemaxcut") return ProblemClass::DenseMaxCut;
    if (s == "cubic" || s == "cubic-maxcut" || s == "cubicmaxcut") return ProblemClass::CubicMaxCut;
    if (s == "custom") return ProblemClass::Custom;
    throw InvalidInput("unknown problem class '" + s + "'");
}

CouplingMatrix::CouplingMatrix(Eigen::MatrixXd entries, ProblemClass cls,
                               std::optional<std::uint64_t> seed)
    : entries_(std::move(entries)), cls_(cls), seed_(seed) {
    const auto n = entries_.rows();
    if (n < 1 || entries_.cols() != n) throw InvalidInput("coupling matrix must be square and non-empty");
    if (!entries_.allFinite()) throw InvalidInput("coupling matrix has non-finite entries");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (entries_(i, i) != 0.0) throw InvalidInput("coupling matrix diagonal must be zero");
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (entries_(i, j) != entries_(j, i)) throw InvalidInput("coupling matrix must be symmetric");
    }
    const double m = entries_.cwiseAbs().maxCoeff();
    if (m == 0.0) {
        if (cls_ != ProblemClass::Custom) throw InvalidInput("all-zero coupling matrix");
    } else if (m != 1.0) {
        throw InvalidInput("coupling matrix must be normalized to max |C_ij| = 1");
    }
}

CouplingMatrix CouplingMatrix::normalized(Eigen::MatrixXd raw, ProblemClass cls,
                                          std::optional<std::uint64_t> seed) {
    raw.diagonal().setZero();
    const double m = raw.cwiseAbs().maxCoeff();
    if (!(m > 0.0)) throw InvalidInput("cannot normalize an all-zero coupling matrix");
    raw /= m;
    // division can leave the largest entry one ulp away from 1
    for (Eigen::Index i = 0; i < raw.rows(); ++i)
        for (Eigen::Index j = 0; j < raw.cols(); ++j)
            if (std::abs(std::abs(raw(i, j)) - 1.0) < 4e-16) raw(i, j) = std::copysign(1.0, raw(i, j));
    return CouplingMatrix(std::move(raw), cls, seed);
}

bool CouplingMatrix::is_zero() const { return entries_.cwiseAbs().maxCoeff() == 0.0; }

std::uint64_t encode_spins(const SpinConfiguration& s) {
    if (s.size() > 64) throw InvalidInput("spin encoding supports at most 64 spins");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] < 0) bits |= std::uint64_t{1} << i;
    return bits;
}

SpinConfiguration decode_spins(std::uint64_t bits, int n) {
    SpinConfiguration s(n);
    for (int i = 0; i < n; ++i) s[i] = (bits >> i) & 1 ? -1 : 1;
    return s;
}

SpinConfiguration flip(const SpinConfiguration& s) {
    SpinConfiguration out(s);
    for (auto& v : out) v = -v;
    return out;
}

bool GroundStateSet::contains_code(std::uint64_t code) const {
    return std::binary_search(codes.begin(), codes.end(), code);
}

bool GroundStateSet::contains(const SpinConfiguration& s) const { return contains_code(encode_spins(s)); }

double ising_energy(const CouplingMatrix& c, const SpinConfiguration& s) {
    const int n = c.n();
    if (static_cast<int>(s.size()) != n) throw InvalidInput("spin configuration size does not match coupling matrix");
    double e = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e += c(i, j) * s[i] * s[j];
    return 2.0 * e;
}

GroundStateSet brute_force_ground_states(const CouplingMatrix& c) {
    const int n = c.n();
    if (n > kMaxBruteForceSpins)
        throw ResourceLimit("brute-force ground states limited to n <= " + std::to_string(kMaxBruteForceSpins));
    const auto& m = c.entries();

    // Gray-code walk over the first n-1 spins with the last spin pinned to +1;
    // flipped partners are added afterwards.
    std::vector<int> s(n, 1);
    Eigen::VectorXd field = m.rowwise().sum();   // h_i = sum_j C_ij s_j
    double energy = 2.0 * 0.5 * field.sum();     // sum_{i!=j} C_ij s_i s_j
    const double tie = 1e-9 * std::max(1.0, m.cwiseAbs().sum());

    double best = energy;
    std::vector<std::uint64_t> found{0};
    const std::uint64_t total = n > 1 ? (std::uint64_t{1} << (n - 1)) : 1;
    std::uint64_t gray = 0;
    for (std::uint64_t step = 1; step < total; ++step) {
        const int b = std::countr_zero(step);
        gray ^= std::uint64_t{1} << b;
        energy -= 4.0 * s[b] * field(b);
        s[b] = -s[b];
        field += 2.0 * s[b] * m.col(b);
        if (energy < best - tie) {
            best = energy;
            found.assign(1, gray);
        } else if (energy <= best + tie) {
            found.push_back(gray);
        }
    }

    GroundStateSet out;
    out.energy = best;
    const std::uint64_t all = n == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
    for (auto code : found) {
        out.codes.push_back(code);
        out.codes.push_back(code ^ all);
    }
    std::sort(out.codes.begin(), out.codes.end());
    out.codes.erase(std::unique(out.codes.begin(), out.codes.end()), out.codes.end());
    for (auto code : out.codes) out.configurations.push_back(decode_spins(code, n));
    return out;
}

namespace {

void require_size(int n, int minimum, const char* what) {
    if (n < minimum) throw InvalidInput(std::string(what) + " requires n >= " + std::to_string(minimum));
}

} // namespace

CouplingMatrix gen_sk7(int n, std::uint64_t seed) {
    require_size(n, 2, "sk7");
    Rng rng(seed, Stream::Instance);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const int draw = static_cast<int>(rng.below(14));   // 0..13 -> -7..-1, 1..7
            const int v = draw < 7 ? draw - 7 : draw - 6;
            c(i, j) = c(j, i) = v;
        }
    return CouplingMatrix::normalized(std::move(c), ProblemClass::SK7, seed);
}

CouplingMatrix gen_dense_maxcut(int n, std::uint64_t seed) {
    require_size(n, 2, "dense maxcut");
    Rng rng(seed, Stream::Instance);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (;;) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) c(i, j) = c(j, i) = static_cast<double>(rng.next() >> 63);
        if (c.maxCoeff() > 0.0) break;
    }
    return CouplingMatrix(std::move(c), ProblemClass::DenseMaxCut, seed);
}

CouplingMatrix gen_cubic_maxcut(int n, std::uint64_t seed) {
    require_size(n, 4, "cubic maxcut");
    if (n % 2 != 0) throw InvalidInput("cubic maxcut requires an even number of vertices");
    Rng rng(seed, Stream::Instance);
    std::vector<int> points(3 * n);
    Eigen::MatrixXd c(n, n);
    for (;;) {
        std::iota(points.begin(), points.end(), 0);
        // Fisher-Yates shuffle, then pair consecutive points
        for (std::size_t i = points.size() - 1; i > 0; --i)
            std::swap(points[i], points[rng.below(i + 1)]);
        c.setZero();
        bool ok = true;
        for (std::size_t p = 0; p < points.size() && ok; p += 2) {
            const int u = points[p] / 3, v = points[p + 1] / 3;
            if (u == v || c(u, v) != 0.0) ok = false;
            else c(u, v) = c(v, u) = 1.0;
        }
        if (ok) break;
    }
    return CouplingMatrix(std::move(c), ProblemClass::CubicMaxCut, seed);
}

CouplingMatrix generate_instance(ProblemClass cls, int n, std::uint64_t seed) {
    switch (cls) {
    case ProblemClass::SK7: return gen_sk7(n, seed);
    case ProblemClass::DenseMaxCut: return gen_dense_maxcut(n, seed);
    case ProblemClass::CubicMaxCut: return gen_cubic_maxcut(n, seed);
    case ProblemClass::Custom: break;
    }
    throw InvalidInput("custom instances cannot be generated");
}

} // namespace kpo
