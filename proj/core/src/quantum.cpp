#include "kpo/quantum.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include "kpo/errors.hpp"
#include "kpo/rng.hpp"

namespace kpo {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr int kBisections = 4;   // jump times resolved to dt / 16

using Triplet = Eigen::Triplet<std::complex<double>>;

SparseOperator from_triplets(Eigen::Index dim, const std::vector<Triplet>& t) {
    SparseOperator m(dim, dim);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

Eigen::VectorXd phases(const ModulationMatrix& f, double lambda_big, double t) {
    const auto n = f.rows();
    const double theta = std::fmod(lambda_big * t, two_pi);
    Eigen::VectorXd phi = Eigen::VectorXd::LinSpaced(n, 0.0, n - 1.0) * theta;
    for (Eigen::Index k = 0; k < f.cols(); ++k) phi += f.col(k) * std::sin((k + 1) * theta);
    return phi;
}

void check_size(int n, int levels, int limit, bool allow_large, const char* what) {
    if (levels < 2) throw InvalidInput("Fock truncation needs at least two levels");
    if (n > limit && !allow_large)
        throw ResourceLimit(std::string(what) + " quantum runs are limited to N <= " + std::to_string(limit));
}

// Applies a single-mode matrix to one tensor factor.
void apply_mode(const FockSpace& s, int mode, const Eigen::MatrixXd& op, const Eigen::VectorXcd& in,
                Eigen::VectorXcd& out) {
    const Eigen::Index stride = s.stride(mode), m = s.levels();
    const Eigen::Index block = stride * m, blocks = s.dim() / block;
    out.resize(in.size());
    const Eigen::MatrixXcd opt = op.transpose().cast<std::complex<double>>();
    for (Eigen::Index b = 0; b < blocks; ++b) {
        Eigen::Map<const Eigen::MatrixXcd> x(in.data() + b * block, stride, m);
        Eigen::Map<Eigen::MatrixXcd> y(out.data() + b * block, stride, m);
        y.noalias() = x * opt;
    }
}

struct Rk4 {
    Eigen::VectorXcd k1, k2, k3, k4, tmp, hpsi;
};

// d psi / dt = -i H psi - kappa sum_i n_i psi
void drift(const QuantumModel& m, double kappa, double t, const Eigen::VectorXcd& psi, Eigen::VectorXcd& out,
           Rk4& w) {
    m.apply(t, psi, w.hpsi);
    out = std::complex<double>(0.0, -1.0) * w.hpsi;
    if (kappa > 0.0) {
        m.apply_number(psi, w.tmp);
        out -= kappa * w.tmp;
    }
}

Eigen::VectorXcd rk4_step(const QuantumModel& m, double kappa, const Eigen::VectorXcd& psi, double t, double h,
                          Rk4& w) {
    drift(m, kappa, t, psi, w.k1, w);
    drift(m, kappa, t + 0.5 * h, psi + 0.5 * h * w.k1, w.k2, w);
    drift(m, kappa, t + 0.5 * h, psi + 0.5 * h * w.k2, w.k3, w);
    drift(m, kappa, t + h, psi + h * w.k3, w.k4, w);
    return psi + (h / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
}

QuantumModel with_ramp(const QuantumModel& model, const QuantumConfig& cfg) {
    QuantumModel m = model;
    m.set_ramp(cfg.r_max_tilde, cfg.t_ramp_tilde);
    return m;
}

void check_grid(const Eigen::VectorXd& grid) {
    if (grid.size() < 2 || grid(0) != 0.0) throw InvalidInput("time grid must start at zero with two or more points");
    for (Eigen::Index k = 1; k < grid.size(); ++k)
        if (!(grid(k) > grid(k - 1))) throw InvalidInput("time grid must be increasing");
}

Eigen::VectorXcd initial_state(const QuantumModel& m, const Eigen::VectorXcd* psi0) {
    if (!psi0) return m.space().vacuum();
    if (psi0->size() != m.space().dim()) throw InvalidInput("initial state has the wrong dimension");
    const double nrm = psi0->norm();
    if (!(nrm > 0.0)) throw InvalidInput("initial state has zero norm");
    return *psi0 / nrm;
}

void record(QuantumTrajectory& tr, Eigen::Index k, const FockSpace& s, const Eigen::VectorXcd& psi,
            const GroundStateSet& ground, const PositionProjector& proj) {
    const Eigen::VectorXd probs = configuration_probabilities(s, psi.normalized(), proj);
    tr.config_probs.row(k) = probs.transpose();
    tr.success(k) = ground_probability(probs, ground);
}

QuantumTrajectory start(const QuantumModel& m, const Eigen::VectorXd& grid) {
    QuantumTrajectory tr;
    tr.t = grid;
    tr.config_probs.resize(grid.size(), Eigen::Index(1) << m.space().modes());
    tr.success.resize(grid.size());
    return tr;
}

long long substeps(double span, double dt) {
    return std::max<long long>(1, static_cast<long long>(std::ceil(span / dt - 1e-9)));
}

} // namespace

FockSpace::FockSpace(int modes, int levels) : modes_(modes), levels_(levels), dim_(1) {
    if (modes < 1) throw InvalidInput("Fock space needs at least one mode");
    if (levels < 2) throw InvalidInput("Fock truncation needs at least two levels");
    for (int i = 0; i < modes; ++i) {
        strides_.push_back(dim_);
        if (dim_ > (Eigen::Index(1) << 40) / levels) throw ResourceLimit("Fock space dimension overflows");
        dim_ *= levels;
    }
}

Eigen::VectorXcd FockSpace::vacuum() const {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim_);
    v(0) = 1.0;
    return v;
}

Eigen::VectorXcd FockSpace::coherent(const Eigen::VectorXcd& alpha) const {
    if (alpha.size() != modes_) throw InvalidInput("one coherent amplitude per mode expected");
    std::vector<Eigen::VectorXcd> single(modes_);
    for (int i = 0; i < modes_; ++i) {
        Eigen::VectorXcd c(levels_);
        c(0) = 1.0;
        for (int n = 1; n < levels_; ++n) c(n) = c(n - 1) * alpha(i) / std::sqrt(static_cast<double>(n));
        single[i] = c.normalized();
    }
    Eigen::VectorXcd v(dim_);
    for (Eigen::Index k = 0; k < dim_; ++k) {
        std::complex<double> a = 1.0;
        for (int i = 0; i < modes_; ++i) a *= single[i](occupation(k, i));
        v(k) = a;
    }
    return v;
}

SparseOperator FockSpace::annihilation(int mode) const {
    std::vector<Triplet> t;
    for (Eigen::Index k = 0; k < dim_; ++k) {
        const int n = occupation(k, mode);
        if (n > 0) t.emplace_back(k - strides_[mode], k, std::sqrt(static_cast<double>(n)));
    }
    return from_triplets(dim_, t);
}

SparseOperator FockSpace::number(int mode) const {
    std::vector<Triplet> t;
    for (Eigen::Index k = 0; k < dim_; ++k)
        if (const int n = occupation(k, mode)) t.emplace_back(k, k, static_cast<double>(n));
    return from_triplets(dim_, t);
}

QuantumModel::QuantumModel(FockSpace space) : space_(std::move(space)) {
    const int n = space_.modes();
    const Eigen::Index dim = space_.dim();
    total_number_ = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index k = 0; k < dim; ++k)
        for (int i = 0; i < n; ++i) total_number_(k) += space_.occupation(k, i);
    std::vector<Triplet> pt;
    for (int i = 0; i < n; ++i) {
        lowering_.push_back(space_.annihilation(i));
        const Eigen::Index s = space_.stride(i);
        for (Eigen::Index k = 0; k < dim; ++k) {
            const int occ = space_.occupation(k, i);
            if (occ >= 2) {
                const double v = 0.5 * std::sqrt(static_cast<double>(occ) * (occ - 1));
                pt.emplace_back(k - 2 * s, k, v);
                pt.emplace_back(k, k - 2 * s, v);
            }
        }
    }
    pump_ = from_triplets(dim, pt);
}

QuantumModel QuantumModel::static_model(const CouplingMatrix& c, const AnnealerParams& p, int levels,
                                        bool allow_large) {
    const int n = p.n();
    if (c.n() != n) throw InvalidInput("instance size does not match the parameter bundle");
    check_size(n, levels, kMaxStaticQuantumModes, allow_large, "static");
    QuantumModel m{FockSpace(n, levels)};
    m.r_max_ = p.r_max_tilde;
    m.t_ramp_ = p.t_ramp_tilde;
    m.j_ = p.lambda_c_tilde * c.entries();
    m.j_.diagonal().setZero();

    const auto& s = m.space_;
    std::vector<Triplet> t;
    m.diagonal_ = Eigen::VectorXd::Zero(s.dim());
    for (Eigen::Index k = 0; k < s.dim(); ++k) {
        double d = 0.0;
        for (int i = 0; i < n; ++i) {
            const int occ = s.occupation(k, i);
            d -= p.delta_tilde(i) * occ + 0.5 * occ * (occ - 1);
        }
        m.diagonal_(k) = d;
        if (d != 0.0) t.emplace_back(k, k, d);
    }
    // - K_ij a_i' a_j
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j || m.j_(i, j) == 0.0) continue;
            for (Eigen::Index k = 0; k < s.dim(); ++k) {
                const int nj = s.occupation(k, j), ni = s.occupation(k, i);
                if (nj == 0 || ni + 1 >= s.levels()) continue;
                const Eigen::Index to = k - s.stride(j) + s.stride(i);
                t.emplace_back(to, k, -m.j_(i, j) * std::sqrt(static_cast<double>(nj) * (ni + 1)));
            }
        }
    m.fixed_ = from_triplets(s.dim(), t);
    return m;
}

QuantumModel QuantumModel::dynamical_model(const AnnealerParams& p, const ModulationMatrix& f, int levels,
                                           bool allow_large) {
    const int n = p.n();
    if (f.rows() != n || f.cols() != std::max(n - 1, 0)) throw InvalidInput("modulation matrix has the wrong shape");
    if (!(p.lambda_big_tilde > 0.0)) throw InvalidInput("Floquet frequency must be positive");
    check_size(n, levels, kMaxDynamicalQuantumModes, allow_large, "dynamical");
    QuantumModel m{FockSpace(n, levels)};
    m.dynamical_ = true;
    m.lambda_big_ = p.lambda_big_tilde;
    m.r_max_ = p.r_max_tilde;
    m.t_ramp_ = p.t_ramp_tilde;
    m.j_ = p.j_tilde;
    m.j_.diagonal().setZero();
    m.f_ = f;

    const auto& s = m.space_;
    std::vector<Triplet> t;
    m.diagonal_ = Eigen::VectorXd::Zero(s.dim());
    for (Eigen::Index k = 0; k < s.dim(); ++k) {
        double d = 0.0;
        for (int i = 0; i < n; ++i) {
            const int occ = s.occupation(k, i);
            d -= p.delta_tilde(i) * occ + 0.5 * occ * (occ - 1);
        }
        m.diagonal_(k) = d;
        if (d != 0.0) t.emplace_back(k, k, d);
    }
    m.fixed_ = from_triplets(s.dim(), t);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            m.pairs_.emplace_back(i, j);
            m.hop_.push_back(SparseOperator(SparseOperator(m.lowering_[i].adjoint()) * m.lowering_[j]));
        }
    return m;
}

double QuantumModel::pump(double t) const {
    if (t <= 0.0) return 0.0;
    return r_max_ * std::min(t / t_ramp_, 1.0);
}

void QuantumModel::set_ramp(double r_max, double t_ramp) {
    if (!(r_max >= 0.0) || !(t_ramp > 0.0)) throw InvalidInput("invalid pump ramp");
    r_max_ = r_max;
    t_ramp_ = t_ramp;
}

std::complex<double> QuantumModel::coupling(int i, int j, double t) const {
    if (!dynamical_) return j_(i, j);
    const Eigen::VectorXd phi = phases(f_, lambda_big_, t);
    return j_(i, j) * std::polar(1.0, -(phi(i) - phi(j)));
}

SparseOperator QuantumModel::hamiltonian(double t) const {
    SparseOperator h = fixed_;
    if (const double r = pump(t); r != 0.0) h += r * pump_;
    if (dynamical_) {
        const Eigen::VectorXd phi = phases(f_, lambda_big_, t);
        for (std::size_t q = 0; q < pairs_.size(); ++q) {
            const auto [i, j] = pairs_[q];
            const std::complex<double> k = j_(i, j) * std::polar(1.0, -(phi(i) - phi(j)));
            h -= k * hop_[q];
            h -= std::conj(k) * SparseOperator(hop_[q].adjoint());
        }
    }
    return h;
}

void QuantumModel::apply(double t, const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const {
    out.noalias() = fixed_ * psi;
    const double r = pump(t);
    if (r != 0.0) out.noalias() += r * (pump_ * psi);
    if (dynamical_) {
        const Eigen::VectorXd phi = phases(f_, lambda_big_, t);
        for (std::size_t q = 0; q < pairs_.size(); ++q) {
            const auto [i, j] = pairs_[q];
            const std::complex<double> k = j_(i, j) * std::polar(1.0, -(phi(i) - phi(j)));
            out.noalias() -= k * (hop_[q] * psi);
            out.noalias() -= std::conj(k) * (hop_[q].adjoint() * psi);
        }
    }
}

void QuantumModel::apply_number(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const {
    out = total_number_.cast<std::complex<double>>().cwiseProduct(psi);
}

Eigen::MatrixXd fock_wavefunctions(const Eigen::VectorXd& x, int levels) {
    Eigen::MatrixXd psi(x.size(), levels);
    const double norm0 = std::pow(2.0, 0.25) * std::pow(std::numbers::pi, -0.25);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double y = std::sqrt(2.0) * x(k);
        double prev = 0.0, cur = norm0 * std::exp(-0.5 * y * y);
        for (int n = 0; n < levels; ++n) {
            psi(k, n) = cur;
            const double next = std::sqrt(2.0 / (n + 1)) * y * cur - std::sqrt(static_cast<double>(n) / (n + 1)) * prev;
            prev = cur;
            cur = next;
        }
    }
    return psi;
}

PositionProjector make_projectors(int levels, double x_max, int points) {
    if (levels < 1 || points < 1 || !(x_max > 0.0)) throw InvalidInput("invalid projector discretization");
    PositionProjector p;
    p.x_max = x_max;
    p.points = points;
    const double dx = x_max / points;
    Eigen::VectorXd mid(points);
    for (int k = 0; k < points; ++k) mid(k) = (k + 0.5) * dx;
    const Eigen::MatrixXd up = fock_wavefunctions(mid, levels);
    const Eigen::MatrixXd down = fock_wavefunctions(-mid, levels);
    p.plus = dx * up.transpose() * up;
    p.minus = dx * down.transpose() * down;
    return p;
}

Eigen::VectorXd configuration_probabilities(const FockSpace& space, const Eigen::VectorXcd& psi,
                                            const PositionProjector& proj) {
    if (psi.size() != space.dim()) throw InvalidInput("state has the wrong dimension");
    if (proj.plus.rows() != space.levels()) throw InvalidInput("projector truncation does not match the state");
    const int n = space.modes();
    // branch on one mode at a time; leaf `code` carries prod_i Pi_{sigma_i} psi
    std::vector<Eigen::VectorXcd> level{psi}, next;
    std::vector<std::uint64_t> codes{0}, next_codes;
    for (int i = 0; i < n; ++i) {
        next.clear();
        next_codes.clear();
        for (std::size_t q = 0; q < level.size(); ++q) {
            Eigen::VectorXcd a, b;
            apply_mode(space, i, proj.plus, level[q], a);
            apply_mode(space, i, proj.minus, level[q], b);
            next.push_back(std::move(a));
            next_codes.push_back(codes[q]);
            next.push_back(std::move(b));
            next_codes.push_back(codes[q] | (std::uint64_t(1) << i));
        }
        level.swap(next);
        codes.swap(next_codes);
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(1) << n);
    for (std::size_t q = 0; q < level.size(); ++q) out(static_cast<Eigen::Index>(codes[q])) = psi.dot(level[q]).real();
    return out;
}

double configuration_probability(const FockSpace& space, const Eigen::VectorXcd& psi, const SpinConfiguration& sigma,
                                 const PositionProjector& proj) {
    if (static_cast<int>(sigma.size()) != space.modes()) throw InvalidInput("spin configuration has the wrong size");
    if (proj.plus.rows() != space.levels()) throw InvalidInput("projector truncation does not match the state");
    Eigen::VectorXcd cur = psi, tmp;
    for (int i = 0; i < space.modes(); ++i) {
        apply_mode(space, i, sigma[i] > 0 ? proj.plus : proj.minus, cur, tmp);
        cur.swap(tmp);
    }
    return psi.dot(cur).real();
}

double ground_probability(const Eigen::VectorXd& config_probs, const GroundStateSet& ground) {
    double p = 0.0;
    for (auto code : ground.codes) {
        if (static_cast<Eigen::Index>(code) >= config_probs.size()) throw InvalidInput("ground state outside the configuration range");
        p += config_probs(static_cast<Eigen::Index>(code));
    }
    return p;
}

Eigen::VectorXd fold_flips(const Eigen::VectorXd& config_probs, int n) {
    if (n < 1 || config_probs.size() != (Eigen::Index(1) << n)) throw InvalidInput("configuration vector has the wrong size");
    const std::uint64_t mask = (std::uint64_t(1) << n) - 1, top = std::uint64_t(1) << (n - 1);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(1) << (n - 1));
    for (std::uint64_t c = 0; c <= mask; ++c) out(static_cast<Eigen::Index>((c & top) ? c ^ mask : c)) += config_probs(c);
    return out;
}

double QuantumConfig::dynamical_step(double lambda_big_tilde) const {
    if (!(lambda_big_tilde > 0.0)) throw InvalidInput("Floquet frequency must be positive");
    const double period = two_pi / lambda_big_tilde;
    if (dt_dynamical == 0.0) return period / 40.0;
    if (!(dt_dynamical > 0.0) || dt_dynamical > period / 20.0)
        throw InvalidInput("dynamical step must resolve the Floquet period (at most 1/20 of it)");
    return dt_dynamical;
}

void QuantumConfig::validate() const {
    if (!(kappa_tilde >= 0.0)) throw InvalidInput("loss rate must be non-negative");
    if (n_traj < 1) throw InvalidInput("need at least one trajectory");
    if (!(t_ramp_tilde > 0.0)) throw InvalidInput("ramp time must be positive");
    if (t_final_tilde != 0.0 && !(t_final_tilde >= t_ramp_tilde))
        throw InvalidInput("final time must not end before the ramp");
    if (!(r_max_tilde >= 0.0)) throw InvalidInput("pump amplitude must be non-negative");
    if (!(dt_static > 0.0)) throw InvalidInput("static step must be positive");
    if (dt_dynamical < 0.0) throw InvalidInput("dynamical step must be non-negative");
    if (levels < 2) throw InvalidInput("Fock truncation needs at least two levels");
    if (samples < 2) throw InvalidInput("need at least two recorded time points");
    if (!(norm_guard > 0.0)) throw InvalidInput("norm guard must be positive");
    if (threads < 0) throw InvalidInput("thread count must be non-negative");
}

QuantumConfig quantum_config(const AnnealerParams& p, int n_traj, std::uint64_t seed) {
    QuantumConfig cfg;
    cfg.kappa_tilde = p.kappa_tilde;
    cfg.n_traj = n_traj;
    cfg.seed = seed;
    cfg.t_ramp_tilde = p.t_ramp_tilde;
    cfg.r_max_tilde = p.r_max_tilde;
    cfg.validate();
    return cfg;
}

Eigen::VectorXd quantum_time_grid(const QuantumConfig& cfg, double lambda_big_tilde) {
    cfg.validate();
    Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(cfg.samples, 0.0, cfg.t_final());
    if (!cfg.stroboscopic) return g;
    if (!(lambda_big_tilde > 0.0)) throw InvalidInput("Floquet frequency must be positive");
    const double period = two_pi / lambda_big_tilde;
    for (Eigen::Index k = 0; k < g.size(); ++k) g(k) = period * std::round(g(k) / period);
    for (Eigen::Index k = 1; k < g.size(); ++k)
        if (!(g(k) > g(k - 1))) throw InvalidInput("more recorded times than Floquet periods");
    return g;
}

QuantumTrajectory schrodinger_evolve(const QuantumModel& model, const QuantumConfig& cfg, const Eigen::VectorXd& grid,
                                     double dt, const GroundStateSet& ground, const PositionProjector& proj,
                                     const Eigen::VectorXcd* psi0) {
    cfg.validate();
    check_grid(grid);
    if (!(dt > 0.0)) throw InvalidInput("time step must be positive");
    const QuantumModel m = with_ramp(model, cfg);
    QuantumTrajectory tr = start(m, grid);
    Eigen::VectorXcd psi = initial_state(m, psi0);
    Rk4 w;
    record(tr, 0, m.space(), psi, ground, proj);
    for (Eigen::Index k = 1; k < grid.size(); ++k) {
        const long long steps = substeps(grid(k) - grid(k - 1), dt);
        const double h = (grid(k) - grid(k - 1)) / steps;
        for (long long s = 0; s < steps; ++s) {
            const double t = grid(k - 1) + s * h;
            psi = rk4_step(m, 0.0, psi, t, h, w);
            const double nrm = psi.norm();
            const double err = std::abs(nrm - 1.0);
            if (!(err <= cfg.norm_guard))
                throw NumericalFailure("norm drift " + std::to_string(err) + " in one step at t = " + std::to_string(t) +
                                       "; reduce the time step");
            tr.max_norm_error = std::max(tr.max_norm_error, err);
            psi /= nrm;
        }
        record(tr, k, m.space(), psi, ground, proj);
    }
    tr.final_state = psi;
    return tr;
}

QuantumTrajectory jump_trajectory(const QuantumModel& model, const QuantumConfig& cfg, const Eigen::VectorXd& grid,
                                  double dt, const GroundStateSet& ground, const PositionProjector& proj,
                                  std::uint64_t traj_index, const Eigen::VectorXcd* psi0) {
    if (cfg.kappa_tilde == 0.0) return schrodinger_evolve(model, cfg, grid, dt, ground, proj, psi0);
    cfg.validate();
    check_grid(grid);
    if (!(dt > 0.0)) throw InvalidInput("time step must be positive");
    const QuantumModel m = with_ramp(model, cfg);
    const double kappa = cfg.kappa_tilde;
    QuantumTrajectory tr = start(m, grid);
    Rng rng(cfg.seed, Stream::QuantumJump, traj_index);
    Eigen::VectorXcd psi = initial_state(m, psi0);
    double threshold = rng.uniform();
    double t = 0.0;
    Rk4 w;

    auto jump = [&](double when) {
        const int n = m.space().modes();
        std::vector<Eigen::VectorXcd> out(n);
        Eigen::VectorXd weight(n);
        for (int i = 0; i < n; ++i) {
            out[i] = m.annihilation(i) * psi;
            weight(i) = out[i].squaredNorm();
        }
        const double total = weight.sum();
        if (!(total > 0.0)) throw NumericalFailure("jump requested from the vacuum");
        double u = rng.uniform() * total;
        int mode = n - 1;
        for (int i = 0; i < n; ++i) {
            if (u < weight(i)) {
                mode = i;
                break;
            }
            u -= weight(i);
        }
        psi = out[mode] / std::sqrt(weight(mode));
        tr.jump_times.push_back(when);
        tr.jump_modes.push_back(mode);
        threshold = rng.uniform();
    };

    // advance to `target`; the squared norm decays until it crosses the threshold
    auto advance = [&](double target) {
        while (target - t > 1e-12 * std::max(1.0, target)) {
            const double h = target - t;
            Eigen::VectorXcd trial = rk4_step(m, kappa, psi, t, h, w);
            if (!trial.allFinite()) throw NumericalFailure("quantum trajectory diverged at t = " + std::to_string(t));
            if (trial.squaredNorm() >= threshold) {
                psi = std::move(trial);
                t = target;
                continue;
            }
            Eigen::VectorXcd lo = psi;
            double lo_t = t, width = h;
            for (int b = 0; b < kBisections; ++b) {
                width *= 0.5;
                Eigen::VectorXcd mid = rk4_step(m, kappa, lo, lo_t, width, w);
                if (mid.squaredNorm() >= threshold) {
                    lo = std::move(mid);
                    lo_t += width;
                }
            }
            psi = rk4_step(m, kappa, lo, lo_t, width, w);
            t = lo_t + width;
            jump(t);
        }
        t = target;
    };

    record(tr, 0, m.space(), psi, ground, proj);
    for (Eigen::Index k = 1; k < grid.size(); ++k) {
        const long long steps = substeps(grid(k) - grid(k - 1), dt);
        const double h = (grid(k) - grid(k - 1)) / steps;
        for (long long s = 1; s <= steps; ++s) advance(s == steps ? grid(k) : grid(k - 1) + s * h);
        record(tr, k, m.space(), psi, ground, proj);
    }
    tr.final_state = psi.normalized();
    return tr;
}

QuantumEnsemble run_quantum(const QuantumModel& model, const QuantumConfig& cfg, const Eigen::VectorXd& grid,
                            double dt, const GroundStateSet& ground) {
    cfg.validate();
    const int m = cfg.trajectories();
    const auto proj = make_projectors(model.space().levels());
    std::vector<QuantumTrajectory> runs(m);
    int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, m);
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(threads);
    auto worker = [&](int id) {
        try {
            for (int q = next++; q < m; q = next++)
                runs[q] = jump_trajectory(model, cfg, grid, dt, ground, proj, static_cast<std::uint64_t>(q));
        } catch (...) {
            errors[id] = std::current_exception();
            next = m;
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int id = 0; id < threads; ++id) pool.emplace_back(worker, id);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    QuantumEnsemble ens;
    ens.t = grid;
    ens.dt = dt;
    ens.per_trajectory.resize(grid.size(), m);
    ens.config_probs = Eigen::MatrixXd::Zero(grid.size(), runs[0].config_probs.cols());
    for (int q = 0; q < m; ++q) {
        ens.per_trajectory.col(q) = runs[q].success;
        ens.config_probs += runs[q].config_probs;
        ens.jumps.push_back(static_cast<int>(runs[q].jump_times.size()));
    }
    ens.config_probs /= m;
    ens.p = ens.per_trajectory.rowwise().mean();
    ens.sem = Eigen::VectorXd::Zero(grid.size());
    if (m > 1)
        for (Eigen::Index k = 0; k < grid.size(); ++k) {
            const double var = (ens.per_trajectory.row(k).array() - ens.p(k)).square().sum() / (m - 1);
            ens.sem(k) = std::sqrt(var / m);
        }
    return ens;
}

QuantumPaired quantum_paired_run(const CouplingMatrix& c, const AnnealerParams& p, const ModulationMatrix& f,
                                 const QuantumConfig& cfg, const GroundStateSet& ground) {
    const auto grid = quantum_time_grid(cfg, p.lambda_big_tilde);
    const auto st = QuantumModel::static_model(c, p, cfg.levels, cfg.allow_large);
    const auto dy = QuantumModel::dynamical_model(p, f, cfg.levels, cfg.allow_large);
    QuantumPaired out;
    out.static_run = run_quantum(st, cfg, grid, cfg.dt_static, ground);
    out.dynamical_run = run_quantum(dy, cfg, grid, cfg.dynamical_step(p.lambda_big_tilde), ground);
    return out;
}

PhaseSpaceDensity position_momentum_density(const FockSpace& space, const Eigen::VectorXcd& psi,
                                            const Eigen::VectorXd& grid) {
    if (space.modes() != 2) throw InvalidInput("phase-space densities are defined for two modes");
    if (psi.size() != space.dim()) throw InvalidInput("state has the wrong dimension");
    const int m = space.levels();
    const Eigen::Map<const Eigen::MatrixXcd> coeff(psi.data(), m, m);   // (n0, n1)
    const Eigen::MatrixXcd phi = fock_wavefunctions(grid, m).cast<std::complex<double>>();
    Eigen::VectorXcd turn(m);
    for (int n = 0; n < m; ++n) turn(n) = std::pow(std::complex<double>(0.0, -1.0), n);
    const Eigen::MatrixXcd phi_p = phi * turn.asDiagonal();
    PhaseSpaceDensity d;
    d.grid = grid;
    d.position = (phi * coeff * phi.transpose()).cwiseAbs2();
    d.momentum = (phi_p * coeff * phi_p.transpose()).cwiseAbs2();
    return d;
}

} // namespace kpo
