#include "kpo/classical.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "kpo/errors.hpp"
#include "kpo/rng.hpp"

namespace kpo {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
// trajectories per work item; fixed so results do not depend on the thread count
constexpr int kChunk = 128;

using IndicatorMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

Eigen::MatrixXd zero_diagonal(Eigen::MatrixXd m) {
    m.diagonal().setZero();
    return m;
}

// Batches are held as real n x 2B blocks [Re | Im] so the coupling is a single
// real product.
struct Workspace {
    Eigen::VectorXd sines, cos_phi, sin_phi;
    Eigen::MatrixXd rotated, field, k1, k2, k3, k4, tmp;
};

Eigen::MatrixXd to_split(const Eigen::MatrixXcd& a) {
    Eigen::MatrixXd x(a.rows(), 2 * a.cols());
    x.leftCols(a.cols()) = a.real();
    x.rightCols(a.cols()) = a.imag();
    return x;
}

Eigen::MatrixXcd from_split(const Eigen::MatrixXd& x) {
    const auto b = x.cols() / 2;
    Eigen::MatrixXcd a(x.rows(), b);
    a.real() = x.leftCols(b);
    a.imag() = x.rightCols(b);
    return a;
}

// cos and sin of phi_p = p theta + sum_k F_pk sin(k theta), theta = Lambda t mod 2 pi
void floquet_phases(const ClassicalSystem& sys, double t, Workspace& w) {
    const int n = sys.n();
    const double theta = std::fmod(sys.lambda_big * t, two_pi);
    const auto kmax = sys.f.cols();
    Eigen::VectorXd& phi = w.cos_phi;
    phi = Eigen::VectorXd::LinSpaced(n, 0.0, n - 1.0) * theta;
    if (kmax > 0) {
        // sin(k theta) by the Chebyshev recursion
        w.sines.resize(kmax);
        const double c2 = 2.0 * std::cos(theta);
        double prev = 0.0, cur = std::sin(theta);
        for (Eigen::Index k = 0; k < kmax; ++k) {
            w.sines(k) = cur;
            const double next = c2 * cur - prev;
            prev = cur;
            cur = next;
        }
        phi.noalias() += sys.f * w.sines;
    }
    w.sin_phi = phi.array().sin();
    w.cos_phi = phi.array().cos();
}

void rhs(const ClassicalSystem& sys, const Eigen::MatrixXd& x, double t, Eigen::MatrixXd& out, Workspace& w) {
    const double r = sys.pump(t), kappa = sys.kappa;
    const auto n = x.rows(), b = x.cols() / 2;
    out.resize(n, 2 * b);
    if (sys.dynamical) {
        floquet_phases(sys, t, w);
        const auto c = w.cos_phi.asDiagonal();
        const auto s = w.sin_phi.asDiagonal();
        // e^{i phi} alpha, coupling, then e^{-i phi} back
        w.rotated.resize(n, 2 * b);
        w.rotated.leftCols(b) = c * x.leftCols(b) - s * x.rightCols(b);
        w.rotated.rightCols(b) = s * x.leftCols(b) + c * x.rightCols(b);
        w.tmp.noalias() = sys.coupling * w.rotated;
        w.field.resize(n, 2 * b);
        w.field.leftCols(b) = c * w.tmp.leftCols(b) + s * w.tmp.rightCols(b);
        w.field.rightCols(b) = c * w.tmp.rightCols(b) - s * w.tmp.leftCols(b);
    } else {
        w.field.noalias() = sys.coupling * x;
    }
    for (Eigen::Index col = 0; col < b; ++col)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double xr = x(i, col), xi = x(i, b + col);
            const double wgt = sys.delta(i) + xr * xr + xi * xi;
            // term = (delta + |x|^2) x - r conj(x) + field; out = -kappa x + i term
            const double tr = (wgt - r) * xr + w.field(i, col);
            const double ti = (wgt + r) * xi + w.field(i, b + col);
            out(i, col) = -kappa * xr - ti;
            out(i, b + col) = -kappa * xi + tr;
        }
}

void rk4_step(const ClassicalSystem& sys, Eigen::MatrixXd& x, double t, double dt, Workspace& w) {
    Eigen::MatrixXd& y = w.k4;
    rhs(sys, x, t, w.k1, w);
    y = x + 0.5 * dt * w.k1;
    rhs(sys, y, t + 0.5 * dt, w.k2, w);
    y = x + 0.5 * dt * w.k2;
    rhs(sys, y, t + 0.5 * dt, w.k3, w);
    y = x + dt * w.k3;
    w.k1 += 2.0 * (w.k2 + w.k3);
    rhs(sys, y, t + dt, w.k2, w);
    x += (dt / 6.0) * (w.k1 + w.k2);
}

ClassicalSystem prepared(ClassicalSystem sys) {
    if (sys.n() == 0) throw InvalidInput("empty classical system");
    if (sys.coupling.rows() != sys.n() || sys.coupling.cols() != sys.n())
        throw InvalidInput("coupling matrix does not match the detunings");
    if (!(sys.t_ramp > 0.0)) throw InvalidInput("ramp time must be positive");
    if (sys.kappa < 0.0) throw InvalidInput("loss rate must be non-negative");
    if (sys.dynamical) {
        if (!(sys.lambda_big > 0.0)) throw InvalidInput("Floquet frequency must be positive");
        if (sys.f.rows() != sys.n()) throw InvalidInput("modulation matrix has the wrong row count");
    }
    sys.coupling.diagonal().setZero();
    return sys;
}

// Integrates a batch over the recording grid, filling indicator columns
// [col0, col0 + batch) and leaving the final state in `a`.
void integrate_batch(const ClassicalSystem& sys, Eigen::MatrixXcd& a, const Eigen::VectorXd& grid, double dt,
                     const GroundStateSet* ground, IndicatorMatrix* ind, Eigen::Index col0,
                     ClassicalTrajectory* trace) {
    Workspace w;
    Eigen::MatrixXd x = to_split(a);
    const auto b = a.cols();
    auto record = [&](Eigen::Index k) {
        if (ground && ind)
            for (Eigen::Index c = 0; c < b; ++c) {
                std::uint64_t bits = 0;
                for (Eigen::Index i = 0; i < x.rows(); ++i)
                    if (x(i, c) < 0.0) bits |= std::uint64_t(1) << i;
                (*ind)(k, col0 + c) = ground->contains_code(bits) ? 1 : 0;
            }
        if (trace) {
            Eigen::VectorXcd v(x.rows());
            v.real() = x.col(0);
            v.imag() = x.col(b);
            if (ground) trace->success.push_back(ground->contains_code(readout_code(v)) ? 1 : 0);
            trace->amplitudes.push_back(std::move(v));
        }
    };
    record(0);
    for (Eigen::Index k = 1; k < grid.size(); ++k) {
        const double span = grid(k) - grid(k - 1);
        const auto steps = std::max<long long>(1, static_cast<long long>(std::ceil(span / dt - 1e-9)));
        const double h = span / steps;
        for (long long s = 0; s < steps; ++s) {
            rk4_step(sys, x, grid(k - 1) + s * h, h, w);
            if (!x.allFinite())
                throw NumericalFailure("classical trajectory diverged at t = " + std::to_string(grid(k - 1) + (s + 1) * h));
        }
        record(k);
    }
    a = from_split(x);
}

Eigen::VectorXd recording_grid(double t_final, int samples) {
    if (samples < 2) throw InvalidInput("need at least two recorded time points");
    if (!(t_final > 0.0)) throw InvalidInput("final time must be positive");
    return Eigen::VectorXd::LinSpaced(samples, 0.0, t_final);
}

} // namespace

double ClassicalConfig::dynamical_step(double lambda_big_tilde) const {
    if (!(lambda_big_tilde > 0.0)) throw InvalidInput("Floquet frequency must be positive");
    const double period = two_pi / lambda_big_tilde;
    if (dt_dynamical == 0.0) return period / 40.0;
    if (!(dt_dynamical > 0.0) || dt_dynamical > period / 20.0)
        throw InvalidInput("dynamical step must resolve the Floquet period (at most 1/20 of it)");
    return dt_dynamical;
}

void ClassicalConfig::validate() const {
    if (n_traj < 1) throw InvalidInput("need at least one trajectory");
    if (!(n0 >= 0.0)) throw InvalidInput("initial occupation must be non-negative");
    if (!(t_ramp_tilde > 0.0)) throw InvalidInput("ramp time must be positive");
    if (t_final_tilde != 0.0 && !(t_final_tilde >= t_ramp_tilde))
        throw InvalidInput("final time must not end before the ramp");
    if (!(r_max_tilde >= 0.0)) throw InvalidInput("pump amplitude must be non-negative");
    if (!(kappa_tilde >= 0.0)) throw InvalidInput("loss rate must be non-negative");
    if (!(dt_static > 0.0)) throw InvalidInput("static step must be positive");
    if (dt_dynamical < 0.0) throw InvalidInput("dynamical step must be non-negative");
    if (samples < 2) throw InvalidInput("need at least two recorded time points");
    if (threads < 0) throw InvalidInput("thread count must be non-negative");
}

ClassicalConfig classical_config(const AnnealerParams& p, int n_traj, std::uint64_t seed) {
    ClassicalConfig cfg;
    cfg.n_traj = n_traj;
    cfg.seed = seed;
    cfg.t_ramp_tilde = p.t_ramp_tilde;
    cfg.r_max_tilde = p.r_max_tilde;
    cfg.kappa_tilde = p.kappa_tilde;
    cfg.validate();
    return cfg;
}

double ClassicalSystem::pump(double t) const {
    if (t <= 0.0) return 0.0;
    return r_max * std::min(t / t_ramp, 1.0);
}

ClassicalSystem static_system(const CouplingMatrix& c, const AnnealerParams& p, const ClassicalConfig& cfg) {
    if (c.n() != p.n()) throw InvalidInput("instance size does not match the parameter bundle");
    ClassicalSystem s;
    s.delta = p.delta_tilde;
    s.coupling = zero_diagonal(p.lambda_c_tilde * c.entries());
    s.kappa = cfg.kappa_tilde;
    s.r_max = cfg.r_max_tilde;
    s.t_ramp = cfg.t_ramp_tilde;
    return prepared(std::move(s));
}

ClassicalSystem dynamical_system(const AnnealerParams& p, const ModulationMatrix& f, const ClassicalConfig& cfg) {
    if (f.rows() != p.n() || f.cols() != std::max(p.n() - 1, 0))
        throw InvalidInput("modulation matrix has the wrong shape");
    ClassicalSystem s;
    s.delta = p.delta_tilde;
    s.coupling = zero_diagonal(p.j_tilde);
    s.kappa = cfg.kappa_tilde;
    s.r_max = cfg.r_max_tilde;
    s.t_ramp = cfg.t_ramp_tilde;
    s.dynamical = true;
    s.lambda_big = p.lambda_big_tilde;
    s.f = f;
    return prepared(std::move(s));
}

Eigen::VectorXcd sample_initial(const ClassicalConfig& cfg, int n, std::uint64_t traj_index) {
    Rng rng(cfg.seed, Stream::InitialCondition, traj_index);
    const double scale = std::sqrt(cfg.n0 / 2.0);
    Eigen::VectorXcd a(n);
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        const double u = rng.uniform();
        a(i) = std::polar(scale * z, two_pi * u);
    }
    return a;
}

void eom_rhs(const ClassicalSystem& sys, const Eigen::MatrixXcd& alpha, double t, Eigen::MatrixXcd& out) {
    Workspace w;
    const ClassicalSystem s = prepared(sys);
    if (alpha.rows() != s.n()) throw InvalidInput("state has the wrong size");
    Eigen::MatrixXd y;
    rhs(s, to_split(alpha), t, y, w);
    out = from_split(y);
}

Eigen::VectorXcd eom_rhs(const ClassicalSystem& sys, const Eigen::VectorXcd& alpha, double t) {
    Eigen::MatrixXcd out;
    eom_rhs(sys, Eigen::MatrixXcd(alpha), t, out);
    return out.col(0);
}

std::uint64_t readout_code(const Eigen::VectorXcd& alpha) {
    if (alpha.size() > 64) throw InvalidInput("readout code supports at most 64 oscillators");
    std::uint64_t bits = 0;
    for (Eigen::Index i = 0; i < alpha.size(); ++i)
        if (alpha(i).real() < 0.0) bits |= std::uint64_t(1) << i;
    return bits;
}

ClassicalTrajectory integrate(const ClassicalSystem& sys, const Eigen::VectorXcd& alpha0, double dt, double t_final,
                              int samples, const GroundStateSet* ground) {
    const ClassicalSystem s = prepared(sys);
    if (alpha0.size() != s.n()) throw InvalidInput("initial state has the wrong size");
    if (!(dt > 0.0)) throw InvalidInput("time step must be positive");
    ClassicalTrajectory tr;
    tr.t = recording_grid(t_final, samples);
    Eigen::MatrixXcd a = alpha0;
    integrate_batch(s, a, tr.t, dt, ground, nullptr, 0, &tr);
    return tr;
}

SuccessSeries success_probability(const Eigen::VectorXd& t, const IndicatorMatrix& indicators) {
    if (indicators.rows() != t.size() || indicators.cols() < 1)
        throw InvalidInput("indicator matrix does not match the time grid");
    const double m = static_cast<double>(indicators.cols());
    SuccessSeries s;
    s.t = t;
    s.p.resize(t.size());
    s.sem.resize(t.size());
    for (Eigen::Index k = 0; k < t.size(); ++k) {
        const double p = indicators.row(k).cast<double>().sum() / m;
        s.p(k) = p;
        s.sem(k) = m > 1.0 ? std::sqrt(p * (1.0 - p) / (m - 1.0)) : 0.0;
    }
    return s;
}

EnsembleResult run_ensemble(const ClassicalSystem& sys, const ClassicalConfig& cfg, double dt,
                            const GroundStateSet& ground) {
    cfg.validate();
    const ClassicalSystem s = prepared(sys);
    if (!(dt > 0.0)) throw InvalidInput("time step must be positive");
    const int n = s.n();
    const int m = cfg.n_traj;

    EnsembleResult res;
    res.dt = dt;
    const Eigen::VectorXd grid = recording_grid(cfg.t_final(), cfg.samples);
    res.initial.resize(n, m);
    for (int c = 0; c < m; ++c) res.initial.col(c) = sample_initial(cfg, n, static_cast<std::uint64_t>(c));
    res.final = res.initial;
    IndicatorMatrix ind(grid.size(), m);

    const int chunks = (m + kChunk - 1) / kChunk;
    int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, chunks);
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(threads);

    auto worker = [&](int id) {
        try {
            for (int ch = next++; ch < chunks; ch = next++) {
                const int c0 = ch * kChunk;
                const int width = std::min(kChunk, m - c0);
                Eigen::MatrixXcd a = res.initial.middleCols(c0, width);
                ClassicalTrajectory* trace = (ch == 0 && cfg.keep_trace) ? &res.trace : nullptr;
                integrate_batch(s, a, grid, dt, &ground, &ind, c0, trace);
                res.final.middleCols(c0, width) = a;
            }
        } catch (...) {
            errors[id] = std::current_exception();
            next = chunks;
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

    if (cfg.keep_trace) res.trace.t = grid;
    res.series = success_probability(grid, ind);
    return res;
}

PairedResult paired_run(const CouplingMatrix& c, const AnnealerParams& p, const ModulationMatrix& f,
                        const ClassicalConfig& cfg, const GroundStateSet& ground) {
    PairedResult out;
    out.static_run = run_ensemble(static_system(c, p, cfg), cfg, cfg.dt_static, ground);
    out.dynamical_run = run_ensemble(dynamical_system(p, f, cfg), cfg, cfg.dynamical_step(p.lambda_big_tilde), ground);
    return out;
}

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidInput("correlation needs two equal-length series");
    const auto n = static_cast<Eigen::Index>(x.size());
    const Eigen::Map<const Eigen::VectorXd> a(x.data(), n), b(y.data(), n);
    const Eigen::VectorXd da = a.array() - a.mean(), db = b.array() - b.mean();
    const double den = da.norm() * db.norm();
    if (!(den > 0.0)) throw InvalidInput("correlation undefined for a constant series");
    return da.dot(db) / den;
}

} // namespace kpo
