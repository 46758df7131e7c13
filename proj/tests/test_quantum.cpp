#include "doctest.h"

#include <cmath>
#include <numbers>

#include "kpo/errors.hpp"
#include "kpo/quantum.hpp"
#include "kpo/rng.hpp"

using namespace kpo;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

AnnealerParams bare_params(int n) {
    AnnealerParams p;
    p.delta_tilde = Eigen::VectorXd::Zero(n);
    p.lambda_c_tilde = 0.0;
    p.r_max_tilde = 0.0;
    p.t_ramp_tilde = 1.0;
    return p;
}

CouplingMatrix zero_instance(int n) {
    return CouplingMatrix(Eigen::MatrixXd::Zero(n, n), ProblemClass::Custom);
}

CouplingMatrix antiferro_pair() {
    Eigen::MatrixXd c(2, 2);
    c << 0, 1, 1, 0;
    return CouplingMatrix(c, ProblemClass::SK7);
}

double max_abs(const SparseOperator& m) {
    double v = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseOperator::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
    return v;
}

Eigen::VectorXcd random_low_state(const FockSpace& s, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXcd v(s.dim());
    for (Eigen::Index k = 0; k < s.dim(); ++k) {
        int total = 0;
        for (int m = 0; m < s.modes(); ++m) total += s.occupation(k, m);
        const double w = std::exp(-0.5 * total);
        v(k) = w * std::complex<double>(rng.normal(), rng.normal());
    }
    return v.normalized();
}

// N = 2 model with a nontrivial design
struct PairSetup {
    CouplingMatrix c = antiferro_pair();
    AnnealerParams p;
    ModulationMatrix f;
    PairSetup() {
        p = prescribe(c, ProblemClass::SK7, Tolerances::quantum(), *preset_overrides(2, 0.0));
        f = solve_design(design_problem(c, p)).f;
    }
};

}

TEST_SUITE("quantum") {

TEST_CASE("Fock space") {
    FockSpace s(3, 4);
    CHECK(s.dim() == 64);
    CHECK(s.stride(2) == 16);
    CHECK(s.occupation(1 + 2 * 4 + 3 * 16, 0) == 1);
    CHECK(s.occupation(1 + 2 * 4 + 3 * 16, 1) == 2);
    CHECK(s.occupation(1 + 2 * 4 + 3 * 16, 2) == 3);
    auto a = s.annihilation(1);
    CHECK(std::abs(a.coeff(1 + 1 * 4, 1 + 2 * 4) - std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(a.coeff(0, 4) - 1.0) < 1e-15);
    const SparseOperator ad = a.adjoint();
    const SparseOperator na = ad * a;
    CHECK(max_abs(SparseOperator(s.number(2) - na)) > 0.5);
    CHECK(max_abs(SparseOperator(s.number(1) - na)) < 1e-14);
    CHECK(s.vacuum()(0) == std::complex<double>(1.0, 0.0));
    CHECK_THROWS_AS(FockSpace(0, 4), InvalidInput);
}

TEST_CASE("Hamiltonians are Hermitian") {
    PairSetup ps;
    auto st = QuantumModel::static_model(ps.c, ps.p);
    auto dy = QuantumModel::dynamical_model(ps.p, ps.f);
    Rng rng(5);
    for (int k = 0; k < 100; ++k) {
        const double t = 120.0 * rng.uniform();
        for (const auto* m : {&st, &dy}) {
            const SparseOperator h = m->hamiltonian(t);
            CHECK(max_abs(SparseOperator(h - SparseOperator(h.adjoint()))) < 1e-12);
        }
    }
    auto c3 = gen_sk7(3, 2);
    auto p3 = prescribe(c3, ProblemClass::SK7, Tolerances::quantum());
    auto f3 = solve_design(design_problem(c3, p3)).f;
    auto d3 = QuantumModel::dynamical_model(p3, f3, 5);
    for (double t : {0.0, 0.37, 11.1}) {
        const SparseOperator h = d3.hamiltonian(t);
        CHECK(max_abs(SparseOperator(h - SparseOperator(h.adjoint()))) < 1e-12);
    }
}

TEST_CASE("apply matches the assembled operator") {
    PairSetup ps;
    auto dy = QuantumModel::dynamical_model(ps.p, ps.f);
    auto st = QuantumModel::static_model(ps.c, ps.p);
    auto psi = random_low_state(dy.space(), 3);
    for (double t : {0.0, 3.3, 57.0, 250.0}) {
        for (const auto* m : {&st, &dy}) {
            Eigen::VectorXcd out;
            m->apply(t, psi, out);
            const Eigen::VectorXcd want = m->hamiltonian(t) * psi;
            CHECK((out - want).norm() < 1e-12 * want.norm());
        }
    }
}

TEST_CASE("static structure") {
    // zero couplings and pump keep every photon number
    auto p = bare_params(2);
    p.delta_tilde << 0.3, -0.7;
    auto m = QuantumModel::static_model(zero_instance(2), p, 6);
    const SparseOperator h = m.hamiltonian(0.0);
    for (int mode = 0; mode < 2; ++mode) {
        const SparseOperator nn = m.space().number(mode);
        const SparseOperator hn = h * nn, nh = nn * h;
        CHECK(max_abs(SparseOperator(hn - nh)) < 1e-14);
    }
    // single Kerr mode spectrum -(1/2) n (n - 1)
    auto k1 = QuantumModel::static_model(zero_instance(1), bare_params(1), 12);
    const SparseOperator hk = k1.hamiltonian(5.0);
    for (int n = 0; n < 12; ++n) CHECK(hk.coeff(n, n).real() == doctest::Approx(-0.5 * n * (n - 1)));
    CHECK(hk.nonZeros() == 10);
}

TEST_CASE("dynamical coupling phases") {
    PairSetup ps;
    auto zero_f = ModulationMatrix::Zero(2, 1);
    auto m0 = QuantumModel::dynamical_model(ps.p, zero_f);
    const double period = two_pi / ps.p.lambda_big_tilde;
    for (int k : {0, 1, 7}) CHECK(std::abs(m0.coupling(1, 0, k * period) - ps.p.j_tilde(1, 0)) < 1e-9);

    // period average reproduces the designed effective coupling
    auto c3 = gen_sk7(3, 4);
    auto p3 = prescribe(c3, ProblemClass::SK7, Tolerances::quantum());
    auto prob = design_problem(c3, p3);
    auto f3 = solve_design(prob).f;
    auto m3 = QuantumModel::dynamical_model(p3, f3, 3);
    const Eigen::MatrixXd ceff = effective_couplings(prob, f3);
    const double per = two_pi / p3.lambda_big_tilde;
    const int grid = 4096;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            std::complex<double> avg = 0.0;
            for (int s = 0; s < grid; ++s) avg += m3.coupling(i, j, per * s / grid);
            avg /= grid;
            CHECK(std::abs(avg - p3.lambda_c_tilde * ceff(i, j)) < 1e-6 * p3.lambda_j_tilde);
        }
}

TEST_CASE("size limits") {
    auto c5 = gen_sk7(5, 1);
    auto p5 = prescribe(c5, ProblemClass::SK7, Tolerances::quantum());
    CHECK_THROWS_AS(QuantumModel::static_model(c5, p5), ResourceLimit);
    auto c4 = gen_sk7(4, 1);
    auto p4 = prescribe(c4, ProblemClass::SK7, Tolerances::quantum());
    CHECK_THROWS_AS(QuantumModel::dynamical_model(p4, ModulationMatrix::Zero(4, 3)), ResourceLimit);
    CHECK_NOTHROW(QuantumModel::dynamical_model(p4, ModulationMatrix::Zero(4, 3), 3, true));
}

TEST_CASE("projectors") {
    auto proj = make_projectors(12);
    CHECK((proj.plus - proj.plus.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((proj.plus + proj.minus - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-6);
    for (const auto* m : {&proj.plus, &proj.minus}) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*m);
        CHECK(es.eigenvalues().minCoeff() >= -1e-6);
        CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-6);
    }
    // parity: <m|Pi+|n> = (-1)^(m+n) <m|Pi-|n>
    for (int m = 0; m < 12; ++m)
        for (int n = 0; n < 12; ++n)
            CHECK(proj.plus(m, n) == doctest::Approx(((m + n) % 2 ? -1.0 : 1.0) * proj.minus(m, n)).epsilon(1e-9));
    // Hermite functions are orthonormal on the grid
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(1201, -6.0, 6.0);
    auto psi = fock_wavefunctions(x, 12);
    Eigen::MatrixXd gram = psi.transpose() * psi * (x(1) - x(0));
    CHECK((gram - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("configuration probabilities") {
    auto proj = make_projectors(12);
    FockSpace s2(2, 12);
    auto probs = configuration_probabilities(s2, s2.vacuum(), proj);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(probs(k) - 0.25) < 1e-6);
    CHECK(configuration_probability(s2, s2.vacuum(), {1, -1}, proj) == doctest::Approx(0.25).epsilon(1e-6));

    // Gaussian tail: x = (a + a')/2 has mean 2 and spread 1/2
    FockSpace s1(1, 12);
    Eigen::VectorXcd alpha(1);
    alpha << 2.0;
    const auto coh = s1.coherent(alpha);
    const double plus = configuration_probability(s1, coh, {1}, proj);
    CHECK(plus >= 0.997);
    CHECK(plus == doctest::Approx(1.0 - 0.5 * std::erfc(4.0 / std::sqrt(2.0))).epsilon(2e-3));

    FockSpace s3(3, 6);
    auto psi = random_low_state(s3, 8);
    auto p3 = configuration_probabilities(s3, psi, make_projectors(6));
    CHECK(p3.sum() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p3.minCoeff() >= -1e-12);

    // vacuum of the antiferromagnetic pair: two ground states at 1/4 each
    auto ground = brute_force_ground_states(antiferro_pair());
    CHECK(ground_probability(probs, ground) == doctest::Approx(0.5).epsilon(1e-6));
    auto folded = fold_flips(Eigen::VectorXd::LinSpaced(8, 0, 7), 3);
    REQUIRE(folded.size() == 4);
    CHECK(folded(0) == 7.0);
    CHECK(folded(3) == 3.0 + 4.0);
}

TEST_CASE("stroboscopic grid") {
    QuantumConfig cfg;
    cfg.samples = 11;
    const double lam = 333.0;
    auto g = quantum_time_grid(cfg, lam);
    REQUIRE(g.size() == 11);
    CHECK(g(0) == 0.0);
    for (int k = 0; k < g.size(); ++k) {
        const double periods = g(k) * lam / two_pi;
        CHECK(std::abs(periods - std::round(periods)) < 1e-9);
        CHECK(std::abs(g(k) - 10.0 * k) <= 0.5 * two_pi / lam + 1e-12);
    }
    cfg.stroboscopic = false;
    CHECK(quantum_time_grid(cfg, lam)(10) == 100.0);
}

TEST_CASE("Schroedinger evolution oracles") {
    auto proj = make_projectors(12);
    GroundStateSet none;
    QuantumConfig cfg;
    cfg.r_max_tilde = 0.0;
    cfg.t_ramp_tilde = 3.0;
    cfg.samples = 4;
    cfg.stroboscopic = false;

    // no Hamiltonian at all
    auto zero = QuantumModel::static_model(zero_instance(2), bare_params(2), 12);
    zero.set_ramp(0.0, 3.0);
    auto grid = quantum_time_grid(cfg, 1.0);
    auto tr = schrodinger_evolve(zero, cfg, grid, 0.01, none, proj);
    CHECK((tr.final_state - zero.space().vacuum()).norm() < 1e-14);

    // Kerr phases e^{i n (n - 1) t / 2}
    auto kerr = QuantumModel::static_model(zero_instance(1), bare_params(1), 12);
    kerr.set_ramp(0.0, 3.0);
    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(12);
    for (int n = 0; n < 6; ++n) psi0(n) = 1.0 / (1.0 + n);
    psi0.normalize();
    auto kt = schrodinger_evolve(kerr, cfg, grid, 0.001, none, proj, &psi0);
    for (int n = 0; n < 6; ++n) {
        const std::complex<double> want = psi0(n) * std::polar(1.0, 0.5 * n * (n - 1) * 3.0);
        CHECK(std::abs(kt.final_state(n) - want) < 1e-8);
    }
    CHECK(kt.max_norm_error < 1e-8);
}

TEST_CASE("static antiferromagnetic pair anneals") {
    PairSetup ps;
    auto m = QuantumModel::static_model(ps.c, ps.p);
    auto cfg = quantum_config(ps.p, 1, 1);
    cfg.samples = 21;
    auto ground = brute_force_ground_states(ps.c);
    auto res = run_quantum(m, cfg, quantum_time_grid(cfg, ps.p.lambda_big_tilde), cfg.dt_static, ground);
    CHECK(res.p(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(res.final_p() >= 0.95);
    CHECK(res.config_probs.row(res.t.size() - 1).sum() == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("photon loss") {
    auto proj = make_projectors(12);
    GroundStateSet none;
    QuantumConfig cfg;
    cfg.kappa_tilde = 0.1;
    cfg.r_max_tilde = 0.0;
    cfg.t_ramp_tilde = 5.0;
    cfg.samples = 2;
    cfg.stroboscopic = false;
    auto model = QuantumModel::static_model(zero_instance(1), bare_params(1), 12);
    model.set_ramp(0.0, 5.0);
    const auto grid = quantum_time_grid(cfg, 1.0);
    auto space = model.space();

    // coherent states stay coherent and shrink as e^{-kappa t}
    Eigen::VectorXcd alpha(1);
    alpha << 1.5;
    const auto coh = space.coherent(alpha);
    Eigen::VectorXcd nvec = Eigen::VectorXcd::LinSpaced(12, 0.0, 11.0);
    double mean_n = 0.0;
    const int m = 1000;
    for (int k = 0; k < m; ++k) {
        auto tr = jump_trajectory(model, cfg, grid, 0.01, none, proj, k, &coh);
        mean_n += (tr.final_state.cwiseAbs2().cwiseProduct(nvec.real())).sum();
    }
    mean_n /= m;
    CHECK(mean_n == doctest::Approx(2.25 * std::exp(-1.0)).epsilon(0.05));

    // Fock |3>: only the ensemble decays smoothly
    Eigen::VectorXcd fock = Eigen::VectorXcd::Zero(12);
    fock(3) = 1.0;
    mean_n = 0.0;
    int jumps = 0;
    for (int k = 0; k < m; ++k) {
        auto tr = jump_trajectory(model, cfg, grid, 0.01, none, proj, k, &fock);
        mean_n += (tr.final_state.cwiseAbs2().cwiseProduct(nvec.real())).sum();
        jumps += static_cast<int>(tr.jump_times.size());
        for (std::size_t q = 1; q < tr.jump_times.size(); ++q) CHECK(tr.jump_times[q] >= tr.jump_times[q - 1]);
    }
    mean_n /= m;
    CHECK(mean_n == doctest::Approx(3.0 * std::exp(-1.0)).epsilon(0.05));
    CHECK(jumps == doctest::Approx(m * 3.0 * (1.0 - std::exp(-1.0))).epsilon(0.05));

    // reproducible per (seed, index)
    auto a = jump_trajectory(model, cfg, grid, 0.01, none, proj, 17, &fock);
    auto b = jump_trajectory(model, cfg, grid, 0.01, none, proj, 17, &fock);
    CHECK(a.jump_times == b.jump_times);
    CHECK(a.final_state == b.final_state);
}

TEST_CASE("no loss means no jumps") {
    PairSetup ps;
    auto m = QuantumModel::static_model(ps.c, ps.p);
    auto cfg = quantum_config(ps.p, 1, 1);
    cfg.t_ramp_tilde = 10.0;
    cfg.samples = 3;
    auto proj = make_projectors(12);
    auto ground = brute_force_ground_states(ps.c);
    const auto grid = quantum_time_grid(cfg, ps.p.lambda_big_tilde);
    auto j = jump_trajectory(m, cfg, grid, cfg.dt_static, ground, proj, 0);
    auto s = schrodinger_evolve(m, cfg, grid, cfg.dt_static, ground, proj);
    CHECK(j.jump_times.empty());
    CHECK((j.final_state - s.final_state).norm() < 1e-10);
    CHECK(cfg.trajectories() == 1);
    cfg.n_traj = 50;
    CHECK(cfg.trajectories() == 1);
}

TEST_CASE("phase-space densities") {
    FockSpace s(2, 12);
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(121, -3.0, 3.0);
    const double dx = grid(1) - grid(0);
    auto vac = position_momentum_density(s, s.vacuum(), grid);
    CHECK(vac.position.sum() * dx * dx == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(vac.momentum.sum() * dx * dx == doctest::Approx(1.0).epsilon(1e-3));
    CHECK((vac.position - vac.position.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((vac.position - vac.momentum).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::Index r, c;
    vac.position.maxCoeff(&r, &c);
    CHECK(r == 60);
    CHECK(c == 60);

    Eigen::VectorXcd one = Eigen::VectorXcd::Zero(s.dim());
    one(1) = 1.0;   // |1> in mode 0
    auto d1 = position_momentum_density(s, one, grid);
    CHECK(d1.position(60, 60) < 1e-12);
    CHECK(d1.position.sum() * dx * dx == doctest::Approx(1.0).epsilon(1e-3));

    // cat state along x: two lobes, fringes along p
    Eigen::VectorXcd a(2), b(2);
    a << 1.5, 0.0;
    b << -1.5, 0.0;
    Eigen::VectorXcd cat = (s.coherent(a) + s.coherent(b)).normalized();
    auto dc = position_momentum_density(s, cat, grid);
    CHECK(dc.position(60, 60) < 0.05 * dc.position.maxCoeff());
    CHECK(dc.position(90, 60) > 0.9 * dc.position.maxCoeff());
    const Eigen::VectorXd pcut = dc.momentum.col(60);
    int peaks = 0;
    for (int k = 1; k + 1 < pcut.size(); ++k)
        if (pcut(k) > pcut(k - 1) && pcut(k) > pcut(k + 1) && pcut(k) > 0.05 * pcut.maxCoeff()) ++peaks;
    CHECK(peaks >= 3);
    CHECK_THROWS_AS(position_momentum_density(FockSpace(3, 4), FockSpace(3, 4).vacuum(), grid), InvalidInput);
}

}
