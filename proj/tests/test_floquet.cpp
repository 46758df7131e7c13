#include "doctest.h"

#include <cmath>

#include "kpo/cg.hpp"
#include "kpo/errors.hpp"
#include "kpo/floquet.hpp"
#include "kpo/rng.hpp"

using namespace kpo;

namespace {

// power series, converges to machine precision for |m| <= 2 within 30 terms
double bessel_j1(double m) {
    double term = m / 2.0, sum = term;
    for (int s = 1; s < 30; ++s) {
        term *= -(m * m / 4.0) / (s * (s + 1.0));
        sum += term;
    }
    return sum;
}

Eigen::MatrixXd antiferro_pair() {
    Eigen::MatrixXd c(2, 2);
    c << 0, 1, 1, 0;
    return c;
}

DesignProblem sk7_problem(int n, std::uint64_t seed, double eta) {
    auto c = gen_sk7(n, seed);
    const double lambda_j = 5.0;
    return DesignProblem(c, eta * lambda_j, uniform_native(n, lambda_j));
}

// Direct evaluation of the pairwise objective sum_{i != j} (lambda C - I)^2 / J^2
// restricted to the k-th diagonal.
double diagonal_slice(const DesignProblem& p, const ModulationMatrix& f, int k, int samples) {
    double sum = 0.0;
    for (int j = 0; j + k < p.n(); ++j) {
        const int i = j + k;
        double r = (p.lambda_c * p.c(i, j) - floquet_integral(p.j, f, i, j, samples)) / p.j(i, j);
        sum += r * r;
    }
    return sum;
}

ModulationMatrix random_modulation(int n, double scale, Rng& rng) {
    ModulationMatrix f(n, n - 1);
    for (int k = 1; k < n; ++k) {
        Eigen::VectorXd x(n - k);
        for (int p = 0; p < n - k; ++p) x(p) = scale * (2.0 * rng.uniform() - 1.0);
        set_column(f, k, x);
    }
    return f;
}

} // namespace

TEST_SUITE("floquet") {

TEST_CASE("bessel series oracle matches frozen values") {
    CHECK(bessel_j1(0.2) == doctest::Approx(0.09950083263923604).epsilon(1e-15));
    CHECK(bessel_j1(1.0) == doctest::Approx(0.44005058574493355).epsilon(1e-15));
}

TEST_CASE("floquet integral: zero modulation averages to zero") {
    const int n = 6;
    ModulationMatrix f = ModulationMatrix::Zero(n, n - 1);
    Eigen::MatrixXd j = uniform_native(n, 2.0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (a != b) CHECK(std::abs(floquet_integral(j, f, a, b, default_samples(n))) < 1e-14);
    CHECK_THROWS_AS(floquet_integral(j, f, 2, 2, 256), InvalidInput);
    CHECK_THROWS_AS(floquet_integral(j, f, 2, 1, 8), InvalidInput);
}

TEST_CASE("floquet integral: single harmonic gives -J1") {
    const int n = 5;
    Eigen::MatrixXd j = uniform_native(n, 1.0);
    for (double m : {0.1, 0.2, 0.5, 1.0}) {
        ModulationMatrix f = ModulationMatrix::Zero(n, n - 1);
        f(3, 1) = 0.6 * m;     // pair (3, 1), harmonic 2
        f(1, 1) = -0.4 * m;
        CHECK(std::abs(floquet_integral(j, f, 3, 1, default_samples(n)) + bessel_j1(m)) < 1e-12);
        CHECK(std::abs(floquet_integral(j, f, 1, 3, default_samples(n)) + bessel_j1(m)) < 1e-12);
    }
    ModulationMatrix f = ModulationMatrix::Zero(n, n - 1);
    f(3, 1) = 0.2;
    CHECK(floquet_integral(j, f, 3, 1, 256) == doctest::Approx(-0.099501).epsilon(1e-5));
}

TEST_CASE("effective couplings: fast path agrees with pairwise quadrature") {
    Rng rng(5);
    for (int n : {3, 7, 12}) {
        auto p = sk7_problem(n, 2, 0.8 / n);
        ModulationMatrix f = random_modulation(n, 0.7, rng);
        Eigen::MatrixXd ce = effective_couplings(p, f);
        CHECK((ce - ce.transpose()).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(ce.diagonal().cwiseAbs().maxCoeff() == 0.0);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (a != b)
                    CHECK(std::abs(ce(a, b) - floquet_integral(p.j, f, a, b, default_samples(n)) / p.lambda_c) <
                          1e-12);
    }
}

TEST_CASE("effective couplings: quadrature converged") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto p = sk7_problem(8, seed, 0.1);
        auto f = first_order_solution(p);
        Eigen::MatrixXd a = effective_couplings(p, f, default_samples(8));
        Eigen::MatrixXd b = effective_couplings(p, f, 2 * default_samples(8));
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("effective couplings: zero modulation and small-modulation limit") {
    auto p = sk7_problem(4, 3, 0.01);
    CHECK(effective_couplings(p, ModulationMatrix::Zero(4, 3)).cwiseAbs().maxCoeff() < 1e-13);
    // The first-order error is linear in eta (about 1e-2 at eta = 1e-2 for n = 4),
    // so the 1e-3 level is reached one decade lower.
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto err = [&](double eta) {
            auto q = sk7_problem(4, seed, eta);
            return coupling_error(effective_couplings(q, first_order_solution(q)), q.c);
        };
        const double e1 = err(1e-3), e2 = err(5e-4);
        CHECK(e1 < 1e-3 * 5);
        CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.02));
        CHECK(err(1e-4) < 1e-3);
    }
}

TEST_CASE("coupling error") {
    Eigen::MatrixXd c = gen_sk7(6, 1).entries();
    CHECK(coupling_error(c, c) == 0.0);
    Eigen::MatrixXd d = c;
    d(2, 4) += 0.013;
    CHECK(coupling_error(d, c) == doctest::Approx(0.013));
    d(2, 4) -= 0.026;
    CHECK(coupling_error(d, c) == doctest::Approx(0.013));
    d(3, 3) = 10.0;   // diagonal ignored
    CHECK(coupling_error(d, c) == doctest::Approx(0.013));
    Rng rng(2);
    Eigen::MatrixXd e = c + 0.1 * Eigen::MatrixXd::Random(6, 6);
    double naive = 0;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            if (i != j) naive = std::max(naive, std::abs(e(i, j) - c(i, j)));
    CHECK(coupling_error(e, c) == naive);
}

TEST_CASE("first order: frozen two-spin value") {
    DesignProblem p(antiferro_pair(), 0.5, uniform_native(2, 5.0));   // eta = 0.1
    auto f = first_order_solution(p);
    CHECK(f.rows() == 2);
    CHECK(f.cols() == 1);
    CHECK(f(0, 0) == doctest::Approx(0.1));
    CHECK(f(1, 0) == doctest::Approx(-0.1));
    CHECK(std::abs(first_order_residual(p, f, 1, 0)) < 1e-14);
}

TEST_CASE("first order: zero problem and linear residual suite") {
    DesignProblem z(Eigen::MatrixXd::Zero(5, 5), 1.0, uniform_native(5, 3.0));
    CHECK(first_order_solution(z).cwiseAbs().maxCoeff() == 0.0);
    for (ProblemClass cls : {ProblemClass::SK7, ProblemClass::DenseMaxCut, ProblemClass::CubicMaxCut})
        for (int n : {4, 7, 8, 16}) {
            if (cls == ProblemClass::CubicMaxCut && n % 2) continue;
            auto c = generate_instance(cls, n, 17);
            Eigen::MatrixXd j = uniform_native(n, 4.0);
            // non-uniform J exercises the per-entry division
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    if (a != b) j(a, b) *= 1.0 + 0.05 * std::cos(a + b);
            DesignProblem p(c, 0.3, j);
            auto f = first_order_solution(p);
            double worst = 0;
            for (int a = 1; a < n; ++a)
                for (int b = 0; b < a; ++b) worst = std::max(worst, std::abs(first_order_residual(p, f, a, b)));
            CHECK(worst < 1e-12);
        }
}

TEST_CASE("first order: symmetric mirror structure") {
    auto p = sk7_problem(9, 4, 0.1);
    auto f = first_order_solution(p);
    const int n = 9;
    for (int k = 1; k < n; ++k)
        for (int q = n - k; q < n; ++q) {
            if (q >= k) CHECK(f(q, k - 1) == doctest::Approx(-f(q % k, k - 1)));
            else CHECK(f(q, k - 1) == 0.0);
        }
    // free-variable round trip
    ModulationMatrix g = ModulationMatrix::Zero(n, n - 1);
    for (int k = 1; k < n; ++k) set_column(g, k, column_free_variables(f, k));
    CHECK((g - f).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("second order residual: zero case and eta scaling") {
    DesignProblem z(Eigen::MatrixXd::Zero(4, 4), 1.0, uniform_native(4, 3.0));
    CHECK(second_order_residual(z, ModulationMatrix::Zero(4, 3), 2, 0) == 0.0);

    auto p1 = sk7_problem(6, 8, 0.02);
    auto p2 = sk7_problem(6, 8, 0.01);
    auto f1 = first_order_solution(p1);
    auto f2 = first_order_solution(p2);
    double r1 = 0, r2 = 0;
    for (int a = 1; a < 6; ++a)
        for (int b = 0; b < a; ++b) {
            r1 += std::abs(second_order_residual(p1, f1, a, b));
            r2 += std::abs(second_order_residual(p2, f2, a, b));
        }
    CHECK(r1 > 0);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("second order residual agrees with the full integral to third order") {
    Rng rng(99);
    for (int n : {4, 6, 9}) {
        auto p = sk7_problem(n, 21, 0.05);
        ModulationMatrix base = random_modulation(n, 1.0, rng);
        double prev = 0;
        for (double zeta : {0.1, 0.05}) {
            // scale so that sum_k |F_i - F_j| stays near zeta
            ModulationMatrix f = base * (zeta / (2.0 * base.cwiseAbs().rowwise().sum().maxCoeff()));
            double worst = 0;
            for (int a = 1; a < n; ++a)
                for (int b = 0; b < a; ++b) {
                    double full = (p.lambda_c * p.c(a, b) - floquet_integral(p.j, f, a, b, 4096)) / p.j(a, b);
                    worst = std::max(worst, std::abs(full - second_order_residual(p, f, a, b)));
                }
            CHECK(worst <= zeta * zeta * zeta);
            if (prev > 0) CHECK(prev / worst > 6.0);   // cubic: ratio 8 when halving
            prev = worst;
        }
    }
}

TEST_CASE("column objectives: oracle equivalence, zeros, non-negativity") {
    const int n = 6;
    Rng rng(7);
    auto p = sk7_problem(n, 5, 0.15);
    for (int trial = 0; trial < 3; ++trial) {
        ModulationMatrix f = random_modulation(n, 0.5, rng);
        for (int k = 1; k < n; ++k) {
            double full = column_objective_full(p, f, k);
            CHECK(full >= 0.0);
            CHECK(full == doctest::Approx(diagonal_slice(p, f, k, default_samples(n))).epsilon(1e-12));
            CHECK(column_objective_taylor2(p, f, k).value >= 0.0);
        }
    }
    DesignProblem z(Eigen::MatrixXd::Zero(n, n), 1.0, uniform_native(n, 3.0));
    ModulationMatrix zero = ModulationMatrix::Zero(n, n - 1);
    for (int k = 1; k < n; ++k) {
        CHECK(column_objective_full(z, zero, k) < 1e-30);
        auto t = column_objective_taylor2(z, zero, k);
        CHECK(t.value == 0.0);
        CHECK(t.gradient.size() == n - k);
        CHECK(t.gradient.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("taylor2 objective equals sum of squared second-order residuals") {
    const int n = 7;
    Rng rng(70);
    auto p = sk7_problem(n, 6, 0.1);
    ModulationMatrix f = random_modulation(n, 0.3, rng);
    for (int k = 1; k < n; ++k) {
        double sum = 0;
        for (int j = 0; j + k < n; ++j) {
            double r = second_order_residual(p, f, j + k, j);
            sum += r * r;
        }
        CHECK(column_objective_taylor2(p, f, k).value == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("column gradients match central differences") {
    Rng rng(31);
    for (int n : {4, 8, 16}) {
        auto p = sk7_problem(n, 12, 0.8 / n);
        for (int point = 0; point < 20; ++point) {
            ModulationMatrix f = random_modulation(n, 0.4, rng);
            const int k = 1 + static_cast<int>(rng.below(n - 1));
            for (bool full : {false, true}) {
                if (full && point % 4) continue;
                auto eval = [&](const ModulationMatrix& g) {
                    return full ? column_objective_full_gradient(p, g, k) : column_objective_taylor2(p, g, k);
                };
                auto v = eval(f);
                Eigen::VectorXd x = column_free_variables(f, k);
                const double h = 1e-6;
                double worst = 0, scale = v.gradient.cwiseAbs().maxCoeff();
                for (int q = 0; q < x.size(); ++q) {
                    ModulationMatrix fp = f, fm = f;
                    Eigen::VectorXd xp = x, xm = x;
                    xp(q) += h;
                    xm(q) -= h;
                    set_column(fp, k, xp);
                    set_column(fm, k, xm);
                    double fd = (eval(fp).value - eval(fm).value) / (2 * h);
                    worst = std::max(worst, std::abs(fd - v.gradient(q)) / std::max(scale, 1e-300));
                }
                CHECK(worst < 1e-5);
            }
        }
    }
}

TEST_CASE("solve_design: zero problem") {
    DesignProblem z(Eigen::MatrixXd::Zero(5, 5), 1.0, uniform_native(5, 3.0));
    auto s = solve_design(z);
    CHECK(s.f.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.error < 1e-14);
}

TEST_CASE("solve_design: prescribed eta at n=4") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto p = sk7_problem(4, seed, 0.2);
        auto s = solve_design(p);
        CHECK(s.error <= 0.03);
        CHECK(s.error <= s.first_order_error);
        CHECK(s.error == doctest::Approx(coupling_error(s.c_eff, p.c)));
        CHECK(s.modulation_depth >= 0.0);
    }
}

TEST_CASE("solve_design: full order at n=8, eta=0.1") {
    // Columns stop just under (1e-3 eta)^2 (n - k), i.e. an RMS entry error of
    // about 1e-3; the worst entry sits slightly above that. A tenfold tighter
    // column tolerance brings the worst entry under 1e-3.
    double mean = 0, tight = 0;
    DesignOptions strict;
    strict.tolerance_scale = 1e-4;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto p = sk7_problem(8, seed, 0.1);
        auto s = solve_design(p, DesignMode::FullOrder);
        CHECK(s.method == DesignMethod::FullOrder);
        CHECK(s.error <= s.first_order_error);
        mean += s.error / 10;
        tight += solve_design(p, DesignMode::FullOrder, strict).error / 10;
    }
    CHECK(mean <= 2e-3);
    CHECK(tight <= 1e-3);
}

TEST_CASE("solve_design: second order beats first order") {
    for (int n : {12, 40}) {
        auto p = sk7_problem(n, 2, 0.8 / n);
        auto s = solve_design(p, DesignMode::SecondOrder);
        CHECK(s.method == DesignMethod::SecondOrder);
        CHECK(s.error <= 0.5 * s.first_order_error);
        // every column reaches the second-order tolerance (1e-3 eta)^2 (n - k)
        for (int k = 1; k < n; ++k) {
            const double tol = std::pow(1e-3 * 0.8 / n, 2) * (n - k);
            CHECK(s.column_objective[k - 1] <= tol);
        }
    }
}

TEST_CASE("solve_design: error falls as eta decreases") {
    const int n = 8;
    double prev = 1e9;
    for (double eta : {0.3, 0.1, 0.03}) {
        double mean = 0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            auto p = sk7_problem(n, seed, eta);
            mean += coupling_error(effective_couplings(p, first_order_solution(p)), p.c) / 10;
        }
        CHECK(mean < prev);
        prev = mean;
    }
}

TEST_CASE("column-by-column solve is competitive with joint optimization at n=4") {
    // Joint objective over all free variables with a finite-difference gradient.
    const int n = 4;
    auto p = sk7_problem(n, 3, 0.2);
    std::vector<int> offset{0};
    for (int k = 1; k < n; ++k) offset.push_back(offset.back() + n - k);
    auto unpack = [&](const Eigen::VectorXd& x) {
        ModulationMatrix f = ModulationMatrix::Zero(n, n - 1);
        for (int k = 1; k < n; ++k) set_column(f, k, x.segment(offset[k - 1], n - k));
        return f;
    };
    auto joint = [&](const Eigen::VectorXd& x) {
        double s = 0;
        for (int k = 1; k < n; ++k) s += column_objective_full(p, unpack(x), k);
        return s;
    };
    GradientObjective obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g.resize(x.size());
        for (int q = 0; q < x.size(); ++q) {
            Eigen::VectorXd a = x, b = x;
            a(q) += 1e-7;
            b(q) -= 1e-7;
            g(q) = (joint(a) - joint(b)) / 2e-7;
        }
        return joint(x);
    };
    auto f0 = first_order_solution(p);
    Eigen::VectorXd x0(offset.back());
    for (int k = 1; k < n; ++k) x0.segment(offset[k - 1], n - k) = column_free_variables(f0, k);
    auto res = minimize_cg(obj, x0, {.max_iterations = 500});
    double joint_err = coupling_error(effective_couplings(p, unpack(res.x)), p.c);
    auto s = solve_design(p, DesignMode::FullOrder);
    CHECK(s.error <= std::max(2.0 * joint_err, 1e-3));
}

TEST_CASE("cg minimizes a quadratic in n steps") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(6, 6);
    Eigen::MatrixXd q = a * a.transpose() + Eigen::MatrixXd::Identity(6, 6);
    Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(6, -1, 1);
    GradientObjective obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = q * x - b;
        return 0.5 * x.dot(q * x) - b.dot(x);
    };
    auto r = minimize_cg(obj, Eigen::VectorXd::Zero(6), {.max_iterations = 12, .gradient_tol = 1e-10});
    CHECK((r.x - q.ldlt().solve(b)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("eta prescription and bound") {
    CHECK(eta_prescription(8, ProblemClass::SK7) == doctest::Approx(0.1));
    CHECK(eta_prescription(1000, ProblemClass::SK7) == doctest::Approx(8e-4));
    CHECK(eta_prescription(8, ProblemClass::CubicMaxCut) == doctest::Approx(0.038982).epsilon(1e-4));
    CHECK(eta_prescription(10, ProblemClass::DenseMaxCut) == doctest::Approx(1.2 / (10 * (1 + std::log(10.0)))));
    CHECK(eta_bound(10, ProblemClass::SK7, 2.0) == doctest::Approx(0.1));
    CHECK(eta_bound(8, ProblemClass::CubicMaxCut, 1.0) == doctest::Approx(0.05414).epsilon(1e-3));
    double prev = 1e9;
    for (int n = 2; n < 50; ++n) {
        double v = eta_bound(n, ProblemClass::DenseMaxCut, 1.0);
        CHECK(v > 0);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("mean |f_1^(k)| closed forms") {
    CHECK(mean_f1k_magnitude(101, 1, ProblemClass::SK7, 0.01) == doctest::Approx(0.05));
    CHECK(mean_f1k_magnitude(101, 2, ProblemClass::DenseMaxCut, 0.01) == doctest::Approx(0.25));
    CHECK_THROWS_AS(mean_f1k_magnitude(10, 10, ProblemClass::SK7, 0.1), InvalidInput);
}

TEST_CASE("mean |f_1^(k)| matches the sk7 ensemble") {
    const int n = 30;
    const double eta = 0.1;
    const int samples = 5000;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n - 1);
    for (int s = 0; s < samples; ++s) {
        DesignProblem p(gen_sk7(n, 1000 + s), eta, uniform_native(n, 1.0));
        mean += first_order_solution(p).row(0).transpose().cwiseAbs() / samples;
    }
    for (int k : {1, 2, 3, 5, 8}) {
        double model = mean_f1k_magnitude(n, k, ProblemClass::SK7, eta);
        CHECK(std::abs(mean(k - 1) / model - 1.0) < 0.15);
    }
}

}
