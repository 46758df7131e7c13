#include "doctest.h"

#include <cmath>

#include "kpo/errors.hpp"
#include "kpo/prescription.hpp"

using namespace kpo;

TEST_SUITE("prescription") {

TEST_CASE("problem strength per class") {
    CHECK(lambda_c_tilde(4, ProblemClass::SK7) == doctest::Approx(1.0));
    CHECK(lambda_c_tilde(8, ProblemClass::DenseMaxCut) == doctest::Approx(1.0));
    CHECK(lambda_c_tilde(10, ProblemClass::CubicMaxCut) == doctest::Approx(2.0));
    CHECK(lambda_c_tilde(1000, ProblemClass::CubicMaxCut) == doctest::Approx(2.0));
    CHECK(lambda_c_tilde(2, ProblemClass::SK7) == doctest::Approx(2.0));
    CHECK_THROWS_AS(lambda_c_tilde(1, ProblemClass::SK7), InvalidInput);
}

TEST_CASE("frame detunings") {
    Eigen::MatrixXd pair(2, 2);
    pair << 0, 1, 1, 0;
    auto d = frame_detunings(CouplingMatrix(pair), 2.0);
    CHECK(d(0) == doctest::Approx(2.0));
    CHECK(d(1) == doctest::Approx(2.0));

    auto z = frame_detunings(CouplingMatrix(Eigen::MatrixXd::Zero(3, 3)), 1.5);
    CHECK(z.isZero(0.0));

    for (std::uint64_t s = 0; s < 20; ++s) {
        auto c = gen_sk7(4, s);
        auto dt = frame_detunings(c, 1.0);
        CHECK(dt.maxCoeff() <= 3.0 + 1e-15);
        CHECK(dt.minCoeff() > 0.0);
    }
}

TEST_CASE("Floquet frequency") {
    Eigen::VectorXd delta = Eigen::VectorXd::Constant(4, 3.0);
    CHECK(floquet_frequency(100, delta, 5, 5) == doctest::Approx(500.0));
    CHECK(floquet_frequency(200, delta, 5, 5) == doctest::Approx(1000.0));
    CHECK(floquet_frequency(100, Eigen::VectorXd::Zero(3), 0.1, 0.2) == doctest::Approx(100.0));
    Eigen::VectorXd big(2);
    big << 0.5, 12.0;
    CHECK(floquet_frequency(100, big, 5, 5) == doctest::Approx(1200.0));
}

TEST_CASE("bandwidth bound closed forms") {
    CHECK(delta_omega_bound(4, ProblemClass::SK7, 0.2, 500) == doctest::Approx(0.2 * 500 * std::pow(3.0, 1.5)));
    CHECK(delta_omega_bound(4, ProblemClass::SK7, 0.2, 500) == doctest::Approx(519.615).epsilon(1e-5));
    CHECK(delta_omega_bound(2, ProblemClass::SK7, 0.3, 700) == doctest::Approx(0.3 * 700));
    CHECK(delta_omega_bound(3, ProblemClass::DenseMaxCut, 0.1, 100) == doctest::Approx(0.05 * 100 * 4));
    CHECK(delta_omega_bound(10, ProblemClass::CubicMaxCut, 0.1, 100) == doctest::Approx(3 * 0.1 * 100 * 81 / 10.0));

    // instance-exact form: Lambda sum_k k |f_1^(k)|
    ModulationMatrix f = ModulationMatrix::Zero(3, 2);
    f(0, 0) = 0.1;
    f(0, 1) = -0.2;
    f(2, 1) = 5.0;   // other oscillators do not count
    CHECK(delta_omega_bound_exact(f, 100) == doctest::Approx(100 * (0.1 + 2 * 0.2)));
}

TEST_CASE("filling ratio branches") {
    const double duni = uniformity_limit(0.1);
    CHECK(duni == doctest::Approx(1.0 - std::pow(1.0 + std::sqrt(0.21) + 0.1, -2.0)));
    CHECK(duni == doctest::Approx(0.5882).epsilon(1e-3));
    CHECK(non_uniformity(duni) == doctest::Approx(0.1).epsilon(1e-12));

    Tolerances tol;
    // time-independence dominates when the bandwidth bound is large
    const int n = 4;
    const double lam = 500, lj = 5, dw = 519.615;
    const double dsw = 2 * 0.01 * (n - 1) * lam / lj;
    const double dti = 0.1 * (n - 1) * lam / dw;
    const double want = std::min({dsw / (1 + dsw), dti / (1 + dti), duni});
    CHECK(filling_ratio(n, tol, lam, lj, dw) == doctest::Approx(want));
    CHECK(want == doctest::Approx(dti / (1 + dti)));

    // large SK7: clamped by uniformity
    {
        const int big = 1000;
        const double eta = eta_prescription(big, ProblemClass::SK7);
        const double ljb = lambda_c_tilde(big, ProblemClass::SK7) / eta;
        const double lb = 100 * ljb;
        const double dwb = delta_omega_bound(big, ProblemClass::SK7, eta, lb);
        CHECK(filling_ratio(big, tol, lb, ljb, dwb) == doctest::Approx(duni));
    }

    Tolerances tight = tol;
    tight.eps_ti = 1e-9;
    CHECK(filling_ratio(n, tight, lam, lj, dw) < 1e-8);
}

TEST_CASE("nominal detunings and native couplings") {
    auto dn = nominal_detunings(3, 0.5, 100);
    CHECK(dn(0) == doctest::Approx(200));
    CHECK(dn(1) == doctest::Approx(300));
    CHECK(dn(2) == doctest::Approx(400));
    auto printed = nominal_detunings(3, 0.5, 100, DetuningForm::Printed);
    CHECK(printed.isApprox(dn));
    auto tiny = nominal_detunings(5, 1e-9, 10, DetuningForm::Printed);
    CHECK(tiny(0) < 1e-6);
    // filling ratio recovered from the default placement
    auto dq = nominal_detunings(7, 0.3, 50);
    CHECK((dq(6) - dq(0)) / dq(6) == doctest::Approx(0.3));
    CHECK(dq(6) / dq(0) - 1.0 > 0.0);
    CHECK(native_non_uniformity(native_couplings(dq, 2.0), 2.0) == doctest::Approx(non_uniformity(0.3)));
    for (int i = 1; i < 5; ++i)
        CHECK(tiny(i) - tiny(i - 1) == doctest::Approx(10.0));
    CHECK_THROWS_AS(nominal_detunings(3, 1.0, 100), InvalidInput);
    CHECK_THROWS_AS(nominal_detunings(3, 0.0, 100), InvalidInput);

    auto g = bus_couplings(dn, 5);
    CHECK(g(1) == doctest::Approx(std::sqrt(1500.0)));
    auto j = native_couplings(dn, 5);
    CHECK(j(0, 2) == doctest::Approx(2.5 * 600 / std::sqrt(80000.0)));
    CHECK(j(0, 0) == doctest::Approx(5.0));
    CHECK(j.isApprox(j.transpose()));
}

TEST_CASE("ramp time") {
    CHECK(t_ramp(0.0) == doctest::Approx(100.0));
    CHECK(t_ramp(0.1) == doctest::Approx(10.0));
    CHECK(t_ramp(0.01) == doctest::Approx(100.0));
    CHECK(t_ramp(1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(t_ramp(-1.0), InvalidInput);
}

TEST_CASE("full prescription SK7 N=4") {
    auto c = gen_sk7(4, 11);
    auto p = prescribe(c, ProblemClass::SK7, Tolerances::quantum());
    CHECK(p.lambda_c_tilde == doctest::Approx(1.0));
    CHECK(p.r_max_tilde == doctest::Approx(5.0));
    CHECK(p.eta == doctest::Approx(0.2));
    CHECK(p.lambda_j_tilde == doctest::Approx(5.0));
    CHECK(p.lambda_big_tilde == doctest::Approx(500.0));
    CHECK(p.delta_omega_bound_tilde == doctest::Approx(519.615).epsilon(1e-5));
    CHECK(p.t_ramp_tilde == doctest::Approx(100.0));
    CHECK(native_non_uniformity(p.j_tilde, p.lambda_j_tilde) <= 0.1);
    CHECK(p.detuning_form == DetuningForm::FillingRatio);

    auto pc = prescribe(c, ProblemClass::SK7, Tolerances::classical());
    CHECK(pc.lambda_big_tilde == doctest::Approx(1000.0));

    // design problem hands lambda_c / J over unchanged
    auto dp = design_problem(c, p);
    CHECK(dp.lambda_c == doctest::Approx(1.0));
    CHECK(dp.j.isApprox(p.j_tilde));
}

TEST_CASE("zero couplings") {
    CouplingMatrix z(Eigen::MatrixXd::Zero(4, 4));
    auto p = prescribe(z, ProblemClass::Custom);
    CHECK(p.delta_tilde.isZero(0.0));
    auto sol = solve_design(design_problem(z, p));
    CHECK(sol.f.isZero(1e-12));
}

TEST_CASE("overrides and presets") {
    auto c = gen_sk7(4, 2);
    PrescriptionOverrides o;
    o.r_max_tilde = 4.5;
    o.kappa_tilde = 0.1;
    auto p = prescribe(c, ProblemClass::SK7, {}, o);
    CHECK(p.r_max_tilde == doctest::Approx(4.5));
    CHECK(p.t_ramp_tilde == doctest::Approx(10.0));
    CHECK(p.kappa_tilde == doctest::Approx(0.1));
    o.t_ramp_tilde = 25.0;
    CHECK(prescribe(c, ProblemClass::SK7, {}, o).t_ramp_tilde == doctest::Approx(25.0));

    auto pre = preset_overrides(4, 0.01);
    REQUIRE(pre.has_value());
    CHECK(*pre->r_max_tilde == doctest::Approx(4.0));
    CHECK(!preset_overrides(7, 0.0).has_value());

    o.lambda_c_tilde = 2.0;
    auto p2 = prescribe(c, ProblemClass::SK7, {}, o);
    CHECK(p2.lambda_j_tilde == doctest::Approx(2.0 / p2.eta));
}

TEST_CASE("instance-exact bandwidth mode") {
    auto c = gen_sk7(6, 4);
    auto p = prescribe(c, ProblemClass::SK7, {}, {}, BandwidthEstimate::InstanceExact);
    auto f1 = first_order_solution(DesignProblem(c, p.lambda_c_tilde, uniform_native(6, p.lambda_j_tilde)));
    CHECK(p.delta_omega_bound_tilde == doctest::Approx(delta_omega_bound_exact(f1, p.lambda_big_tilde)));
    p.validate();
}

TEST_CASE("invariants over random instances") {
    const ProblemClass classes[] = {ProblemClass::SK7, ProblemClass::DenseMaxCut, ProblemClass::CubicMaxCut};
    int count = 0;
    for (std::uint64_t s = 0; count < 200; ++s) {
        const ProblemClass cls = classes[s % 3];
        int n = 4 + static_cast<int>((s * 7919) % 61);
        if (cls == ProblemClass::CubicMaxCut && n % 2) ++n;
        auto c = generate_instance(cls, n, s);
        for (const auto& tol : {Tolerances::quantum(), Tolerances::classical()}) {
            auto p = prescribe(c, cls, tol);
            ++count;
            CHECK_NOTHROW(p.validate());
            CHECK(p.d > 0.0);
            CHECK(p.d < 1.0);
            CHECK(p.lambda_j_tilde == doctest::Approx(p.lambda_c_tilde / p.eta));
            for (int i = 1; i < n; ++i)
                CHECK(p.delta_nom_tilde(i) - p.delta_nom_tilde(i - 1) == doctest::Approx(p.lambda_big_tilde));
            for (int i = 0; i < n; ++i)
                CHECK(p.g_tilde(i) == doctest::Approx(std::sqrt(p.delta_nom_tilde(i) * p.lambda_j_tilde)));
            CHECK(non_uniformity(p.d) <= tol.eps_uni + 1e-12);
            CHECK(native_non_uniformity(p.j_tilde, p.lambda_j_tilde) <= tol.eps_uni + 1e-12);
            // time independence and Schrieffer-Wolff at the first oscillator
            CHECK(p.delta_omega_bound_tilde / p.delta_nom_tilde(0) <= tol.eps_ti * (1 + 1e-9));
            CHECK(p.g_tilde(0) / p.delta_nom_tilde(0) <= tol.eps_sw * (1 + 1e-9));
            CHECK(p.lambda_big_tilde >= tol.a_factor);
            const double others = std::max({1.0, p.r_max_tilde, p.delta_tilde.maxCoeff()});
            if (p.lambda_j_tilde >= others)
                CHECK(p.lambda_big_tilde >= tol.a_factor * p.lambda_j_tilde * (1 - 1e-15));
        }
    }
}

TEST_CASE("broken params fail validation") {
    auto p = prescribe(gen_sk7(5, 1), ProblemClass::SK7);
    auto q = p;
    q.d = 1.2;
    CHECK_THROWS_AS(q.validate(), InvalidInput);
    q = p;
    q.g_tilde(2) *= 1.01;
    CHECK_THROWS_AS(q.validate(), InvalidInput);
    q = p;
    q.lambda_j_tilde *= 2;
    CHECK_THROWS_AS(q.validate(), InvalidInput);
    Tolerances t;
    t.eps_uni = -0.1;
    CHECK_THROWS_AS(t.validate(), InvalidInput);
}

}
