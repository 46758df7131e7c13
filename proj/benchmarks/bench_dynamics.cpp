#include <benchmark/benchmark.h>

#include "kpo/classical.hpp"
#include "kpo/quantum.hpp"

using namespace kpo;

namespace {

struct Fixture {
    CouplingMatrix c;
    AnnealerParams p;
    DesignSolution d;
};

Fixture make(int n) {
    auto c = gen_sk7(n, 1);
    auto p = prescribe(c, ProblemClass::SK7, Tolerances::classical());
    auto d = solve_design(design_problem(c, p));
    return {std::move(c), std::move(p), std::move(d)};
}

// one dynamical RHS evaluation over a 128-trajectory batch
void BM_ClassicalRhs(benchmark::State& state) {
    const auto fx = make(static_cast<int>(state.range(0)));
    ClassicalConfig cfg = classical_config(fx.p, 128, 1);
    const auto sys = dynamical_system(fx.p, fx.d.f, cfg);
    Eigen::MatrixXcd a(sys.n(), 128), out;
    for (int q = 0; q < 128; ++q)
        a.col(q) = sample_initial(cfg, sys.n(), static_cast<std::uint64_t>(q));
    double t = 0.0;
    for (auto _ : state) {
        eom_rhs(sys, a, t, out);
        t += 1e-3;
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_ClassicalRhs)->Arg(8)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_QuantumApply(benchmark::State& state) {
    auto c = gen_sk7(2, 1);
    auto p = prescribe(c, ProblemClass::SK7, Tolerances::quantum(), *preset_overrides(2, 0.0));
    auto d = solve_design(design_problem(c, p));
    const auto model = state.range(0) ? QuantumModel::dynamical_model(p, d.f) : QuantumModel::static_model(c, p);
    const auto psi = model.space().coherent(Eigen::VectorXcd::Constant(2, {1.0, 0.5}));
    Eigen::VectorXcd out;
    double t = 0.0;
    for (auto _ : state) {
        model.apply(t, psi, out);
        t += 1e-4;
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_QuantumApply)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

} // namespace
