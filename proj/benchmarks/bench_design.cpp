#include <benchmark/benchmark.h>

#include "kpo/floquet.hpp"
#include "kpo/prescription.hpp"

using namespace kpo;

namespace {

DesignProblem sk7_problem(int n, std::uint64_t seed) {
    auto c = gen_sk7(n, seed);
    return design_problem(c, prescribe(c, ProblemClass::SK7));
}

void BM_SecondOrderSolve(benchmark::State& state) {
    const auto prob = sk7_problem(static_cast<int>(state.range(0)), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_design(prob, DesignMode::SecondOrder));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SecondOrderSolve)->RangeMultiplier(2)->Range(16, 256)->Unit(benchmark::kMillisecond)->Complexity();

void BM_FullOrderSolve(benchmark::State& state) {
    const auto prob = sk7_problem(static_cast<int>(state.range(0)), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_design(prob, DesignMode::FullOrder));
}
BENCHMARK(BM_FullOrderSolve)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_EffectiveCouplings(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto prob = sk7_problem(n, 2);
    const auto f = first_order_solution(prob);
    for (auto _ : state)
        benchmark::DoNotOptimize(effective_couplings(prob, f));
    state.SetComplexityN(n);
}
BENCHMARK(BM_EffectiveCouplings)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMillisecond)->Complexity();

void BM_ColumnGradient(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto prob = sk7_problem(n, 3);
    const auto f = first_order_solution(prob);
    for (auto _ : state)
        benchmark::DoNotOptimize(column_objective_full_gradient(prob, f, 1));
}
BENCHMARK(BM_ColumnGradient)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

} // namespace
