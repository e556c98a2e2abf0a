#include <benchmark/benchmark.h>

#include "semistatic/dual.hpp"
#include "semistatic/geometry.hpp"
#include "semistatic/lp.hpp"
#include "semistatic/market.hpp"
#include "semistatic/primal.hpp"
#include "semistatic/utility.hpp"
#include "semistatic/verify.hpp"

using namespace semistatic;

namespace {

void BM_SolveSemiStaticLog(benchmark::State& state) {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    const Vector p = Vector::Constant(1, 1.0 / 6.0);
    for (auto _ : state) {
        PrimalSolution s = solve_u_tilde(m, u, 1.0, p);
        benchmark::DoNotOptimize(s.value);
    }
}
BENCHMARK(BM_SolveSemiStaticLog);

void BM_SolveSemiStaticPower(benchmark::State& state) {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::power(-1.0);
    const Vector p = Vector::Constant(1, 1.0 / 6.0);
    for (auto _ : state) {
        PrimalSolution s = solve_u_tilde(m, u, 1.0, p);
        benchmark::DoNotOptimize(s.value);
    }
}
BENCHMARK(BM_SolveSemiStaticPower);

void BM_SolvePiecewiseProgram(benchmark::State& state) {
    MarketModel m = builtin_market("s10");
    UtilityFunction u = UtilityFunction::builtin_s10();
    const Vector p = Vector::Constant(1, 0.1);
    for (auto _ : state) {
        PrimalSolution s = solve_u_tilde(m, u, 2.0, p);
        benchmark::DoNotOptimize(s.value);
    }
}
BENCHMARK(BM_SolvePiecewiseProgram);

void BM_SolveDual(benchmark::State& state) {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    const Vector p = Vector::Constant(1, 2.0 / 9.0);
    for (auto _ : state) {
        DualSolution s = solve_v_tilde(m, u, 1.0, p);
        benchmark::DoNotOptimize(s.value);
    }
}
BENCHMARK(BM_SolveDual);

void BM_MartingaleGeometry(benchmark::State& state) {
    MarketModel m = builtin_market("instance-a");
    for (auto _ : state) {
        MarketGeometry geo(m);
        benchmark::DoNotOptimize(geo.martingale_vertices().size());
    }
}
BENCHMARK(BM_MartingaleGeometry);

void BM_LargestFeasiblePosition(benchmark::State& state) {
    MarketModel m = builtin_market("instance-a");
    MarketGeometry geo(m);
    const Vector p = Vector::Constant(1, 1.0 / 6.0);
    for (auto _ : state) {
        auto pos = geo.largest_feasible_position(1.0, p);
        benchmark::DoNotOptimize(pos.m);
    }
}
BENCHMARK(BM_LargestFeasiblePosition);

void BM_MartingaleSimplex(benchmark::State& state) {
    MarketModel m = builtin_market("instance-a");
    LinearProgram lp = LinearProgram::make(m.num_terminals());
    for (auto& b : lp.lower_bounds) b = 0.0;
    lp.maximize = true;
    lp.objective = m.payoffs.col(0);
    lp.eq_lhs = m.martingale_system_lhs();
    lp.eq_rhs = m.martingale_system_rhs();
    for (auto _ : state) {
        LpResult r = solve_lp(lp);
        benchmark::DoNotOptimize(r.value);
    }
}
BENCHMARK(BM_MartingaleSimplex);

} // namespace

BENCHMARK_MAIN();
