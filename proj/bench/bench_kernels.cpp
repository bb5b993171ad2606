#include <benchmark/benchmark.h>

#include "spi/amplitude.hpp"

using namespace spi;

namespace {

const green::GreenRep& problem(int d) {
  static const green::GreenRep one = [] {
    classical::Problem p;
    p.dim = 1;
    p.lagrangian = expr::parse("v^2/(2*q^2)", 1);
    p.t0 = 0;
    p.t1 = 1;
    p.q0 = Eigen::VectorXd::Constant(1, 1.0);
    p.q1 = Eigen::VectorXd::Constant(1, M_E);
    return green::GreenRep::build(classical::solve_bvp(p));
  }();
  static const green::GreenRep two = [] {
    classical::Problem p;
    p.dim = 2;
    p.lagrangian = expr::parse("0.5*(exp(0.3*q1)*v1^2 + exp(-0.3*q1)*v2^2)", 2);
    p.t0 = 0;
    p.t1 = 1;
    p.q0 = Eigen::Vector2d(0.2, -0.1);
    p.q1 = Eigen::Vector2d(0.5, 0.4);
    return green::GreenRep::build(classical::solve_bvp(p));
  }();
  return d == 1 ? one : two;
}

const std::vector<kernels::Network> kOrderOne{{1, {{0, 0}, {0, 0}}, {}},
                                              {2, {{0, 1}, {0, 1}, {0, 1}}, {}},
                                              {2, {{0, 0}, {0, 1}, {1, 1}}, {}}};

void BM_KernelParallel(benchmark::State& st) {
  kernels::QuadConfig q;
  q.order = static_cast<int>(st.range(1));
  const auto& g = problem(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::evaluate(kOrderOne, g, q));
}

void BM_KernelSerial(benchmark::State& st) {
  kernels::QuadConfig q;
  q.order = static_cast<int>(st.range(1));
  q.parallel = false;
  const auto& g = problem(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::evaluate(kOrderOne, g, q));
}

void BM_Reference(benchmark::State& st) {
  kernels::QuadConfig q;
  q.order = static_cast<int>(st.range(1));
  const auto& g = problem(static_cast<int>(st.range(0)));
  for (auto _ : st)
    for (const auto& n : kOrderOne) benchmark::DoNotOptimize(kernels::evaluate_reference(n, g, q));
}

void BM_AssembleOrderTwo(benchmark::State& st) {
  kernels::QuadConfig q;
  q.order_high = static_cast<int>(st.range(0));
  const auto& g = problem(1);
  for (auto _ : st) benchmark::DoNotOptimize(amplitude::assemble(g, 2, q, 0));
}

}  // namespace

BENCHMARK(BM_KernelParallel)->Args({1, 16})->Args({1, 32})->Args({2, 16})->Args({2, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelSerial)->Args({1, 16})->Args({1, 32})->Args({2, 16})->Args({2, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Reference)->Args({1, 16})->Args({2, 8})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleOrderTwo)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
