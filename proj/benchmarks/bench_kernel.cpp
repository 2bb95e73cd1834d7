#include <benchmark/benchmark.h>

#include <random>

#include "pdekd/differentiation.hpp"
#include "pdekd/generators.hpp"
#include "pdekd/kernel_model.hpp"

namespace {

/// Random regression problem over B blocks on a square lattice.
pdekd::TermLibrary synthetic_library(int B, int p, int per_block) {
  const int side = static_cast<int>(std::ceil(std::sqrt(double(B))));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  pdekd::TermLibrary lib;
  for (int i = 0; i < p; ++i) {
    pdekd::TermDescriptor d;
    d.name = "f" + std::to_string(i);
    lib.terms.push_back(d);
  }
  const long n = long(B) * per_block;
  lib.design.resize(n, p);
  lib.target.resize(n);
  lib.x.resize(n);
  lib.y.resize(n);
  lib.t.resize(n);
  lib.target_field.assign(n, 0.0);
  lib.block_index.resize(n);
  lib.n_blocks = B;
  lib.block_coords.resize(B);
  Eigen::MatrixXd w(B, p);
  for (int b = 0; b < B; ++b) {
    lib.block_coords[b] = {double(b % side), double(b / side)};
    for (int c = 0; c < p; ++c) w(b, c) = normal(rng);
  }
  for (long j = 0; j < n; ++j) {
    const int b = static_cast<int>(j / per_block);
    lib.block_index[j] = b;
    lib.x[j] = lib.block_coords[b][0];
    lib.y[j] = lib.block_coords[b][1];
    lib.t[j] = double(j % per_block);
    double y = 0;
    for (int c = 0; c < p; ++c) {
      lib.design(j, c) = normal(rng);
      y += lib.design(j, c) * w(b, c);
    }
    lib.target(j) = y + 0.01 * normal(rng);
  }
  return lib;
}

void BM_kernel_fit(benchmark::State& state) {
  const int B = static_cast<int>(state.range(0));
  pdekd::TermLibrary lib = synthetic_library(B, 6, 12);
  pdekd::KernelConfig cfg;
  cfg.radius = 3.0;
  cfg.gamma = 1.0;
  cfg.dense_threshold = 0;
  pdekd::KernelGraph graph = pdekd::build_kernel_graph(lib, cfg);
  std::vector<int> active = {0, 1, 2, 3, 4, 5};
  for (auto _ : state) {
    auto field = pdekd::fit(lib, graph, active, cfg);
    benchmark::DoNotOptimize(field.W.data());
  }
}
BENCHMARK(BM_kernel_fit)->Arg(256)->Arg(512)->Arg(1024)->Arg(2048);

void BM_build_graph(benchmark::State& state) {
  const int B = static_cast<int>(state.range(0));
  pdekd::TermLibrary lib = synthetic_library(B, 4, 4);
  pdekd::KernelConfig cfg;
  cfg.radius = 3.0;
  for (auto _ : state) {
    auto g = pdekd::build_kernel_graph(lib, cfg);
    benchmark::DoNotOptimize(g.n_blocks);
  }
}
BENCHMARK(BM_build_graph)->Arg(1024)->Arg(4096);

void BM_grid_derivative(benchmark::State& state) {
  auto [set, truth] = pdekd::gen_chafee_infante(301, 201, 3);
  (void)truth;
  pdekd::DerivSpec spec{"u", pdekd::Axis::x, 2};
  for (auto _ : state) {
    auto v = pdekd::differentiate_grid(set, spec);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_grid_derivative);

}  // namespace

BENCHMARK_MAIN();
