// Copyright 2026 The omtrir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial vs OpenMP plan update kernels, plus one full coupled solve.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "omtrir/plan_kernels.hpp"
#include "omtrir/room_sim.hpp"
#include "omtrir/solvers.hpp"
#include "omtrir/transport.hpp"

namespace {

using omtrir::kernels::PlanBlock;

struct Workload {
  int n;
  int blocks;
  Eigen::MatrixXd cost;
  std::vector<Eigen::MatrixXd> plans;
  std::vector<Eigen::VectorXd> alpha, beta, rows, cols;
  std::vector<PlanBlock> view;

  Workload(int n_, int blocks_) : n(n_), blocks(blocks_) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    cost = omtrir::cost_matrix(n, n, omtrir::kDefaultEpsilon).values;
    for (int k = 0; k < blocks; ++k) {
      plans.push_back(Eigen::MatrixXd::NullaryExpr(n, n, [&] { return std::abs(u(rng)); }));
      alpha.push_back(Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); }));
      beta.push_back(Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); }));
      rows.emplace_back(n);
      cols.emplace_back(n);
    }
    for (int k = 0; k < blocks; ++k) {
      view.push_back({plans[k].data(), alpha[k].data(), beta[k].data(), rows[k].data(),
                      cols[k].data()});
    }
  }
};

template <bool Parallel>
void BM_PlanUpdate(benchmark::State& state) {
  Workload w(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    if constexpr (Parallel) {
      omtrir::kernels::update_plans_omp(w.view, w.cost.data(), w.n, w.n, 1e-3);
    } else {
      omtrir::kernels::update_plans_serial(w.view, w.cost.data(), w.n, w.n, 1e-3);
    }
    benchmark::DoNotOptimize(w.plans.front().data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * w.blocks * w.n * w.n);
}

// Two plans (positive, negative) per microphone.
void PlanArgs(benchmark::internal::Benchmark* b) {
  for (int n : {64, 128, 256}) {
    for (int k : {2, 5, 8}) b->Args({n, 2 * k});
  }
}

BENCHMARK(BM_PlanUpdate<false>)->Name("plan_update/serial")->Apply(PlanArgs);
BENCHMARK(BM_PlanUpdate<true>)->Name("plan_update/omp")->Apply(PlanArgs);

void BM_CoupledSolve(benchmark::State& state) {
  omtrir::RoomScene scene;
  scene.mic_positions = omtrir::circular_array({2.0, 1.5, 2.0}, 0.2, 5);
  scene.reflection_coefficients.fill(omtrir::sabine_reflection_coefficient(scene.dimensions, 0.5));
  const int n = static_cast<int>(state.range(0));
  const auto rirs = omtrir::simulate_rirs(scene, n);
  const auto obs = omtrir::observe(omtrir::synthesize_excitation(n + 100, 7350.0, 1), rirs, 20.0, 2);
  omtrir::CoupledProblem p;
  p.design = omtrir::convolution_matrix(obs.excitation, n);
  p.targets = obs.received;
  p.lambda = 0.1;
  omtrir::SolverSettings s;
  s.max_iterations = 200;
  s.parallel_kernels = state.range(1) != 0;
  for (auto _ : state) {
    auto sol = omtrir::solve_coupled_transport_ls(p, s);
    benchmark::DoNotOptimize(sol.report.objective_value);
  }
}

BENCHMARK(BM_CoupledSolve)
    ->Name("coupled_solve_200_iterations")
    ->ArgNames({"n_taps", "omp"})
    ->Args({128, 0})
    ->Args({128, 1})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
