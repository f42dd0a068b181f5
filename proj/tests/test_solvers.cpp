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

#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "omtrir/error.hpp"
#include "omtrir/plan_kernels.hpp"
#include "omtrir/room_sim.hpp"
#include "omtrir/solvers.hpp"
#include "omtrir/transport.hpp"

using namespace omtrir;
using omtrir::testing::equal_sum_filters;
using omtrir::testing::random_matrix;
using omtrir::testing::random_vector;
using omtrir::testing::rel_diff;
using omtrir::testing::tiny_coupled;

namespace {

double lasso_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda,
                       const Eigen::VectorXd& z) {
  return (b - A * z).squaredNorm() + lambda * z.lpNorm<1>();
}

// Plain proximal gradient at a quarter of the safe step.
Eigen::VectorXd lasso_reference(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                double lambda, long iterations) {
  const double L = 2.0 * A.operatorNorm() * A.operatorNorm();
  const double step = 0.25 / L;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(A.cols());
  const Eigen::MatrixXd gram = A.transpose() * A;
  const Eigen::VectorXd atb = A.transpose() * b;
  for (long it = 0; it < iterations; ++it) {
    const Eigen::VectorXd v = z - step * 2.0 * (gram * z - atb);
    z = v.array().sign() * (v.array().abs() - step * lambda).cwiseMax(0.0);
  }
  return z;
}

SolverSettings tight_settings() {
  SolverSettings s;
  s.max_iterations = 20000;
  s.primal_tolerance = 1e-8;
  s.dual_tolerance = 1e-8;
  return s;
}

// Star-feasible random plans: every plan k shares the same row sums.
std::vector<TransportPlan> random_star_plans(std::mt19937_64& rng, int n, int K) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TransportPlan> plans;
  Eigen::VectorXd rows[2];
  for (int k = 0; k < K; ++k) {
    for (int s = 0; s < 2; ++s) {
      Eigen::MatrixXd m(n, n);
      for (auto& x : m.reshaped()) x = 0.2 * u(rng);
      if (k == 0) {
        rows[s] = m.rowwise().sum();
      } else {
        m = (rows[s].array() / m.rowwise().sum().array()).matrix().asDiagonal() * m;
      }
      plans.push_back({m});
    }
  }
  return plans;
}

}  // namespace

TEST_CASE("solve_quadratic: examples") {
  const Eigen::VectorXd b = Eigen::Vector3d(1.0, -2.0, 0.5);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  CHECK(solve_quadratic(I, b, 0.0).isApprox(b, 1e-15));
  CHECK(solve_quadratic(I, b, 1.0).isApprox(b / 2.0, 1e-15));

  std::mt19937_64 rng(1);
  const Eigen::MatrixXd A = random_matrix(rng, 50, 20);
  const Eigen::VectorXd y = random_vector(rng, 50);
  const Eigen::VectorXd z = solve_quadratic(A, y, 0.0);
  CHECK((A.transpose() * (y - A * z)).norm() <= 1e-8);
  const Eigen::VectorXd zr = solve_quadratic(A, y, 0.7);
  CHECK((A.transpose() * (y - A * zr) - 0.7 * zr).norm() <= 1e-8);
}

TEST_CASE("solve_quadratic: errors") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 2);
  A(0, 0) = 1.0;
  CHECK_THROWS_WITH_AS(solve_quadratic(A, Eigen::VectorXd::Ones(4), 0.0),
                       "ill-conditioned; supply ridge", Error);
  CHECK_NOTHROW(solve_quadratic(A, Eigen::VectorXd::Ones(4), 1e-3));
  CHECK_THROWS_AS(solve_quadratic(A, Eigen::VectorXd::Ones(4), -1.0), Error);
  CHECK_THROWS_AS(solve_quadratic(Eigen::MatrixXd(4, 0), Eigen::VectorXd::Ones(4), 1.0), Error);
}

TEST_CASE("solve_lasso: identity design soft-thresholds at lambda/2") {
  Eigen::VectorXd b(5);
  b << 3.0, -0.2, 0.5, -1.5, 0.0;
  const double lambda = 1.0;
  const auto [z, report] =
      solve_lasso(Eigen::MatrixXd::Identity(5, 5), b, lambda, SolverSettings{});
  for (int i = 0; i < 5; ++i) {
    const double expect = std::copysign(std::max(std::abs(b[i]) - lambda / 2, 0.0), b[i]);
    CHECK(z[i] == doctest::Approx(expect).epsilon(1e-6));
  }
  CHECK(report.converged);
}

TEST_CASE("solve_lasso: lambda above the critical value gives zero") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd A = random_matrix(rng, 30, 10);
  const Eigen::VectorXd b = random_vector(rng, 30);
  const double crit = 2.0 * (A.transpose() * b).cwiseAbs().maxCoeff();
  CHECK(solve_lasso(A, b, crit, SolverSettings{}).first.isZero(0.0));
  CHECK(solve_lasso(A, b, 3.0 * crit, SolverSettings{}).first.isZero(0.0));
  CHECK_FALSE(solve_lasso(A, b, 0.5 * crit, SolverSettings{}).first.isZero(0.0));
}

TEST_CASE("solve_lasso: matches a long-run proximal gradient reference") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::MatrixXd A = random_matrix(rng, 12, 6);
    const Eigen::VectorXd b = random_vector(rng, 12);
    const double lambda = 0.5 + trial;
    SolverSettings s;
    s.primal_tolerance = s.dual_tolerance = 1e-10;
    s.max_iterations = 100000;
    const auto [z, report] = solve_lasso(A, b, lambda, s);
    const Eigen::VectorXd ref = lasso_reference(A, b, lambda, 1000000);
    CHECK(rel_diff(lasso_objective(A, b, lambda, z), lasso_objective(A, b, lambda, ref)) <= 1e-6);
    CHECK(report.objective_value ==
          doctest::Approx(lasso_objective(A, b, lambda, z)).epsilon(1e-12));
  }
}

TEST_CASE("solve_lasso: errors and budget exhaustion") {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(solve_lasso(A, Eigen::Vector2d(1, 1), 0.0, SolverSettings{}), Error);
  CHECK_THROWS_AS(solve_lasso(A, Eigen::Vector3d(1, 1, 1), 1.0, SolverSettings{}), Error);
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd B = random_matrix(rng, 40, 30);
  SolverSettings s;
  s.max_iterations = 2;
  s.primal_tolerance = s.dual_tolerance = 1e-14;
  const auto [z, report] = solve_lasso(B, random_vector(rng, 40), 0.1, s);
  CHECK_FALSE(report.converged);
  CHECK(report.iterations_used <= 2);
  CHECK(z.allFinite());
}

TEST_CASE("solver settings validation") {
  SolverSettings s;
  CHECK_NOTHROW(s.validate());
  s.max_iterations = 0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.primal_tolerance = 0.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.penalty_parameter = -1.0;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("plan kernels: serial and OpenMP updates agree bit for bit") {
  std::mt19937_64 rng(17);
  const int rows = 23, cols = 19, K = 6;
  const Eigen::MatrixXd cost = cost_matrix(rows, cols, 0.01).values.transpose();
  std::vector<Eigen::MatrixXd> plans(K), alphas(K), betas(K);
  for (int k = 0; k < K; ++k) {
    plans[k] = random_matrix(rng, cols, rows).cwiseAbs();
    alphas[k] = random_vector(rng, rows);
    betas[k] = random_vector(rng, cols);
  }
  auto run = [&](bool parallel) {
    std::vector<Eigen::MatrixXd> p = plans;
    std::vector<Eigen::VectorXd> rs(K, Eigen::VectorXd(rows)), cs(K, Eigen::VectorXd(cols));
    std::vector<kernels::PlanBlock> blocks(K);
    for (int k = 0; k < K; ++k) {
      blocks[k] = {p[k].data(), alphas[k].data(), betas[k].data(), rs[k].data(), cs[k].data()};
    }
    if (parallel) {
      kernels::update_plans_omp(blocks, cost.data(), rows, cols, 0.3);
    } else {
      kernels::update_plans_serial(blocks, cost.data(), rows, cols, 0.3);
    }
    std::vector<double> out;
    for (int k = 0; k < K; ++k) {
      out.insert(out.end(), p[k].data(), p[k].data() + p[k].size());
      out.insert(out.end(), rs[k].begin(), rs[k].end());
      out.insert(out.end(), cs[k].begin(), cs[k].end());
      out.push_back(blocks[k].change_sq);
    }
    return out;
  };
  const auto a = run(false), b = run(true);
  CHECK(a == b);
  for (int k = 0; k < K; ++k) CHECK(*std::min_element(a.begin(), a.end()) >= 0.0);
}

TEST_CASE("coupled solver: matches the oracle on tiny instances") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    for (Topology topo : {Topology::Star, Topology::Path}) {
      const CoupledProblem p = tiny_coupled(rng, topo);
      const auto sol = solve_coupled_transport_ls(p, tight_settings());
      const double ref = oracle_solve(p);
      CHECK(rel_diff(sol.report.objective_value, ref) <= 1e-4);
      CHECK(sol.report.objective_value >= ref - 1e-8 * ref);
    }
  }
}

TEST_CASE("coupled solver: reported objective, estimates and plans are consistent") {
  std::mt19937_64 rng(32);
  for (Topology topo : {Topology::Star, Topology::Path}) {
    const CoupledProblem p = tiny_coupled(rng, topo, 10, 20, 3, 0.3);
    const auto sol = solve_coupled_transport_ls(p, SolverSettings{});
    REQUIRE(sol.estimates.size() == 3);
    REQUIRE(sol.plans.size() == (topo == Topology::Star ? 6u : 4u));
    CHECK(coupled_objective(p, sol.plans) ==
          doctest::Approx(sol.report.objective_value).epsilon(1e-10));
    for (const auto& plan : sol.plans) CHECK(plan.mass.minCoeff() >= 0.0);
    auto col_signal = [&](int e) -> Eigen::VectorXd {
      return sol.plans[2 * e].mass.colwise().sum().transpose() -
             sol.plans[2 * e + 1].mass.colwise().sum().transpose();
    };
    auto row_signal = [&](int e) -> Eigen::VectorXd {
      return sol.plans[2 * e].mass.rowwise().sum() - sol.plans[2 * e + 1].mass.rowwise().sum();
    };
    const double tol = 1e-5 * (1.0 + sol.estimates[0].norm());
    if (topo == Topology::Star) {
      for (int k = 0; k < 3; ++k) {
        CHECK((col_signal(k) - sol.estimates[k]).norm() <= tol);
        CHECK((sol.plans[2 * k].mass.rowwise().sum() - sol.barycenter.positive).norm() <= tol);
        CHECK((sol.plans[2 * k + 1].mass.rowwise().sum() - sol.barycenter.negative).norm() <=
              tol);
      }
      CHECK(sol.barycenter.positive.minCoeff() >= 0.0);
      CHECK(sol.barycenter.negative.minCoeff() >= 0.0);
    } else {
      CHECK((col_signal(0) - sol.estimates[0]).norm() <= tol);
      for (int l = 1; l < 3; ++l) CHECK((row_signal(l - 1) - sol.estimates[l]).norm() <= tol);
      CHECK((col_signal(1) - sol.estimates[1]).norm() <= tol);
    }
    // Coupled signals share one tap sum.
    for (int k = 1; k < 3; ++k) {
      CHECK(sol.estimates[k].sum() == doctest::Approx(sol.estimates[0].sum()).epsilon(1e-6));
    }
  }
}

TEST_CASE("coupled solver: objective history is nonincreasing") {
  std::mt19937_64 rng(33);
  for (Topology topo : {Topology::Star, Topology::Path}) {
    const CoupledProblem p = tiny_coupled(rng, topo, 12, 30, 4, 2.0);
    SolverSettings s;
    s.check_interval = 3;
    const auto sol = solve_coupled_transport_ls(p, s);
    const auto& h = sol.report.objective_history;
    REQUIRE(h.size() >= 2);
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] + 1e-9);
    CHECK(sol.report.objective_value == doctest::Approx(h.back()).epsilon(1e-12));
    double zero = 0.0;
    for (const auto& y : p.targets) zero += y.squaredNorm();
    CHECK(h.front() <= zero + 1e-12);
  }
}

TEST_CASE("coupled solver: vanishing lambda recovers the decoupled least squares") {
  std::mt19937_64 rng(34);
  for (Topology topo : {Topology::Star, Topology::Path}) {
    CoupledProblem p;
    p.design = convolution_matrix(white_excitation(40, 5), 8);
    const auto truths = equal_sum_filters(rng, 3, 8, 0.6);
    for (const auto& h : truths) p.targets.push_back(p.design * h);
    p.topology = topo;
    p.lambda = 1e-8;
    const auto sol = solve_coupled_transport_ls(p, tight_settings());
    for (int k = 0; k < 3; ++k) {
      const Eigen::VectorXd ls = solve_quadratic(p.design, p.targets[k], 0.0);
      CHECK((sol.estimates[k] - ls).norm() <= 1e-3);
    }
  }
}

TEST_CASE("coupled solver: identical targets give identical estimates under a strong star") {
  std::mt19937_64 rng(35);
  CoupledProblem p = tiny_coupled(rng, Topology::Star, 8, 16, 1, 50.0);
  p.targets.assign(4, p.targets[0]);
  const auto sol = solve_coupled_transport_ls(p, tight_settings());
  for (int k = 1; k < 4; ++k) CHECK((sol.estimates[k] - sol.estimates[0]).norm() <= 1e-3);
}

TEST_CASE("coupled solver: deterministic, warm-startable, and serial kernels agree") {
  std::mt19937_64 rng(36);
  const CoupledProblem p = tiny_coupled(rng, Topology::Star, 10, 20, 3, 0.4);
  SolverSettings s;
  const auto a = solve_coupled_transport_ls(p, s);
  const auto b = solve_coupled_transport_ls(p, s);
  for (int k = 0; k < 3; ++k) CHECK(a.estimates[k] == b.estimates[k]);
  CHECK(a.report.objective_history == b.report.objective_history);

  s.parallel_kernels = false;
  const auto c = solve_coupled_transport_ls(p, s);
  for (int k = 0; k < 3; ++k) CHECK(a.estimates[k] == c.estimates[k]);

  const auto warm = solve_coupled_transport_ls(p, SolverSettings{}, &a);
  CHECK(warm.report.objective_value <= a.report.objective_value * (1.0 + 1e-6));
  CHECK(warm.report.iterations_used <= a.report.iterations_used);
}

TEST_CASE("coupled solver: errors") {
  std::mt19937_64 rng(37);
  CoupledProblem p = tiny_coupled(rng, Topology::Star);
  p.lambda = 0.0;
  CHECK_THROWS_AS(solve_coupled_transport_ls(p, SolverSettings{}), Error);
  p.lambda = 1.0;
  p.epsilon = -0.1;
  CHECK_THROWS_AS(solve_coupled_transport_ls(p, SolverSettings{}), Error);
  p.epsilon = 0.01;
  p.targets[1] = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(solve_coupled_transport_ls(p, SolverSettings{}), Error);
}

TEST_CASE("oracle: zero lambda equals the least-squares optimum") {
  std::mt19937_64 rng(38);
  for (Topology topo : {Topology::Star, Topology::Path}) {
    CoupledProblem p;
    p.design = convolution_matrix(random_vector(rng, 12), 6);
    p.topology = topo;
    p.lambda = 0.0;
    double ls_total = 0.0;
    for (int k = 0; k < 2; ++k) {
      // Shift the target along X*1 so every LS solution sums to 0.3.
      Eigen::VectorXd y = random_vector(rng, p.design.rows());
      const Eigen::VectorXd z = solve_quadratic(p.design, y, 0.0);
      y += p.design * Eigen::VectorXd::Constant(6, (0.3 - z.sum()) / 6.0);
      const Eigen::VectorXd z2 = solve_quadratic(p.design, y, 0.0);
      REQUIRE(z2.sum() == doctest::Approx(0.3));
      ls_total += (y - p.design * z2).squaredNorm();
      p.targets.push_back(y);
    }
    CHECK(ls_total > 0.1);
    CHECK(oracle_solve(p) == doctest::Approx(ls_total).epsilon(1e-6));
  }
}

TEST_CASE("oracle: never above a feasible point") {
  std::mt19937_64 rng(39);
  for (int trial = 0; trial < 5; ++trial) {
    const CoupledProblem star = tiny_coupled(rng, Topology::Star, 6, 10, 3, 0.2);
    const double ref = oracle_solve(star);
    for (int j = 0; j < 5; ++j) {
      CHECK(ref <= coupled_objective(star, random_star_plans(rng, 6, 3)) + 1e-9);
    }
    std::vector<TransportPlan> zero(6, {Eigen::MatrixXd::Zero(6, 6)});
    CHECK(ref <= coupled_objective(star, zero) + 1e-9);
  }
}

TEST_CASE("oracle: size guard") {
  std::mt19937_64 rng(40);
  const CoupledProblem p = tiny_coupled(rng, Topology::Star, 30, 40, 3);
  CHECK_THROWS_AS(oracle_solve(p), Error);
}
