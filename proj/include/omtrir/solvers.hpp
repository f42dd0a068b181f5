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

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "omtrir/transport.hpp"

namespace omtrir {

struct SolverSettings {
  int max_iterations = 5000;
  double primal_tolerance = 1e-5;
  double dual_tolerance = 1e-5;
  double penalty_parameter = 1.0;
  std::uint64_t seed = 0;
  // Iterations between feasible-point checkpoints of the coupled solver.
  int check_interval = 10;
  // Use the OpenMP plan kernels (the serial ones otherwise).
  bool parallel_kernels = true;

  void validate() const;
};

struct SolveReport {
  int iterations_used = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective_value = 0.0;
  bool converged = false;
  // Accepted objective after each checkpoint; nonincreasing.
  std::vector<double> objective_history;
};

/// argmin ||b - A z||^2 + ridge ||z||^2 via Cholesky of the normal equations.
/// Throws Error("ill-conditioned; supply ridge") when ridge == 0 and A'A is
/// numerically singular.
Eigen::VectorXd solve_quadratic(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                double ridge);

// Factorised (G + ridge I) for repeated right-hand sides G = A'A.
class RidgeFactor {
 public:
  RidgeFactor(const Eigen::MatrixXd& gram, double ridge);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Lasso: minimize ||b - A z||^2 + lambda ||z||_1 with accelerated proximal
/// gradient and backtracking. Returns the best iterate; `converged` is false
/// if the KKT tolerances were not met within max_iterations.
std::pair<Eigen::VectorXd, SolveReport> solve_lasso(const Eigen::MatrixXd& A,
                                                    const Eigen::VectorXd& b, double lambda,
                                                    const SolverSettings& settings);

// Same problem in Gram form (G = A'A, atb = A'b, btb = b'b), with an optional
// starting point.
std::pair<Eigen::VectorXd, SolveReport> solve_lasso_gram(
    const Eigen::MatrixXd& gram, const Eigen::VectorXd& atb, double btb, double lambda,
    const SolverSettings& settings, const Eigen::VectorXd* start = nullptr);

enum class Topology {
  Star,  // every data node transports to one free barycenter node
  Path,  // node l transports to node l-1, l = 1..K-1
};

// Sum_k ||y_k - X h_k||^2 + lambda * (transport penalty over the topology),
// each transport term being the signed distance under the epsilon cost.
struct CoupledProblem {
  Eigen::MatrixXd design;                // X, shared by every microphone
  std::vector<Eigen::VectorXd> targets;  // y_k
  Topology topology = Topology::Star;
  double lambda = 1.0;
  double epsilon = kDefaultEpsilon;

  int num_taps() const { return static_cast<int>(design.cols()); }
  int num_signals() const { return static_cast<int>(targets.size()); }
};

struct CoupledState;  // solver internals, reused for warm starts

struct CoupledSolution {
  std::vector<Eigen::VectorXd> estimates;  // h_k
  SignedSplit barycenter;                  // star topology only
  // Two plans (positive, negative) per coupling term. Star: term k couples
  // h0 (rows) with h_k (columns). Path: term l-1 couples h_l (rows) with
  // h_{l-1} (columns).
  std::vector<TransportPlan> plans;
  SolveReport report;
  std::shared_ptr<const CoupledState> state;
};

/// Alternating-direction solver for the coupled transport-regularised
/// least-squares program. All plans stay elementwise nonnegative; the
/// returned point is the best feasible checkpoint.
CoupledSolution solve_coupled_transport_ls(const CoupledProblem& problem,
                                           const SolverSettings& settings,
                                           const CoupledSolution* warm_start = nullptr);

/// Objective of a feasible point given by plans laid out as in
/// CoupledSolution::plans, with h_k taken from the plan marginals.
double coupled_objective(const CoupledProblem& problem, std::span<const TransportPlan> plans);

struct OracleOptions {
  long max_iterations = 1000000;
  double tolerance = 1e-10;
};

/// Independent reference for tiny instances: accelerated projected gradient
/// over the stacked plans with an exact projection onto the marginal
/// constraints. Throws if the problem has more than 5000 variables.
double oracle_solve(const CoupledProblem& problem, const OracleOptions& options = {});

}  // namespace omtrir
