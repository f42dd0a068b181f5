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

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace omtrir {

/// Default diagonal offset of the transport cost, in squared samples.
inline constexpr double kDefaultEpsilon = 0.01;
/// Relative tolerance on total-mass equality between transport marginals.
inline constexpr double kMassTolerance = 1e-6;

// Squared tap-index distance plus a constant epsilon:
//   values(i, j) = (i - j)^2 + epsilon.
struct CostMatrix {
  Eigen::MatrixXd values;
  double epsilon = 0.0;
};

CostMatrix cost_matrix(int n0, int nk, double epsilon);

// Nonnegative coupling; row sums are the first marginal, column sums the
// second.
struct TransportPlan {
  Eigen::MatrixXd mass;
};

struct TransportSolution {
  double value = 0.0;
  TransportPlan plan;
  // Dual potentials with u_i + v_j <= cost(i, j), equality on the support.
  Eigen::VectorXd row_potential;
  Eigen::VectorXd col_potential;
  int pivots = 0;
};

/// Exact transportation simplex for an arbitrary cost matrix. Zero-mass bins
/// are pruned before solving; totals must agree to kMassTolerance relative
/// and are renormalised to their mean.
TransportSolution solve_transport(const Eigen::VectorXd& supply,
                                  const Eigen::VectorXd& demand,
                                  const Eigen::MatrixXd& cost);

/// Discrete Monge-Kantorovich distance between two nonnegative tap vectors.
/// Throws Error("unbalanced marginals") if the total masses differ.
TransportSolution dot_distance(const Eigen::VectorXd& h0, const Eigen::VectorXd& hk,
                               const CostMatrix& cost);

/// Optimal transport under the grid cost (i - j)^2 + epsilon between
/// nonnegative vectors of (nearly) equal mass. The cost is convex in i - j, so
/// the monotone (northwest-corner) coupling is optimal; runs in O(n0 + nk).
/// Writes the plan when `plan` is non-null.
double monotone_transport(std::span<const double> supply, std::span<const double> demand,
                          double epsilon, Eigen::MatrixXd* plan = nullptr);

struct SignedSplit {
  Eigen::VectorXd positive;
  Eigen::VectorXd negative;

  Eigen::VectorXd reconstruct() const { return positive - negative; }
};

/// Minimal-mass split: positive = max(h, 0), negative = max(-h, 0).
SignedSplit split_signed(const Eigen::VectorXd& h);

/// dOT(h1+, h2+) + dOT(h1-, h2-) under the epsilon-augmented cost.
double signed_dot(const Eigen::VectorXd& h1, const Eigen::VectorXd& h2, double epsilon);

struct BarycenterResult {
  Eigen::VectorXd h0;
  double value = 0.0;
  // plans[k] couples h0 (rows) with hs[k] (columns).
  std::vector<TransportPlan> plans;
};

/// Fixed-grid transport barycenter: argmin_{h >= 0} sum_k dOT(h, hs[k]),
/// solved exactly as a single linear program over (h, M_1..M_K).
BarycenterResult barycenter(std::span<const Eigen::VectorXd> hs, double epsilon);

}  // namespace omtrir
