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

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace omtrir::lp {

struct Options {
  double feasibility_tolerance = 1e-9;
  double optimality_tolerance = 1e-10;
  double pivot_tolerance = 1e-11;
  int max_iterations = 1000000;
  // Basis inverse is rebuilt from scratch this often.
  int refactor_interval = 128;
  // Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_streak_limit = 50;
};

struct Result {
  Eigen::VectorXd x;
  Eigen::VectorXd duals;  // one per equality row, in the caller's row signs
  double objective = 0.0;
  int iterations = 0;
};

/// Exact two-phase revised simplex for
///     minimize c'x  subject to  A x = b,  x >= 0.
/// Redundant equality rows are allowed. Throws Error on infeasibility,
/// unboundedness or iteration exhaustion. Intended for small and medium
/// dense-basis problems (rows up to a few thousand).
Result solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
             const Eigen::VectorXd& c, const Options& options = {});

}  // namespace omtrir::lp
