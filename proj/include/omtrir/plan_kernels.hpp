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

// Dense per-plan kernels used by the coupled transport solver. Each kernel
// comes in a serial reference form and an OpenMP form that parallelises over
// plans; both perform identical per-plan arithmetic, so results match bit for
// bit.

#include <span>

namespace omtrir::kernels {

// One row-major rows x cols transport plan plus its per-iteration vectors.
struct PlanBlock {
  double* plan = nullptr;
  const double* alpha = nullptr;  // rows
  const double* beta = nullptr;   // cols
  double* row_sums = nullptr;     // rows, output
  double* col_sums = nullptr;     // cols, output
  double change_sq = 0.0;         // output, ||P_new - P_old||_F^2
};

// P <- max(P + alpha 1' + 1 beta' - gamma * C, 0), accumulating the new row
// and column sums and the squared Frobenius change.
void update_plans_serial(std::span<PlanBlock> blocks, const double* cost, int rows,
                         int cols, double gamma);
void update_plans_omp(std::span<PlanBlock> blocks, const double* cost, int rows,
                      int cols, double gamma);

}  // namespace omtrir::kernels
