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

#include "omtrir/plan_kernels.hpp"

#include <algorithm>

namespace omtrir::kernels {
namespace {

inline void update_one(PlanBlock& b, const double* cost, int rows, int cols, double gamma) {
  std::fill(b.col_sums, b.col_sums + cols, 0.0);
  double change = 0.0;
  for (int i = 0; i < rows; ++i) {
    double* p = b.plan + static_cast<std::ptrdiff_t>(i) * cols;
    const double* c = cost + static_cast<std::ptrdiff_t>(i) * cols;
    const double ai = b.alpha[i];
    double rs = 0.0;
    for (int j = 0; j < cols; ++j) {
      const double old = p[j];
      const double v = std::max(old + ai + b.beta[j] - gamma * c[j], 0.0);
      const double d = v - old;
      change += d * d;
      p[j] = v;
      rs += v;
      b.col_sums[j] += v;
    }
    b.row_sums[i] = rs;
  }
  b.change_sq = change;
}

}  // namespace

void update_plans_serial(std::span<PlanBlock> blocks, const double* cost, int rows,
                         int cols, double gamma) {
  for (auto& b : blocks) update_one(b, cost, rows, cols, gamma);
}

void update_plans_omp(std::span<PlanBlock> blocks, const double* cost, int rows,
                      int cols, double gamma) {
  const auto n = static_cast<std::ptrdiff_t>(blocks.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) update_one(blocks[k], cost, rows, cols, gamma);
}

}  // namespace omtrir::kernels
