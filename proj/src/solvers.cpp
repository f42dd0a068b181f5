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

#include "omtrir/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "omtrir/error.hpp"

namespace omtrir {

void SolverSettings::validate() const {
  if (max_iterations < 1) throw Error("max_iterations must be at least 1");
  if (!(primal_tolerance > 0.0) || !(dual_tolerance > 0.0)) {
    throw Error("solver tolerances must be positive");
  }
  if (!(penalty_parameter > 0.0)) throw Error("penalty_parameter must be positive");
  if (check_interval < 1) throw Error("check_interval must be at least 1");
}

RidgeFactor::RidgeFactor(const Eigen::MatrixXd& gram, double ridge) {
  if (!(ridge >= 0.0)) throw Error("ridge must be nonnegative");
  Eigen::MatrixXd m = gram;
  m.diagonal().array() += ridge;
  llt_.compute(m);
  // rcond() estimates the reciprocal condition number of the factored matrix.
  if (llt_.info() != Eigen::Success || (ridge == 0.0 && llt_.rcond() < 1e-13)) {
    throw Error("ill-conditioned; supply ridge");
  }
}

Eigen::VectorXd solve_quadratic(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                double ridge) {
  if (A.cols() < 1) throw Error("design matrix needs at least one column");
  if (A.rows() != b.size()) throw Error("design matrix and target sizes differ");
  const Eigen::MatrixXd gram = A.transpose() * A;
  return RidgeFactor(gram, ridge).solve(A.transpose() * b);
}

namespace {

double soft(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct LassoModel {
  const Eigen::MatrixXd& gram;
  const Eigen::VectorXd& atb;
  double btb;
  double lambda;

  double smooth(const Eigen::VectorXd& z) const {
    return z.dot(gram * z) - 2.0 * atb.dot(z) + btb;
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const {
    return 2.0 * (gram * z - atb);
  }
  double objective(const Eigen::VectorXd& z) const {
    return smooth(z) + lambda * z.lpNorm<1>();
  }
  // Largest violation of 0 in grad + lambda * subdifferential(|z|).
  double kkt_violation(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd g = gradient(z);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double v = z[i] != 0.0 ? std::abs(g[i] + lambda * (z[i] > 0 ? 1.0 : -1.0))
                                   : std::max(0.0, std::abs(g[i]) - lambda);
      worst = std::max(worst, v);
    }
    return worst;
  }
};

}  // namespace

std::pair<Eigen::VectorXd, SolveReport> solve_lasso_gram(
    const Eigen::MatrixXd& gram, const Eigen::VectorXd& atb, double btb, double lambda,
    const SolverSettings& settings, const Eigen::VectorXd* start) {
  settings.validate();
  if (!(lambda > 0.0)) throw Error("lasso lambda must be positive");
  const LassoModel model{gram, atb, btb, lambda};
  const Eigen::Index n = atb.size();

  Eigen::VectorXd z = start != nullptr ? *start : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v = z;
  double t = 1.0;
  // Initial curvature guess from the Gram diagonal; backtracking corrects it.
  double L = std::max(2.0 * gram.diagonal().maxCoeff(), 1e-12);
  double obj = model.objective(z);
  Eigen::VectorXd best = z;
  double best_obj = obj;
  const double kkt_scale = 1.0 + 2.0 * atb.cwiseAbs().maxCoeff();

  SolveReport report;
  for (int it = 1; it <= settings.max_iterations; ++it) {
    const Eigen::VectorXd g = model.gradient(v);
    const double fv = model.smooth(v);
    Eigen::VectorXd next(n);
    while (true) {
      for (Eigen::Index i = 0; i < n; ++i) next[i] = soft(v[i] - g[i] / L, lambda / L);
      const Eigen::VectorXd d = next - v;
      if (model.smooth(next) <= fv + g.dot(d) + 0.5 * L * d.squaredNorm() + 1e-12 * std::abs(fv)) {
        break;
      }
      L *= 2.0;
    }
    const double next_obj = model.objective(next);
    const double step = (next - z).norm() / (1.0 + z.norm());
    if (next_obj > obj) {
      // Function-value restart: drop momentum and retry from the last iterate.
      v = z;
      t = 1.0;
      report.iterations_used = it;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    v = next + ((t - 1.0) / t_next) * (next - z);
    t = t_next;
    z = next;
    obj = next_obj;
    if (obj < best_obj) {
      best_obj = obj;
      best = z;
    }
    report.iterations_used = it;
    report.primal_residual = step;
    if (step <= settings.primal_tolerance) {
      report.dual_residual = model.kkt_violation(z) / kkt_scale;
      if (report.dual_residual <= settings.dual_tolerance) {
        report.converged = true;
        break;
      }
    }
  }
  report.dual_residual = model.kkt_violation(best) / kkt_scale;
  report.objective_value = best_obj;
  report.objective_history.push_back(best_obj);
  return {best, report};
}

std::pair<Eigen::VectorXd, SolveReport> solve_lasso(const Eigen::MatrixXd& A,
                                                    const Eigen::VectorXd& b, double lambda,
                                                    const SolverSettings& settings) {
  if (A.rows() != b.size()) throw Error("design matrix and target sizes differ");
  const Eigen::MatrixXd gram = A.transpose() * A;
  const Eigen::VectorXd atb = A.transpose() * b;
  return solve_lasso_gram(gram, atb, b.squaredNorm(), lambda, settings);
}

}  // namespace omtrir
