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

// Reference solver for tiny coupled problems: FISTA with adaptive restart on
// the stacked plans, projecting onto the exact marginal-consistency set.

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "coupled_graph.hpp"
#include "omtrir/error.hpp"
#include "omtrir/solvers.hpp"

namespace omtrir {
namespace {

using Plans = std::vector<Eigen::MatrixXd>;

// Euclidean projection of d vectors g_k onto
//   { p_k >= 0, sum(p_1) = ... = sum(p_d) = t, t >= 0 }.
void project_coupled(std::vector<Eigen::VectorXd>& g) {
  const std::size_t d = g.size();
  if (d == 1) {
    g[0] = g[0].cwiseMax(0.0);
    return;
  }
  double max_sum = 0.0;
  for (const auto& v : g) max_sum += v.maxCoeff();
  if (max_sum <= 0.0) {
    for (auto& v : g) v.setZero();
    return;
  }
  const Eigen::Index n = g[0].size();
  std::vector<std::vector<double>> sorted(d), prefix(d);
  for (std::size_t k = 0; k < d; ++k) {
    sorted[k].assign(g[k].data(), g[k].data() + n);
    std::sort(sorted[k].begin(), sorted[k].end(), std::greater<>());
    prefix[k].resize(n + 1, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) prefix[k][i + 1] = prefix[k][i] + sorted[k][i];
  }
  // Active count and threshold for mass t in member k.
  auto active = [&](std::size_t k, double t) {
    Eigen::Index c = 1;
    for (Eigen::Index i = 1; i <= n; ++i) {
      if (sorted[k][i - 1] > (prefix[k][i] - t) / i) c = i;
    }
    return c;
  };
  // The summed threshold is convex, decreasing and piecewise linear in t, so
  // Newton from t = 0 reaches its root from below in finitely many steps.
  std::vector<Eigen::Index> counts(d);
  double t = 0.0;
  for (int it = 0; it < 4 * static_cast<int>(n * d) + 8; ++it) {
    double f = 0.0, slope = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      counts[k] = active(k, t);
      f += (prefix[k][counts[k]] - t) / counts[k];
      slope += 1.0 / counts[k];
    }
    const double next = t + f / slope;
    if (!(next > t)) break;
    t = next;
  }
  for (std::size_t k = 0; k < d; ++k) counts[k] = active(k, t);
  t = std::max(t, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    const double theta = (prefix[k][counts[k]] - t) / counts[k];
    g[k] = (g[k].array() - theta).cwiseMax(0.0);
  }
}

class Oracle {
 public:
  explicit Oracle(const CoupledProblem& problem)
      : problem_(problem), graph_(detail::make_graph(problem.topology, problem.num_signals())),
        n_(problem.num_taps()) {
    const Eigen::MatrixXd& X = problem.design;
    gram_ = X.transpose() * X;
    for (const auto& y : problem.targets) {
      if (y.size() != X.rows()) throw Error("target length does not match the design matrix");
      xty_.push_back(X.transpose() * y);
      yty_.push_back(y.squaredNorm());
    }
    cost_ = cost_matrix(n_, n_, problem.epsilon).values;
    const double sigma = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram_).eigenvalues().maxCoeff();
    lipschitz_ = std::max(4.0 * n_ * sigma, 1e-12);
    for (int v = 0; v < graph_.num_nodes; ++v) {
      if (graph_.incident[v].size() > 1) {
        (graph_.row_side[v] ? rows_coupled_ : cols_coupled_) = true;
      }
    }
  }

  double solve(const OracleOptions& opt) {
    const int np = graph_.num_plans();
    Plans z(np, Eigen::MatrixXd::Zero(n_, n_));
    Plans y = z;
    double fz = objective(z);
    double t = 1.0;
    for (long it = 0; it < opt.max_iterations; ++it) {
      Plans next = y;
      const Plans grad = gradient(y);
      for (int p = 0; p < np; ++p) next[p] -= grad[p] / lipschitz_;
      project(next);
      const double fn = objective(next);
      if (fn > fz) {
        // A plain projected step that fails to decrease means z is optimal
        // to working precision.
        if (t == 1.0) break;
        y = z;
        t = 1.0;
        continue;
      }
      double step = 0.0, size = 0.0;
      for (int p = 0; p < np; ++p) {
        step += (next[p] - z[p]).squaredNorm();
        size += z[p].squaredNorm();
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      for (int p = 0; p < np; ++p) y[p] = next[p] + ((t - 1.0) / t_next) * (next[p] - z[p]);
      t = t_next;
      z = std::move(next);
      fz = fn;
      if (std::sqrt(step) <= opt.tolerance * (1.0 + std::sqrt(size))) break;
    }
    return fz;
  }

 private:
  // h_v read from the first plan incident to node v.
  Eigen::VectorXd signal(const Plans& z, int v) const {
    const int e = graph_.incident[v].front();
    if (graph_.row_side[v]) {
      return z[2 * e].rowwise().sum() - z[2 * e + 1].rowwise().sum();
    }
    return (z[2 * e].colwise().sum() - z[2 * e + 1].colwise().sum()).transpose();
  }

  double objective(const Plans& z) const {
    double total = 0.0;
    for (const auto& p : z) total += problem_.lambda * cost_.cwiseProduct(p).sum();
    for (int v = 0; v < graph_.num_nodes; ++v) {
      const int k = graph_.data[v];
      if (k < 0) continue;
      const Eigen::VectorXd h = signal(z, v);
      total += yty_[k] - 2.0 * h.dot(xty_[k]) + h.dot(gram_ * h);
    }
    return total;
  }

  Plans gradient(const Plans& z) const {
    Plans g(z.size(), problem_.lambda * cost_);
    for (int v = 0; v < graph_.num_nodes; ++v) {
      const int k = graph_.data[v];
      if (k < 0) continue;
      const Eigen::VectorXd h = signal(z, v);
      const Eigen::VectorXd gh = 2.0 * (gram_ * h - xty_[k]);
      const int e = graph_.incident[v].front();
      for (int s = 0; s < 2; ++s) {
        const double sign = s == 0 ? 1.0 : -1.0;
        if (graph_.row_side[v]) {
          g[2 * e + s].colwise() += sign * gh;
        } else {
          g[2 * e + s].rowwise() += sign * gh.transpose();
        }
      }
    }
    return g;
  }

  void project_side(Plans& z, bool rows) const {
    for (int v = 0; v < graph_.num_nodes; ++v) {
      if (graph_.row_side[v] != rows) continue;
      const auto& inc = graph_.incident[v];
      for (int s = 0; s < 2; ++s) {
        for (int i = 0; i < n_; ++i) {
          std::vector<Eigen::VectorXd> g;
          for (int e : inc) {
            g.push_back(rows ? Eigen::VectorXd(z[2 * e + s].row(i).transpose())
                             : Eigen::VectorXd(z[2 * e + s].col(i)));
          }
          project_coupled(g);
          for (std::size_t m = 0; m < inc.size(); ++m) {
            if (rows) {
              z[2 * inc[m] + s].row(i) = g[m].transpose();
            } else {
              z[2 * inc[m] + s].col(i) = g[m];
            }
          }
        }
      }
    }
  }

  void project(Plans& z) const {
    if (!cols_coupled_) {
      project_side(z, true);
      return;
    }
    if (!rows_coupled_) {
      project_side(z, false);
      return;
    }
    // Dykstra's alternating projections onto the row and column sets.
    const int np = graph_.num_plans();
    Plans p(np, Eigen::MatrixXd::Zero(n_, n_)), q = p;
    for (int it = 0; it < 100000; ++it) {
      Plans x = z;
      for (int k = 0; k < np; ++k) x[k] += p[k];
      project_side(x, true);
      for (int k = 0; k < np; ++k) p[k] = z[k] + p[k] - x[k];
      Plans w = x;
      for (int k = 0; k < np; ++k) w[k] += q[k];
      project_side(w, false);
      double change = 0.0;
      for (int k = 0; k < np; ++k) {
        q[k] = x[k] + q[k] - w[k];
        change += (w[k] - z[k]).squaredNorm();
      }
      z = std::move(w);
      if (change < 1e-28) break;
    }
  }

  const CoupledProblem& problem_;
  detail::CouplingGraph graph_;
  int n_;
  Eigen::MatrixXd gram_;
  std::vector<Eigen::VectorXd> xty_;
  std::vector<double> yty_;
  Eigen::MatrixXd cost_;
  double lipschitz_ = 1.0;
  bool rows_coupled_ = false;
  bool cols_coupled_ = false;
};

}  // namespace

double oracle_solve(const CoupledProblem& problem, const OracleOptions& options) {
  if (!(problem.lambda >= 0.0)) throw Error("lambda must be nonnegative");
  if (!(problem.epsilon >= 0.0)) throw Error("epsilon must be nonnegative");
  const auto graph = detail::make_graph(problem.topology, problem.num_signals());
  const long vars = static_cast<long>(graph.num_plans()) * problem.num_taps() * problem.num_taps();
  if (vars > 5000) throw Error("oracle_solve is limited to 5000 variables");
  return Oracle(problem).solve(options);
}

}  // namespace omtrir
