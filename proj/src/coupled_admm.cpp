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

// Alternating-direction solver for
//
//   minimize  sum_k ||y_k - X h_k||^2 + lambda * sum_{edges, signs} <C, P>
//
// over nonnegative plans P (one per edge and sign) whose marginals agree with
// per-node split variables n_v^+, n_v^- and h_v = n_v^+ - n_v^-.
//
// Each plan is held in three copies: P (nonnegative, carries the cost), R
// (row sums pinned to the row node) and S (column sums pinned to the column
// node), with consensus P = R = S. The scaled duals for P = R and P = S are
// rank one (u 1' and 1 w'), and R, S differ from P by rank-one offsets, so one
// iteration needs a single fused pass over each plan plus O(N^2) work per node.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "coupled_graph.hpp"
#include "omtrir/error.hpp"
#include "omtrir/plan_kernels.hpp"
#include "omtrir/solvers.hpp"

namespace omtrir {

struct CoupledState {
  int taps = 0;
  int num_plans = 0;
  int num_nodes = 0;
  Topology topology = Topology::Star;
  double rho = 1.0;
  std::vector<std::vector<double>> plans;  // row-major taps x taps
  std::vector<Eigen::VectorXd> u, w, a, b, row_sums, col_sums;
  std::vector<Eigen::VectorXd> node;  // node * 2 + sign
};

namespace {

using detail::CouplingGraph;

class CoupledAdmm {
 public:
  CoupledAdmm(const CoupledProblem& problem, const SolverSettings& settings)
      : problem_(problem), settings_(settings),
        graph_(detail::make_graph(problem.topology, problem.num_signals())),
        n_(problem.num_taps()) {
    const Eigen::MatrixXd& X = problem.design;
    gram_ = X.transpose() * X;
    for (const auto& y : problem.targets) {
      if (y.size() != X.rows()) throw Error("target length does not match the design matrix");
      xty_.push_back(X.transpose() * y);
      yty_.push_back(y.squaredNorm());
    }
    const CostMatrix c = cost_matrix(n_, n_, problem.epsilon);
    cost_.resize(static_cast<std::size_t>(n_) * n_);
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) cost_[static_cast<std::size_t>(i) * n_ + j] = c.values(i, j);
    }
  }

  void init(const CoupledState* warm) {
    const int np = graph_.num_plans();
    const bool usable = warm != nullptr && warm->taps == n_ && warm->num_plans == np &&
                        warm->num_nodes == graph_.num_nodes &&
                        warm->topology == problem_.topology;
    if (usable) {
      state_ = *warm;
      return;
    }
    state_ = CoupledState{};
    state_.taps = n_;
    state_.num_plans = np;
    state_.num_nodes = graph_.num_nodes;
    state_.topology = problem_.topology;
    state_.rho = settings_.penalty_parameter;
    state_.plans.assign(np, std::vector<double>(static_cast<std::size_t>(n_) * n_, 0.0));
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_);
    state_.u.assign(np, zero);
    state_.w.assign(np, zero);
    state_.a.assign(np, zero);
    state_.b.assign(np, zero);
    state_.row_sums.assign(np, zero);
    state_.col_sums.assign(np, zero);
    state_.node.assign(2 * graph_.num_nodes, zero);
  }

  CoupledSolution run() {
    SolveReport report;
    factor_nodes();
    const int np = graph_.num_plans();
    std::vector<Eigen::VectorXd> alpha(np, Eigen::VectorXd(n_)), beta(np, Eigen::VectorXd(n_));
    std::vector<kernels::PlanBlock> blocks(np);
    // The all-zero point is feasible; start from it so the result never does worse.
    double best = 0.0;
    for (double v : yty_) best += v;
    best_targets_.assign(2 * graph_.num_nodes, Eigen::VectorXd::Zero(n_));

    for (int it = 1; it <= settings_.max_iterations; ++it) {
      const double rho = state_.rho;
      const double gamma = problem_.lambda / (2.0 * rho);
      const std::vector<Eigen::VectorXd> old_rs = state_.row_sums;
      const std::vector<Eigen::VectorXd> old_cs = state_.col_sums;
      for (int p = 0; p < np; ++p) {
        alpha[p] = 0.5 * (state_.a[p] - state_.u[p]);
        beta[p] = 0.5 * (state_.b[p] - state_.w[p]);
        blocks[p] = {state_.plans[p].data(), alpha[p].data(), beta[p].data(),
                     state_.row_sums[p].data(), state_.col_sums[p].data(), 0.0};
      }
      if (settings_.parallel_kernels) {
        kernels::update_plans_omp(blocks, cost_.data(), n_, n_, gamma);
      } else {
        kernels::update_plans_serial(blocks, cost_.data(), n_, n_, gamma);
      }

      update_nodes();

      // Dual step and residuals.
      double primal = 0.0, dual_sq = 0.0, dual_scale_sq = 0.0;
      const double dn = static_cast<double>(n_);
      for (int p = 0; p < np; ++p) {
        const auto& edge = graph_.edges[p / 2];
        const int s = p % 2;
        const Eigen::VectorXd& nr = state_.node[2 * edge.row_node + s];
        const Eigen::VectorXd& nc = state_.node[2 * edge.col_node + s];
        const Eigen::VectorXd r_res = state_.row_sums[p] - nr;
        const Eigen::VectorXd c_res = state_.col_sums[p] - nc;
        state_.u[p] += r_res / dn;
        state_.w[p] += c_res / dn;
        const Eigen::VectorXd a_new = -r_res / dn;
        const Eigen::VectorXd b_new = -c_res / dn;
        const Eigen::VectorXd da = a_new - state_.a[p];
        const Eigen::VectorXd db = b_new - state_.b[p];
        const Eigen::VectorXd drs = state_.row_sums[p] - old_rs[p];
        const Eigen::VectorXd dcs = state_.col_sums[p] - old_cs[p];
        state_.a[p] = a_new;
        state_.b[p] = b_new;

        primal = std::max(primal, r_res.norm() / (1.0 + nr.norm()));
        primal = std::max(primal, c_res.norm() / (1.0 + nc.norm()));
        dual_sq += 4.0 * blocks[p].change_sq + dn * da.squaredNorm() + dn * db.squaredNorm() +
                   4.0 * da.dot(drs) + 4.0 * db.dot(dcs) + 2.0 * da.sum() * db.sum();
        dual_scale_sq += dn * state_.u[p].squaredNorm() + dn * state_.w[p].squaredNorm() +
                         2.0 * state_.u[p].sum() * state_.w[p].sum();
      }
      const double dual = rho * std::sqrt(std::max(0.0, dual_sq)) /
                          (1.0 + rho * std::sqrt(std::max(0.0, dual_scale_sq)));
      report.iterations_used = it;
      report.primal_residual = primal;
      report.dual_residual = dual;
      report.converged =
          primal <= settings_.primal_tolerance && dual <= settings_.dual_tolerance;

      const bool last = report.converged || it == settings_.max_iterations;
      if (last || it % settings_.check_interval == 0) {
        const double obj = checkpoint_objective();
        if (obj <= best) {
          best = obj;
          save_best();
        }
        report.objective_history.push_back(best);
      }
      if (report.converged) break;
      if (it % 10 == 0) balance_penalty(primal, dual);
    }
    report.objective_value = best;
    return finish(std::move(report));
  }

 private:
  void factor_nodes() {
    factors_.clear();
    for (int v = 0; v < graph_.num_nodes; ++v) {
      if (graph_.data[v] < 0) continue;
      const int deg = static_cast<int>(graph_.incident[v].size());
      if (factors_.count(deg)) continue;
      Eigen::MatrixXd m = 2.0 * gram_;
      m.diagonal().array() += kappa(deg);
      factors_.emplace(deg, Eigen::LLT<Eigen::MatrixXd>(m));
    }
  }

  double kappa(int deg) const { return state_.rho * deg / (2.0 * n_); }

  // Node step: each node's split averages the consensus marginals of its
  // plans; data nodes additionally fit their observation.
  void update_nodes() {
    const double dn = static_cast<double>(n_);
    for (int v = 0; v < graph_.num_nodes; ++v) {
      const auto& inc = graph_.incident[v];
      Eigen::VectorXd mean[2] = {Eigen::VectorXd::Zero(n_), Eigen::VectorXd::Zero(n_)};
      for (int e : inc) {
        for (int s = 0; s < 2; ++s) {
          const int p = 2 * e + s;
          if (graph_.row_side[v]) {
            mean[s] += state_.row_sums[p] + dn * state_.u[p];
          } else {
            mean[s] += state_.col_sums[p] + dn * state_.w[p];
          }
        }
      }
      const double deg = static_cast<double>(inc.size());
      mean[0] /= deg;
      mean[1] /= deg;
      if (graph_.data[v] < 0) {
        state_.node[2 * v] = mean[0];
        state_.node[2 * v + 1] = mean[1];
        continue;
      }
      const int k = graph_.data[v];
      const int d = static_cast<int>(inc.size());
      const Eigen::VectorXd rhs = 2.0 * xty_[k] + kappa(d) * (mean[0] - mean[1]);
      const Eigen::VectorXd diff = factors_.at(d).solve(rhs);
      const Eigen::VectorXd sum = mean[0] + mean[1];
      state_.node[2 * v] = 0.5 * (sum + diff);
      state_.node[2 * v + 1] = 0.5 * (sum - diff);
    }
  }

  void balance_penalty(double primal, double dual) {
    constexpr double kRatio = 10.0;
    double scale = 1.0;
    if (primal > kRatio * dual && state_.rho < 1e8) {
      scale = 2.0;
    } else if (dual > kRatio * primal && state_.rho > 1e-8) {
      scale = 0.5;
    }
    if (scale == 1.0) return;
    state_.rho *= scale;
    for (int p = 0; p < graph_.num_plans(); ++p) {
      state_.u[p] /= scale;
      state_.w[p] /= scale;
    }
    factor_nodes();
  }

  // Builds a feasible point from the current iterate (clipped, mass-equalised
  // node splits joined by their optimal monotone plans) and returns its
  // exact objective.
  double checkpoint_objective() {
    build_targets(targets_);
    return problem_.lambda * transport_cost(targets_) + data_term(targets_);
  }

  double transport_cost(const std::vector<Eigen::VectorXd>& t) const {
    double total = 0.0;
    for (int p = 0; p < graph_.num_plans(); ++p) {
      const auto& edge = graph_.edges[p / 2];
      const int s = p % 2;
      const Eigen::VectorXd& r = t[2 * edge.row_node + s];
      const Eigen::VectorXd& c = t[2 * edge.col_node + s];
      total += monotone_transport({r.data(), static_cast<std::size_t>(n_)},
                                  {c.data(), static_cast<std::size_t>(n_)}, problem_.epsilon);
    }
    return total;
  }

  void build_targets(std::vector<Eigen::VectorXd>& t) const {
    t.resize(2 * graph_.num_nodes);
    for (int s = 0; s < 2; ++s) {
      double mass = 0.0;
      for (int v = 0; v < graph_.num_nodes; ++v) {
        t[2 * v + s] = state_.node[2 * v + s].cwiseMax(0.0);
        mass += t[2 * v + s].sum();
      }
      mass /= graph_.num_nodes;
      for (int v = 0; v < graph_.num_nodes; ++v) {
        Eigen::VectorXd& x = t[2 * v + s];
        const double m = x.sum();
        if (m > 0.0) {
          x *= mass / m;
        } else {
          x.setConstant(mass / n_);
        }
      }
    }
  }

  double data_term(const std::vector<Eigen::VectorXd>& t) const {
    double total = 0.0;
    for (int v = 0; v < graph_.num_nodes; ++v) {
      const int k = graph_.data[v];
      if (k < 0) continue;
      const Eigen::VectorXd h = t[2 * v] - t[2 * v + 1];
      total += std::max(0.0, yty_[k] - 2.0 * h.dot(xty_[k]) + h.dot(gram_ * h));
    }
    return total;
  }

  void save_best() { best_targets_ = targets_; }

  CoupledSolution finish(SolveReport report) {
    CoupledSolution sol;
    sol.estimates.resize(problem_.num_signals());
    for (int v = 0; v < graph_.num_nodes; ++v) {
      const int k = graph_.data[v];
      if (k < 0) {
        sol.barycenter = {best_targets_[2 * v], best_targets_[2 * v + 1]};
      } else {
        sol.estimates[k] = best_targets_[2 * v] - best_targets_[2 * v + 1];
      }
    }
    for (int p = 0; p < graph_.num_plans(); ++p) {
      const auto& edge = graph_.edges[p / 2];
      const int s = p % 2;
      const Eigen::VectorXd& r = best_targets_[2 * edge.row_node + s];
      const Eigen::VectorXd& c = best_targets_[2 * edge.col_node + s];
      Eigen::MatrixXd m;
      monotone_transport({r.data(), static_cast<std::size_t>(n_)},
                         {c.data(), static_cast<std::size_t>(n_)}, problem_.epsilon, &m);
      if (edge.transposed) m.transposeInPlace();
      sol.plans.push_back({std::move(m)});
    }
    sol.report = std::move(report);
    sol.state = std::make_shared<const CoupledState>(state_);
    return sol;
  }

  const CoupledProblem& problem_;
  SolverSettings settings_;
  CouplingGraph graph_;
  int n_;
  Eigen::MatrixXd gram_;
  std::vector<Eigen::VectorXd> xty_;
  std::vector<double> yty_;
  std::vector<double> cost_;
  std::map<int, Eigen::LLT<Eigen::MatrixXd>> factors_;
  CoupledState state_;
  std::vector<Eigen::VectorXd> targets_;
  std::vector<Eigen::VectorXd> best_targets_;
};

void validate_problem(const CoupledProblem& problem) {
  if (!(problem.lambda > 0.0)) throw Error("lambda must be positive");
  if (!(problem.epsilon >= 0.0)) throw Error("epsilon must be nonnegative");
  if (problem.design.cols() < 1) throw Error("design matrix needs at least one column");
  if (problem.targets.empty()) throw Error("coupled problem needs at least one signal");
}

}  // namespace

CoupledSolution solve_coupled_transport_ls(const CoupledProblem& problem,
                                           const SolverSettings& settings,
                                           const CoupledSolution* warm_start) {
  settings.validate();
  validate_problem(problem);
  CoupledAdmm admm(problem, settings);
  admm.init(warm_start != nullptr ? warm_start->state.get() : nullptr);
  return admm.run();
}

double coupled_objective(const CoupledProblem& problem, std::span<const TransportPlan> plans) {
  const auto graph = detail::make_graph(problem.topology, problem.num_signals());
  if (static_cast<int>(plans.size()) != graph.num_plans()) {
    throw Error("plan count does not match the coupling topology");
  }
  const int n = problem.num_taps();
  const CostMatrix cost = cost_matrix(n, n, problem.epsilon);
  double total = 0.0;
  for (const auto& p : plans) total += problem.lambda * (cost.values.cwiseProduct(p.mass)).sum();
  for (int k = 0; k < problem.num_signals(); ++k) {
    Eigen::VectorXd h;
    if (problem.topology == Topology::Star) {
      h = plans[2 * k].mass.colwise().sum().transpose() -
          plans[2 * k + 1].mass.colwise().sum().transpose();
    } else if (k == 0) {
      h = plans[0].mass.colwise().sum().transpose() - plans[1].mass.colwise().sum().transpose();
    } else {
      h = plans[2 * (k - 1)].mass.rowwise().sum() - plans[2 * (k - 1) + 1].mass.rowwise().sum();
    }
    total += (problem.targets[k] - problem.design * h).squaredNorm();
  }
  return total;
}

}  // namespace omtrir
