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

#include "omtrir/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SparseCore>

#include "omtrir/error.hpp"
#include "omtrir/lp.hpp"

namespace omtrir {
namespace {

void require_nonnegative(const Eigen::VectorXd& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0) {
      throw Error(std::string(what) + " must be finite and nonnegative");
    }
  }
}

// Returns the common mass, throwing on imbalance beyond kMassTolerance.
double balanced_mass(double a, double b) {
  const double scale = std::max(a, b);
  if (std::abs(a - b) > kMassTolerance * scale) throw Error("unbalanced marginals");
  return 0.5 * (a + b);
}

struct BasicCell {
  int row;
  int col;
  double flow;
};

// Transportation simplex (MODI / u-v method) on a pruned instance with
// strictly positive supplies and demands of equal total.
class TransportationSimplex {
 public:
  TransportationSimplex(std::vector<double> supply, std::vector<double> demand,
                        const Eigen::MatrixXd& cost)
      : a_(std::move(supply)), b_(std::move(demand)), cost_(cost),
        m_(static_cast<int>(a_.size())), n_(static_cast<int>(b_.size())) {
    northwest_corner();
    const double scale = std::max(1.0, cost_.cwiseAbs().maxCoeff());
    tol_ = 1e-12 * scale;
  }

  int solve() {
    int pivots = 0;
    int degenerate_streak = 0;
    bool bland = false;
    const long max_pivots = 50L * (m_ + n_) * (m_ + n_) + 1000;
    while (true) {
      compute_potentials();
      int qi = -1, qj = -1;
      double best = -tol_;
      for (int i = 0; i < m_ && !(bland && qi >= 0); ++i) {
        for (int j = 0; j < n_; ++j) {
          const double r = cost_(i, j) - u_[i] - v_[j];
          if (r < best) {
            best = r;
            qi = i;
            qj = j;
            if (bland) break;
          }
        }
      }
      if (qi < 0) return pivots;
      if (pivots > max_pivots) throw Error("transportation simplex failed to converge");
      const double theta = pivot(qi, qj, bland);
      ++pivots;
      if (theta <= 1e-15) {
        if (++degenerate_streak > 2 * (m_ + n_)) bland = true;
      } else {
        degenerate_streak = 0;
        bland = false;
      }
    }
  }

  const std::vector<BasicCell>& cells() const { return cells_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& v() const { return v_; }

 private:
  void northwest_corner() {
    std::vector<double> s = a_, d = b_;
    int i = 0, j = 0;
    while (true) {
      if (i == m_ - 1 && j == n_ - 1) {
        // Remaining supply and demand agree up to rounding.
        cells_.push_back({i, j, std::max(0.0, 0.5 * (s[i] + d[j]))});
        break;
      }
      const double x = std::max(0.0, std::min(s[i], d[j]));
      cells_.push_back({i, j, x});
      s[i] -= x;
      d[j] -= x;
      if (j == n_ - 1 || (i < m_ - 1 && s[i] <= d[j])) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  // Builds the tree adjacency over nodes rows [0, m) and columns [m, m + n).
  void build_adjacency() {
    adjacency_.assign(m_ + n_, {});
    for (int c = 0; c < static_cast<int>(cells_.size()); ++c) {
      adjacency_[cells_[c].row].push_back(c);
      adjacency_[m_ + cells_[c].col].push_back(c);
    }
  }

  int other_end(int cell, int node) const {
    const auto& bc = cells_[cell];
    return node < m_ ? m_ + bc.col : bc.row;
  }

  void compute_potentials() {
    build_adjacency();
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int c : adjacency_[node]) {
        const int next = other_end(c, node);
        if (seen[next]) continue;
        seen[next] = 1;
        const auto& bc = cells_[c];
        if (next >= m_) {
          v_[bc.col] = cost_(bc.row, bc.col) - u_[bc.row];
        } else {
          u_[bc.row] = cost_(bc.row, bc.col) - v_[bc.col];
        }
        stack.push_back(next);
      }
    }
  }

  // Adds cell (qi, qj) to the basis, pushes flow around the cycle and drops
  // the blocking cell. Returns the step length.
  double pivot(int qi, int qj, bool bland) {
    // Tree path from row node qi to column node m + qj.
    std::vector<int> parent_cell(m_ + n_, -1);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<int> queue{qi};
    seen[qi] = 1;
    const int target = m_ + qj;
    for (std::size_t head = 0; head < queue.size() && !seen[target]; ++head) {
      const int node = queue[head];
      for (int c : adjacency_[node]) {
        const int next = other_end(c, node);
        if (seen[next]) continue;
        seen[next] = 1;
        parent_cell[next] = c;
        queue.push_back(next);
      }
    }
    // Walk back from the column node; cells alternate -, +, -, ...
    std::vector<int> minus, plus;
    int node = target;
    bool sign_minus = true;
    while (node != qi) {
      const int c = parent_cell[node];
      (sign_minus ? minus : plus).push_back(c);
      sign_minus = !sign_minus;
      node = other_end(c, node);
    }
    double theta = std::numeric_limits<double>::infinity();
    for (int c : minus) theta = std::min(theta, cells_[c].flow);
    int leaving = -1;
    for (int c : minus) {
      if (cells_[c].flow > theta + 1e-15) continue;
      if (leaving < 0) {
        leaving = c;
        continue;
      }
      const long key_c = static_cast<long>(cells_[c].row) * n_ + cells_[c].col;
      const long key_l = static_cast<long>(cells_[leaving].row) * n_ + cells_[leaving].col;
      if (bland ? key_c < key_l : cells_[c].flow < cells_[leaving].flow) leaving = c;
    }
    for (int c : minus) cells_[c].flow = std::max(0.0, cells_[c].flow - theta);
    for (int c : plus) cells_[c].flow += theta;
    cells_[leaving] = {qi, qj, theta};
    return theta;
  }

  std::vector<double> a_, b_;
  Eigen::MatrixXd cost_;
  int m_, n_;
  double tol_ = 0.0;
  std::vector<BasicCell> cells_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<double> u_, v_;
};

}  // namespace

CostMatrix cost_matrix(int n0, int nk, double epsilon) {
  if (n0 < 1 || nk < 1) throw Error("cost matrix dimensions must be positive");
  if (!(epsilon >= 0.0)) throw Error("epsilon must be nonnegative");
  CostMatrix c{Eigen::MatrixXd(n0, nk), epsilon};
  for (int j = 0; j < nk; ++j) {
    for (int i = 0; i < n0; ++i) {
      const double d = static_cast<double>(i - j);
      c.values(i, j) = d * d + epsilon;
    }
  }
  return c;
}

TransportSolution solve_transport(const Eigen::VectorXd& supply,
                                  const Eigen::VectorXd& demand,
                                  const Eigen::MatrixXd& cost) {
  if (cost.rows() != supply.size() || cost.cols() != demand.size()) {
    throw Error("cost matrix shape does not match the marginals");
  }
  require_nonnegative(supply, "transport marginal");
  require_nonnegative(demand, "transport marginal");
  const double sa = supply.sum();
  const double sb = demand.sum();

  TransportSolution sol;
  sol.plan.mass = Eigen::MatrixXd::Zero(supply.size(), demand.size());
  sol.row_potential = Eigen::VectorXd::Zero(supply.size());
  sol.col_potential = Eigen::VectorXd::Zero(demand.size());
  if (sa == 0.0 && sb == 0.0) return sol;
  const double mass = balanced_mass(sa, sb);

  std::vector<int> rows, cols;
  std::vector<double> a, b;
  for (Eigen::Index i = 0; i < supply.size(); ++i) {
    if (supply[i] > 0.0) {
      rows.push_back(static_cast<int>(i));
      a.push_back(supply[i] * mass / sa);
    }
  }
  for (Eigen::Index j = 0; j < demand.size(); ++j) {
    if (demand[j] > 0.0) {
      cols.push_back(static_cast<int>(j));
      b.push_back(demand[j] * mass / sb);
    }
  }
  Eigen::MatrixXd pruned(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) pruned(i, j) = cost(rows[i], cols[j]);
  }

  TransportationSimplex simplex(std::move(a), std::move(b), pruned);
  sol.pivots = simplex.solve();

  for (const auto& c : simplex.cells()) {
    sol.plan.mass(rows[c.row], cols[c.col]) += c.flow;
    sol.value += c.flow * pruned(c.row, c.col);
  }

  // Extend the potentials to pruned bins by c-transforms so they remain dual
  // feasible on the full grid.
  constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd u = Eigen::VectorXd::Constant(supply.size(), kUnset);
  Eigen::VectorXd v = Eigen::VectorXd::Constant(demand.size(), kUnset);
  for (std::size_t i = 0; i < rows.size(); ++i) u[rows[i]] = simplex.u()[i];
  for (std::size_t j = 0; j < cols.size(); ++j) v[cols[j]] = simplex.v()[j];
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!std::isnan(u[i])) continue;
    double best = std::numeric_limits<double>::infinity();
    for (int j : cols) best = std::min(best, cost(i, j) - v[j]);
    u[i] = best;
  }
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (!std::isnan(v[j])) continue;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < u.size(); ++i) best = std::min(best, cost(i, j) - u[i]);
    v[j] = best;
  }
  sol.row_potential = u;
  sol.col_potential = v;
  return sol;
}

TransportSolution dot_distance(const Eigen::VectorXd& h0, const Eigen::VectorXd& hk,
                               const CostMatrix& cost) {
  return solve_transport(h0, hk, cost.values);
}

double monotone_transport(std::span<const double> supply, std::span<const double> demand,
                          double epsilon, Eigen::MatrixXd* plan) {
  const auto n0 = static_cast<Eigen::Index>(supply.size());
  const auto nk = static_cast<Eigen::Index>(demand.size());
  if (plan != nullptr) plan->setZero(n0, nk);
  Eigen::Index i = 0, j = 0;
  double ra = n0 > 0 ? supply[0] : 0.0;
  double rb = nk > 0 ? demand[0] : 0.0;
  double total = 0.0;
  while (i < n0 && j < nk) {
    const double m = std::min(ra, rb);
    if (m > 0.0) {
      const double d = static_cast<double>(i - j);
      total += m * (d * d + epsilon);
      if (plan != nullptr) (*plan)(i, j) += m;
    }
    ra -= m;
    rb -= m;
    if (ra <= rb) {
      if (++i < n0) ra = supply[i];
    } else {
      if (++j < nk) rb = demand[j];
    }
  }
  return total;
}

SignedSplit split_signed(const Eigen::VectorXd& h) {
  return {h.cwiseMax(0.0), (-h).cwiseMax(0.0)};
}

double signed_dot(const Eigen::VectorXd& h1, const Eigen::VectorXd& h2, double epsilon) {
  const CostMatrix cost = cost_matrix(static_cast<int>(h1.size()),
                                      static_cast<int>(h2.size()), epsilon);
  const SignedSplit s1 = split_signed(h1);
  const SignedSplit s2 = split_signed(h2);
  return dot_distance(s1.positive, s2.positive, cost).value +
         dot_distance(s1.negative, s2.negative, cost).value;
}

BarycenterResult barycenter(std::span<const Eigen::VectorXd> hs, double epsilon) {
  if (hs.empty()) throw Error("barycenter needs at least one input");
  if (!(epsilon >= 0.0)) throw Error("epsilon must be nonnegative");
  const Eigen::Index n = hs.front().size();
  if (n < 1) throw Error("barycenter inputs must be nonempty");
  double min_mass = std::numeric_limits<double>::infinity(), max_mass = 0.0, total = 0.0;
  for (const auto& h : hs) {
    if (h.size() != n) throw Error("barycenter inputs must share one tap grid");
    require_nonnegative(h, "barycenter input");
    const double m = h.sum();
    min_mass = std::min(min_mass, m);
    max_mass = std::max(max_mass, m);
    total += m;
  }
  const int K = static_cast<int>(hs.size());
  BarycenterResult res;
  res.h0 = Eigen::VectorXd::Zero(n);
  res.plans.assign(K, TransportPlan{Eigen::MatrixXd::Zero(n, n)});
  if (max_mass == 0.0) return res;
  if (max_mass - min_mass > kMassTolerance * max_mass) throw Error("unbalanced marginals");
  const double mass = total / K;

  // Optimal barycenters lie in the convex hull of the input supports.
  std::vector<std::vector<int>> support(K);
  int lo = static_cast<int>(n), hi = -1;
  for (int k = 0; k < K; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (hs[k][j] > 0.0) {
        support[k].push_back(static_cast<int>(j));
        lo = std::min(lo, static_cast<int>(j));
        hi = std::max(hi, static_cast<int>(j));
      }
    }
  }
  const int width = hi - lo + 1;

  std::vector<int> offset(K + 1, width);
  for (int k = 0; k < K; ++k) {
    offset[k + 1] = offset[k] + width * static_cast<int>(support[k].size());
  }
  const int n_vars = offset[K];
  int n_rows = K * width;
  for (int k = 0; k < K; ++k) n_rows += static_cast<int>(support[k].size());
  if (n_rows > 4096) {
    throw Error("barycenter problem too large for the exact solver (" +
                std::to_string(n_rows) + " constraints)");
  }

  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_rows);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n_vars);
  int col_row = K * width;
  for (int k = 0; k < K; ++k) {
    const double scale = mass / hs[k].sum();
    const int nk = static_cast<int>(support[k].size());
    for (int i = 0; i < width; ++i) triplets.emplace_back(k * width + i, i, -1.0);
    for (int jj = 0; jj < nk; ++jj) {
      rhs[col_row + jj] = hs[k][support[k][jj]] * scale;
      for (int i = 0; i < width; ++i) {
        const int var = offset[k] + i * nk + jj;
        const double d = static_cast<double>(lo + i - support[k][jj]);
        c[var] = d * d + epsilon;
        triplets.emplace_back(k * width + i, var, 1.0);
        triplets.emplace_back(col_row + jj, var, 1.0);
      }
    }
    col_row += nk;
  }
  Eigen::SparseMatrix<double> A(n_rows, n_vars);
  A.setFromTriplets(triplets.begin(), triplets.end());

  const lp::Result sol = lp::solve(A, rhs, c);
  res.value = sol.objective;
  for (int i = 0; i < width; ++i) res.h0[lo + i] = sol.x[i];
  for (int k = 0; k < K; ++k) {
    const int nk = static_cast<int>(support[k].size());
    for (int i = 0; i < width; ++i) {
      for (int jj = 0; jj < nk; ++jj) {
        res.plans[k].mass(lo + i, support[k][jj]) = sol.x[offset[k] + i * nk + jj];
      }
    }
  }
  return res;
}

}  // namespace omtrir
