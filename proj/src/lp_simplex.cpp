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

#include "omtrir/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>

#include "omtrir/error.hpp"

namespace omtrir::lp {
namespace {

class RevisedSimplex {
 public:
  RevisedSimplex(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                 const Options& opt)
      : A_(A), opt_(opt), m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())) {
    sign_.resize(m_);
    b_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      sign_[i] = b[i] < 0.0 ? -1.0 : 1.0;
      b_[i] = std::abs(b[i]);
    }
    basis_.resize(m_);
    is_basic_.assign(n_ + m_, false);
    for (int i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      is_basic_[n_ + i] = true;
    }
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    xb_ = b_;
  }

  void run_phase(const Eigen::VectorXd& cost, bool allow_artificial) {
    cost_ = cost;
    cost_scale_ = std::max(1.0, cost.cwiseAbs().maxCoeff());
    allow_artificial_ = allow_artificial;
    int degenerate_streak = 0;
    bool bland = false;
    int since_refactor = 0;
    Eigen::VectorXd cb(m_), y(m_), w(m_);
    while (true) {
      if (iterations_ >= opt_.max_iterations) throw Error("simplex iteration limit reached");
      if (since_refactor >= opt_.refactor_interval) {
        refactor();
        since_refactor = 0;
      }
      for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
      y.noalias() = binv_.transpose() * cb;

      const int q = choose_entering(y, bland);
      if (q < 0) return;

      column_times_binv(q, w);
      const int r = choose_leaving(w, bland);
      if (r < 0) throw Error("linear program is unbounded");

      const double theta = std::max(0.0, xb_[r] / w[r]);
      xb_ -= theta * w;
      xb_[r] = theta;
      for (int i = 0; i < m_; ++i) {
        if (xb_[i] < 0.0 && xb_[i] > -opt_.feasibility_tolerance) xb_[i] = 0.0;
      }
      pivot(r, q, w);
      ++iterations_;
      ++since_refactor;

      if (theta <= opt_.feasibility_tolerance) {
        if (++degenerate_streak > opt_.degenerate_streak_limit) bland = true;
      } else {
        degenerate_streak = 0;
        bland = false;
      }
    }
  }

  double artificial_mass() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] >= n_) s += xb_[i];
    }
    return s;
  }

  // Pivot zero-level artificials out of the basis where a structural column
  // can replace them; rows where none can are redundant and stay as is.
  void drive_out_artificials() {
    Eigen::VectorXd w(m_);
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      int best = -1;
      double best_abs = 1e-9;
      for (int j = 0; j < n_; ++j) {
        if (is_basic_[j]) continue;
        double v = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
          v += binv_(r, it.row()) * sign_[it.row()] * it.value();
        }
        if (std::abs(v) > best_abs) {
          best_abs = std::abs(v);
          best = j;
        }
      }
      if (best < 0) continue;
      column_times_binv(best, w);
      xb_[r] = 0.0;
      pivot(r, best, w);
    }
  }

  Result result(const Eigen::VectorXd& c) {
    refactor();
    Result res;
    res.x = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) res.x[basis_[i]] = std::max(0.0, xb_[i]);
    }
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = basis_[i] < n_ ? c[basis_[i]] : 0.0;
    Eigen::VectorXd y = binv_.transpose() * cb;
    res.duals = y.cwiseProduct(Eigen::Map<const Eigen::VectorXd>(sign_.data(), m_));
    res.objective = c.dot(res.x);
    res.iterations = iterations_;
    return res;
  }

 private:
  int choose_entering(const Eigen::VectorXd& y, bool bland) const {
    const double tol = opt_.optimality_tolerance * cost_scale_;
    int best = -1;
    double best_d = -tol;
    const int limit = allow_artificial_ ? n_ + m_ : n_;
    for (int j = 0; j < limit; ++j) {
      if (is_basic_[j]) continue;
      double d = cost_[j];
      if (j < n_) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
          d -= y[it.row()] * sign_[it.row()] * it.value();
        }
      } else {
        d -= y[j - n_];
      }
      if (d < best_d) {
        best_d = d;
        best = j;
        if (bland) return best;
      }
    }
    return best;
  }

  void column_times_binv(int j, Eigen::VectorXd& w) const {
    w.setZero();
    if (j < n_) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
        w.noalias() += (sign_[it.row()] * it.value()) * binv_.col(it.row());
      }
    } else {
      w = binv_.col(j - n_);
    }
  }

  int choose_leaving(const Eigen::VectorXd& w, bool bland) const {
    int best = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m_; ++i) {
      double ratio;
      const bool blocked_artificial =
          !allow_artificial_ && basis_[i] >= n_ && std::abs(w[i]) > opt_.pivot_tolerance;
      if (blocked_artificial) {
        ratio = 0.0;
      } else if (w[i] > opt_.pivot_tolerance) {
        ratio = std::max(0.0, xb_[i]) / w[i];
      } else {
        continue;
      }
      if (best < 0 || ratio < best_ratio - 1e-12) {
        best = i;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + 1e-12) {
        const bool better = bland ? basis_[i] < basis_[best]
                                  : std::abs(w[i]) > std::abs(w[best]);
        if (better) {
          best = i;
          best_ratio = std::min(best_ratio, ratio);
        }
      }
    }
    return best;
  }

  void pivot(int r, int q, const Eigen::VectorXd& w) {
    const double piv = w[r];
    binv_.row(r) /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == r || w[i] == 0.0) continue;
      binv_.row(i) -= w[i] * binv_.row(r);
    }
    is_basic_[basis_[r]] = false;
    basis_[r] = q;
    is_basic_[q] = true;
  }

  void refactor() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      if (j < n_) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
          B(it.row(), i) = sign_[it.row()] * it.value();
        }
      } else {
        B(j - n_, i) = 1.0;
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    binv_ = lu.inverse();
    xb_.noalias() = binv_ * b_;
    for (int i = 0; i < m_; ++i) {
      if (xb_[i] < 0.0 && xb_[i] > -opt_.feasibility_tolerance * (1.0 + b_.lpNorm<1>())) {
        xb_[i] = 0.0;
      }
    }
  }

  const Eigen::SparseMatrix<double>& A_;
  Options opt_;
  int m_;
  int n_;
  std::vector<double> sign_;
  Eigen::VectorXd b_;
  std::vector<int> basis_;
  std::vector<bool> is_basic_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  Eigen::VectorXd cost_;
  double cost_scale_ = 1.0;
  bool allow_artificial_ = true;
  int iterations_ = 0;
};

}  // namespace

Result solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
             const Eigen::VectorXd& c, const Options& options) {
  if (A.rows() != b.size() || A.cols() != c.size()) throw Error("LP dimension mismatch");
  if (A.rows() == 0) {
    if (c.size() > 0 && c.minCoeff() < 0.0) throw Error("linear program is unbounded");
    Result r;
    r.x = Eigen::VectorXd::Zero(c.size());
    return r;
  }
  Eigen::SparseMatrix<double> Ac = A;
  Ac.makeCompressed();
  RevisedSimplex simplex(Ac, b, options);

  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setOnes();
  simplex.run_phase(phase1, /*allow_artificial=*/true);
  if (simplex.artificial_mass() > options.feasibility_tolerance * (1.0 + b.lpNorm<1>())) {
    throw Error("linear program is infeasible");
  }
  simplex.drive_out_artificials();

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = c;
  simplex.run_phase(phase2, /*allow_artificial=*/false);
  return simplex.result(c);
}

}  // namespace omtrir::lp
