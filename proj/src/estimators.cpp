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

#include "omtrir/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "omtrir/error.hpp"

namespace omtrir {

namespace {

constexpr std::string_view kMethodNames[] = {"LS",           "Tikhonov",    "Lasso",
                                             "L2Barycenter", "AdjacentOMT", "BarycenterOMT"};

std::string valid_method_list() {
  std::string out;
  for (auto name : kMethodNames) {
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out;
}

Eigen::MatrixXd gram_of(const LinearSystem& sys) { return sys.design.transpose() * sys.design; }

void check_system(const LinearSystem& sys) {
  if (sys.design.cols() < 1) throw Error("design matrix needs at least one column");
  if (sys.targets.empty()) throw Error("no observations to estimate from");
  for (const auto& y : sys.targets) {
    if (y.size() != sys.design.rows()) throw Error("observation length does not match the design");
  }
}

SolveReport merge_reports(const std::vector<SolveReport>& parts) {
  SolveReport out;
  out.converged = true;
  for (const auto& r : parts) {
    out.iterations_used = std::max(out.iterations_used, r.iterations_used);
    out.primal_residual = std::max(out.primal_residual, r.primal_residual);
    out.dual_residual = std::max(out.dual_residual, r.dual_residual);
    out.objective_value += r.objective_value;
    out.converged = out.converged && r.converged;
  }
  out.objective_history.push_back(out.objective_value);
  return out;
}

Estimate closed_form(std::vector<Eigen::VectorXd> taps, double objective) {
  Estimate e;
  e.taps = std::move(taps);
  e.report.converged = true;
  e.report.objective_value = objective;
  e.report.objective_history.push_back(objective);
  return e;
}

Estimate coupled(const LinearSystem& sys, Topology topology, double lambda, double epsilon,
                 const SolverSettings& settings, const Estimate* warm_start) {
  check_system(sys);
  CoupledProblem problem{sys.design, sys.targets, topology, lambda, epsilon};
  CoupledSolution warm;
  const CoupledSolution* warm_ptr = nullptr;
  if (warm_start != nullptr && warm_start->solver_state) {
    warm.state = warm_start->solver_state;
    warm_ptr = &warm;
  }
  CoupledSolution sol = solve_coupled_transport_ls(problem, settings, warm_ptr);
  Estimate e;
  e.taps = std::move(sol.estimates);
  if (topology == Topology::Star) e.barycenter = std::move(sol.barycenter);
  e.report = std::move(sol.report);
  e.solver_state = std::move(sol.state);
  return e;
}

double residual_sum(const LinearSystem& sys, const std::vector<Eigen::VectorXd>& taps) {
  double total = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    total += (sys.targets[k] - sys.design * taps[k]).squaredNorm();
  }
  return total;
}

}  // namespace

std::string_view method_name(Method method) { return kMethodNames[static_cast<int>(method)]; }

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'; valid methods: " +
                    valid_method_list());
}

bool uses_transport(Method method) {
  return method == Method::AdjacentOMT || method == Method::BarycenterOMT;
}

void EstimatorSpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("mu must be finite and >= 0");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be finite and >= 0");
  }
  if ((uses_transport(method) || method == Method::Lasso) && lambda == 0.0) {
    throw ConfigError(std::string(method_name(method)) + " needs lambda > 0");
  }
  try {
    solver.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

LinearSystem LinearSystem::from_observation(const Observation& obs) {
  const int n_taps = obs.n_taps();
  LinearSystem sys;
  sys.design = convolution_matrix(obs.excitation, n_taps);
  sys.targets = obs.received;
  return sys;
}

LinearSystem LinearSystem::rows(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 1 || first + count > design.rows()) {
    throw Error("row range outside the linear system");
  }
  LinearSystem out;
  out.design = design.middleRows(first, count);
  for (const auto& y : targets) out.targets.push_back(y.segment(first, count));
  return out;
}

std::vector<Eigen::VectorXd> estimate_ls(const LinearSystem& sys) {
  check_system(sys);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.design);
  if (qr.rank() < sys.design.cols()) {
    throw Error("excitation is rank-deficient for least squares; use a regularized method "
                "(Tikhonov, Lasso or L2Barycenter)");
  }
  std::vector<Eigen::VectorXd> out;
  for (const auto& y : sys.targets) out.push_back(qr.solve(y));
  return out;
}

std::vector<Eigen::VectorXd> estimate_tikhonov(const LinearSystem& sys, double lambda) {
  check_system(sys);
  const RidgeFactor factor(gram_of(sys), lambda);
  std::vector<Eigen::VectorXd> out;
  for (const auto& y : sys.targets) out.push_back(factor.solve(sys.design.transpose() * y));
  return out;
}

Estimate estimate_lasso(const LinearSystem& sys, double lambda, const SolverSettings& settings,
                        const Estimate* warm_start) {
  check_system(sys);
  const Eigen::MatrixXd gram = gram_of(sys);
  const int K = sys.num_signals();
  std::vector<Eigen::VectorXd> taps(K);
  std::vector<SolveReport> reports(K);
  const bool warm = warm_start != nullptr && static_cast<int>(warm_start->taps.size()) == K;
#pragma omp parallel for schedule(static)
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd atb = sys.design.transpose() * sys.targets[k];
    const Eigen::VectorXd* start =
        warm && warm_start->taps[k].size() == gram.cols() ? &warm_start->taps[k] : nullptr;
    auto [z, rep] = solve_lasso_gram(gram, atb, sys.targets[k].squaredNorm(), lambda, settings,
                                     start);
    taps[k] = std::move(z);
    reports[k] = std::move(rep);
  }
  Estimate e;
  e.taps = std::move(taps);
  e.report = merge_reports(reports);
  return e;
}

std::vector<Eigen::VectorXd> estimate_l2_barycenter(const LinearSystem& sys, double lambda,
                                                    double mu) {
  check_system(sys);
  if (!(lambda >= 0.0) || !(mu >= 0.0)) throw Error("lambda and mu must be nonnegative");
  const Eigen::MatrixXd gram = gram_of(sys);
  std::vector<Eigen::VectorXd> xty;
  Eigen::VectorXd mean_xty = Eigen::VectorXd::Zero(gram.cols());
  for (const auto& y : sys.targets) {
    xty.push_back(sys.design.transpose() * y);
    mean_xty += xty.back();
  }
  mean_xty /= static_cast<double>(sys.targets.size());
  std::vector<Eigen::VectorXd> out;
  try {
    // Summing the stationarity conditions decouples the mean.
    const Eigen::VectorXd mean = RidgeFactor(gram, mu).solve(mean_xty);
    const RidgeFactor factor(gram, lambda + mu);
    for (const auto& r : xty) out.push_back(factor.solve(r + lambda * mean));
  } catch (const Error&) {
    throw Error("singular block system; supply mu > 0");
  }
  return out;
}

Estimate estimate_adjacent_omt(const LinearSystem& sys, double lambda, double epsilon,
                               const SolverSettings& settings, const Estimate* warm_start) {
  if (sys.num_signals() < 2) throw Error("AdjacentOMT needs at least two microphones");
  return coupled(sys, Topology::Path, lambda, epsilon, settings, warm_start);
}

Estimate estimate_barycenter_omt(const LinearSystem& sys, double lambda, double epsilon,
                                 const SolverSettings& settings, const Estimate* warm_start) {
  return coupled(sys, Topology::Star, lambda, epsilon, settings, warm_start);
}

Estimate estimate(const LinearSystem& sys, const EstimatorSpec& spec, const Estimate* warm_start) {
  spec.validate();
  switch (spec.method) {
    case Method::LS: {
      auto taps = estimate_ls(sys);
      const double obj = residual_sum(sys, taps);
      return closed_form(std::move(taps), obj);
    }
    case Method::Tikhonov: {
      auto taps = estimate_tikhonov(sys, spec.lambda);
      const double obj = estimator_objective(sys, spec, taps);
      return closed_form(std::move(taps), obj);
    }
    case Method::Lasso:
      return estimate_lasso(sys, spec.lambda, spec.solver, warm_start);
    case Method::L2Barycenter: {
      auto taps = estimate_l2_barycenter(sys, spec.lambda, spec.mu);
      const double obj = estimator_objective(sys, spec, taps);
      return closed_form(std::move(taps), obj);
    }
    case Method::AdjacentOMT:
      return estimate_adjacent_omt(sys, spec.lambda, spec.epsilon, spec.solver, warm_start);
    case Method::BarycenterOMT:
      return estimate_barycenter_omt(sys, spec.lambda, spec.epsilon, spec.solver, warm_start);
  }
  throw Error("unhandled method");
}

std::vector<ImpulseResponse> estimate_rirs(const Observation& obs, const EstimatorSpec& spec,
                                           double sample_rate, Estimate* details) {
  Estimate e = estimate(LinearSystem::from_observation(obs), spec);
  std::vector<ImpulseResponse> out;
  for (const auto& h : e.taps) out.push_back({h, sample_rate});
  if (details != nullptr) *details = std::move(e);
  return out;
}

double estimator_objective(const LinearSystem& sys, const EstimatorSpec& spec,
                           const std::vector<Eigen::VectorXd>& taps) {
  check_system(sys);
  if (taps.size() != sys.targets.size()) throw Error("estimate count does not match observations");
  double total = residual_sum(sys, taps);
  switch (spec.method) {
    case Method::LS:
      break;
    case Method::Tikhonov:
      for (const auto& h : taps) total += spec.lambda * h.squaredNorm();
      break;
    case Method::Lasso:
      for (const auto& h : taps) total += spec.lambda * h.lpNorm<1>();
      break;
    case Method::L2Barycenter: {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(taps.front().size());
      for (const auto& h : taps) mean += h;
      mean /= static_cast<double>(taps.size());
      for (const auto& h : taps) {
        total += spec.lambda * (h - mean).squaredNorm() + spec.mu * h.squaredNorm();
      }
      break;
    }
    case Method::AdjacentOMT:
    case Method::BarycenterOMT:
      throw Error("transport objectives depend on the plans; use the solver report");
  }
  return total;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw Error("invalid log grid");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
  out.back() = hi;
  return out;
}

CvGrid default_grid(Method method) {
  CvGrid g;
  switch (method) {
    case Method::LS:
      break;
    case Method::Tikhonov:
      g.lambdas = log_grid(1e-4, 1e2, 10);
      break;
    case Method::Lasso:
      g.lambdas = log_grid(1e-3, 1e1, 9);
      break;
    case Method::L2Barycenter:
      g.lambdas = log_grid(1e-2, 1e2, 5);
      g.mus = log_grid(1e-4, 1e2, 7);
      break;
    case Method::AdjacentOMT:
    case Method::BarycenterOMT:
      g.lambdas = log_grid(1e-2, 1e1, 7);
      break;
  }
  return g;
}

CvResult cross_validate(const Observation& obs, const EstimatorSpec& base, const CvGrid& grid) {
  return cross_validate(LinearSystem::from_observation(obs), base, grid);
}

CvResult cross_validate(const LinearSystem& sys, const EstimatorSpec& base, const CvGrid& grid) {
  check_system(sys);
  if (!(grid.fit_fraction > 0.0 && grid.fit_fraction < 1.0)) {
    throw ConfigError("fit_fraction must lie in (0, 1)");
  }
  std::vector<EstimatorSpec> candidates;
  if (base.method == Method::LS) {
    candidates.push_back(base);
  } else {
    if (grid.lambdas.empty()) throw ConfigError("cross-validation grid is empty");
    if (base.method == Method::L2Barycenter) {
      if (grid.mus.empty()) throw ConfigError("L2Barycenter needs a nonempty mu grid");
      for (double lam : grid.lambdas) {
        for (double mu : grid.mus) {
          EstimatorSpec s = base;
          s.lambda = lam;
          s.mu = mu;
          candidates.push_back(s);
        }
      }
    } else {
      for (double lam : grid.lambdas) {
        EstimatorSpec s = base;
        s.lambda = lam;
        candidates.push_back(s);
      }
    }
  }
  for (const auto& c : candidates) c.validate();

  const Eigen::Index total = sys.design.rows();
  const Eigen::Index fit_rows =
      std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(grid.fit_fraction * total)),
                               1, total - 1);
  const LinearSystem fit = sys.rows(0, fit_rows);
  const LinearSystem val = sys.rows(fit_rows, total - fit_rows);

  // Iterative methods walk the grid from strong to weak regularization and
  // warm-start each fit from the previous one.
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  const bool iterative = base.method == Method::Lasso || uses_transport(base.method);
  if (iterative) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return candidates[a].lambda > candidates[b].lambda;
    });
  }

  CvResult result;
  result.validation_error.assign(candidates.size(), std::numeric_limits<double>::infinity());
  Estimate previous;
  bool have_previous = false;
  for (std::size_t idx : order) {
    try {
      Estimate e = estimate(fit, candidates[idx], have_previous ? &previous : nullptr);
      result.validation_error[idx] = residual_sum(val, e.taps);
      if (iterative) {
        previous = std::move(e);
        have_previous = true;
      }
    } catch (const Error&) {
      // Scored as +inf; a grid point that cannot be fitted is never chosen.
    }
  }
  std::size_t best = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double err = result.validation_error[i];
    if (std::isfinite(err) && (best == candidates.size() || err < result.validation_error[best])) {
      best = i;
    }
  }
  if (best == candidates.size()) throw Error("cross-validation failed at every grid point");
  result.chosen = candidates[best];
  result.chosen_index = best;
  return result;
}

}  // namespace omtrir
