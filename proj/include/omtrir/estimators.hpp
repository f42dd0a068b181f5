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

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "omtrir/room_sim.hpp"
#include "omtrir/solvers.hpp"
#include "omtrir/transport.hpp"

namespace omtrir {

enum class Method { LS, Tikhonov, Lasso, L2Barycenter, AdjacentOMT, BarycenterOMT };

inline constexpr Method kAllMethods[] = {Method::LS,           Method::Tikhonov,
                                         Method::Lasso,        Method::L2Barycenter,
                                         Method::AdjacentOMT,  Method::BarycenterOMT};

std::string_view method_name(Method method);
/// Throws ConfigError listing the valid names.
Method parse_method(std::string_view name);
bool uses_transport(Method method);

struct EstimatorSpec {
  Method method = Method::BarycenterOMT;
  double lambda = 1.0;
  double mu = 0.0;                     // L2Barycenter only
  double epsilon = kDefaultEpsilon;    // transport methods only
  SolverSettings solver;

  void validate() const;
};

// Shared convolution design X and per-microphone targets y_k.
struct LinearSystem {
  Eigen::MatrixXd design;
  std::vector<Eigen::VectorXd> targets;

  static LinearSystem from_observation(const Observation& obs);
  LinearSystem rows(Eigen::Index first, Eigen::Index count) const;
  int num_taps() const { return static_cast<int>(design.cols()); }
  int num_signals() const { return static_cast<int>(targets.size()); }
};

struct Estimate {
  std::vector<Eigen::VectorXd> taps;
  std::optional<SignedSplit> barycenter;  // BarycenterOMT only
  SolveReport report;
  std::shared_ptr<const CoupledState> solver_state;  // transport methods only
};

// Per-method estimators on a linear system.
std::vector<Eigen::VectorXd> estimate_ls(const LinearSystem& sys);
std::vector<Eigen::VectorXd> estimate_tikhonov(const LinearSystem& sys, double lambda);
Estimate estimate_lasso(const LinearSystem& sys, double lambda, const SolverSettings& settings,
                        const Estimate* warm_start = nullptr);
std::vector<Eigen::VectorXd> estimate_l2_barycenter(const LinearSystem& sys, double lambda,
                                                    double mu);
Estimate estimate_adjacent_omt(const LinearSystem& sys, double lambda, double epsilon,
                               const SolverSettings& settings,
                               const Estimate* warm_start = nullptr);
Estimate estimate_barycenter_omt(const LinearSystem& sys, double lambda, double epsilon,
                                 const SolverSettings& settings,
                                 const Estimate* warm_start = nullptr);

/// Dispatches on spec.method.
Estimate estimate(const LinearSystem& sys, const EstimatorSpec& spec,
                  const Estimate* warm_start = nullptr);

/// Observation front end; RIRs carry the given sample rate.
std::vector<ImpulseResponse> estimate_rirs(const Observation& obs, const EstimatorSpec& spec,
                                           double sample_rate, Estimate* details = nullptr);

/// Objective value of the method's program at the given estimates. Transport
/// terms are evaluated with the exact transport simplex on canonical splits
/// and require balanced masses.
double estimator_objective(const LinearSystem& sys, const EstimatorSpec& spec,
                           const std::vector<Eigen::VectorXd>& taps);

struct CvGrid {
  std::vector<double> lambdas;
  std::vector<double> mus;  // L2Barycenter only; product grid with lambdas
  double fit_fraction = 0.8;
};

/// Grids used when a configuration does not supply one.
CvGrid default_grid(Method method);

/// Log-spaced grid from `lo` to `hi` inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

struct CvResult {
  EstimatorSpec chosen;
  std::size_t chosen_index = 0;
  std::vector<double> validation_error;  // per candidate, +inf on failure
};

/// Temporal hold-out: fit on the first fit_fraction of the rows, score the
/// summed residual on the rest, return the minimiser (first on ties).
CvResult cross_validate(const Observation& obs, const EstimatorSpec& base, const CvGrid& grid);
CvResult cross_validate(const LinearSystem& sys, const EstimatorSpec& base, const CvGrid& grid);

}  // namespace omtrir
