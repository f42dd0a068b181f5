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

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "omtrir/room_sim.hpp"
#include "omtrir/solvers.hpp"

namespace omtrir::testing {

inline RoomScene default_scene(int num_mics = 5, double radius = 0.2) {
  RoomScene s;
  s.mic_positions = circular_array({2.0, 1.5, 2.0}, radius, num_mics);
  s.reflection_coefficients.fill(sabine_reflection_coefficient(s.dimensions, 0.5));
  return s;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double lo = -1.0,
                                     double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
  }
  return m;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

// Random coupled problem with N_x-sample excitation and N_h taps.
inline CoupledProblem tiny_coupled(std::mt19937_64& rng, Topology topology, int n_taps = 8,
                                   int n_x = 12, int signals = 2, double lambda = 0.5) {
  CoupledProblem p;
  p.design = convolution_matrix(random_vector(rng, n_x), n_taps);
  for (int k = 0; k < signals; ++k) p.targets.push_back(random_vector(rng, p.design.rows()));
  p.topology = topology;
  p.lambda = lambda;
  p.epsilon = 0.01;
  return p;
}

// Filters sharing one tap sum, as the coupled formulation requires.
inline std::vector<Eigen::VectorXd> equal_sum_filters(std::mt19937_64& rng, int count, int n,
                                                      double sum = 1.0) {
  std::vector<Eigen::VectorXd> hs;
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd h = random_vector(rng, n);
    h.array() += (sum - h.sum()) / n;
    hs.push_back(h);
  }
  return hs;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("omtrir_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace omtrir::testing
