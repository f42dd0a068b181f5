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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "omtrir/estimators.hpp"
#include "omtrir/room_sim.hpp"

namespace omtrir {

/// Mean over microphones of ||h_k - est_k||^2 / ||h_k||^2.
double nmse(std::span<const ImpulseResponse> truth, std::span<const Eigen::VectorXd> estimates);
double nmse(std::span<const ImpulseResponse> truth, std::span<const ImpulseResponse> estimates);

enum class ExcitationKind { Vowel, White };

std::string_view excitation_name(ExcitationKind kind);
ExcitationKind parse_excitation(std::string_view name);

// Scene and signal defaults for a sweep cell before the swept value is applied.
struct SceneDefaults {
  Vec3 dimensions{5.0, 4.0, 6.0};
  Vec3 source_position{2.0, 3.5, 2.0};
  Vec3 array_center{2.0, 1.5, 2.0};
  // Explicit microphone positions replace the circular array when set.
  std::optional<std::vector<Vec3>> mic_positions;
  double radius = 0.2;
  int num_mics = 5;
  int n_taps = 256;
  int excitation_length = 356;
  double snr_db = 20.0;
  double rt60 = 0.5;
  // Overrides the RT60-derived uniform coefficient when set.
  std::optional<std::array<double, 6>> reflection_coefficients;
  int max_order = 4;
  double speed_of_sound = 343.0;
  double sample_rate = 7350.0;
  ExcitationKind excitation = ExcitationKind::Vowel;

  RoomScene scene() const;
  void validate() const;
};

enum class SweepParameter { SnrDb, ExcitationRatio, NumMics, Radius };

std::string_view parameter_name(SweepParameter p);
SweepParameter parse_parameter(std::string_view name);

struct SweepMethod {
  std::string label;  // unique within a sweep; defaults to the method name
  EstimatorSpec spec;
  CvGrid grid;        // empty lambdas: use spec as given
};

SweepMethod make_sweep_method(const EstimatorSpec& spec);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::SnrDb;
  std::vector<double> values;
  int replicates = 20;
  std::vector<SweepMethod> methods;
  SceneDefaults base;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Scene defaults with the swept value applied.
SceneDefaults apply_sweep_value(const SceneDefaults& base, SweepParameter p, double value);

/// Seeds of one cell. The excitation is fixed per sweep value; the noise is
/// redrawn per replicate.
std::uint64_t excitation_seed(std::uint64_t seed, std::size_t value_index);
std::uint64_t noise_seed(std::uint64_t seed, std::size_t value_index, int replicate);

struct CellRecord {
  std::string method;
  double value = 0.0;
  int replicate = 0;
  double nmse = 0.0;  // NaN when failed
  bool failed = false;
  std::string error;
};

struct SummaryRow {
  std::string method;
  double value = 0.0;
  int count = 0;  // successful replicates
  int failures = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct SweepResult {
  SweepParameter parameter = SweepParameter::SnrDb;
  std::vector<CellRecord> records;  // method-major, then value, then replicate
  std::vector<SummaryRow> summary;  // method-major, then value

  const SummaryRow& row(std::string_view method, double value) const;
};

/// Means and standard errors per (method, value) in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<CellRecord>& records);

struct SweepOptions {
  int jobs = 0;  // 0: OpenMP default
};

SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options = {});

/// Writes results.csv, summary.csv and plot_nmse.py into `out_dir`.
void emit_results(const SweepResult& result, const std::filesystem::path& out_dir);

std::vector<CellRecord> read_results_csv(const std::filesystem::path& path);

}  // namespace omtrir
