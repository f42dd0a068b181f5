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
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace omtrir {

using Vec3 = std::array<double, 3>;

// Shoebox room with an omnidirectional point source and K omnidirectional
// microphones. Wall order for reflection coefficients: x=0, x=Lx, y=0, y=Ly,
// z=0, z=Lz.
struct RoomScene {
  Vec3 dimensions{5.0, 4.0, 6.0};
  Vec3 source_position{2.0, 3.5, 2.0};
  std::vector<Vec3> mic_positions;
  std::array<double, 6> reflection_coefficients{};
  int max_order = 4;
  double speed_of_sound = 343.0;
  double sample_rate = 7350.0;

  // Throws Error when a position is outside the box, max_order < 0,
  // sample_rate <= 0 or a reflection coefficient is not in (-1, 1).
  void validate() const;
};

// Uniform wall reflection coefficient giving the requested reverberation
// time under Sabine's formula. Returns 0 for rt60 == 0.
double sabine_reflection_coefficient(const Vec3& dimensions, double rt60,
                                     double speed_of_sound = 343.0);

struct ImpulseResponse {
  Eigen::VectorXd taps;
  double sample_rate = 0.0;
};

struct ImageSource {
  double delay = 0.0;      // seconds, |image - mic| / c
  double amplitude = 0.0;  // reflection_gain / |image - mic|
  double reflection_gain = 1.0;
  int order = 0;
};

using ImageSourceSet = std::vector<ImageSource>;

/// Direct path plus every mirror image of reflection order <= max_order,
/// seen from microphone `mic_index`. Entries are sorted by delay.
ImageSourceSet image_sources(const RoomScene& scene, std::size_t mic_index);

inline constexpr int kDefaultKernelHalfWidth = 16;

/// Places each (delay, amplitude) pair on the tap grid with a Hann-windowed
/// sinc fractional-delay kernel. Energy beyond n_taps is dropped.
ImpulseResponse render_rir(std::span<const ImageSource> images,
                           double sample_rate, int n_taps,
                           int half_width = kDefaultKernelHalfWidth);

/// K points on a horizontal circle, counterclockwise from +x.
std::vector<Vec3> circular_array(const Vec3& center, double radius, int count);

/// Ground-truth RIRs for every microphone of the scene.
std::vector<ImpulseResponse> simulate_rirs(const RoomScene& scene, int n_taps);

/// Vowel-like harmonic excitation: 120 Hz fundamental, formant envelope near
/// 700/1100/2600 Hz, seeded random harmonic phases, unit RMS.
Eigen::VectorXd synthesize_excitation(int n_samples, double sample_rate,
                                      std::uint64_t seed);

/// Unit-variance white Gaussian excitation (broadband reference case).
Eigen::VectorXd white_excitation(int n_samples, std::uint64_t seed);

/// Full linear convolution, length x.size() + h.size() - 1.
Eigen::VectorXd convolve(const Eigen::VectorXd& x, const Eigen::VectorXd& h);

/// (N_x + n_taps - 1) x n_taps Toeplitz operator with X * h == x * h.
Eigen::MatrixXd convolution_matrix(const Eigen::VectorXd& x, int n_taps);

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

struct Observation {
  Eigen::VectorXd excitation;
  std::vector<Eigen::VectorXd> received;
  double snr_db = kNoiseless;
  std::uint64_t noise_seed = 0;

  int num_mics() const { return static_cast<int>(received.size()); }
  // Filter length implied by the received length.
  int n_taps() const;
};

/// received_k = x * h_k + w_k with independent white Gaussian w_k scaled per
/// microphone to hit snr_db against the noiseless convolution.
Observation observe(const Eigen::VectorXd& excitation,
                    std::span<const ImpulseResponse> rirs, double snr_db,
                    std::uint64_t seed);

}  // namespace omtrir
