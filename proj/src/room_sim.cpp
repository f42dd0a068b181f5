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

#include "omtrir/room_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "omtrir/error.hpp"
#include "omtrir/seeding.hpp"

namespace omtrir {
namespace {

double int_pow(double base, int exponent) {
  double r = 1.0;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

double norm3(const Vec3& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

double sinc(double t) {
  if (t == 0.0) return 1.0;
  const double a = std::numbers::pi * t;
  return std::sin(a) / a;
}

void require_inside(const RoomScene& scene, const Vec3& p, const char* what) {
  for (int axis = 0; axis < 3; ++axis) {
    if (!(p[axis] > 0.0 && p[axis] < scene.dimensions[axis])) {
      throw Error(std::string(what) + " lies outside the room");
    }
  }
}

}  // namespace

void RoomScene::validate() const {
  for (double d : dimensions) {
    if (!(d > 0.0) || !std::isfinite(d)) throw Error("room dimensions must be positive");
  }
  if (mic_positions.empty()) throw Error("scene has no microphones");
  require_inside(*this, source_position, "source");
  for (const auto& m : mic_positions) require_inside(*this, m, "microphone");
  if (max_order < 0) throw Error("max_order must be nonnegative");
  if (!(sample_rate > 0.0)) throw Error("sample_rate must be positive");
  if (!(speed_of_sound > 0.0)) throw Error("speed_of_sound must be positive");
  for (double b : reflection_coefficients) {
    if (!(std::abs(b) < 1.0)) throw Error("reflection coefficients must lie in (-1, 1)");
  }
}

double sabine_reflection_coefficient(const Vec3& dimensions, double rt60,
                                     double speed_of_sound) {
  if (rt60 < 0.0) throw Error("rt60 must be nonnegative");
  if (rt60 == 0.0) return 0.0;
  const double volume = dimensions[0] * dimensions[1] * dimensions[2];
  const double surface = 2.0 * (dimensions[0] * dimensions[1] +
                                dimensions[0] * dimensions[2] +
                                dimensions[1] * dimensions[2]);
  // 24 ln(10) / c is the Sabine constant (~0.161 s/m at 343 m/s).
  const double alpha =
      24.0 * std::log(10.0) * volume / (speed_of_sound * surface * rt60);
  if (alpha > 1.0) throw Error("rt60 too short for this room");
  return std::sqrt(1.0 - alpha);
}

ImageSourceSet image_sources(const RoomScene& scene, std::size_t mic_index) {
  scene.validate();
  if (mic_index >= scene.mic_positions.size()) throw Error("mic_index out of range");
  const Vec3& s = scene.source_position;
  const Vec3& r = scene.mic_positions[mic_index];
  const Vec3& L = scene.dimensions;
  const auto& beta = scene.reflection_coefficients;
  const int order = scene.max_order;
  const int reach = (order + 1) / 2;

  if (norm3({s[0] - r[0], s[1] - r[1], s[2] - r[2]}) == 0.0) {
    throw Error("zero-distance path");
  }

  ImageSourceSet out;
  for (int mx = -reach; mx <= reach; ++mx) {
    for (int my = -reach; my <= reach; ++my) {
      for (int mz = -reach; mz <= reach; ++mz) {
        const int m[3] = {mx, my, mz};
        for (int q = 0; q <= 1; ++q) {
          for (int j = 0; j <= 1; ++j) {
            for (int k = 0; k <= 1; ++k) {
              const int flip[3] = {q, j, k};
              int img_order = 0;
              double gain = 1.0;
              Vec3 rel{};
              for (int a = 0; a < 3; ++a) {
                img_order += std::abs(2 * m[a] - flip[a]);
                rel[a] = (1 - 2 * flip[a]) * s[a] + 2.0 * m[a] * L[a] - r[a];
                gain *= int_pow(beta[2 * a], std::abs(m[a] - flip[a])) *
                        int_pow(beta[2 * a + 1], std::abs(m[a]));
              }
              if (img_order > order) continue;
              const double dist = norm3(rel);
              if (dist == 0.0) throw Error("zero-distance path");
              out.push_back({dist / scene.speed_of_sound, gain / dist, gain, img_order});
            }
          }
        }
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ImageSource& a, const ImageSource& b) {
    return a.delay < b.delay;
  });
  return out;
}

ImpulseResponse render_rir(std::span<const ImageSource> images, double sample_rate,
                           int n_taps, int half_width) {
  if (n_taps < 1) throw Error("n_taps must be at least 1");
  if (half_width < 1) throw Error("kernel half-width must be at least 1");
  if (!(sample_rate > 0.0)) throw Error("sample_rate must be positive");
  ImpulseResponse rir{Eigen::VectorXd::Zero(n_taps), sample_rate};
  const double w = half_width;
  for (const ImageSource& img : images) {
    const double center = img.delay * sample_rate;
    const long first = std::max<long>(0, static_cast<long>(std::ceil(center - w)));
    const long last = std::min<long>(n_taps - 1, static_cast<long>(std::floor(center + w)));
    for (long n = first; n <= last; ++n) {
      const double t = static_cast<double>(n) - center;
      if (std::abs(t) >= w) continue;
      const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * t / w));
      rir.taps[n] += img.amplitude * window * sinc(t);
    }
  }
  return rir;
}

std::vector<Vec3> circular_array(const Vec3& center, double radius, int count) {
  if (count < 1) throw Error("array needs at least one microphone");
  if (radius < 0.0) throw Error("array radius must be nonnegative");
  std::vector<Vec3> mics(count);
  for (int k = 0; k < count; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / count;
    mics[k] = {center[0] + radius * std::cos(angle),
               center[1] + radius * std::sin(angle), center[2]};
  }
  return mics;
}

std::vector<ImpulseResponse> simulate_rirs(const RoomScene& scene, int n_taps) {
  scene.validate();
  std::vector<ImpulseResponse> rirs;
  rirs.reserve(scene.mic_positions.size());
  for (std::size_t k = 0; k < scene.mic_positions.size(); ++k) {
    const auto images = image_sources(scene, k);
    rirs.push_back(render_rir(images, scene.sample_rate, n_taps));
  }
  return rirs;
}

Eigen::VectorXd synthesize_excitation(int n_samples, double sample_rate,
                                      std::uint64_t seed) {
  if (n_samples < 1) throw Error("n_samples must be at least 1");
  if (!(sample_rate > 0.0)) throw Error("sample_rate must be positive");
  constexpr double kFundamental = 120.0;
  struct Formant {
    double frequency, bandwidth, gain;
  };
  constexpr Formant kFormants[] = {{700.0, 110.0, 1.0}, {1100.0, 120.0, 0.6},
                                   {2600.0, 160.0, 0.25}};

  std::mt19937_64 rng(derive_seed(seed, {0x766f77656cULL}));
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n_samples);
  const double nyquist = 0.5 * sample_rate;
  for (int h = 1; h * kFundamental < nyquist; ++h) {
    const double f = h * kFundamental;
    double envelope = 0.0;
    for (const Formant& fm : kFormants) {
      const double d = (f - fm.frequency) / fm.bandwidth;
      envelope += fm.gain / (1.0 + d * d);
    }
    const double phase = phase_dist(rng);
    const double omega = 2.0 * std::numbers::pi * f / sample_rate;
    for (int n = 0; n < n_samples; ++n) x[n] += envelope * std::cos(omega * n + phase);
  }
  const double rms = std::sqrt(x.squaredNorm() / n_samples);
  if (rms == 0.0) throw Error("degenerate excitation");
  return x / rms;
}

Eigen::VectorXd white_excitation(int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw Error("n_samples must be at least 1");
  std::mt19937_64 rng(derive_seed(seed, {0x7768697465ULL}));
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd x(n_samples);
  for (int n = 0; n < n_samples; ++n) x[n] = dist(rng);
  return x;
}

Eigen::VectorXd convolve(const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
  if (x.size() == 0 || h.size() == 0) throw Error("cannot convolve empty signals");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size() + h.size() - 1);
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    if (h[j] != 0.0) y.segment(j, x.size()) += h[j] * x;
  }
  return y;
}

Eigen::MatrixXd convolution_matrix(const Eigen::VectorXd& x, int n_taps) {
  if (x.size() < 1) throw Error("excitation must be nonempty");
  if (n_taps < 1) throw Error("n_taps must be at least 1");
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(x.size() + n_taps - 1, n_taps);
  for (int j = 0; j < n_taps; ++j) X.col(j).segment(j, x.size()) = x;
  return X;
}

int Observation::n_taps() const {
  if (received.empty()) return 0;
  return static_cast<int>(received.front().size() - excitation.size() + 1);
}

Observation observe(const Eigen::VectorXd& excitation,
                    std::span<const ImpulseResponse> rirs, double snr_db,
                    std::uint64_t seed) {
  if (rirs.empty()) throw Error("no impulse responses to observe");
  if (std::isnan(snr_db) || snr_db == -kNoiseless) {
    throw Error("snr_db must be finite or +infinity");
  }
  const Eigen::Index n_taps = rirs.front().taps.size();
  for (const auto& r : rirs) {
    if (r.taps.size() != n_taps) throw Error("all RIRs must share the same length");
  }
  Observation obs;
  obs.excitation = excitation;
  obs.snr_db = snr_db;
  obs.noise_seed = seed;
  obs.received.reserve(rirs.size());
  for (std::size_t k = 0; k < rirs.size(); ++k) {
    Eigen::VectorXd y = convolve(excitation, rirs[k].taps);
    if (std::isfinite(snr_db)) {
      const double energy = y.squaredNorm();
      if (energy == 0.0) throw Error("undefined SNR scaling");
      const double variance =
          energy / (static_cast<double>(y.size()) * std::pow(10.0, snr_db / 10.0));
      std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
      std::normal_distribution<double> noise(0.0, std::sqrt(variance));
      for (Eigen::Index n = 0; n < y.size(); ++n) y[n] += noise(rng);
    }
    obs.received.push_back(std::move(y));
  }
  return obs;
}

}  // namespace omtrir
