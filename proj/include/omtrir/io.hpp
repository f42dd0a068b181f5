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

#include <filesystem>
#include <string>

#include <Eigen/Dense>

namespace omtrir::io {

struct Signal {
  Eigen::VectorXd samples;
  double sample_rate = 0.0;  // 0 when the file carries none (CSV)
};

/// Single-channel signal; `.wav` writes 64-bit IEEE float, `.csv` one value
/// per line. Other extensions are rejected.
void write_signal(const std::filesystem::path& path, const Eigen::VectorXd& samples,
                  double sample_rate);
/// Reads `.csv` or mono `.wav` (64/32-bit float or 16-bit PCM).
Signal read_signal(const std::filesystem::path& path);

/// Dense row-major CSV, one matrix row per line.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// "%.17g": parses back to the identical double.
std::string format_double(double v);

}  // namespace omtrir::io
