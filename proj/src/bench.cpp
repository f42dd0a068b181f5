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

#include "omtrir/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <omp.h>
#include <spdlog/spdlog.h>

#include "omtrir/error.hpp"
#include "omtrir/io.hpp"
#include "omtrir/seeding.hpp"

namespace omtrir {

namespace {

constexpr std::string_view kParameterNames[] = {"snr_db", "excitation_ratio", "num_mics",
                                                "radius"};

constexpr std::string_view kPlotScript = R"py(#!/usr/bin/env python3
"""Mean NMSE (dB) against the swept parameter, one curve per method."""
import csv
import math
import pathlib
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = pathlib.Path(__file__).resolve().parent
with open(here / "summary.csv", newline="", encoding="utf-8") as f:
    rows = list(csv.DictReader(f))

curves = defaultdict(list)
parameter = rows[0]["parameter"] if rows else "value"
for r in rows:
    if int(r["count"]) == 0:
        continue
    mean = float(r["mean_nmse"])
    se = float(r["stderr_nmse"])
    lo = 10 * math.log10(max(mean - se, 1e-300))
    hi = 10 * math.log10(mean + se)
    curves[r["method"]].append((float(r["value"]), float(r["mean_nmse_db"]), lo, hi))

fig, ax = plt.subplots(figsize=(6, 4))
for method, pts in curves.items():
    pts.sort()
    x = [p[0] for p in pts]
    y = [p[1] for p in pts]
    err = [[p[1] - p[2] for p in pts], [p[3] - p[1] for p in pts]]
    ax.errorbar(x, y, yerr=err, marker="o", capsize=3, label=method)
ax.set_xlabel(parameter)
ax.set_ylabel("NMSE [dB]")
ax.grid(True, alpha=0.3)
if curves:
    ax.legend()
fig.tight_layout()
out = here / (sys.argv[1] if len(sys.argv) > 1 else "nmse.png")
fig.savefig(out, dpi=150)
print(out)
)py";

std::string num(double v) { return io::format_double(v); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(std::move(cell));
  return out;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw Error("bad number '" + s + "' in " + context);
  return v;
}

}  // namespace

double nmse(std::span<const ImpulseResponse> truth, std::span<const Eigen::VectorXd> estimates) {
  if (truth.size() != estimates.size() || truth.empty()) {
    throw Error("nmse needs matching, nonempty sets of responses");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const Eigen::VectorXd& h = truth[k].taps;
    if (h.size() != estimates[k].size()) throw Error("nmse needs equal filter lengths");
    const double energy = h.squaredNorm();
    if (!(energy > 0.0)) throw Error("undefined normalization");
    total += (h - estimates[k]).squaredNorm() / energy;
  }
  return total / static_cast<double>(truth.size());
}

double nmse(std::span<const ImpulseResponse> truth, std::span<const ImpulseResponse> estimates) {
  std::vector<Eigen::VectorXd> taps;
  for (const auto& e : estimates) taps.push_back(e.taps);
  return nmse(truth, std::span<const Eigen::VectorXd>(taps));
}

std::string_view excitation_name(ExcitationKind kind) {
  return kind == ExcitationKind::Vowel ? "vowel" : "white";
}

ExcitationKind parse_excitation(std::string_view name) {
  if (name == "vowel") return ExcitationKind::Vowel;
  if (name == "white") return ExcitationKind::White;
  throw ConfigError("unknown excitation '" + std::string(name) + "'; valid: vowel, white");
}

RoomScene SceneDefaults::scene() const {
  RoomScene s;
  s.dimensions = dimensions;
  s.source_position = source_position;
  s.mic_positions = mic_positions ? *mic_positions : circular_array(array_center, radius, num_mics);
  if (reflection_coefficients) {
    s.reflection_coefficients = *reflection_coefficients;
  } else {
    s.reflection_coefficients.fill(sabine_reflection_coefficient(dimensions, rt60, speed_of_sound));
  }
  s.max_order = max_order;
  s.speed_of_sound = speed_of_sound;
  s.sample_rate = sample_rate;
  return s;
}

void SceneDefaults::validate() const {
  if (num_mics < 1) throw ConfigError("num_mics must be at least 1");
  if (!(radius >= 0.0)) throw ConfigError("radius must be nonnegative");
  if (n_taps < 1) throw ConfigError("n_taps must be at least 1");
  if (excitation_length < 1) throw ConfigError("excitation_length must be at least 1");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw ConfigError("snr_db must be finite or +infinity");
  }
  if (!reflection_coefficients && !(rt60 > 0.0)) throw ConfigError("rt60 must be positive");
  try {
    scene().validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::string_view parameter_name(SweepParameter p) { return kParameterNames[static_cast<int>(p)]; }

SweepParameter parse_parameter(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (kParameterNames[i] == name) return static_cast<SweepParameter>(i);
  }
  throw ConfigError("unknown sweep parameter '" + std::string(name) +
                    "'; valid: snr_db, excitation_ratio, num_mics, radius");
}

SweepMethod make_sweep_method(const EstimatorSpec& spec) {
  return {std::string(method_name(spec.method)), spec, default_grid(spec.method)};
}

SceneDefaults apply_sweep_value(const SceneDefaults& base, SweepParameter p, double value) {
  SceneDefaults s = base;
  switch (p) {
    case SweepParameter::SnrDb:
      s.snr_db = value;
      break;
    case SweepParameter::ExcitationRatio:
      if (!(value >= 0.0)) throw ConfigError("excitation_ratio must be nonnegative");
      s.excitation_length = static_cast<int>(std::lround(base.n_taps * (1.0 + value)));
      break;
    case SweepParameter::NumMics:
      if (value != std::floor(value) || value < 1) {
        throw ConfigError("num_mics values must be positive integers");
      }
      s.num_mics = static_cast<int>(value);
      break;
    case SweepParameter::Radius:
      s.radius = value;
      break;
  }
  return s;
}

void SweepSpec::validate() const {
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (values.empty()) throw ConfigError("sweep values must be nonempty");
  const bool up = values.size() < 2 || values[1] > values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (up ? !(values[i] > values[i - 1]) : !(values[i] < values[i - 1])) {
      throw ConfigError("sweep values must be strictly monotone");
    }
  }
  if (base.mic_positions &&
      (parameter == SweepParameter::NumMics || parameter == SweepParameter::Radius)) {
    throw ConfigError("explicit mic_positions cannot be combined with a num_mics or radius sweep");
  }
  std::vector<std::string> labels;
  for (const auto& m : methods) {
    m.spec.validate();
    if (std::find(labels.begin(), labels.end(), m.label) != labels.end()) {
      throw ConfigError("duplicate method label '" + m.label + "'");
    }
    labels.push_back(m.label);
  }
  for (double v : values) {
    const SceneDefaults s = apply_sweep_value(base, parameter, v);
    s.validate();
    for (const auto& m : methods) {
      if (m.spec.method == Method::AdjacentOMT && s.num_mics < 2) {
        throw ConfigError("AdjacentOMT needs at least two microphones");
      }
    }
  }
}

std::uint64_t excitation_seed(std::uint64_t seed, std::size_t value_index) {
  return derive_seed(seed, {value_index});
}

std::uint64_t noise_seed(std::uint64_t seed, std::size_t value_index, int replicate) {
  return derive_seed(seed, {value_index, static_cast<std::uint64_t>(replicate)});
}

const SummaryRow& SweepResult::row(std::string_view method, double value) const {
  for (const auto& r : summary) {
    if (r.method == method && r.value == value) return r;
  }
  throw Error("no summary row for " + std::string(method) + " at " + num(value));
}

std::vector<SummaryRow> summarize(const std::vector<CellRecord>& records) {
  std::vector<SummaryRow> rows;
  std::map<std::pair<std::string, double>, std::size_t> index;
  std::vector<std::vector<double>> samples;
  for (const auto& rec : records) {
    const auto key = std::make_pair(rec.method, rec.value);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      rows.push_back({rec.method, rec.value, 0, 0, 0.0, 0.0});
      samples.emplace_back();
    }
    if (rec.failed) {
      ++rows[it->second].failures;
    } else {
      samples[it->second].push_back(rec.nmse);
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& x = samples[i];
    const auto n = static_cast<double>(x.size());
    rows[i].count = static_cast<int>(x.size());
    if (x.empty()) {
      rows[i].mean = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (double v : x) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    rows[i].mean = mean;
    rows[i].std_error = x.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  }
  return rows;
}

SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options) {
  spec.validate();
  const std::size_t nv = spec.values.size();
  const int nr = spec.replicates;
  const std::size_t nm = spec.methods.size();
  const auto cells = static_cast<std::ptrdiff_t>(nv * nr);
  // slots[(cell) * nm + method]
  std::vector<CellRecord> slots(static_cast<std::size_t>(cells) * nm);
  const int jobs = options.jobs;

#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs > 0 ? jobs : omp_get_max_threads())
  for (std::ptrdiff_t c = 0; c < cells; ++c) {
    const std::size_t vi = static_cast<std::size_t>(c) / nr;
    const int r = static_cast<int>(c % nr);
    const double value = spec.values[vi];
    const SceneDefaults sd = apply_sweep_value(spec.base, spec.parameter, value);
    std::vector<ImpulseResponse> truth;
    Observation obs;
    std::string setup_error;
    try {
      truth = simulate_rirs(sd.scene(), sd.n_taps);
      const std::uint64_t xs = excitation_seed(spec.seed, vi);
      const Eigen::VectorXd x = sd.excitation == ExcitationKind::Vowel
                                    ? synthesize_excitation(sd.excitation_length, sd.sample_rate, xs)
                                    : white_excitation(sd.excitation_length, xs);
      obs = observe(x, truth, sd.snr_db, noise_seed(spec.seed, vi, r));
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    const LinearSystem sys =
        setup_error.empty() ? LinearSystem::from_observation(obs) : LinearSystem{};
    for (std::size_t m = 0; m < nm; ++m) {
      const SweepMethod& method = spec.methods[m];
      CellRecord& rec = slots[static_cast<std::size_t>(c) * nm + m];
      rec.method = method.label;
      rec.value = value;
      rec.replicate = r;
      try {
        if (!setup_error.empty()) throw Error(setup_error);
        EstimatorSpec chosen = method.spec;
        if (!method.grid.lambdas.empty() || method.spec.method == Method::LS) {
          chosen = cross_validate(sys, method.spec, method.grid).chosen;
        }
        const Estimate est = estimate(sys, chosen);
        rec.nmse = nmse(truth, std::span<const Eigen::VectorXd>(est.taps));
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.nmse = std::numeric_limits<double>::quiet_NaN();
        rec.error = e.what();
      }
    }
  }

  SweepResult result;
  result.parameter = spec.parameter;
  result.records.reserve(slots.size());
  for (std::size_t m = 0; m < nm; ++m) {
    for (std::ptrdiff_t c = 0; c < cells; ++c) {
      result.records.push_back(std::move(slots[static_cast<std::size_t>(c) * nm + m]));
    }
  }
  int failures = 0;
  for (const auto& rec : result.records) {
    if (rec.failed) {
      ++failures;
      spdlog::warn("{} at {}={} replicate {} failed: {}", rec.method, parameter_name(spec.parameter),
                   num(rec.value), rec.replicate, rec.error);
    }
  }
  if (failures > 0) spdlog::warn("{} failed cell(s) excluded from the means", failures);
  result.summary = summarize(result.records);
  return result;
}

void emit_results(const SweepResult& result, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create " + out_dir.string() + ": " + ec.message());
  const std::string param(parameter_name(result.parameter));
  {
    auto f = open_out(out_dir / "results.csv");
    f << "method,parameter,value,replicate,nmse,status\n";
    for (const auto& r : result.records) {
      f << quote(r.method) << ',' << param << ',' << num(r.value) << ',' << r.replicate << ','
        << (r.failed ? std::string("nan") : num(r.nmse)) << ','
        << (r.failed ? quote("failed: " + r.error) : std::string("ok")) << '\n';
    }
    if (!f) throw Error("write failed for " + (out_dir / "results.csv").string());
  }
  {
    auto f = open_out(out_dir / "summary.csv");
    f << "method,parameter,value,count,failures,mean_nmse,stderr_nmse,mean_nmse_db\n";
    for (const auto& r : result.summary) {
      f << quote(r.method) << ',' << param << ',' << num(r.value) << ',' << r.count << ','
        << r.failures << ',' << num(r.mean) << ',' << num(r.std_error) << ','
        << num(10.0 * std::log10(r.mean)) << '\n';
    }
    if (!f) throw Error("write failed for " + (out_dir / "summary.csv").string());
  }
  {
    auto f = open_out(out_dir / "plot_nmse.py");
    f << kPlotScript;
    if (!f) throw Error("write failed for " + (out_dir / "plot_nmse.py").string());
  }
}

std::vector<CellRecord> read_results_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw Error(path.string() + " is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "method" || header[4] != "nmse") {
    throw Error(path.string() + " is not a results table");
  }
  std::vector<CellRecord> out;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    if (cells.size() != header.size()) throw Error("wrong column count at " + ctx);
    CellRecord r;
    r.method = cells[0];
    r.value = parse_double(cells[2], ctx);
    r.replicate = static_cast<int>(parse_double(cells[3], ctx));
    r.nmse = parse_double(cells[4], ctx);
    if (cells.size() > 5 && cells[5] != "ok") {
      r.failed = true;
      r.error = cells[5].rfind("failed: ", 0) == 0 ? cells[5].substr(8) : cells[5];
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace omtrir
