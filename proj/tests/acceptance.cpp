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

// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Sparse>
#include <fmt/format.h>

#include "helpers.hpp"
#include "omtrir/bench.hpp"
#include "omtrir/cli.hpp"
#include "omtrir/estimators.hpp"
#include "omtrir/io.hpp"
#include "omtrir/lp.hpp"
#include "omtrir/transport.hpp"

using namespace omtrir;
using omtrir::testing::rel_diff;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd random_mass(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = u(rng) < 0.25 ? 0.0 : u(rng);
  if (v.sum() == 0.0) v[0] = 1.0;
  return v / v.sum();
}

// Dense transport LP with one equality per marginal entry.
double dense_transport_lp(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const Eigen::MatrixXd& cost) {
  const int n0 = static_cast<int>(a.size()), nk = static_cast<int>(b.size());
  std::vector<Eigen::Triplet<double>> t;
  for (int j = 0; j < nk; ++j) {
    for (int i = 0; i < n0; ++i) {
      t.emplace_back(i, j * n0 + i, 1.0);
      t.emplace_back(n0 + j, j * n0 + i, 1.0);
    }
  }
  Eigen::SparseMatrix<double> A(n0 + nk, n0 * nk);
  A.setFromTriplets(t.begin(), t.end());
  Eigen::VectorXd rhs(n0 + nk);
  rhs << a, b;
  return lp::solve(A, rhs, cost.reshaped()).objective;
}

Outcome transport_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  double worst_value = 0.0, worst_marginal = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n0 = 1 + static_cast<int>(rng() % 12), nk = 1 + static_cast<int>(rng() % 12);
    const Eigen::VectorXd a = random_mass(rng, n0), b = random_mass(rng, nk);
    const auto cost = cost_matrix(n0, nk, trial % 2 == 0 ? 0.0 : kDefaultEpsilon);
    const auto sol = dot_distance(a, b, cost);
    worst_value = std::max(worst_value, rel_diff(sol.value, dense_transport_lp(a, b, cost.values)));
    const auto& m = sol.plan.mass;
    worst_marginal = std::max({worst_marginal, (m.rowwise().sum() - a).cwiseAbs().maxCoeff(),
                               (m.colwise().sum().transpose() - b).cwiseAbs().maxCoeff()});
  }
  const double secs = seconds_since(t0);
  return {worst_value <= 1e-8 && worst_marginal <= 1e-8 && secs < 10.0,
          fmt::format("200 instances, value rel err {:.2e}, marginal err {:.2e}, {:.2f} s",
                      worst_value, worst_marginal, secs)};
}

// Barycenter of two distributions as an independent LP over (M1, M2):
// columns of M_k sum to h_k and both plans share their row sums.
double two_plan_barycenter_lp(const Eigen::VectorXd& h1, const Eigen::VectorXd& h2) {
  const int n = static_cast<int>(h1.size()), nn = n * n;
  std::vector<Eigen::Triplet<double>> t;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      t.emplace_back(j, j * n + i, 1.0);
      t.emplace_back(n + j, nn + j * n + i, 1.0);
      t.emplace_back(2 * n + i, j * n + i, 1.0);
      t.emplace_back(2 * n + i, nn + j * n + i, -1.0);
    }
  }
  Eigen::SparseMatrix<double> A(3 * n, 2 * nn);
  A.setFromTriplets(t.begin(), t.end());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(3 * n);
  rhs << h1, h2, Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd c = cost_matrix(n, n, 0.0).values.reshaped();
  Eigen::VectorXd cc(2 * nn);
  cc << c, c;
  return lp::solve(A, rhs, cc).objective;
}

Outcome barycenter_oracle() {
  int cases = 0, bad = 0;
  for (int n = 4; n <= 16; n += 4) {
    for (int d = 2; d < n; d += 2) {
      for (int start = 0; start + d < n; start += 3) {
        Eigen::VectorXd h1 = Eigen::VectorXd::Zero(n), h2 = h1;
        h1[start] = 1.0;
        h2[start + d] = 1.0;
        const std::vector<Eigen::VectorXd> hs{h1, h2};
        const auto r = barycenter(hs, 0.0);
        const double expected = 2.0 * (d / 2) * (d / 2);
        Eigen::VectorXd mid = Eigen::VectorXd::Zero(n);
        mid[start + d / 2] = 1.0;
        // Exhaustive over grid centers plus the joint LP optimum.
        double best_delta = std::numeric_limits<double>::infinity();
        for (int c = 0; c < n; ++c) {
          const double v = double((c - start) * (c - start)) +
                           double((c - start - d) * (c - start - d));
          best_delta = std::min(best_delta, v);
        }
        const double lp_value = two_plan_barycenter_lp(h1, h2);
        const bool ok = std::abs(r.value - expected) <= 1e-9 &&
                        (r.h0 - mid).cwiseAbs().maxCoeff() <= 1e-9 &&
                        std::abs(lp_value - expected) <= 1e-9 &&
                        std::abs(best_delta - expected) <= 1e-12;
        ++cases;
        bad += !ok;
      }
    }
  }
  return {bad == 0, fmt::format("{} delta pairs, {} mismatches", cases, bad)};
}

Outcome solver_consistency() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    LinearSystem sys;
    sys.design = convolution_matrix(omtrir::testing::random_vector(rng, 12), 8);
    for (int k = 0; k < 2; ++k) {
      sys.targets.push_back(omtrir::testing::random_vector(rng, sys.design.rows()));
    }
    const double lambda = std::pow(10.0, -1.0 + 2.0 * trial / 19.0);
    for (Method m : {Method::BarycenterOMT, Method::AdjacentOMT}) {
      EstimatorSpec spec;
      spec.method = m;
      spec.lambda = lambda;
      spec.solver.max_iterations = 20000;
      spec.solver.primal_tolerance = spec.solver.dual_tolerance = 1e-8;
      const Estimate e = estimate(sys, spec);
      CoupledProblem p;
      p.design = sys.design;
      p.targets = sys.targets;
      p.topology = m == Method::BarycenterOMT ? Topology::Star : Topology::Path;
      p.lambda = lambda;
      p.epsilon = spec.epsilon;
      worst = std::max(worst, rel_diff(e.report.objective_value, oracle_solve(p)));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 120.0,
          fmt::format("20 instances x 2 methods, worst rel diff {:.2e}, {:.2f} s", worst, secs)};
}

Outcome exact_recovery() {
  SceneDefaults sd;
  sd.n_taps = 64;
  const RoomScene scene = sd.scene();
  const auto rirs = simulate_rirs(scene, 64);
  const Observation obs = observe(white_excitation(356, 4), rirs, kNoiseless, 0);
  EstimatorSpec ls;
  ls.method = Method::LS;
  const double e = nmse(rirs, estimate_rirs(obs, ls, scene.sample_rate));
  return {e <= 1e-8, fmt::format("NMSE {:.2e}", e)};
}

SweepSpec desk_sweep(SweepParameter p, std::vector<double> values,
                     std::initializer_list<Method> methods, int replicates) {
  SweepSpec spec;
  spec.parameter = p;
  spec.values = std::move(values);
  spec.replicates = replicates;
  spec.base.n_taps = 128;
  spec.seed = 2026;
  for (Method m : methods) {
    EstimatorSpec s;
    s.method = m;
    spec.methods.push_back(make_sweep_method(s));
  }
  return spec;
}

std::string means(const SweepResult& r, const std::string& method,
                  const std::vector<double>& values) {
  std::string s;
  for (double v : values) {
    const auto& row = r.row(method, v);
    s += fmt::format("{}{:.4f}", s.empty() ? "" : " ", row.mean);
    if (row.failures > 0) s += fmt::format("({} failed)", row.failures);
  }
  return s;
}

bool no_failures(const SweepResult& r) {
  for (const auto& row : r.summary) {
    if (row.failures > 0 || row.count == 0) return false;
  }
  return true;
}

Outcome radius_trend() {
  const auto t0 = Clock::now();
  const std::vector<double> radii{0.05, 0.2, 0.8};
  const SweepResult r = run_sweep(desk_sweep(SweepParameter::Radius, radii,
                                             {Method::BarycenterOMT, Method::Tikhonov}, 10));
  bool increasing = true;
  for (std::size_t i = 1; i < radii.size(); ++i) {
    increasing = increasing &&
                 r.row("BarycenterOMT", radii[i]).mean > r.row("BarycenterOMT", radii[i - 1]).mean;
  }
  const bool beats = r.row("BarycenterOMT", 0.05).mean < r.row("Tikhonov", 0.05).mean;
  return {no_failures(r) && increasing && beats,
          fmt::format("BarycenterOMT [{}] increasing={}, Tikhonov [{}] beaten at 0.05={}, {:.0f} s",
                      means(r, "BarycenterOMT", radii), increasing, means(r, "Tikhonov", radii),
                      beats, seconds_since(t0))};
}

Outcome sensor_count_trend() {
  const auto t0 = Clock::now();
  const std::vector<double> counts{2.0, 8.0};
  const SweepResult r = run_sweep(desk_sweep(SweepParameter::NumMics, counts,
                                             {Method::BarycenterOMT, Method::Tikhonov}, 10));
  const bool omt_better = r.row("BarycenterOMT", 8.0).mean < r.row("BarycenterOMT", 2.0).mean;
  const auto& t2 = r.row("Tikhonov", 2.0);
  const auto& t8 = r.row("Tikhonov", 8.0);
  const double diff = std::abs(t8.mean - t2.mean);
  const double se = std::hypot(t8.std_error, t2.std_error);
  const bool flat = diff <= 2.0 * se;
  return {no_failures(r) && omt_better && flat,
          fmt::format("BarycenterOMT K=2,8 [{}]; Tikhonov |diff| {:.4f} vs 2*se {:.4f}, {:.0f} s",
                      means(r, "BarycenterOMT", counts), diff, 2.0 * se, seconds_since(t0))};
}

Outcome snr_trend() {
  const auto t0 = Clock::now();
  const std::vector<double> snrs{0.0, 10.0, 20.0, 30.0};
  const SweepResult r =
      run_sweep(desk_sweep(SweepParameter::SnrDb, snrs,
                           {Method::LS, Method::Tikhonov, Method::Lasso, Method::L2Barycenter,
                            Method::AdjacentOMT, Method::BarycenterOMT},
                           10));
  std::vector<std::string> violations;
  for (Method m : kAllMethods) {
    const std::string name(method_name(m));
    for (std::size_t i = 1; i < snrs.size(); ++i) {
      const auto& lo = r.row(name, snrs[i - 1]);
      const auto& hi = r.row(name, snrs[i]);
      if (hi.mean > lo.mean + std::max(lo.std_error, hi.std_error)) {
        violations.push_back(fmt::format("{}@{}", name, snrs[i]));
      }
    }
  }
  std::string table;
  for (Method m : kAllMethods) {
    table += fmt::format("{}{} [{}]", table.empty() ? "" : "; ", method_name(m),
                         means(r, std::string(method_name(m)), snrs));
  }
  std::string bad;
  for (const auto& v : violations) bad += " " + v;
  return {no_failures(r) && violations.empty(),
          fmt::format("{}; violations:{}; {:.0f} s", table, bad.empty() ? " none" : bad,
                      seconds_since(t0))};
}

int run_cli_quiet(std::vector<std::string> args) {
  args.insert(args.begin(), "omtrir");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

// Every CSV under `a` must exist byte-identical under `b`.
bool same_csvs(const std::filesystem::path& a, const std::filesystem::path& b, int& compared) {
  for (const auto& e : std::filesystem::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    const auto other = b / e.path().filename();
    if (!std::filesystem::exists(other)) return false;
    if (io::read_text(e.path()) != io::read_text(other)) return false;
    ++compared;
  }
  return true;
}

Outcome determinism() {
  omtrir::testing::TempDir dir("acceptance");
  const auto cfg = dir / "bench.json";
  io::write_text(cfg, R"({"seed": 5, "scene": {"n_taps": 64, "excitation_length": 96},
    "sweep": {"values": [10, 30], "replicates": 2,
      "methods": ["LS", "Tikhonov", "Lasso", "L2Barycenter",
        {"method": "AdjacentOMT", "grid": {"lambdas": [0.1, 1]}},
        {"method": "BarycenterOMT", "grid": {"lambdas": [0.1, 1]}}]}})");
  const auto sim_cfg = dir / "sim.json";
  io::write_text(sim_cfg, R"({"seed": 8, "scene": {"n_taps": 64}})");
  const auto est_cfg = dir / "est.json";
  io::write_text(est_cfg, R"({"input": {"dir": ")" + (dir / "sim_a").string() +
                              R"("}, "estimator": {"lambda": 0.1}})");
  // In order: the estimate job reads the first simulate output.
  const std::vector<std::pair<std::string, std::filesystem::path>> jobs{
      {"bench", cfg}, {"simulate", sim_cfg}, {"estimate", est_cfg}};
  int compared = 0;
  bool ok = true;
  for (const auto& [command, config] : jobs) {
    const auto a = dir / (command.substr(0, 3) + "_a"), b = dir / (command.substr(0, 3) + "_b");
    if (run_cli_quiet({command, "--config", config.string(), "--out", a.string()}) != 0) {
      return {false, command + ": first run failed"};
    }
    if (run_cli_quiet({command, "--config", (a / "manifest.json").string(), "--out",
                       b.string()}) != 0) {
      return {false, command + ": rerun from manifest failed"};
    }
    ok = ok && same_csvs(a, b, compared);
  }
  return {ok && compared > 0, fmt::format("bench, simulate and estimate reruns, {} CSV files "
                                          "compared, identical={}",
                                          compared, ok)};
}

Outcome property_suite(const std::string& unit_binary) {
  if (unit_binary.empty()) return {false, "unit test binary not given (--unit-tests)"};
  const std::string cmd = "\"" + unit_binary + "\" --minimal > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return {rc == 0, fmt::format("{} exited with {}", unit_binary, rc)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"omtrir acceptance suite"};
  std::set<int> only;
  std::string unit_binary;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--unit-tests", unit_binary, "path of the unit test binary");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"transport-LP exactness", transport_exactness},
      {"barycenter oracle", barycenter_oracle},
      {"estimator-solver consistency", solver_consistency},
      {"exact-recovery sanity", exact_recovery},
      {"radius trend", radius_trend},
      {"sensor-count trend", sensor_count_trend},
      {"SNR trend", snr_trend},
      {"determinism", determinism},
      {"property suite", [&] { return property_suite(unit_binary); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << fmt::format("{} criterion {}: {} ({})", o.pass ? "PASS" : "FAIL", id,
                             criteria[i].first, o.detail)
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
