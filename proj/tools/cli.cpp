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

#include "omtrir/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>
#include <spdlog/spdlog.h>

#include "omtrir/bench.hpp"
#include "omtrir/config.hpp"
#include "omtrir/error.hpp"
#include "omtrir/estimators.hpp"
#include "omtrir/io.hpp"
#include "omtrir/room_sim.hpp"
#include "omtrir/transport.hpp"

#ifndef OMTRIR_VERSION
#define OMTRIR_VERSION "0.0.0"
#endif

namespace omtrir {

namespace {

namespace fs = std::filesystem;
using config::Json;

struct Invocation {
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  int jobs = 0;
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
  // transport only
  std::string mode;
  std::vector<std::string> inputs;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

Json load_config(const Invocation& inv) {
  Json user = Json::object();
  if (!inv.config_path.empty()) {
    if (!fs::exists(inv.config_path)) {
      throw ConfigError("config file not found: " + inv.config_path);
    }
    user = config::load(io::read_text(inv.config_path), inv.config_path);
  }
  Json cfg = config::resolve(inv.command, user, inv.overrides);
  if (inv.seed) cfg["seed"] = *inv.seed;
  if (inv.command == "transport") {
    if (!inv.mode.empty()) cfg["transport"]["mode"] = inv.mode;
    if (!inv.inputs.empty()) cfg["transport"]["inputs"] = inv.inputs;
  }
  return cfg;
}

std::uint64_t seed_of(const Json& cfg) {
  const Json& s = cfg.at("seed");
  if (!s.is_number_integer() && !s.is_number_unsigned()) {
    throw ConfigError("config seed: expected a nonnegative integer");
  }
  if (s.is_number_integer() && s.get<long long>() < 0) {
    throw ConfigError("config seed: expected a nonnegative integer");
  }
  return s.get<std::uint64_t>();
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

void write_manifest(const fs::path& dir, const std::string& command, const Json& cfg) {
  Json m;
  m["command"] = command;
  m["resolved_config"] = cfg;
  m["seed"] = cfg.at("seed");
  m["artifact_version"] = OMTRIR_VERSION;
  m["timestamp"] = utc_timestamp();
  io::write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::string format_ext(const Json& cfg) {
  const std::string f = cfg.at("output").at("format").get<std::string>();
  if (f != "csv" && f != "wav") throw ConfigError("output.format must be csv or wav");
  return "." + f;
}

std::string indexed(const std::string& stem, int k, const std::string& ext) {
  return fmt::format("{}_{:02d}{}", stem, k, ext);
}

// ---- simulate --------------------------------------------------------------

int cmd_simulate(const Invocation& inv, const Json& cfg, std::ostream& out) {
  const SceneDefaults sd = config::scene_from_json(cfg.at("scene"));
  const std::string ext = format_ext(cfg);
  const std::uint64_t seed = seed_of(cfg);
  const fs::path dir = prepare_out(inv.out_dir);

  const auto rirs = simulate_rirs(sd.scene(), sd.n_taps);
  const std::uint64_t xs = excitation_seed(seed, 0);
  const Eigen::VectorXd x = sd.excitation == ExcitationKind::Vowel
                                ? synthesize_excitation(sd.excitation_length, sd.sample_rate, xs)
                                : white_excitation(sd.excitation_length, xs);
  const Observation obs = observe(x, rirs, sd.snr_db, noise_seed(seed, 0, 0));

  for (std::size_t k = 0; k < rirs.size(); ++k) {
    io::write_signal(dir / indexed("rir", static_cast<int>(k), ext), rirs[k].taps, sd.sample_rate);
    io::write_signal(dir / indexed("observation", static_cast<int>(k), ext), obs.received[k],
                     sd.sample_rate);
  }
  io::write_signal(dir / ("excitation" + ext), x, sd.sample_rate);
  write_manifest(dir, inv.command, cfg);
  out << fmt::format("wrote {} RIRs ({} taps), excitation ({} samples) and {} observations "
                     "({} samples) to {}\n",
                     rirs.size(), sd.n_taps, x.size(), obs.received.size(),
                     obs.received.front().size(), dir.string());
  return 0;
}

// ---- transport -------------------------------------------------------------

bool nonnegative(const Eigen::VectorXd& v) { return (v.array() >= 0.0).all(); }

int cmd_transport(const Invocation& inv, const Json& cfg, std::ostream& out) {
  const Json& t = cfg.at("transport");
  const std::string mode = t.at("mode").get<std::string>();
  const double eps = t.at("epsilon").get<double>();
  if (!(eps >= 0.0)) throw ConfigError("transport.epsilon must be nonnegative");
  std::vector<std::string> files;
  for (const auto& f : t.at("inputs")) files.push_back(f.get<std::string>());
  if (mode != "distance" && mode != "barycenter") {
    throw ConfigError("transport mode must be 'distance' or 'barycenter', got '" + mode + "'");
  }
  if (mode == "distance" && files.size() != 2) {
    throw ConfigError("transport distance needs exactly two input files");
  }
  if (mode == "barycenter" && files.empty()) {
    throw ConfigError("transport barycenter needs at least one input file");
  }
  std::vector<Eigen::VectorXd> hs;
  for (const auto& f : files) hs.push_back(io::read_signal(f).samples);
  const bool plain = std::all_of(hs.begin(), hs.end(), nonnegative);
  const fs::path dir = prepare_out(inv.out_dir);
  Json result;
  result["mode"] = mode;
  result["inputs"] = files;
  result["epsilon"] = eps;

  if (mode == "distance") {
    const CostMatrix cost =
        cost_matrix(static_cast<int>(hs[0].size()), static_cast<int>(hs[1].size()), eps);
    double value = 0.0;
    if (plain) {
      const TransportSolution s = dot_distance(hs[0], hs[1], cost);
      value = s.value;
      io::write_matrix_csv(dir / "plan.csv", s.plan.mass);
    } else {
      const SignedSplit a = split_signed(hs[0]), b = split_signed(hs[1]);
      const TransportSolution pos = dot_distance(a.positive, b.positive, cost);
      const TransportSolution neg = dot_distance(a.negative, b.negative, cost);
      value = pos.value + neg.value;
      io::write_matrix_csv(dir / "plan_positive.csv", pos.plan.mass);
      io::write_matrix_csv(dir / "plan_negative.csv", neg.plan.mass);
    }
    result["value"] = value;
    out << "distance " << io::format_double(value) << "\n";
  } else {
    double value = 0.0;
    Eigen::VectorXd h0;
    if (plain) {
      const BarycenterResult b = barycenter(hs, eps);
      h0 = b.h0;
      value = b.value;
    } else {
      std::vector<Eigen::VectorXd> pos, neg;
      for (const auto& h : hs) {
        const SignedSplit s = split_signed(h);
        pos.push_back(s.positive);
        neg.push_back(s.negative);
      }
      const BarycenterResult bp = barycenter(pos, eps);
      const BarycenterResult bn = barycenter(neg, eps);
      h0 = bp.h0 - bn.h0;
      value = bp.value + bn.value;
    }
    io::write_signal(dir / "barycenter.csv", h0, 0.0);
    result["value"] = value;
    out << "barycenter value " << io::format_double(value) << "\n";
  }
  io::write_text(dir / "result.json", result.dump(2) + "\n");
  write_manifest(dir, inv.command, cfg);
  return 0;
}

// ---- estimate --------------------------------------------------------------

std::optional<fs::path> find_signal(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".csv", ".wav"}) {
    const fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

std::vector<std::string> path_list(const Json& j, const char* key) {
  std::vector<std::string> out;
  const Json& v = j.at(key);
  if (v.is_null()) return out;
  if (!v.is_array()) throw ConfigError(std::string("input.") + key + ": expected a list of paths");
  for (const auto& e : v) out.push_back(e.get<std::string>());
  return out;
}

int cmd_estimate(const Invocation& inv, const Json& cfg, std::ostream& out) {
  const EstimatorSpec base = config::estimator_from_json(cfg.at("estimator"));
  const Json& cvj = cfg.at("cross_validation");
  const bool do_cv = cvj.at("enabled").get<bool>();
  const CvGrid grid = config::grid_from_json(cvj, base.method);
  const std::string ext = format_ext(cfg);
  const Json& in = cfg.at("input");
  std::string excitation_path = in.at("excitation").is_null() ? "" : in.at("excitation").get<std::string>();
  std::vector<std::string> obs_paths = path_list(in, "observations");
  std::vector<std::string> truth_paths = path_list(in, "truth");
  if (!in.at("dir").is_null()) {
    const fs::path d = in.at("dir").get<std::string>();
    if (!fs::is_directory(d)) throw ConfigError("input.dir is not a directory: " + d.string());
    if (excitation_path.empty()) {
      if (auto p = find_signal(d, "excitation")) excitation_path = p->string();
    }
    if (obs_paths.empty()) {
      for (int k = 0;; ++k) {
        auto p = find_signal(d, fmt::format("observation_{:02d}", k));
        if (!p) break;
        obs_paths.push_back(p->string());
      }
    }
    if (truth_paths.empty()) {
      for (int k = 0;; ++k) {
        auto p = find_signal(d, fmt::format("rir_{:02d}", k));
        if (!p) break;
        truth_paths.push_back(p->string());
      }
    }
  }
  if (excitation_path.empty()) throw ConfigError("no excitation file given (input.excitation)");
  if (obs_paths.empty()) throw ConfigError("no observation files given (input.observations)");


  const io::Signal x = io::read_signal(excitation_path);
  double fs_rate = x.sample_rate > 0 ? x.sample_rate : in.at("sample_rate").get<double>();
  Observation obs;
  obs.excitation = x.samples;
  for (const auto& p : obs_paths) obs.received.push_back(io::read_signal(p).samples);
  const auto expected = obs.received.front().size();
  for (const auto& r : obs.received) {
    if (r.size() != expected) throw Error("observation files differ in length");
  }
  if (expected < x.samples.size()) throw Error("observations are shorter than the excitation");
  if (base.method == Method::AdjacentOMT && obs.received.size() < 2) {
    throw ConfigError("AdjacentOMT needs at least two observations");
  }

  const LinearSystem sys = LinearSystem::from_observation(obs);
  EstimatorSpec spec = base;
  Json report;
  if (do_cv) {
    const CvResult cv = cross_validate(sys, base, grid);
    spec = cv.chosen;
    Json errs = Json::array();
    for (double e : cv.validation_error) errs.push_back(std::isfinite(e) ? Json(e) : Json(nullptr));
    report["cross_validation"] = {{"chosen_index", cv.chosen_index}, {"validation_error", errs}};
  }
  const Estimate est = estimate(sys, spec);

  const fs::path dir = prepare_out(inv.out_dir);
  for (std::size_t k = 0; k < est.taps.size(); ++k) {
    io::write_signal(dir / indexed("estimate", static_cast<int>(k), ext), est.taps[k], fs_rate);
  }
  if (est.barycenter) {
    io::write_signal(dir / ("barycenter" + ext), est.barycenter->reconstruct(), fs_rate);
  }
  report["estimator"] = config::to_json(spec);
  report["iterations_used"] = est.report.iterations_used;
  report["primal_residual"] = est.report.primal_residual;
  report["dual_residual"] = est.report.dual_residual;
  report["objective_value"] = est.report.objective_value;
  report["converged"] = est.report.converged;
  out << fmt::format("{} lambda={} objective={} iterations={} converged={}\n",
                     method_name(spec.method), io::format_double(spec.lambda),
                     io::format_double(est.report.objective_value), est.report.iterations_used,
                     est.report.converged);
  if (!truth_paths.empty()) {
    if (truth_paths.size() != est.taps.size()) {
      throw Error("ground-truth count does not match the number of observations");
    }
    std::vector<ImpulseResponse> truth;
    for (const auto& p : truth_paths) truth.push_back({io::read_signal(p).samples, fs_rate});
    const double e = nmse(truth, std::span<const Eigen::VectorXd>(est.taps));
    report["nmse"] = e;
    report["nmse_db"] = 10.0 * std::log10(e);
    out << fmt::format("nmse {} ({:.2f} dB)\n", io::format_double(e), 10.0 * std::log10(e));
  }
  io::write_text(dir / "report.json", report.dump(2) + "\n");
  write_manifest(dir, inv.command, cfg);
  return 0;
}

// ---- bench -----------------------------------------------------------------

int cmd_bench(const Invocation& inv, const Json& cfg, std::ostream& out) {
  const SweepSpec spec = config::sweep_from_json(cfg.at("sweep"), cfg.at("scene"), seed_of(cfg));
  const fs::path dir = prepare_out(inv.out_dir);
  SweepOptions opts;
  opts.jobs = inv.jobs;
  const SweepResult result = run_sweep(spec, opts);
  emit_results(result, dir);
  write_manifest(dir, inv.command, cfg);
  out << fmt::format("{:<16} {:>12} {:>6} {:>6} {:>12} {:>10}\n", "method",
                     parameter_name(spec.parameter), "count", "failed", "nmse_db", "stderr");
  for (const auto& r : result.summary) {
    out << fmt::format("{:<16} {:>12} {:>6} {:>6} {:>12.3f} {:>10.3g}\n", r.method,
                       io::format_double(r.value), r.count, r.failures, 10.0 * std::log10(r.mean),
                       r.std_error);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint room impulse response estimation with optimal-transport regularization",
               "omtrir"};
  app.require_subcommand(1);
  app.set_version_flag("--version", OMTRIR_VERSION);
  Invocation inv;

  auto common = [&inv](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", inv.config_path, "JSON configuration or manifest.json");
    if (config_required) c->required();
    sub->add_option("--out", inv.out_dir, "output directory")->required();
    sub->add_option("--set", inv.overrides, "override a config key (KEY=VALUE), repeatable")
        ->allow_extra_args(false);
    sub->add_option("--jobs", inv.jobs, "worker threads (default: all cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", inv.seed, "base seed (overrides the config)");
    sub->add_flag("-v,--verbose", inv.verbosity, "more logging (-vv for debug)");
  };
  auto* sim = app.add_subcommand("simulate", "simulate RIRs, excitation and observations");
  common(sim, true);
  auto* tr = app.add_subcommand("transport", "transport distance or barycenter of RIR files");
  common(tr, false);
  tr->add_option("mode", inv.mode, "distance | barycenter");
  tr->add_option("inputs", inv.inputs, "input signal files (.csv or .wav)");
  auto* est = app.add_subcommand("estimate", "estimate RIRs from observation files");
  common(est, true);
  auto* bench = app.add_subcommand("bench", "run a parameter sweep");
  common(bench, true);

  CLI::App* active = &app;
  try {
    app.parse(argc, argv);
    for (auto* s : {sim, tr, est, bench}) {
      if (s->parsed()) {
        inv.command = s->get_name();
        active = s;
      }
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  spdlog::set_level(inv.verbosity >= 2   ? spdlog::level::debug
                    : inv.verbosity == 1 ? spdlog::level::info
                                         : spdlog::level::warn);
  if (inv.jobs > 0) omp_set_num_threads(inv.jobs);

  try {
    const Json cfg = load_config(inv);
    spdlog::info("running {} with seed {}", inv.command, cfg.at("seed").dump());
    if (inv.command == "simulate") return cmd_simulate(inv, cfg, out);
    if (inv.command == "transport") return cmd_transport(inv, cfg, out);
    if (inv.command == "estimate") return cmd_estimate(inv, cfg, out);
    return cmd_bench(inv, cfg, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return 2;
  } catch (const Json::exception& e) {
    err << "error: invalid configuration value: " << e.what() << "\n\n" << active->help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace omtrir
