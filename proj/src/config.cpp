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

#include "omtrir/config.hpp"

#include <cmath>
#include <limits>

#include "omtrir/error.hpp"

namespace omtrir::config {

namespace {

Json solver_defaults() { return to_json(SolverSettings{}); }

Json estimator_defaults() {
  Json j;
  j["method"] = "BarycenterOMT";
  j["lambda"] = 1.0;
  j["mu"] = nullptr;
  j["epsilon"] = nullptr;
  j["solver"] = solver_defaults();
  return j;
}

Json grid_defaults() {
  Json j;
  j["lambdas"] = nullptr;
  j["mus"] = nullptr;
  j["fit_fraction"] = 0.8;
  return j;
}

Json method_entry_defaults() {
  Json j = estimator_defaults();
  j["label"] = nullptr;
  j["cross_validate"] = true;
  j["grid"] = grid_defaults();
  return j;
}

Json method_entry(std::string_view method) {
  Json j = method_entry_defaults();
  j["method"] = method;
  return j;
}

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError("config " + where + ": " + what);
}

const Json& at(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(where, std::string("missing key '") + key + "'");
  return *it;
}

double number(const Json& j, const char* key, const std::string& where) {
  const Json& v = at(j, key, where);
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  }
  if (!v.is_number()) bad(where + "." + key, "expected a number");
  return v.get<double>();
}

long long integer(const Json& j, const char* key, const std::string& where) {
  const Json& v = at(j, key, where);
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
  if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>())) {
    return static_cast<long long>(v.get<double>());
  }
  bad(where + "." + key, "expected an integer");
}

std::string text(const Json& j, const char* key, const std::string& where) {
  const Json& v = at(j, key, where);
  if (!v.is_string()) bad(where + "." + key, "expected a string");
  return v.get<std::string>();
}

Vec3 vec3(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) bad(where, "expected [x, y, z]");
  Vec3 out{};
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) bad(where, "expected numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

std::vector<double> numbers(const Json& v, const std::string& where) {
  if (!v.is_array()) bad(where, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) bad(where, "expected a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Json number_json(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

// Recursively overlays `user` onto `base`; keys must already exist in base
// unless the base value is null.
void merge(Json& base, const Json& user, const std::string& where) {
  if (!user.is_object()) bad(where.empty() ? "root" : where, "expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    auto target = base.find(it.key());
    if (target == base.end()) bad(path, "unknown key");
    if (target->is_object() && it.value().is_object()) {
      merge(*target, it.value(), path);
    } else {
      *target = it.value();
    }
  }
}

void complete_methods(Json& cfg) {
  auto sweep = cfg.find("sweep");
  if (sweep == cfg.end()) return;
  Json& methods = (*sweep)["methods"];
  if (!methods.is_array()) bad("sweep.methods", "expected a list");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    Json full = method_entry_defaults();
    if (methods[i].is_string()) {
      full["method"] = methods[i];
    } else {
      merge(full, methods[i], "sweep.methods[" + std::to_string(i) + "]");
    }
    methods[i] = std::move(full);
  }
}

Json parse_value(const std::string& s) {
  try {
    return Json::parse(s);
  } catch (const Json::exception&) {
    return s;
  }
}

}  // namespace

Json to_json(const SolverSettings& s) {
  Json j;
  j["max_iterations"] = s.max_iterations;
  j["primal_tolerance"] = s.primal_tolerance;
  j["dual_tolerance"] = s.dual_tolerance;
  j["penalty_parameter"] = s.penalty_parameter;
  j["seed"] = s.seed;
  j["check_interval"] = s.check_interval;
  j["parallel_kernels"] = s.parallel_kernels;
  return j;
}

SolverSettings solver_from_json(const Json& j) {
  const std::string w = "solver";
  SolverSettings s;
  s.max_iterations = static_cast<int>(integer(j, "max_iterations", w));
  s.primal_tolerance = number(j, "primal_tolerance", w);
  s.dual_tolerance = number(j, "dual_tolerance", w);
  s.penalty_parameter = number(j, "penalty_parameter", w);
  s.seed = static_cast<std::uint64_t>(integer(j, "seed", w));
  s.check_interval = static_cast<int>(integer(j, "check_interval", w));
  const Json& pk = at(j, "parallel_kernels", w);
  if (!pk.is_boolean()) bad(w + ".parallel_kernels", "expected true or false");
  s.parallel_kernels = pk.get<bool>();
  try {
    s.validate();
  } catch (const Error& e) {
    bad(w, e.what());
  }
  return s;
}

Json to_json(const EstimatorSpec& s) {
  Json j;
  j["method"] = method_name(s.method);
  j["lambda"] = s.lambda;
  j["mu"] = s.method == Method::L2Barycenter ? Json(s.mu) : Json(nullptr);
  j["epsilon"] = uses_transport(s.method) ? Json(s.epsilon) : Json(nullptr);
  j["solver"] = to_json(s.solver);
  return j;
}

EstimatorSpec estimator_from_json(const Json& j) {
  const std::string w = "estimator";
  EstimatorSpec s;
  s.method = parse_method(text(j, "method", w));
  s.lambda = number(j, "lambda", w);
  const Json& mu = at(j, "mu", w);
  if (!mu.is_null()) {
    if (s.method != Method::L2Barycenter) {
      bad(w + ".mu", "mu applies only to L2Barycenter, not " + std::string(method_name(s.method)));
    }
    s.mu = number(j, "mu", w);
  }
  const Json& eps = at(j, "epsilon", w);
  if (!eps.is_null()) {
    if (!uses_transport(s.method)) {
      bad(w + ".epsilon", "epsilon applies only to AdjacentOMT and BarycenterOMT, not " +
                              std::string(method_name(s.method)));
    }
    s.epsilon = number(j, "epsilon", w);
  }
  s.solver = solver_from_json(at(j, "solver", w));
  s.validate();
  return s;
}

CvGrid grid_from_json(const Json& j, Method method) {
  const std::string w = "grid";
  CvGrid g = default_grid(method);
  if (!at(j, "lambdas", w).is_null()) g.lambdas = numbers(j["lambdas"], w + ".lambdas");
  if (!at(j, "mus", w).is_null()) g.mus = numbers(j["mus"], w + ".mus");
  g.fit_fraction = number(j, "fit_fraction", w);
  if (method != Method::LS && g.lambdas.empty()) bad(w + ".lambdas", "grid is empty");
  return g;
}

Json to_json(const SceneDefaults& s) {
  Json j;
  j["dimensions"] = s.dimensions;
  j["source_position"] = s.source_position;
  j["array_center"] = s.array_center;
  j["radius"] = s.radius;
  j["num_mics"] = s.num_mics;
  j["mic_positions"] = s.mic_positions ? Json(*s.mic_positions) : Json(nullptr);
  j["n_taps"] = s.n_taps;
  j["excitation_length"] = s.excitation_length;
  j["excitation"] = excitation_name(s.excitation);
  j["snr_db"] = number_json(s.snr_db);
  j["rt60"] = s.rt60;
  j["reflection_coefficients"] =
      s.reflection_coefficients ? Json(*s.reflection_coefficients) : Json(nullptr);
  j["max_order"] = s.max_order;
  j["speed_of_sound"] = s.speed_of_sound;
  j["sample_rate"] = s.sample_rate;
  return j;
}

SceneDefaults scene_from_json(const Json& j) {
  const std::string w = "scene";
  SceneDefaults s;
  s.dimensions = vec3(at(j, "dimensions", w), w + ".dimensions");
  s.source_position = vec3(at(j, "source_position", w), w + ".source_position");
  s.array_center = vec3(at(j, "array_center", w), w + ".array_center");
  s.radius = number(j, "radius", w);
  s.num_mics = static_cast<int>(integer(j, "num_mics", w));
  const Json& mics = at(j, "mic_positions", w);
  if (!mics.is_null()) {
    if (!mics.is_array() || mics.empty()) bad(w + ".mic_positions", "expected a list of [x, y, z]");
    std::vector<Vec3> pos;
    for (const auto& m : mics) pos.push_back(vec3(m, w + ".mic_positions"));
    s.num_mics = static_cast<int>(pos.size());
    s.mic_positions = std::move(pos);
  }
  s.n_taps = static_cast<int>(integer(j, "n_taps", w));
  s.excitation_length = static_cast<int>(integer(j, "excitation_length", w));
  s.excitation = parse_excitation(text(j, "excitation", w));
  s.snr_db = number(j, "snr_db", w);
  s.rt60 = number(j, "rt60", w);
  const Json& rc = at(j, "reflection_coefficients", w);
  if (!rc.is_null()) {
    const auto v = numbers(rc, w + ".reflection_coefficients");
    if (v.size() != 6) bad(w + ".reflection_coefficients", "expected six values");
    std::array<double, 6> a{};
    std::copy(v.begin(), v.end(), a.begin());
    s.reflection_coefficients = a;
  }
  s.max_order = static_cast<int>(integer(j, "max_order", w));
  s.speed_of_sound = number(j, "speed_of_sound", w);
  s.sample_rate = number(j, "sample_rate", w);
  s.validate();
  return s;
}

SweepSpec sweep_from_json(const Json& sweep, const Json& scene, std::uint64_t seed) {
  const std::string w = "sweep";
  SweepSpec spec;
  spec.parameter = parse_parameter(text(sweep, "parameter", w));
  spec.values = numbers(at(sweep, "values", w), w + ".values");
  spec.replicates = static_cast<int>(integer(sweep, "replicates", w));
  spec.base = scene_from_json(scene);
  spec.seed = seed;
  const Json& methods = at(sweep, "methods", w);
  if (!methods.is_array()) bad(w + ".methods", "expected a list");
  for (const auto& m : methods) {
    SweepMethod sm;
    sm.spec = estimator_from_json(m);
    const Json& label = at(m, "label", w + ".methods");
    sm.label = label.is_null() ? std::string(method_name(sm.spec.method)) : label.get<std::string>();
    const Json& cv = at(m, "cross_validate", w + ".methods");
    if (!cv.is_boolean()) bad(w + ".methods.cross_validate", "expected true or false");
    if (cv.get<bool>()) {
      sm.grid = grid_from_json(at(m, "grid", w + ".methods"), sm.spec.method);
    }
    spec.methods.push_back(std::move(sm));
  }
  spec.validate();
  return spec;
}

Json defaults(std::string_view command) {
  Json j;
  j["seed"] = 0;
  if (command == "simulate") {
    j["scene"] = to_json(SceneDefaults{});
    j["output"] = {{"format", "csv"}};
  } else if (command == "transport") {
    j["transport"] = {{"mode", "distance"}, {"inputs", Json::array()}, {"epsilon", kDefaultEpsilon}};
  } else if (command == "estimate") {
    j["input"] = {{"dir", nullptr},          {"excitation", nullptr}, {"observations", nullptr},
                  {"truth", nullptr},        {"sample_rate", 7350.0}};
    j["estimator"] = estimator_defaults();
    Json cv = grid_defaults();
    cv["enabled"] = false;
    j["cross_validation"] = cv;
    j["output"] = {{"format", "csv"}};
  } else if (command == "bench") {
    j["scene"] = to_json(SceneDefaults{});
    Json methods = Json::array();
    for (Method m : kAllMethods) methods.push_back(method_entry(method_name(m)));
    j["sweep"] = {{"parameter", "snr_db"},
                  {"values", {0.0, 10.0, 20.0, 30.0}},
                  {"replicates", 20},
                  {"methods", methods}};
  } else {
    throw ConfigError("unknown command '" + std::string(command) + "'");
  }
  return j;
}

Json resolve(std::string_view command, const Json& user,
             const std::vector<std::string>& overrides) {
  Json cfg = defaults(command);
  merge(cfg, user, "");
  complete_methods(cfg);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) bad("--set " + o, "expected KEY=VALUE");
    const std::string key = o.substr(0, eq);
    Json* node = &cfg;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
      if (node->is_object()) {
        auto it = node->find(part);
        if (it == node->end()) bad("--set " + key, "unknown key");
        node = &*it;
      } else if (node->is_array()) {
        std::size_t idx = 0;
        try {
          idx = std::stoul(part);
        } catch (const std::exception&) {
          bad("--set " + key, "expected a list index");
        }
        if (idx >= node->size()) bad("--set " + key, "index out of range");
        node = &(*node)[idx];
      } else {
        bad("--set " + key, "unknown key");
      }
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    *node = parse_value(o.substr(eq + 1));
  }
  complete_methods(cfg);
  return cfg;
}

Json load(const std::string& text, const std::string& origin) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError("cannot parse " + origin + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(origin + ": expected a JSON object");
  auto it = j.find("resolved_config");
  if (it != j.end()) return *it;
  return j;
}

}  // namespace omtrir::config
