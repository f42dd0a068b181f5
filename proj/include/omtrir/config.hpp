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

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "omtrir/bench.hpp"
#include "omtrir/estimators.hpp"

namespace omtrir::config {

using Json = nlohmann::ordered_json;

/// Complete configuration tree for a subcommand with every key at its default.
/// Optional settings appear as null.
Json defaults(std::string_view command);

/// Merges `user` over the defaults (unknown keys are rejected), then applies
/// KEY=VALUE overrides; KEY is a dotted path to an existing key and VALUE is
/// parsed as JSON, falling back to a plain string.
Json resolve(std::string_view command, const Json& user, const std::vector<std::string>& overrides);

/// Parses a JSON document; a manifest's resolved_config is unwrapped.
Json load(const std::string& text, const std::string& origin);

SceneDefaults scene_from_json(const Json& j);
Json to_json(const SceneDefaults& s);

EstimatorSpec estimator_from_json(const Json& j);
Json to_json(const EstimatorSpec& s);

SolverSettings solver_from_json(const Json& j);
Json to_json(const SolverSettings& s);

CvGrid grid_from_json(const Json& j, Method method);

/// Sweep section plus the scene it perturbs.
SweepSpec sweep_from_json(const Json& sweep, const Json& scene, std::uint64_t seed);

}  // namespace omtrir::config
