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

#include <stdexcept>
#include <string>

namespace omtrir {

// Library-wide exception. Messages carry the failure reason verbatim
// ("unbalanced marginals", "zero-distance path", ...) so front ends can
// surface them unchanged.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for invalid user configuration (bad keys, inconsistent fields).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace omtrir
