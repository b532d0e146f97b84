// Copyright 2026 The catchdec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Behavioural checks every backend must pass before the engine can treat it
// like a built-in one: handshake, vocabulary consistency, ordered prefixes,
// determinism, and session-id bookkeeping.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "catchdec/backend.hpp"

namespace catchdec {

struct ConformanceCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ConformanceReport {
  std::vector<ConformanceCheck> checks;
  bool passed() const;
};

/// Drives `steps` greedy steps (argmax of the original channel) through fresh
/// sessions derived from `request` (ids get a `#conformance-*` suffix).
ConformanceReport run_conformance(Backend& backend, const SessionRequest& request, std::size_t steps);

}  // namespace catchdec
