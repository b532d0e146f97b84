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

// A backend that replays tabulated channel logits. Step t serves table[t]
// regardless of which tokens were sampled, so a scenario pins every decode
// input exactly.
//
// File format:
//
//   format scripted
//   vocab <token> <token> ...
//   steps <count>
//   stop <token>              (optional)
//   prompt <token> ...        (optional)
//   <step> <channel> <v1> ... <vV>
//
// where <channel> is one of original, dual, residual, non_visual and every
// (step, channel) pair below `steps` must appear exactly once.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "catchdec/backend.hpp"

namespace catchdec {

struct ScriptedScenario {
  std::vector<std::string> vocab;
  std::optional<TokenId> stop_token;
  std::vector<TokenId> prompt;
  std::vector<ChannelLogits> steps;

  void validate() const;
};

ScriptedScenario parse_scripted(std::istream& in, const std::string& source = "<scripted>");
ScriptedScenario load_scripted_scenario(const std::filesystem::path& path);
void write_scripted(std::ostream& out, const ScriptedScenario& scenario);

class ScriptedBackend final : public InProcessBackend {
 public:
  explicit ScriptedBackend(ScriptedScenario scenario);

  const ScriptedScenario& scenario() const { return *scenario_; }

  /// A request matching this scenario's vocabulary and prompt.
  SessionRequest default_request(std::string session_id) const;

 protected:
  std::shared_ptr<const LogitsModel> make_model(
      const SessionRequest& req, const std::optional<SegmentationSet>& segmentation) const override;

 private:
  std::shared_ptr<const ScriptedScenario> scenario_;
};

std::unique_ptr<ScriptedBackend> load_scripted(const std::filesystem::path& path);

}  // namespace catchdec
