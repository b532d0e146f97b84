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

// A desk-scale vision-language model: a bigram language prior plus additive
// per-object visual evidence.
//
//   logits(. | prefix, channel) = lambda_lang * bigram.row(last(prompt ++ prefix))
//                               + lambda_vis  * evidence * visible(channel)
//
// visible(original) marks every object, visible(non_visual) none, and the dual
// and residual channels see the objects exposed by a DecoupledPair (or listed
// explicitly in the scenario).
//
// File format (token and object names are bare words):
//
//   format grounded_toy
//   vocab <token> ...
//   lambda <lang> <vis>
//   prompt <token> ...
//   planted <ground-truth token> <hallucination token>
//   stop <token>                               (optional)
//   bigram <prev token> <row>
//   evidence <object id> <row>
//   visible dual|residual <object id> ...      (optional)
//   segmentation <path, relative to the file>  (optional)
//
// A <row> is either V numbers or `token=value` pairs, with `*=value` setting
// the default for unlisted tokens (0 otherwise). Missing bigram rows are zero.

#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "catchdec/backend.hpp"

namespace catchdec {

struct ChannelVisibility {
  std::set<std::string> dual;
  std::set<std::string> residual;
};

ChannelVisibility visibility_from(const DecoupledPair& pair);

struct GroundedToyScenario {
  std::vector<std::string> vocab;
  Eigen::MatrixXd bigram;    // V x V, row = previous token
  std::vector<std::string> objects;
  Eigen::MatrixXd evidence;  // V x objects.size()
  double lambda_lang = 1.0;
  double lambda_vis = 1.0;
  std::vector<TokenId> prompt;
  TokenId ground_truth = 0;
  TokenId hallucination = 0;
  std::optional<TokenId> stop_token;
  std::optional<ChannelVisibility> visibility;
  std::optional<SegmentationSet> segmentation;

  /// Throws DomainError naming an unknown token.
  TokenId token(std::string_view name) const;
  void validate() const;
};

GroundedToyScenario parse_grounded_toy(std::istream& in, const std::string& source = "<grounded_toy>",
                                       const std::filesystem::path& base_dir = {});
GroundedToyScenario load_grounded_toy(const std::filesystem::path& path);

class GroundedToyBackend final : public InProcessBackend {
 public:
  explicit GroundedToyBackend(GroundedToyScenario scenario);

  const GroundedToyScenario& scenario() const { return *scenario_; }

  /// Request carrying the scenario's prompt and segmentation, with
  /// top_m = select_top_m(objects, fraction) when a segmentation is present.
  SessionRequest default_request(std::string session_id, double top_m_fraction = 0.05) const;

  /// The four channels for a prefix under a given visibility.
  ChannelLogits channel_logits(std::span<const TokenId> prefix, const ChannelVisibility& vis) const;

 protected:
  std::shared_ptr<const LogitsModel> make_model(
      const SessionRequest& req, const std::optional<SegmentationSet>& segmentation) const override;

 private:
  std::shared_ptr<const GroundedToyScenario> scenario_;
};

std::unique_ptr<GroundedToyBackend> make_grounded_toy(GroundedToyScenario scenario);

}  // namespace catchdec
