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

// Per-token decision core.
//
// Each step the engine measures how far the dual and residual exposures move
// the next-token distribution away from the text-only distribution (JSD), keeps
// the exposure that moves it furthest, and compares that distance with the
// original image's. When the decoupled exposure is at least as far from the
// language prior, its logits contrastively subtract the original ones
// (alpha * z - v); otherwise they are added to the amplified original
// (beta * v + z). The chosen token is then sampled from the softmax.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "catchdec/backend.hpp"
#include "catchdec/channels.hpp"
#include "catchdec/dist.hpp"

namespace catchdec {

enum class DecoupledChannel { dual, residual };
enum class Branch { subtract, enhance };

constexpr std::string_view to_string(DecoupledChannel c) {
  return c == DecoupledChannel::dual ? "dual" : "residual";
}
constexpr std::string_view to_string(Branch b) {
  return b == Branch::subtract ? "subtract" : "enhance";
}

/// Which distribution the sampled token is drawn from. `baseline` samples the
/// original channel and still records the full trace for comparison.
enum class DecodeMode { catch_contrastive, baseline };

struct DecodeConfig {
  double alpha = 1.2;
  double beta = 3.0;
  double top_m_fraction = 0.05;
  std::size_t max_tokens = 64;
  std::optional<TokenId> stop_token;
  SamplingStrategy sampling = Greedy{};
  DecodeMode mode = DecodeMode::catch_contrastive;

  /// Throws DomainError on non-positive amplifiers or a fraction outside (0, 1].
  void validate() const;
};

struct StepTrace {
  std::size_t step = 0;
  double d_dual_non = 0;
  double d_res_non = 0;
  double d_dec_non = 0;
  double d_orig_non = 0;
  DecoupledChannel chosen_channel = DecoupledChannel::dual;
  Branch branch = Branch::subtract;
  TokenId token = 0;

  bool operator==(const StepTrace&) const = default;
};

struct ScreenResult {
  DecoupledChannel chosen;
  double d_dual_non;
  double d_res_non;
};

/// Keeps the exposure whose distribution is furthest (JSD) from the text-only
/// one. Ties go to the dual exposure.
ScreenResult screen(const ChannelLogits& ch);

/// alpha * z - v.
template <typename DerivedZ, typename DerivedV>
auto contrastive_subtract(const Eigen::MatrixBase<DerivedZ>& decoupled,
                          const Eigen::MatrixBase<DerivedV>& original, double alpha) {
  return (alpha * decoupled - original).eval();
}

/// beta * v + z.
template <typename DerivedV, typename DerivedZ>
auto contrastive_enhance(const Eigen::MatrixBase<DerivedV>& original,
                         const Eigen::MatrixBase<DerivedZ>& decoupled, double beta) {
  return (beta * original + decoupled).eval();
}

struct Combination {
  LogitVector combined;
  Branch branch;
  double d_dec_non;
  double d_orig_non;
};

Combination adapt_combine(const ChannelLogits& ch, DecoupledChannel chosen, const DecodeConfig& cfg);

struct StepResult {
  TokenId token;
  StepTrace trace;
};

/// screen -> adapt_combine -> softmax -> sample, with a complete trace.
StepResult decode_step(const ChannelLogits& ch, const DecodeConfig& cfg, std::size_t step,
                       TokenSampler& sampler);
StepResult decode_step(const ChannelLogits& ch, const DecodeConfig& cfg, std::size_t step);

struct DecodeResult {
  std::vector<TokenId> tokens;  // includes the stop token when one was emitted
  std::vector<StepTrace> traces;
  bool stopped = false;
  bool truncated = false;
  std::string truncation_reason;
};

/// Autoregressive loop over a session. Stops after emitting the stop token or
/// after max_tokens steps. A backend failure mid-stream ends the loop and
/// returns what was produced, marked truncated. Config errors throw.
DecodeResult decode(Session& session, const DecodeConfig& cfg);

}  // namespace catchdec
