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

#include "catchdec/engine.hpp"

#include <cmath>

#include "catchdec/errors.hpp"

namespace catchdec {
namespace {

struct Distributions {
  ProbDist original;
  ProbDist dual;
  ProbDist residual;
  ProbDist non_visual;
};

Distributions distributions(const ChannelLogits& ch) {
  ch.validate();
  return {softmax(ch.original), softmax(ch.dual), softmax(ch.residual), softmax(ch.non_visual)};
}

ScreenResult screen(const Distributions& d) {
  const double d_dual = js_divergence(d.dual, d.non_visual);
  const double d_res = js_divergence(d.residual, d.non_visual);
  return {d_dual >= d_res ? DecoupledChannel::dual : DecoupledChannel::residual, d_dual, d_res};
}

Combination combine(const ChannelLogits& ch, const Distributions& d, DecoupledChannel chosen,
                    const DecodeConfig& cfg) {
  const bool dual = chosen == DecoupledChannel::dual;
  const LogitVector& z = dual ? ch.dual : ch.residual;
  const double d_dec = js_divergence(dual ? d.dual : d.residual, d.non_visual);
  const double d_orig = js_divergence(d.original, d.non_visual);
  if (d_dec >= d_orig) {
    return {contrastive_subtract(z, ch.original, cfg.alpha), Branch::subtract, d_dec, d_orig};
  }
  return {contrastive_enhance(ch.original, z, cfg.beta), Branch::enhance, d_dec, d_orig};
}

}  // namespace

void DecodeConfig::validate() const {
  if (!(alpha > 0) || !std::isfinite(alpha)) throw DomainError("decode config: alpha must be > 0");
  if (!(beta > 0) || !std::isfinite(beta)) throw DomainError("decode config: beta must be > 0");
  if (!(top_m_fraction > 0 && top_m_fraction <= 1)) {
    throw DomainError("decode config: top_m_fraction must lie in (0, 1]");
  }
  if (stop_token && *stop_token < 0) throw DomainError("decode config: negative stop token");
  TokenSampler check(sampling);
}

ScreenResult screen(const ChannelLogits& ch) { return screen(distributions(ch)); }

Combination adapt_combine(const ChannelLogits& ch, DecoupledChannel chosen, const DecodeConfig& cfg) {
  return combine(ch, distributions(ch), chosen, cfg);
}

StepResult decode_step(const ChannelLogits& ch, const DecodeConfig& cfg, std::size_t step,
                       TokenSampler& sampler) {
  const Distributions d = distributions(ch);
  const ScreenResult s = screen(d);
  const Combination c = combine(ch, d, s.chosen, cfg);

  const TokenId token =
      cfg.mode == DecodeMode::baseline ? sampler(d.original) : sampler(softmax(c.combined));

  StepTrace trace;
  trace.step = step;
  trace.d_dual_non = s.d_dual_non;
  trace.d_res_non = s.d_res_non;
  trace.d_dec_non = c.d_dec_non;
  trace.d_orig_non = c.d_orig_non;
  trace.chosen_channel = s.chosen;
  trace.branch = c.branch;
  trace.token = token;
  return {token, trace};
}

StepResult decode_step(const ChannelLogits& ch, const DecodeConfig& cfg, std::size_t step) {
  TokenSampler sampler(cfg.sampling);
  return decode_step(ch, cfg, step, sampler);
}

DecodeResult decode(Session& session, const DecodeConfig& cfg) {
  cfg.validate();
  if (cfg.stop_token && static_cast<std::size_t>(*cfg.stop_token) >= session.vocab_size()) {
    throw DomainError("decode config: stop token outside vocabulary");
  }
  TokenSampler sampler(cfg.sampling);
  DecodeResult out;
  for (std::size_t step = 0; step < cfg.max_tokens; ++step) {
    StepResult r{};
    try {
      const ChannelLogits ch = session.step_logits(out.tokens);
      if (static_cast<std::size_t>(ch.vocab_size()) != session.vocab_size()) {
        throw BackendError("backend returned " + std::to_string(ch.vocab_size()) +
                           " logits for a vocabulary of " + std::to_string(session.vocab_size()));
      }
      r = decode_step(ch, cfg, step, sampler);
    } catch (const BackendError& e) {
      out.truncated = true;
      out.truncation_reason = e.what();
      break;
    } catch (const DomainError& e) {
      // Malformed channel logits are the backend's fault, not the caller's.
      out.truncated = true;
      out.truncation_reason = e.what();
      break;
    }
    out.tokens.push_back(r.token);
    out.traces.push_back(r.trace);
    if (cfg.stop_token && r.token == *cfg.stop_token) {
      out.stopped = true;
      break;
    }
  }
  return out;
}

}  // namespace catchdec
