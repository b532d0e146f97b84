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

#include "catchdec/scripted_backend.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>

#include "catchdec/errors.hpp"
#include "catchdec/text.hpp"

namespace catchdec {
namespace {

std::optional<TokenId> find_token(const std::vector<std::string>& vocab, std::string_view tok) {
  const auto it = std::find(vocab.begin(), vocab.end(), tok);
  if (it == vocab.end()) return std::nullopt;
  return static_cast<TokenId>(it - vocab.begin());
}

class ScriptedModel final : public LogitsModel {
 public:
  explicit ScriptedModel(std::shared_ptr<const ScriptedScenario> s) : scenario_(std::move(s)) {}

  std::size_t vocab_size() const override { return scenario_->vocab.size(); }

  ChannelLogits logits(std::span<const TokenId> prefix) const override {
    if (prefix.size() >= scenario_->steps.size()) {
      throw BackendError("scripted scenario exhausted at step " + std::to_string(prefix.size()));
    }
    return scenario_->steps[prefix.size()];
  }

 private:
  std::shared_ptr<const ScriptedScenario> scenario_;
};

}  // namespace

void ScriptedScenario::validate() const {
  if (vocab.size() < 2) throw DomainError("scripted scenario: vocabulary needs at least 2 tokens");
  const auto in_vocab = [this](TokenId t) {
    return t >= 0 && static_cast<std::size_t>(t) < vocab.size();
  };
  if (stop_token && !in_vocab(*stop_token)) throw DomainError("scripted scenario: stop token outside vocabulary");
  for (TokenId t : prompt) {
    if (!in_vocab(t)) throw DomainError("scripted scenario: prompt token outside vocabulary");
  }
  for (std::size_t s = 0; s < steps.size(); ++s) {
    if (static_cast<std::size_t>(steps[s].vocab_size()) != vocab.size()) {
      throw DomainError("scripted scenario: step " + std::to_string(s) + " length mismatch with vocab");
    }
    try {
      steps[s].validate();
    } catch (const DomainError& e) {
      throw DomainError("scripted scenario: step " + std::to_string(s) + ": " + e.what());
    }
  }
}

ScriptedScenario parse_scripted(std::istream& in, const std::string& source) {
  ScriptedScenario sc;
  std::optional<std::size_t> declared_steps;
  bool saw_format = false;
  std::vector<std::array<bool, 4>> seen;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::is_ignorable(line)) continue;
    const auto f = text::split_ws(line);
    const std::string_view key = f[0];
    const auto fail = [&](const std::string& msg) { throw ParseError(source, lineno, msg); };

    if (!saw_format) {
      if (key != "format" || f.size() != 2 || f[1] != "scripted") fail("expected `format scripted`");
      saw_format = true;
    } else if (key == "vocab") {
      if (!sc.vocab.empty()) fail("duplicate vocab line");
      for (std::size_t i = 1; i < f.size(); ++i) sc.vocab.emplace_back(f[i]);
      if (sc.vocab.size() < 2) fail("vocab needs at least 2 tokens");
    } else if (key == "steps") {
      const auto n = f.size() == 2 ? text::parse_int<std::size_t>(f[1]) : std::nullopt;
      if (!n) fail("expected `steps <count>`");
      declared_steps = *n;
      sc.steps.assign(*n, ChannelLogits{});
      seen.assign(*n, {false, false, false, false});
    } else if (key == "stop") {
      if (f.size() != 2) fail("expected `stop <token>`");
      sc.stop_token = find_token(sc.vocab, f[1]);
      if (!sc.stop_token) fail("unknown stop token '" + std::string(f[1]) + "'");
    } else if (key == "prompt") {
      for (std::size_t i = 1; i < f.size(); ++i) {
        const auto t = find_token(sc.vocab, f[i]);
        if (!t) fail("unknown prompt token '" + std::string(f[i]) + "'");
        sc.prompt.push_back(*t);
      }
    } else {
      if (sc.vocab.empty() || !declared_steps) fail("logit rows must follow the vocab and steps header");
      const auto step = text::parse_int<std::size_t>(key);
      if (!step) fail("unknown directive '" + std::string(key) + "'");
      if (*step >= *declared_steps) fail("step " + std::to_string(*step) + " beyond declared steps");
      if (f.size() < 2) fail("missing channel name");
      const auto channel = parse_channel(f[1]);
      if (!channel) fail("unknown channel '" + std::string(f[1]) + "'");
      if (f.size() - 2 != sc.vocab.size()) {
        fail("step " + std::to_string(*step) + " " + std::string(f[1]) + ": " +
             std::to_string(f.size() - 2) + " values, vocab has " + std::to_string(sc.vocab.size()));
      }
      auto& flag = seen[*step][static_cast<std::size_t>(*channel)];
      if (flag) fail("duplicate " + std::string(f[1]) + " row for step " + std::to_string(*step));
      flag = true;
      LogitVector v(static_cast<Eigen::Index>(sc.vocab.size()));
      for (std::size_t i = 2; i < f.size(); ++i) {
        const auto x = text::parse_real(f[i]);
        if (!x) fail("bad logit value '" + std::string(f[i]) + "'");
        v(static_cast<Eigen::Index>(i - 2)) = *x;
      }
      sc.steps[*step][*channel] = std::move(v);
    }
  }
  if (!saw_format) throw ParseError(source, 0, "empty scripted scenario");
  if (sc.vocab.empty()) throw ParseError(source, 0, "missing vocab line");
  if (!declared_steps) throw ParseError(source, 0, "missing steps line");
  for (std::size_t s = 0; s < seen.size(); ++s) {
    for (Channel c : kAllChannels) {
      if (!seen[s][static_cast<std::size_t>(c)]) {
        throw ParseError(source, 0,
                         "missing " + std::string(to_string(c)) + " logits at step " + std::to_string(s));
      }
    }
  }
  try {
    sc.validate();
  } catch (const DomainError& e) {
    throw ParseError(source, 0, e.what());
  }
  return sc;
}

ScriptedScenario load_scripted_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open scripted scenario");
  return parse_scripted(in, path.string());
}

void write_scripted(std::ostream& out, const ScriptedScenario& sc) {
  out << "format scripted\nvocab";
  for (const auto& t : sc.vocab) out << ' ' << t;
  out << "\nsteps " << sc.steps.size() << '\n';
  if (sc.stop_token) out << "stop " << sc.vocab[static_cast<std::size_t>(*sc.stop_token)] << '\n';
  if (!sc.prompt.empty()) {
    out << "prompt";
    for (TokenId t : sc.prompt) out << ' ' << sc.vocab[static_cast<std::size_t>(t)];
    out << '\n';
  }
  for (std::size_t s = 0; s < sc.steps.size(); ++s) {
    for (Channel c : kAllChannels) {
      out << s << ' ' << to_string(c) << ' ' << text::join_reals(sc.steps[s][c]) << '\n';
    }
  }
}

ScriptedBackend::ScriptedBackend(ScriptedScenario scenario)
    : scenario_(std::make_shared<const ScriptedScenario>(std::move(scenario))) {
  scenario_->validate();
}

SessionRequest ScriptedBackend::default_request(std::string session_id) const {
  SessionRequest req;
  req.session_id = std::move(session_id);
  req.vocab = scenario_->vocab;
  req.prompt_tokens = scenario_->prompt;
  return req;
}

std::shared_ptr<const LogitsModel> ScriptedBackend::make_model(
    const SessionRequest& req, const std::optional<SegmentationSet>& /*segmentation*/) const {
  if (req.vocab != scenario_->vocab) {
    throw BackendError("vocab mismatch: session '" + req.session_id +
                       "' does not use the scripted scenario's vocabulary");
  }
  return std::make_shared<ScriptedModel>(scenario_);
}

std::unique_ptr<ScriptedBackend> load_scripted(const std::filesystem::path& path) {
  return std::make_unique<ScriptedBackend>(load_scripted_scenario(path));
}

}  // namespace catchdec
