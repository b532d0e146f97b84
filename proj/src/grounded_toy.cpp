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

#include "catchdec/grounded_toy.hpp"

#include <algorithm>
#include <fstream>
#include <istream>

#include "catchdec/errors.hpp"
#include "catchdec/text.hpp"

namespace catchdec {
namespace {

Eigen::VectorXd indicator(const GroundedToyScenario& sc, const std::set<std::string>& visible) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sc.objects.size()));
  for (std::size_t j = 0; j < sc.objects.size(); ++j) {
    if (visible.count(sc.objects[j]) > 0) out(static_cast<Eigen::Index>(j)) = 1.0;
  }
  return out;
}

ChannelLogits compute_channels(const GroundedToyScenario& sc, std::span<const TokenId> prefix,
                               const ChannelVisibility& vis) {
  const TokenId prev = prefix.empty() ? sc.prompt.back() : prefix.back();
  const Eigen::VectorXd language = sc.lambda_lang * sc.bigram.row(prev).transpose();
  const auto n_obj = static_cast<Eigen::Index>(sc.objects.size());

  ChannelLogits ch;
  ch.original = language + sc.lambda_vis * sc.evidence * Eigen::VectorXd::Ones(n_obj);
  ch.dual = language + sc.lambda_vis * sc.evidence * indicator(sc, vis.dual);
  ch.residual = language + sc.lambda_vis * sc.evidence * indicator(sc, vis.residual);
  ch.non_visual = language;
  return ch;
}

class GroundedToyModel final : public LogitsModel {
 public:
  GroundedToyModel(std::shared_ptr<const GroundedToyScenario> scenario, ChannelVisibility vis)
      : scenario_(std::move(scenario)), vis_(std::move(vis)) {}

  std::size_t vocab_size() const override { return scenario_->vocab.size(); }

  ChannelLogits logits(std::span<const TokenId> prefix) const override {
    return compute_channels(*scenario_, prefix, vis_);
  }

 private:
  std::shared_ptr<const GroundedToyScenario> scenario_;
  ChannelVisibility vis_;
};

Eigen::VectorXd parse_row(const std::vector<std::string_view>& f, std::size_t first,
                          const GroundedToyScenario& sc) {
  const auto v = static_cast<Eigen::Index>(sc.vocab.size());
  const bool dense = std::none_of(f.begin() + static_cast<std::ptrdiff_t>(first), f.end(),
                                  [](std::string_view s) { return s.find('=') != s.npos; });
  if (dense) {
    if (f.size() - first != sc.vocab.size()) {
      throw DomainError("dense row has " + std::to_string(f.size() - first) + " values, vocab has " +
                        std::to_string(sc.vocab.size()));
    }
    Eigen::VectorXd row(v);
    for (std::size_t i = first; i < f.size(); ++i) {
      const auto x = text::parse_real(f[i]);
      if (!x) throw DomainError("bad value '" + std::string(f[i]) + "'");
      row(static_cast<Eigen::Index>(i - first)) = *x;
    }
    return row;
  }
  Eigen::VectorXd row = Eigen::VectorXd::Zero(v);
  std::vector<std::pair<TokenId, double>> entries;
  for (std::size_t i = first; i < f.size(); ++i) {
    const auto eq = f[i].find('=');
    if (eq == std::string_view::npos) throw DomainError("expected token=value, got '" + std::string(f[i]) + "'");
    const auto x = text::parse_real(f[i].substr(eq + 1));
    if (!x) throw DomainError("bad value in '" + std::string(f[i]) + "'");
    const auto name = f[i].substr(0, eq);
    if (name == "*") {
      row.setConstant(*x);
    } else {
      entries.emplace_back(sc.token(name), *x);
    }
  }
  for (const auto& [t, x] : entries) row(t) = x;
  return row;
}

}  // namespace

ChannelVisibility visibility_from(const DecoupledPair& pair) {
  ChannelVisibility vis;
  vis.dual.insert(pair.dual_objects.begin(), pair.dual_objects.end());
  vis.residual.insert(pair.residual_objects.begin(), pair.residual_objects.end());
  return vis;
}

TokenId GroundedToyScenario::token(std::string_view name) const {
  const auto it = std::find(vocab.begin(), vocab.end(), name);
  if (it == vocab.end()) throw DomainError("unknown token '" + std::string(name) + "'");
  return static_cast<TokenId>(it - vocab.begin());
}

void GroundedToyScenario::validate() const {
  const auto v = static_cast<Eigen::Index>(vocab.size());
  if (v < 2) throw DomainError("grounded toy: vocabulary needs at least 2 tokens");
  if (bigram.rows() != v || bigram.cols() != v) throw DomainError("grounded toy: bigram table must be V x V");
  if (evidence.rows() != v || evidence.cols() != static_cast<Eigen::Index>(objects.size())) {
    throw DomainError("grounded toy: evidence table must be V x objects");
  }
  if (!bigram.allFinite() || !evidence.allFinite()) throw DomainError("grounded toy: non-finite table entry");
  if (!(lambda_lang >= 0) || !(lambda_vis >= 0)) throw DomainError("grounded toy: mixture weights must be >= 0");
  if (prompt.empty()) throw DomainError("grounded toy: prompt must be non-empty");
  const auto in_vocab = [v](TokenId t) { return t >= 0 && t < v; };
  for (TokenId t : prompt) {
    if (!in_vocab(t)) throw DomainError("grounded toy: prompt token outside vocabulary");
  }
  if (!in_vocab(ground_truth) || !in_vocab(hallucination)) {
    throw DomainError("grounded toy: planted token outside vocabulary");
  }
  if (stop_token && !in_vocab(*stop_token)) throw DomainError("grounded toy: stop token outside vocabulary");
  if (visibility) {
    for (const auto* set : {&visibility->dual, &visibility->residual}) {
      for (const auto& o : *set) {
        if (std::find(objects.begin(), objects.end(), o) == objects.end()) {
          throw DomainError("grounded toy: visibility names unknown object '" + o + "'");
        }
      }
    }
  }
}

GroundedToyScenario parse_grounded_toy(std::istream& in, const std::string& source,
                                       const std::filesystem::path& base_dir) {
  GroundedToyScenario sc;
  std::vector<std::pair<TokenId, Eigen::VectorXd>> bigram_rows;
  std::vector<Eigen::VectorXd> evidence_cols;
  bool saw_format = false;
  bool saw_planted = false;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::is_ignorable(line)) continue;
    const auto f = text::split_ws(line);
    const std::string_view key = f[0];
    const auto fail = [&](const std::string& msg) { throw ParseError(source, lineno, msg); };
    try {
      if (!saw_format) {
        if (key != "format" || f.size() != 2 || f[1] != "grounded_toy") fail("expected `format grounded_toy`");
        saw_format = true;
      } else if (key == "vocab") {
        if (!sc.vocab.empty()) fail("duplicate vocab line");
        for (std::size_t i = 1; i < f.size(); ++i) sc.vocab.emplace_back(f[i]);
      } else if (sc.vocab.empty()) {
        fail("`vocab` must come before '" + std::string(key) + "'");
      } else if (key == "lambda") {
        const auto a = f.size() == 3 ? text::parse_real(f[1]) : std::nullopt;
        const auto b = f.size() == 3 ? text::parse_real(f[2]) : std::nullopt;
        if (!a || !b) fail("expected `lambda <lang> <vis>`");
        sc.lambda_lang = *a;
        sc.lambda_vis = *b;
      } else if (key == "prompt") {
        for (std::size_t i = 1; i < f.size(); ++i) sc.prompt.push_back(sc.token(f[i]));
      } else if (key == "planted") {
        if (f.size() != 3) fail("expected `planted <ground-truth> <hallucination>`");
        sc.ground_truth = sc.token(f[1]);
        sc.hallucination = sc.token(f[2]);
        saw_planted = true;
      } else if (key == "stop") {
        if (f.size() != 2) fail("expected `stop <token>`");
        sc.stop_token = sc.token(f[1]);
      } else if (key == "bigram") {
        if (f.size() < 3) fail("expected `bigram <prev> <row>`");
        bigram_rows.emplace_back(sc.token(f[1]), parse_row(f, 2, sc));
      } else if (key == "evidence") {
        if (f.size() < 3) fail("expected `evidence <object> <row>`");
        const std::string id(f[1]);
        if (std::find(sc.objects.begin(), sc.objects.end(), id) != sc.objects.end()) {
          fail("duplicate evidence for object '" + id + "'");
        }
        sc.objects.push_back(id);
        evidence_cols.push_back(parse_row(f, 2, sc));
      } else if (key == "visible") {
        if (f.size() < 2 || (f[1] != "dual" && f[1] != "residual")) fail("expected `visible dual|residual ...`");
        if (!sc.visibility) sc.visibility.emplace();
        auto& set = f[1] == "dual" ? sc.visibility->dual : sc.visibility->residual;
        for (std::size_t i = 2; i < f.size(); ++i) set.emplace(f[i]);
      } else if (key == "segmentation") {
        if (f.size() != 2) fail("expected `segmentation <path>`");
        std::filesystem::path p(f[1]);
        if (p.is_relative()) p = base_dir / p;
        sc.segmentation = load_segmentation(p);
      } else {
        fail("unknown directive '" + std::string(key) + "'");
      }
    } catch (const DomainError& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  if (!saw_format) throw ParseError(source, 0, "empty grounded toy scenario");
  if (!saw_planted) throw ParseError(source, 0, "missing `planted` line");

  const auto v = static_cast<Eigen::Index>(sc.vocab.size());
  sc.bigram = Eigen::MatrixXd::Zero(v, v);
  for (const auto& [prev, row] : bigram_rows) sc.bigram.row(prev) = row.transpose();
  sc.evidence = Eigen::MatrixXd::Zero(v, static_cast<Eigen::Index>(evidence_cols.size()));
  for (std::size_t j = 0; j < evidence_cols.size(); ++j) {
    sc.evidence.col(static_cast<Eigen::Index>(j)) = evidence_cols[j];
  }
  try {
    sc.validate();
  } catch (const DomainError& e) {
    throw ParseError(source, 0, e.what());
  }
  return sc;
}

GroundedToyScenario load_grounded_toy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open grounded toy scenario");
  return parse_grounded_toy(in, path.string(), path.parent_path());
}

GroundedToyBackend::GroundedToyBackend(GroundedToyScenario scenario)
    : scenario_(std::make_shared<const GroundedToyScenario>(std::move(scenario))) {
  scenario_->validate();
}

SessionRequest GroundedToyBackend::default_request(std::string session_id, double top_m_fraction) const {
  SessionRequest req;
  req.session_id = std::move(session_id);
  req.vocab = scenario_->vocab;
  req.prompt_tokens = scenario_->prompt;
  if (scenario_->segmentation) {
    req.segmentation = *scenario_->segmentation;
    req.top_m = select_top_m(scenario_->segmentation->object_count(), top_m_fraction);
  }
  return req;
}

ChannelLogits GroundedToyBackend::channel_logits(std::span<const TokenId> prefix,
                                                 const ChannelVisibility& vis) const {
  return compute_channels(*scenario_, prefix, vis);
}

std::shared_ptr<const LogitsModel> GroundedToyBackend::make_model(
    const SessionRequest& req, const std::optional<SegmentationSet>& segmentation) const {
  const auto& sc = *scenario_;
  if (req.vocab != sc.vocab) {
    throw BackendError("vocab mismatch: session '" + req.session_id +
                       "' does not use the scenario's vocabulary");
  }
  const SegmentationSet* seg = segmentation ? &*segmentation : nullptr;
  ChannelVisibility vis;
  if (seg == nullptr && sc.visibility) {
    vis = *sc.visibility;
  } else {
    if (seg == nullptr && sc.segmentation) seg = &*sc.segmentation;
    if (seg == nullptr) {
      throw BackendError("grounded toy: no segmentation or explicit visibility for session '" +
                         req.session_id + "'");
    }
    for (const auto& o : sc.objects) {
      const SegmentMask* m = seg->find(o);
      if (m == nullptr || m->kind != MaskKind::object) {
        throw BackendError("grounded toy: evidence object '" + o + "' is not an object mask");
      }
    }
    try {
      vis = visibility_from(decouple(*seg, req.top_m));
    } catch (const DomainError& e) {
      throw BackendError(std::string("grounded toy: ") + e.what());
    }
  }
  return std::make_shared<GroundedToyModel>(scenario_, std::move(vis));
}

std::unique_ptr<GroundedToyBackend> make_grounded_toy(GroundedToyScenario scenario) {
  return std::make_unique<GroundedToyBackend>(std::move(scenario));
}

}  // namespace catchdec
