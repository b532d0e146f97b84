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

#include "catchdec/backend.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>

#include "catchdec/errors.hpp"

namespace catchdec {

void SessionRequest::validate() const {
  if (session_id.empty()) throw DomainError("session request: empty session_id");
  if (vocab.empty()) throw DomainError("session request: empty vocabulary");
  for (TokenId t : prompt_tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab.size()) {
      throw DomainError("session request: prompt token " + std::to_string(t) + " outside vocabulary");
    }
  }
  if (top_m == 0) throw DomainError("session request: top_m must be positive");
}

std::optional<SegmentationSet> resolve_segmentation(const SessionRequest& req) {
  if (const auto* path = std::get_if<std::filesystem::path>(&req.segmentation)) {
    return load_segmentation(*path);
  }
  if (const auto* seg = std::get_if<SegmentationSet>(&req.segmentation)) return *seg;
  return std::nullopt;
}

std::string vocab_hash(const std::vector<std::string>& vocab) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (i > 0) mix('\n');
    for (unsigned char c : vocab[i]) mix(c);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void PrefixTracker::advance(std::span<const TokenId> prefix) {
  for (TokenId t : prefix) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size_) {
      throw BackendError("prefix token " + std::to_string(t) + " outside vocabulary");
    }
  }
  if (!started_) {
    if (!prefix.empty()) {
      throw BackendError("out-of-order prefix: first request must be the empty prefix, got length " +
                         std::to_string(prefix.size()));
    }
    started_ = true;
    return;
  }
  if (prefix.size() != served_.size() + 1 ||
      !std::equal(served_.begin(), served_.end(), prefix.begin())) {
    throw BackendError("out-of-order prefix: expected an extension of the length-" +
                       std::to_string(served_.size()) + " prefix by one token");
  }
  served_.push_back(prefix.back());
}

class InProcessSession final : public Session {
 public:
  InProcessSession(std::string id, std::shared_ptr<const LogitsModel> model,
                   std::shared_ptr<InProcessBackend::Registry> registry)
      : id_(std::move(id)),
        model_(std::move(model)),
        registry_(std::move(registry)),
        tracker_(model_->vocab_size()) {}

  ~InProcessSession() override {
    std::lock_guard lock(registry_->mu);
    registry_->open[id_] = false;
  }

  const std::string& id() const override { return id_; }
  std::size_t vocab_size() const override { return model_->vocab_size(); }

  ChannelLogits step_logits(std::span<const TokenId> prefix) override {
    tracker_.advance(prefix);
    return model_->logits(prefix);
  }

 private:
  std::string id_;
  std::shared_ptr<const LogitsModel> model_;
  std::shared_ptr<InProcessBackend::Registry> registry_;
  PrefixTracker tracker_;
};

std::unique_ptr<Session> InProcessBackend::open_session(const SessionRequest& req) {
  try {
    req.validate();
  } catch (const DomainError& e) {
    throw BackendError(e.what());
  }
  const std::string hash = vocab_hash(req.vocab);
  {
    std::lock_guard lock(registry_->mu);
    if (registry_->open[req.session_id]) {
      throw BackendError("duplicate session_id '" + req.session_id + "'");
    }
    const auto it = registry_->vocab_hash_by_id.find(req.session_id);
    if (it != registry_->vocab_hash_by_id.end() && it->second != hash) {
      throw BackendError("vocab mismatch with prior session '" + req.session_id + "'");
    }
  }

  std::optional<SegmentationSet> seg;
  try {
    seg = resolve_segmentation(req);
  } catch (const std::exception& e) {
    throw BackendError(std::string("segmentation rejected: ") + e.what());
  }
  auto model = make_model(req, seg);

  std::lock_guard lock(registry_->mu);
  if (registry_->open[req.session_id]) {
    throw BackendError("duplicate session_id '" + req.session_id + "'");
  }
  registry_->open[req.session_id] = true;
  registry_->vocab_hash_by_id[req.session_id] = hash;
  return std::make_unique<InProcessSession>(req.session_id, std::move(model), registry_);
}

}  // namespace catchdec
