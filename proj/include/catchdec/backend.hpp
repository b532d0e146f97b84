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

// Channel-logits suppliers. A Backend opens Sessions; a Session serves the four
// channel logit vectors for a growing generated prefix.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "catchdec/channels.hpp"
#include "catchdec/segmentation.hpp"

namespace catchdec {

/// No segmentation, a path to a segmentation file, or an inline set.
using SegmentationRef = std::variant<std::monostate, std::filesystem::path, SegmentationSet>;

struct SessionRequest {
  std::string session_id;
  std::vector<std::string> vocab;
  std::vector<TokenId> prompt_tokens;
  SegmentationRef segmentation;
  std::size_t top_m = 1;

  /// Throws DomainError on an empty id or vocab, or an out-of-range prompt token.
  void validate() const;
};

/// Loads (and thereby validates) the referenced segmentation, if any.
std::optional<SegmentationSet> resolve_segmentation(const SessionRequest& req);

/// 64-bit FNV-1a over the newline-joined vocabulary, as 16 hex digits.
std::string vocab_hash(const std::vector<std::string>& vocab);

class Session {
 public:
  virtual ~Session() = default;

  virtual const std::string& id() const = 0;
  virtual std::size_t vocab_size() const = 0;

  /// `prefix` holds the generated tokens so far. The first call takes the
  /// empty prefix; each later call must extend the previous one by exactly
  /// one token.
  virtual ChannelLogits step_logits(std::span<const TokenId> prefix) = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::unique_ptr<Session> open_session(const SessionRequest& req) = 0;
};

/// Enforces the prefix-extension contract of Session::step_logits.
class PrefixTracker {
 public:
  explicit PrefixTracker(std::size_t vocab_size) : vocab_size_(vocab_size) {}

  /// Throws BackendError when `prefix` is not the next extension.
  void advance(std::span<const TokenId> prefix);

 private:
  std::size_t vocab_size_;
  std::vector<TokenId> served_;
  bool started_ = false;
};

/// Deterministic per-session logits as a pure function of the prefix.
class LogitsModel {
 public:
  virtual ~LogitsModel() = default;
  virtual std::size_t vocab_size() const = 0;
  virtual ChannelLogits logits(std::span<const TokenId> prefix) const = 0;
};

/// Shared session bookkeeping for in-process backends: session ids are unique
/// while open, and a reopened id must keep its vocabulary.
class InProcessBackend : public Backend {
 public:
  std::unique_ptr<Session> open_session(const SessionRequest& req) final;

 protected:
  virtual std::shared_ptr<const LogitsModel> make_model(
      const SessionRequest& req, const std::optional<SegmentationSet>& segmentation) const = 0;

 private:
  struct Registry {
    std::mutex mu;
    std::map<std::string, std::string> vocab_hash_by_id;
    std::map<std::string, bool> open;
  };
  std::shared_ptr<Registry> registry_ = std::make_shared<Registry>();

  friend class InProcessSession;
};

}  // namespace catchdec
