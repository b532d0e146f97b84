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

#include "catchdec/conformance.hpp"

#include <algorithm>
#include <functional>

#include "catchdec/errors.hpp"
#include "catchdec/protocol.hpp"

namespace catchdec {
namespace {

SessionRequest with_id(const SessionRequest& base, const std::string& suffix) {
  SessionRequest r = base;
  r.session_id = base.session_id + "#conformance-" + suffix;
  return r;
}

std::string encode_all(const ChannelLogits& ch) {
  std::string out;
  for (Channel c : kAllChannels) {
    out += encode_logits(ch[c]);
    out += '\n';
  }
  return out;
}

bool throws_backend_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const BackendError&) {
    return true;
  }
  return false;
}

}  // namespace

bool ConformanceReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

ConformanceReport run_conformance(Backend& backend, const SessionRequest& request, std::size_t steps) {
  ConformanceReport report;
  const auto record = [&report](std::string name, bool ok, std::string detail = {}) {
    report.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  // Handshake and vocabulary consistency over a greedy replay.
  std::vector<TokenId> prefix;
  std::vector<std::string> served;
  const SessionRequest primary = with_id(request, "a");
  try {
    auto session = backend.open_session(primary);
    record("handshake", session->vocab_size() == request.vocab.size(),
           "session vocab size " + std::to_string(session->vocab_size()));
    std::string vocab_detail;
    bool vocab_ok = true;
    for (std::size_t s = 0; s < steps && vocab_ok; ++s) {
      const ChannelLogits ch = session->step_logits(prefix);
      if (static_cast<std::size_t>(ch.vocab_size()) != request.vocab.size()) {
        vocab_ok = false;
        vocab_detail = "step " + std::to_string(s) + " returned " + std::to_string(ch.vocab_size()) + " logits";
        break;
      }
      try {
        ch.validate();
      } catch (const DomainError& e) {
        vocab_ok = false;
        vocab_detail = "step " + std::to_string(s) + ": " + e.what();
        break;
      }
      served.push_back(encode_all(ch));
      prefix.push_back(argmax(ch.original));
    }
    record("vocab-consistency", vocab_ok, vocab_detail);

    const bool dup = throws_backend_error([&] { backend.open_session(primary); });
    record("duplicate-session-rejected", dup);
  } catch (const std::exception& e) {
    record("handshake", false, e.what());
    return report;
  }

  {
    SessionRequest changed = primary;
    changed.vocab.push_back("<conformance-extra-token>");
    record("vocab-mismatch-rejected", throws_backend_error([&] { backend.open_session(changed); }));
  }

  try {
    auto replay = backend.open_session(with_id(request, "b"));
    bool same = true;
    std::vector<TokenId> p;
    for (std::size_t s = 0; s < served.size(); ++s) {
      if (encode_all(replay->step_logits(p)) != served[s]) {
        same = false;
        record("determinism", false, "step " + std::to_string(s) + " differs on replay");
        break;
      }
      p.push_back(prefix[s]);
    }
    if (same) record("determinism", true, std::to_string(served.size()) + " steps byte-identical");
  } catch (const std::exception& e) {
    record("determinism", false, e.what());
  }

  try {
    auto first_nonempty = backend.open_session(with_id(request, "c"));
    const std::vector<TokenId> bad(1, 0);
    const bool rejects_start = throws_backend_error([&] { first_nonempty->step_logits(bad); });

    auto skipping = backend.open_session(with_id(request, "d"));
    skipping->step_logits({});
    const std::vector<TokenId> jump(2, 0);
    const bool rejects_skip = throws_backend_error([&] { skipping->step_logits(jump); });
    record("ordered-prefixes", rejects_start && rejects_skip,
           std::string(rejects_start ? "" : "accepted a non-empty first prefix; ") +
               (rejects_skip ? "" : "accepted a prefix that skips a token"));
  } catch (const std::exception& e) {
    record("ordered-prefixes", false, e.what());
  }
  return report;
}

}  // namespace catchdec
