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

#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "catchdec/dist.hpp"

namespace catchdec {

/// The four conditioning contexts served per decode step.
enum class Channel { original, dual, residual, non_visual };

inline constexpr std::array<Channel, 4> kAllChannels = {Channel::original, Channel::dual,
                                                       Channel::residual, Channel::non_visual};

constexpr std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::original: return "original";
    case Channel::dual: return "dual";
    case Channel::residual: return "residual";
    case Channel::non_visual: return "non_visual";
  }
  return "?";
}

inline std::optional<Channel> parse_channel(std::string_view s) {
  for (Channel c : kAllChannels) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

/// Logits for the original image, the dual and residual exposures, and the
/// text-only context at one step.
struct ChannelLogits {
  LogitVector original;
  LogitVector dual;
  LogitVector residual;
  LogitVector non_visual;

  LogitVector& operator[](Channel c) {
    switch (c) {
      case Channel::original: return original;
      case Channel::dual: return dual;
      case Channel::residual: return residual;
      case Channel::non_visual: break;
    }
    return non_visual;
  }
  const LogitVector& operator[](Channel c) const {
    return const_cast<ChannelLogits&>(*this)[c];
  }

  Eigen::Index vocab_size() const { return original.size(); }

  /// Equal lengths >= 2, all finite. Throws DomainError naming the channel.
  void validate() const {
    if (original.size() < 2) throw DomainError("channel logits: vocabulary must have at least 2 tokens");
    for (Channel c : kAllChannels) {
      const auto& v = (*this)[c];
      const std::string name(to_string(c));
      if (v.size() != original.size()) {
        throw DomainError("channel logits: '" + name + "' has length " + std::to_string(v.size()) +
                          ", expected " + std::to_string(original.size()));
      }
      require_finite(v, name.c_str());
    }
  }

  bool operator==(const ChannelLogits& o) const {
    return original == o.original && dual == o.dual && residual == o.residual &&
           non_visual == o.non_visual;
  }
};

}  // namespace catchdec
