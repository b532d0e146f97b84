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

#include <chrono>
#include <memory>
#include <string>

#include "catchdec/backend.hpp"
#include "catchdec/protocol.hpp"

namespace catchdec {

/// Client side of the wire protocol. Addresses:
///   exec:<shell command>   spawn the command; talk over its stdin/stdout
///   unix:<socket path>     connect to a UnixListener
class RemoteBackend final : public Backend {
 public:
  static std::unique_ptr<RemoteBackend> connect(
      const std::string& address, std::chrono::milliseconds timeout = std::chrono::seconds(30));

  /// Takes ownership of the descriptors (and of `child`, when > 0). Performs
  /// the handshake; throws BackendError on failure.
  RemoteBackend(int read_fd, int write_fd, int child_pid, std::chrono::milliseconds timeout);
  ~RemoteBackend() override;

  std::unique_ptr<Session> open_session(const SessionRequest& req) override;

  /// One request/response exchange. Error frames become BackendError.
  nlohmann::json round_trip(const wire_json& request);

  struct Link;

 private:
  std::shared_ptr<Link> link_;
};

}  // namespace catchdec
