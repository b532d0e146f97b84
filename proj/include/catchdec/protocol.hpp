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

// Backend wire protocol.
//
// Frames are `<payload byte length>\n<payload>\n`; every payload is one JSON
// object with a "type" field. The client drives; the server answers each
// request with exactly one response.
//
//   hello  {protocol}                                  -> hello {protocol, server}
//   open   {session_id, vocab, vocab_hash, prompt,
//           segmentation: null | {path} | {inline}, top_m} -> opened {session_id, vocab_hash}
//   step   {session_id, prefix}                        -> logits {session_id, step, original,
//                                                                 dual, residual, non_visual}
//   close  {session_id}                                -> closed {session_id}
//   bye    {}                                          -> bye {}
//
// Any failure is answered with `error {session_id?, message}`. Logit vectors
// travel as strings of space-separated decimals with 17 significant digits so
// they round-trip exactly.

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "catchdec/backend.hpp"

namespace catchdec {

inline constexpr int kProtocolVersion = 1;

using wire_json = nlohmann::ordered_json;

std::string encode_frame(std::string_view payload);

/// Incremental frame parser over an arbitrary byte stream.
class FrameDecoder {
 public:
  void feed(std::string_view bytes) { buffer_.append(bytes); }
  /// Next complete payload; throws BackendError on a malformed header.
  std::optional<std::string> next();
  bool empty() const { return buffer_.empty(); }

 private:
  std::string buffer_;
};

/// Frames over a pair of POSIX file descriptors (pipe ends or one socket).
/// Does not own the descriptors.
class FrameChannel {
 public:
  FrameChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

  void send(std::string_view payload);

  /// Blocks for the next payload. Returns nullopt on a clean end of stream,
  /// throws BackendTimeout when `timeout` elapses first.
  std::optional<std::string> receive(std::optional<std::chrono::milliseconds> timeout = std::nullopt);

 private:
  int read_fd_;
  int write_fd_;
  FrameDecoder decoder_;
};

std::string encode_logits(const LogitVector& v);
/// Throws BackendError when the text is malformed or has the wrong length.
LogitVector decode_logits(std::string_view text, std::size_t expected_size);

wire_json request_to_json(const SessionRequest& req);
SessionRequest request_from_json(const nlohmann::json& j);
wire_json logits_to_json(const std::string& session_id, std::size_t step, const ChannelLogits& ch);
ChannelLogits logits_from_json(const nlohmann::json& j, std::size_t vocab_size);

/// Serves any Backend over the protocol. Sessions are shared by all
/// connections and keyed by session_id.
class ProtocolServer {
 public:
  explicit ProtocolServer(Backend& backend) : backend_(backend) {}

  /// Per-connection handshake state. Sessions opened through a connection
  /// are closed when it is destroyed.
  class Connection {
   public:
    explicit Connection(ProtocolServer& server) : server_(server) {}
    ~Connection();
    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;

    /// One response payload per request payload. Never throws for bad input.
    std::string handle(std::string_view payload);
    bool finished() const { return finished_; }

   private:
    friend class ProtocolServer;
    ProtocolServer& server_;
    bool greeted_ = false;
    bool finished_ = false;
    std::set<std::string> owned_;
  };

  /// Serves one connection until `bye` or end of stream.
  void serve(FrameChannel& channel);

  std::size_t open_sessions() const;

 private:
  struct ServedSession;

  wire_json dispatch(const nlohmann::json& req, Connection& conn);

  Backend& backend_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<ServedSession>> sessions_;
};

/// Accepts connections on a Unix-domain socket, one thread per connection.
class UnixListener {
 public:
  UnixListener(ProtocolServer& server, std::filesystem::path path);
  ~UnixListener();
  UnixListener(const UnixListener&) = delete;
  UnixListener& operator=(const UnixListener&) = delete;

  /// Blocks until shutdown() is called from another thread.
  void serve_forever();
  void shutdown();

 private:
  ProtocolServer& server_;
  std::filesystem::path path_;
  int fd_ = -1;
  std::atomic<bool> stopping_{false};
};

}  // namespace catchdec
