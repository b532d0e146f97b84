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

#include "catchdec/protocol.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>
#include <thread>
#include <vector>

#include "catchdec/errors.hpp"
#include "catchdec/text.hpp"

namespace catchdec {
namespace {

constexpr std::size_t kMaxFrame = std::size_t{1} << 30;

wire_json error_frame(const std::string& message, const std::string* session_id = nullptr) {
  wire_json j;
  j["type"] = "error";
  if (session_id != nullptr) j["session_id"] = *session_id;
  j["message"] = message;
  return j;
}

}  // namespace

struct ProtocolServer::ServedSession {
  std::mutex mu;
  std::unique_ptr<Session> session;
};

std::string encode_frame(std::string_view payload) {
  std::string out = std::to_string(payload.size());
  out += '\n';
  out.append(payload);
  out += '\n';
  return out;
}

std::optional<std::string> FrameDecoder::next() {
  const auto nl = buffer_.find('\n');
  if (nl == std::string::npos) {
    if (buffer_.size() > 20) throw BackendError("frame header too long");
    return std::nullopt;
  }
  const auto len = text::parse_int<std::size_t>(std::string_view(buffer_).substr(0, nl));
  if (!len || *len > kMaxFrame) throw BackendError("malformed frame header");
  if (buffer_.size() < nl + 1 + *len + 1) return std::nullopt;
  if (buffer_[nl + 1 + *len] != '\n') throw BackendError("frame missing trailing newline");
  std::string payload = buffer_.substr(nl + 1, *len);
  buffer_.erase(0, nl + 1 + *len + 1);
  return payload;
}

void FrameChannel::send(std::string_view payload) {
  const std::string frame = encode_frame(payload);
  std::size_t off = 0;
  while (off < frame.size()) {
    const ssize_t n = ::write(write_fd_, frame.data() + off, frame.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BackendError(std::string("write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> FrameChannel::receive(std::optional<std::chrono::milliseconds> timeout) {
  const auto deadline = timeout ? std::chrono::steady_clock::now() + *timeout
                                : std::chrono::steady_clock::time_point::max();
  char buf[65536];
  while (true) {
    if (auto payload = decoder_.next()) return payload;
    if (timeout) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw BackendTimeout("backend timed out");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (r < 0 && errno == EINTR) continue;
      if (r < 0) throw BackendError(std::string("poll failed: ") + std::strerror(errno));
      if (r == 0) throw BackendTimeout("backend timed out");
    }
    const ssize_t n = ::read(read_fd_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BackendError(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (!decoder_.empty()) throw BackendError("stream ended inside a frame");
      return std::nullopt;
    }
    decoder_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
  }
}

std::string encode_logits(const LogitVector& v) { return text::join_reals(v); }

LogitVector decode_logits(std::string_view s, std::size_t expected_size) {
  const auto fields = text::split_ws(s);
  if (fields.size() != expected_size) {
    throw BackendError("logit vector has " + std::to_string(fields.size()) + " values, expected " +
                       std::to_string(expected_size));
  }
  LogitVector v(static_cast<Eigen::Index>(expected_size));
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto x = text::parse_real(fields[i]);
    if (!x || !std::isfinite(*x)) {
      throw BackendError("bad logit value '" + std::string(fields[i]) + "' at index " + std::to_string(i));
    }
    v(static_cast<Eigen::Index>(i)) = *x;
  }
  return v;
}

wire_json request_to_json(const SessionRequest& req) {
  wire_json j;
  j["type"] = "open";
  j["session_id"] = req.session_id;
  j["vocab"] = req.vocab;
  j["vocab_hash"] = vocab_hash(req.vocab);
  j["prompt"] = req.prompt_tokens;
  if (const auto* path = std::get_if<std::filesystem::path>(&req.segmentation)) {
    j["segmentation"] = wire_json{{"path", path->string()}};
  } else if (const auto* seg = std::get_if<SegmentationSet>(&req.segmentation)) {
    std::ostringstream os;
    write_segmentation(os, *seg);
    j["segmentation"] = wire_json{{"inline", os.str()}};
  } else {
    j["segmentation"] = nullptr;
  }
  j["top_m"] = req.top_m;
  return j;
}

SessionRequest request_from_json(const nlohmann::json& j) {
  SessionRequest req;
  try {
    req.session_id = j.at("session_id").get<std::string>();
    req.vocab = j.at("vocab").get<std::vector<std::string>>();
    req.prompt_tokens = j.value("prompt", std::vector<TokenId>{});
    req.top_m = j.value("top_m", std::size_t{1});
    if (j.contains("vocab_hash") && j["vocab_hash"].get<std::string>() != vocab_hash(req.vocab)) {
      throw BackendError("vocab hash mismatch");
    }
    if (j.contains("segmentation") && !j["segmentation"].is_null()) {
      const auto& s = j["segmentation"];
      if (s.contains("path")) {
        req.segmentation = std::filesystem::path(s["path"].get<std::string>());
      } else if (s.contains("inline")) {
        std::istringstream in(s["inline"].get<std::string>());
        req.segmentation = parse_segmentation(in, "<inline segmentation>");
      } else {
        throw BackendError("segmentation must carry `path` or `inline`");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed open request: ") + e.what());
  } catch (const ParseError& e) {
    throw BackendError(std::string("segmentation rejected: ") + e.what());
  }
  return req;
}

wire_json logits_to_json(const std::string& session_id, std::size_t step, const ChannelLogits& ch) {
  wire_json j;
  j["type"] = "logits";
  j["session_id"] = session_id;
  j["step"] = step;
  for (Channel c : kAllChannels) j[std::string(to_string(c))] = encode_logits(ch[c]);
  return j;
}

ChannelLogits logits_from_json(const nlohmann::json& j, std::size_t vocab_size) {
  ChannelLogits ch;
  try {
    for (Channel c : kAllChannels) {
      ch[c] = decode_logits(j.at(std::string(to_string(c))).get<std::string>(), vocab_size);
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed logits response: ") + e.what());
  }
  return ch;
}

std::string ProtocolServer::Connection::handle(std::string_view payload) {
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::exception& e) {
    return error_frame(std::string("malformed request: ") + e.what()).dump();
  }
  return server_.dispatch(req, *this).dump();
}

ProtocolServer::Connection::~Connection() {
  std::lock_guard lock(server_.mu_);
  for (const auto& id : owned_) server_.sessions_.erase(id);
}

wire_json ProtocolServer::dispatch(const nlohmann::json& req, Connection& conn) {
  std::string type;
  std::string sid;
  const std::string* sid_ptr = nullptr;
  try {
    type = req.at("type").get<std::string>();
    if (req.contains("session_id")) {
      sid = req["session_id"].get<std::string>();
      sid_ptr = &sid;
    }

    if (type == "hello") {
      const int version = req.at("protocol").get<int>();
      if (version != kProtocolVersion) {
        return error_frame("unsupported protocol version " + std::to_string(version) + " (server speaks " +
                           std::to_string(kProtocolVersion) + ")");
      }
      conn.greeted_ = true;
      return wire_json{{"type", "hello"}, {"protocol", kProtocolVersion}, {"server", "catchdec"}};
    }
    if (type == "bye") {
      conn.finished_ = true;
      return wire_json{{"type", "bye"}};
    }
    if (!conn.greeted_) return error_frame("handshake required before '" + type + "'", sid_ptr);

    if (type == "open") {
      const SessionRequest sreq = request_from_json(req);
      {
        std::lock_guard lock(mu_);
        if (sessions_.count(sreq.session_id) > 0) {
          return error_frame("duplicate session_id '" + sreq.session_id + "'", sid_ptr);
        }
      }
      auto served = std::make_shared<ServedSession>();
      served->session = backend_.open_session(sreq);
      std::lock_guard lock(mu_);
      if (!sessions_.emplace(sreq.session_id, served).second) {
        return error_frame("duplicate session_id '" + sreq.session_id + "'", sid_ptr);
      }
      conn.owned_.insert(sreq.session_id);
      return wire_json{{"type", "opened"}, {"session_id", sreq.session_id}, {"vocab_hash", vocab_hash(sreq.vocab)}};
    }

    std::shared_ptr<ServedSession> served;
    {
      std::lock_guard lock(mu_);
      const auto it = sessions_.find(sid);
      if (it == sessions_.end()) return error_frame("unknown session_id '" + sid + "'", sid_ptr);
      served = it->second;
    }
    if (type == "step") {
      const auto prefix = req.at("prefix").get<std::vector<TokenId>>();
      std::lock_guard session_lock(served->mu);
      const ChannelLogits ch = served->session->step_logits(prefix);
      return logits_to_json(sid, prefix.size(), ch);
    }
    if (type == "close") {
      std::lock_guard lock(mu_);
      sessions_.erase(sid);
      conn.owned_.erase(sid);
      return wire_json{{"type", "closed"}, {"session_id", sid}};
    }
    return error_frame("unknown request type '" + type + "'", sid_ptr);
  } catch (const nlohmann::json::exception& e) {
    return error_frame(std::string("malformed request: ") + e.what(), sid_ptr);
  } catch (const std::exception& e) {
    return error_frame(e.what(), sid_ptr);
  }
}

void ProtocolServer::serve(FrameChannel& channel) {
  Connection conn(*this);
  while (!conn.finished()) {
    std::optional<std::string> payload;
    try {
      payload = channel.receive();
    } catch (const BackendError& e) {
      channel.send(error_frame(e.what()).dump());
      return;
    }
    if (!payload) return;
    channel.send(conn.handle(*payload));
  }
}

std::size_t ProtocolServer::open_sessions() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

UnixListener::UnixListener(ProtocolServer& server, std::filesystem::path path)
    : server_(server), path_(std::move(path)) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  const std::string p = path_.string();
  if (p.size() >= sizeof(addr.sun_path)) throw BackendError("socket path too long: " + p);
  std::memcpy(addr.sun_path, p.c_str(), p.size() + 1);
  fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd_ < 0) throw BackendError(std::string("socket: ") + std::strerror(errno));
  ::unlink(p.c_str());
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd_, 16) < 0) {
    const std::string err = std::strerror(errno);
    ::close(fd_);
    throw BackendError("cannot listen on " + p + ": " + err);
  }
}

UnixListener::~UnixListener() {
  shutdown();
  ::unlink(path_.c_str());
}

void UnixListener::serve_forever() {
  std::vector<std::thread> workers;
  while (!stopping_) {
    const int conn = ::accept(fd_, nullptr, nullptr);
    if (conn < 0) {
      if (errno == EINTR) continue;
      break;
    }
    workers.emplace_back([this, conn] {
      FrameChannel channel(conn, conn);
      try {
        server_.serve(channel);
      } catch (const std::exception&) {
        // Peer went away mid-write; nothing left to answer.
      }
      ::close(conn);
    });
  }
  for (auto& w : workers) w.join();
}

void UnixListener::shutdown() {
  if (stopping_.exchange(true)) return;
  ::shutdown(fd_, SHUT_RDWR);
  ::close(fd_);
}

}  // namespace catchdec
