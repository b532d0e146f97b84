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

#include "catchdec/remote_backend.hpp"

#include <signal.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>

#include "catchdec/errors.hpp"

namespace catchdec {

struct RemoteBackend::Link {
  int read_fd = -1;
  int write_fd = -1;
  int child = -1;
  std::chrono::milliseconds timeout{};
  std::mutex mu;
  FrameChannel channel{-1, -1};
  bool broken = false;

  Link(int r, int w, int pid, std::chrono::milliseconds t)
      : read_fd(r), write_fd(w), child(pid), timeout(t), channel(r, w) {}

  ~Link() {
    if (!broken) {
      try {
        std::lock_guard lock(mu);
        channel.send(wire_json{{"type", "bye"}}.dump());
        channel.receive(std::chrono::milliseconds(1000));
      } catch (const std::exception&) {
        // Best effort; the peer may already be gone.
      }
    }
    if (read_fd >= 0) ::close(read_fd);
    if (write_fd >= 0 && write_fd != read_fd) ::close(write_fd);
    if (child > 0) {
      // A peer that stopped answering may never exit on its own.
      if (broken) ::kill(child, SIGTERM);
      int status = 0;
      ::waitpid(child, &status, 0);
    }
  }

  nlohmann::json exchange(const wire_json& request) {
    std::lock_guard lock(mu);
    if (broken) throw BackendError("backend connection is closed");
    std::optional<std::string> payload;
    try {
      channel.send(request.dump());
      payload = channel.receive(timeout);
    } catch (const BackendError&) {
      broken = true;
      throw;
    }
    if (!payload) {
      broken = true;
      throw BackendError("backend closed the connection");
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(*payload);
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed backend reply: ") + e.what());
    }
    if (reply.value("type", std::string()) == "error") {
      throw BackendError("backend error: " + reply.value("message", std::string("(no message)")));
    }
    return reply;
  }
};

namespace {

class RemoteSession final : public Session {
 public:
  RemoteSession(std::shared_ptr<RemoteBackend::Link> link, std::string id, std::size_t vocab_size)
      : link_(std::move(link)), id_(std::move(id)), vocab_size_(vocab_size) {}

  ~RemoteSession() override {
    try {
      link_->exchange(wire_json{{"type", "close"}, {"session_id", id_}});
    } catch (const std::exception&) {
      // The connection may already be down; the server drops it with the link.
    }
  }

  const std::string& id() const override { return id_; }
  std::size_t vocab_size() const override { return vocab_size_; }

  ChannelLogits step_logits(std::span<const TokenId> prefix) override {
    wire_json req;
    req["type"] = "step";
    req["session_id"] = id_;
    req["prefix"] = std::vector<TokenId>(prefix.begin(), prefix.end());
    const auto reply = link_->exchange(req);
    if (reply.value("type", std::string()) != "logits" || reply.value("session_id", std::string()) != id_) {
      throw BackendError("unexpected reply to step request for session '" + id_ + "'");
    }
    return logits_from_json(reply, vocab_size_);
  }

 private:
  std::shared_ptr<RemoteBackend::Link> link_;
  std::string id_;
  std::size_t vocab_size_;
};

}  // namespace

RemoteBackend::RemoteBackend(int read_fd, int write_fd, int child_pid, std::chrono::milliseconds timeout)
    : link_(std::make_shared<Link>(read_fd, write_fd, child_pid, timeout)) {
  const auto reply = link_->exchange(wire_json{{"type", "hello"}, {"protocol", kProtocolVersion}});
  if (reply.value("type", std::string()) != "hello" || reply.value("protocol", -1) != kProtocolVersion) {
    throw BackendError("handshake failed: unexpected reply " + reply.dump());
  }
}

RemoteBackend::~RemoteBackend() = default;

std::unique_ptr<Session> RemoteBackend::open_session(const SessionRequest& req) {
  try {
    req.validate();
  } catch (const DomainError& e) {
    throw BackendError(e.what());
  }
  const auto reply = link_->exchange(request_to_json(req));
  if (reply.value("type", std::string()) != "opened" || reply.value("session_id", std::string()) != req.session_id) {
    throw BackendError("handshake failure opening session '" + req.session_id + "'");
  }
  if (reply.value("vocab_hash", std::string()) != vocab_hash(req.vocab)) {
    throw BackendError("vocab mismatch: backend acknowledged a different vocabulary hash");
  }
  return std::make_unique<RemoteSession>(link_, req.session_id, req.vocab.size());
}

nlohmann::json RemoteBackend::round_trip(const wire_json& request) { return link_->exchange(request); }

std::unique_ptr<RemoteBackend> RemoteBackend::connect(const std::string& address,
                                                      std::chrono::milliseconds timeout) {
  // A dead peer must surface as a write error, not kill the process.
  std::signal(SIGPIPE, SIG_IGN);

  if (address.rfind("exec:", 0) == 0) {
    const std::string command = address.substr(5);
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) < 0) throw BackendError(std::string("pipe: ") + std::strerror(errno));
    if (::pipe(from_child) < 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw BackendError(std::string("pipe: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw BackendError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    return std::make_unique<RemoteBackend>(from_child[0], to_child[1], pid, timeout);
  }

  if (address.rfind("unix:", 0) == 0) {
    const std::string path = address.substr(5);
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof(addr.sun_path)) throw BackendError("socket path too long: " + path);
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) throw BackendError(std::string("socket: ") + std::strerror(errno));
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
      const std::string err = std::strerror(errno);
      ::close(fd);
      throw BackendError("cannot connect to " + path + ": " + err);
    }
    return std::make_unique<RemoteBackend>(fd, fd, -1, timeout);
  }

  throw BackendError("unsupported backend address '" + address + "' (expected exec:<cmd> or unix:<path>)");
}

}  // namespace catchdec
