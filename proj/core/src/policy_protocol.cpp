// Copyright 2026 The wbc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "wbc/policy_protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "json_util.hpp"

namespace wbc {
namespace {

using json_util::json;

json Parse(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
}

template <typename F>
auto Guard(F&& f) {
  try {
    return f();
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(e.what());
  }
}

std::runtime_error SysError(const std::string& what) {
  return std::runtime_error(what + ": " + std::strerror(errno));
}

void SendAll(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SysError("send");
    }
    sent += static_cast<std::size_t>(n);
  }
}

// Reads until a newline. Returns nullopt on timeout or orderly close.
std::optional<std::string> ReadLine(int fd, std::string& buffer, int timeout_ms) {
  for (;;) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return line;
    }
    pollfd p{fd, POLLIN, 0};
    const int r = ::poll(&p, 1, timeout_ms);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw SysError("poll");
    }
    if (r == 0) return std::nullopt;
    char chunk[4096];
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SysError("recv");
    }
    if (n == 0) return std::nullopt;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

std::string EncodeRequest(const PolicyRequest& r) {
  json j;
  j["anchor_times"] = r.anchor_times;
  json proprio = json::array();
  for (const Eigen::VectorXd& v : r.proprio) proprio.push_back(json_util::VectorToJson(v));
  j["proprio"] = std::move(proprio);
  j["frame_refs"] = r.frame_refs;
  return j.dump();
}

PolicyRequest DecodeRequest(std::string_view line) {
  const json j = Parse(line);
  return Guard([&] {
    PolicyRequest r;
    for (const json& t : json_util::Require(j, "anchor_times", "request")) {
      r.anchor_times.push_back(json_util::Number(t, "request.anchor_times"));
    }
    for (const json& v : json_util::Require(j, "proprio", "request")) {
      r.proprio.push_back(json_util::Vector(v, "request.proprio"));
    }
    if (j.contains("frame_refs")) {
      for (const json& s : j["frame_refs"]) {
        if (!s.is_string()) throw ProtocolError("request.frame_refs: expected strings");
        r.frame_refs.push_back(s.get<std::string>());
      }
    }
    return r;
  });
}

std::string EncodeChunk(const ActionChunk& c) {
  json j;
  j["anchor_time"] = c.anchor_time;
  j["frame"] = std::string(ToString(c.frame));
  if (c.reference_pose) j["reference_pose"] = json_util::PoseToJson(*c.reference_pose);
  json steps = json::array();
  for (const ActionStep& s : c.steps) {
    steps.push_back({{"t", s.t}, {"action", json_util::VectorToJson(s.action)}});
  }
  j["steps"] = std::move(steps);
  return j.dump();
}

ActionChunk DecodeChunk(std::string_view line) {
  const json j = Parse(line);
  return Guard([&] {
    ActionChunk c;
    if (j.contains("error")) throw ProtocolError("policy server: " + j["error"].dump());
    c.anchor_time = json_util::RequireNumber(j, "anchor_time", "chunk");
    if (j.contains("frame")) c.frame = FrameTagFromString(j["frame"].get<std::string>());
    if (j.contains("reference_pose")) {
      c.reference_pose = json_util::PoseFromJson(j["reference_pose"], "chunk.reference_pose");
    }
    for (const json& s : json_util::Require(j, "steps", "chunk")) {
      ActionStep step;
      step.t = json_util::RequireNumber(s, "t", "chunk.steps");
      const Eigen::VectorXd a = json_util::Vector(json_util::Require(s, "action", "chunk.steps"),
                                                  "chunk.steps.action");
      if (a.size() != kActionDim) {
        throw ProtocolError("chunk.steps.action: expected " + std::to_string(kActionDim) +
                            " numbers");
      }
      step.action = a;
      c.steps.push_back(step);
    }
    c.Validate();
    return c;
  });
}

PolicyClient::PolicyClient(const std::string& host, std::uint16_t port, double timeout_s)
    : timeout_s_(timeout_s) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw std::runtime_error("resolve " + host + ": " + ::gai_strerror(rc));
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0) {
    ::freeaddrinfo(res);
    throw SysError("socket");
  }
  const int rc = ::connect(fd_, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) {
    const auto err = SysError("connect " + host + ":" + service);
    ::close(fd_);
    fd_ = -1;
    throw err;
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

PolicyClient::~PolicyClient() {
  if (fd_ >= 0) ::close(fd_);
}

ActionChunk PolicyClient::Request(const PolicyRequest& request) {
  SendAll(fd_, EncodeRequest(request) + "\n");
  const auto line = ReadLine(fd_, buffer_, static_cast<int>(timeout_s_ * 1000.0));
  if (!line) throw ProtocolError("no reply from policy server");
  return DecodeChunk(*line);
}

PolicyServer::PolicyServer(std::uint16_t port, Handler handler) : handler_(std::move(handler)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw SysError("socket");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 4) != 0) {
    const auto err = SysError("bind/listen on port " + std::to_string(port));
    ::close(listen_fd_);
    throw err;
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

PolicyServer::~PolicyServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void PolicyServer::Serve(const std::atomic<bool>& stop, int poll_ms) {
  while (!stop.load()) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, poll_ms);
    if (r < 0 && errno != EINTR) throw SysError("poll");
    if (r <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    try {
      HandleConnection(fd, stop, poll_ms);
    } catch (...) {
      ::close(fd);
      throw;
    }
    ::close(fd);
  }
}

void PolicyServer::HandleConnection(int fd, const std::atomic<bool>& stop, int poll_ms) {
  std::string buffer;
  while (!stop.load()) {
    std::optional<std::string> line;
    line = ReadLine(fd, buffer, poll_ms);
    if (!line) {
      // Timeout: keep waiting. Closed: leave.
      pollfd p{fd, POLLIN, 0};
      if (::poll(&p, 1, 0) > 0) {
        char c;
        if (::recv(fd, &c, 1, MSG_PEEK) == 0) return;
      }
      continue;
    }
    std::string reply;
    try {
      reply = EncodeChunk(handler_(DecodeRequest(*line)));
    } catch (const std::exception& e) {
      json err;
      err["error"] = e.what();
      reply = err.dump();
    }
    SendAll(fd, reply + "\n");
  }
}

}  // namespace wbc
