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
#ifndef WBC_POLICY_PROTOCOL_HPP_
#define WBC_POLICY_PROTOCOL_HPP_

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "wbc/exec_bridge.hpp"

namespace wbc {

// Newline-delimited JSON. A request carries the observation window; the
// reply is one action chunk.
struct PolicyRequest {
  std::vector<double> anchor_times;
  std::vector<Eigen::VectorXd> proprio;
  std::vector<std::string> frame_refs;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Single-line encodings without the trailing newline. Decoders throw
// ProtocolError.
std::string EncodeRequest(const PolicyRequest& r);
PolicyRequest DecodeRequest(std::string_view line);
std::string EncodeChunk(const ActionChunk& c);
ActionChunk DecodeChunk(std::string_view line);

// Blocking client over a local TCP stream.
class PolicyClient {
 public:
  PolicyClient(const std::string& host, std::uint16_t port, double timeout_s = 2.0);
  ~PolicyClient();
  PolicyClient(const PolicyClient&) = delete;
  PolicyClient& operator=(const PolicyClient&) = delete;

  ActionChunk Request(const PolicyRequest& request);

 private:
  int fd_ = -1;
  double timeout_s_;
  std::string buffer_;
};

// Accepts connections one at a time and answers each request line with the
// handler's chunk.
class PolicyServer {
 public:
  using Handler = std::function<ActionChunk(const PolicyRequest&)>;

  // Port 0 picks a free port.
  PolicyServer(std::uint16_t port, Handler handler);
  ~PolicyServer();
  PolicyServer(const PolicyServer&) = delete;
  PolicyServer& operator=(const PolicyServer&) = delete;

  std::uint16_t port() const { return port_; }

  // Runs until `stop` becomes true. Polls it every `poll_ms`.
  void Serve(const std::atomic<bool>& stop, int poll_ms = 50);

 private:
  void HandleConnection(int fd, const std::atomic<bool>& stop, int poll_ms);

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  Handler handler_;
};

}  // namespace wbc

#endif  // WBC_POLICY_PROTOCOL_HPP_
