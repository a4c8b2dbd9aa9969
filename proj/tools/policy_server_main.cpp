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

// Serves a scenario's scripted policy over the NDJSON policy protocol.

#include <atomic>
#include <csignal>
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "logging.hpp"
#include "wbc/policy_protocol.hpp"
#include "wbc/robot_model.hpp"
#include "wbc/sim.hpp"

namespace {

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  wbc::tools::InitLogging("wbc_policy_server");

  CLI::App app{"Scripted policy server (newline-delimited JSON over TCP, loopback only)"};
  std::string scenario_path;
  int port = 0;
  app.add_option("--scenario", scenario_path, "Scenario JSON whose policy to serve")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--port", port, "TCP port; 0 picks a free one")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const wbc::Scenario scenario = wbc::Scenario::FromFile(scenario_path);
    const wbc::RobotModel model = wbc::RobotModel::FromFile(scenario.model_path);
    const wbc::ScriptedResponder responder(model, scenario);
    wbc::PolicyServer server(static_cast<std::uint16_t>(port),
                             [&responder](const wbc::PolicyRequest& r) {
                               spdlog::debug("request anchored at {}", r.anchor_times.back());
                               return responder.Respond(r);
                             });
    std::signal(SIGINT, OnSignal);
    std::signal(SIGTERM, OnSignal);
    // The port goes to stdout so scripts can pick it up.
    std::cout << server.port() << std::endl;
    spdlog::info("serving '{}' on 127.0.0.1:{}", scenario.name, server.port());
    server.Serve(g_stop);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
