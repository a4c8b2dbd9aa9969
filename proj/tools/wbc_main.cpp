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

// wbc: simulation, single-step IK, gaze, validation and log inspection.
//
// Exit codes: 0 ok, 1 input error, 2 constraint violation or metric delta
// over tolerance, 3 infeasible QP.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "logging.hpp"
#include "wbc/errors.hpp"
#include "wbc/gaze.hpp"
#include "wbc/ik_profile.hpp"
#include "wbc/io.hpp"
#include "wbc/policy_protocol.hpp"
#include "wbc/robot_model.hpp"
#include "wbc/sim.hpp"
#include "wbc/wbik.hpp"

namespace fs = std::filesystem;

namespace wbc::tools {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitViolation = 2;
constexpr int kExitInfeasible = 3;

struct SimArgs {
  std::string scenario;
  std::string profile;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string policy_endpoint;
};

struct IkStepArgs {
  std::string model;
  std::string state;
  std::string targets;
  std::string profile;
  double dt = 0.01;
};

struct GazeArgs {
  std::string head_pose;
  std::vector<double> target;
};

struct ValidateArgs {
  std::string model;
  std::string profile;
  std::string scenario;
};

struct InspectArgs {
  std::string metrics;
  std::string log;
  std::string compare;
  double tolerance = 1e-9;
};

struct BenchArgs {
  std::string scenario;
  int repeat = 3;
};

std::pair<std::string, std::uint16_t> ParseEndpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos) throw ValidationError("endpoint must be host:port");
  const std::string host = endpoint.substr(0, colon);
  const int port = std::stoi(endpoint.substr(colon + 1));
  if (port <= 0 || port > 65535) throw ValidationError("endpoint port out of range");
  return {host, static_cast<std::uint16_t>(port)};
}

int RunSim(const SimArgs& args) {
  const Scenario scenario = Scenario::FromFile(args.scenario);
  const RobotModel model = RobotModel::FromFile(scenario.model_path);
  const IkProfile profile = IkProfile::FromFile(
      args.profile.empty() ? scenario.profile_path : fs::path(args.profile));
  EpisodeOptions options;
  options.seed = args.seed;
  std::unique_ptr<PolicyClient> client;
  if (!args.policy_endpoint.empty()) {
    const auto [host, port] = ParseEndpoint(args.policy_endpoint);
    client = std::make_unique<PolicyClient>(host, port);
    options.policy = [&client](const PolicyRequest& r) { return client->Request(r); };
    spdlog::info("policy at {}:{}", host, port);
  }
  spdlog::info("scenario '{}' with profile '{}', {} s", scenario.name, profile.name,
               scenario.duration);
  const EpisodeResult result = RunEpisode(model, profile, scenario, options);
  for (const std::string& w : result.warnings) spdlog::debug("{}", w);

  const fs::path out(args.out);
  fs::create_directories(out);
  {
    std::ofstream csv(out / "trajectory.csv", std::ios::binary);
    if (!csv) throw SchemaError("cannot write " + (out / "trajectory.csv").string());
    WriteTrajectoryCsv(csv, result, model.nv());
  }
  {
    std::ofstream js(out / "metrics.json", std::ios::binary);
    if (!js) throw SchemaError("cannot write " + (out / "metrics.json").string());
    js << MetricsToJson(result) << '\n';
  }
  const EpisodeMetrics& m = result.metrics;
  spdlog::info("ticks={} ee_pos_rmse={:.3e} violations={} infeasible={}", m.ticks, m.ee_pos_rmse,
               m.constraint_violations, m.infeasible_ticks);
  if (m.constraint_violations > 0) {
    spdlog::error("{} constraint violations", m.constraint_violations);
    return kExitViolation;
  }
  if (m.infeasible_ticks > 0) {
    spdlog::warn("{} infeasible ticks", m.infeasible_ticks);
    return kExitInfeasible;
  }
  return kExitOk;
}

int RunIkStep(const IkStepArgs& args) {
  const RobotModel model = RobotModel::FromFile(args.model);
  const GeneralizedState q = StateFromJson(ReadTextFile(args.state), model);
  const TrackingTargets targets = TargetsFromJson(ReadTextFile(args.targets));
  const IkProfile profile = IkProfile::FromFile(args.profile);
  if (!(args.dt > 0.0)) throw ValidationError("--dt must be > 0");
  const IkStep step = StepIk(model, q, targets, profile, args.dt);
  std::cout << IkStepToJson(step, profile) << '\n';
  if (step.diagnostics.status == QpStatus::kInfeasible) {
    spdlog::warn("QP infeasible");
    return kExitInfeasible;
  }
  return kExitOk;
}

// Optical camera axes (x right, y down, z forward) in a mount frame with x
// forward, y left, z up.
Mat3 CameraInMount() {
  Mat3 m;
  m.col(0) = Vec3(0.0, -1.0, 0.0);
  m.col(1) = Vec3(0.0, 0.0, -1.0);
  m.col(2) = Vec3(1.0, 0.0, 0.0);
  return m;
}

int RunGaze(const GazeArgs& args) {
  if (args.target.size() != 3) throw ValidationError("--target needs x,y,z");
  const Pose head = PoseDocumentFromJson(ReadTextFile(args.head_pose));
  const Vec3 target(args.target[0], args.target[1], args.target[2]);
  const Rotation r = LookAtRotation(head.translation, head.rotation, target);
  // The mount shares the head position with the camera rotation removed.
  Pose mount = head;
  mount.rotation =
      head.rotation * Rotation::FromMatrixUnchecked(CameraInMount()).inverse();
  const PanTilt pt = PanTiltFromRotation(r, mount);
  std::cout << GazeToJson(r, pt) << '\n';
  return kExitOk;
}

int RunValidate(const ValidateArgs& args) {
  if (args.model.empty() && args.profile.empty() && args.scenario.empty()) {
    throw ValidationError("nothing to validate; pass --model, --profile or --scenario");
  }
  if (!args.model.empty()) {
    const RobotModel m = RobotModel::FromFile(args.model);
    std::cout << "model '" << m.name() << "': ok, n_v=" << m.nv() << ", "
              << m.collision_bodies().size() << " collision bodies, "
              << m.CollisionPairs().size() << " pairs\n";
  }
  if (!args.profile.empty()) {
    const IkProfile p = IkProfile::FromFile(args.profile);
    std::cout << "profile '" << p.name << "': ok\n";
  }
  if (!args.scenario.empty()) {
    const Scenario s = Scenario::FromFile(args.scenario);
    const RobotModel m = RobotModel::FromFile(s.model_path);
    const IkProfile p = IkProfile::FromFile(s.profile_path);
    // Catches frames or joints the profile names but the model lacks.
    AssembleQp(m, GeneralizedState{m.nominal_posture()},
               TrackingTargets{ForwardKinematics(m, GeneralizedState{m.nominal_posture()},
                                                 "left_gripper"),
                               ForwardKinematics(m, GeneralizedState{m.nominal_posture()},
                                                 "right_gripper"),
                               std::nullopt},
               p, 1.0 / s.control_rate);
    std::cout << "scenario '" << s.name << "': ok, policy " << ToString(s.policy) << ", "
              << s.duration << " s\n";
  }
  return kExitOk;
}

struct CsvSummary {
  int rows = 0;
  double margin_min = std::numeric_limits<double>::infinity();
  double max_com = 0.0;
};

CsvSummary SummarizeCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty log");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(path + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_margin = column("margin_min");
  const std::size_t c_dx = column("com_dx");
  const std::size_t c_dy = column("com_dy");
  CsvSummary s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      throw SchemaError(path + ": row " + std::to_string(s.rows + 1) + " has " +
                        std::to_string(cells.size()) + " cells");
    }
    s.margin_min = std::min(s.margin_min, std::stod(cells[c_margin]));
    s.max_com = std::max({s.max_com, std::abs(std::stod(cells[c_dx])),
                          std::abs(std::stod(cells[c_dy]))});
    ++s.rows;
  }
  return s;
}

int RunInspect(const InspectArgs& args) {
  if (args.metrics.empty() && args.log.empty()) {
    throw ValidationError("pass --metrics and/or --log");
  }
  int status = kExitOk;
  if (!args.log.empty()) {
    const CsvSummary s = SummarizeCsv(args.log);
    std::cout << "log: " << s.rows << " ticks, min margin " << s.margin_min
              << ", max |com offset| " << s.max_com << '\n';
    if (s.rows > 0 && s.margin_min < -1e-8) status = kExitViolation;
  }
  if (!args.metrics.empty()) {
    const std::string a = ReadTextFile(args.metrics);
    if (args.compare.empty()) {
      std::cout << a << '\n';
    } else {
      const CompareReport report = CompareRuns(a, ReadTextFile(args.compare), args.tolerance);
      std::cout << "scenario " << report.scenario << ", tolerance " << args.tolerance << '\n';
      for (const MetricDelta& d : report.deltas) {
        std::cout << (d.exceeded ? "  ! " : "    ") << d.name << ": " << d.a << " -> " << d.b
                  << " (delta " << d.delta << ")\n";
      }
      if (report.any_exceeded) status = kExitViolation;
    }
  }
  return status;
}

int RunBench(const BenchArgs& args) {
  if (args.repeat < 1) throw ValidationError("--repeat must be >= 1");
  const Scenario scenario = Scenario::FromFile(args.scenario);
  const RobotModel model = RobotModel::FromFile(scenario.model_path);
  const IkProfile profile = IkProfile::FromFile(scenario.profile_path);
  double best = std::numeric_limits<double>::infinity();
  double total = 0.0;
  int ticks = 0;
  for (int r = 0; r < args.repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const EpisodeResult result = RunEpisode(model, profile, scenario);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    best = std::min(best, s);
    total += s;
    ticks = result.metrics.ticks;
  }
  std::cout << "scenario " << scenario.name << ": " << ticks << " ticks, best " << best
            << " s, mean " << total / args.repeat << " s";
  if (ticks > 0) {
    std::cout << ", " << 1e6 * best / ticks << " us/tick ("
              << ticks / best / scenario.control_rate << "x real time)";
  }
  std::cout << '\n';
  return kExitOk;
}

}  // namespace
}  // namespace wbc::tools

int main(int argc, char** argv) {
  using namespace wbc::tools;
  InitLogging("wbc");

  CLI::App app{"Whole-body control: simulation, IK, gaze and log tools"};
  app.require_subcommand(1);

  SimArgs sim;
  auto* c_sim = app.add_subcommand("sim", "Run a virtual-time episode; writes trajectory.csv "
                                          "and metrics.json");
  c_sim->add_option("--scenario", sim.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--profile", sim.profile, "IK profile JSON (default: the scenario's)")
      ->check(CLI::ExistingFile);
  c_sim->add_option("--out", sim.out, "Output directory")->required();
  c_sim->add_option("--seed", sim.seed, "Seed for injected jitter (default: the scenario's)");
  c_sim->add_option("--policy-endpoint", sim.policy_endpoint,
                    "host:port of a policy server (default: in-process scripted policy)");

  IkStepArgs ik;
  auto* c_ik = app.add_subcommand("ik-step", "Solve one IK tick and print dq and diagnostics");
  c_ik->add_option("--model", ik.model, "Robot model JSON")->required()->check(CLI::ExistingFile);
  c_ik->add_option("--state", ik.state, "State JSON {\"q\": [...]}")->required()->check(CLI::ExistingFile);
  c_ik->add_option("--targets", ik.targets,
                   "Targets JSON {\"left_ee\": pose7, \"right_ee\": pose7, \"head_rotation\"?: [9]}")
      ->required()
      ->check(CLI::ExistingFile);
  c_ik->add_option("--profile", ik.profile, "IK profile JSON")->required()->check(CLI::ExistingFile);
  c_ik->add_option("--dt", ik.dt, "Tick length in seconds")->capture_default_str();

  GazeArgs gaze;
  auto* c_gaze = app.add_subcommand(
      "gaze", "Look-at rotation and neck pan/tilt for a head camera pose (optical axes: z forward, "
              "x right, y down)");
  c_gaze->add_option("--head-pose", gaze.head_pose, "Head camera pose JSON {\"pose\": pose7}")
      ->required()
      ->check(CLI::ExistingFile);
  c_gaze->add_option("--target", gaze.target, "Look-at point x,y,z in the head pose's frame")
      ->required()
      ->delimiter(',')
      ->expected(3);

  ValidateArgs val;
  auto* c_val = app.add_subcommand("validate", "Load and check model, profile or scenario files");
  c_val->add_option("--model", val.model, "Robot model JSON")->check(CLI::ExistingFile);
  c_val->add_option("--profile", val.profile, "IK profile JSON")->check(CLI::ExistingFile);
  c_val->add_option("--scenario", val.scenario, "Scenario JSON")->check(CLI::ExistingFile);

  InspectArgs insp;
  auto* c_insp = app.add_subcommand("inspect-log", "Summarize or compare episode outputs");
  c_insp->add_option("--metrics", insp.metrics, "metrics.json of a run")->check(CLI::ExistingFile);
  c_insp->add_option("--log", insp.log, "trajectory.csv of a run")->check(CLI::ExistingFile);
  c_insp->add_option("--compare", insp.compare, "metrics.json of a second run")
      ->check(CLI::ExistingFile)
      ->needs(c_insp->get_option("--metrics"));
  c_insp->add_option("--tolerance", insp.tolerance, "Largest accepted |delta| per metric")
      ->capture_default_str();

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Time full episodes of a scenario");
  c_bench->add_option("--scenario", bench.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  c_bench->add_option("--repeat", bench.repeat, "Episodes to run")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (c_sim->parsed()) return RunSim(sim);
    if (c_ik->parsed()) return RunIkStep(ik);
    if (c_gaze->parsed()) return RunGaze(gaze);
    if (c_val->parsed()) return RunValidate(val);
    if (c_insp->parsed()) return RunInspect(insp);
    if (c_bench->parsed()) return RunBench(bench);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  }
  return kExitInput;
}
