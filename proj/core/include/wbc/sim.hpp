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
#ifndef WBC_SIM_HPP_
#define WBC_SIM_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "wbc/exec_bridge.hpp"
#include "wbc/gaze.hpp"
#include "wbc/ik_profile.hpp"
#include "wbc/policy_protocol.hpp"
#include "wbc/robot_model.hpp"
#include "wbc/wbik.hpp"

namespace wbc {

enum class PolicyKind {
  kStaticTarget,
  kFigureEight,
  kBoxCarry,
  kSearchThenApproach,
  kBlockedTarget,
};

std::string_view ToString(PolicyKind kind);
PolicyKind PolicyKindFromString(std::string_view name);

enum class GazeMode {
  // Neck joints follow pan/tilt set-points; the QP keeps them frozen.
  kServo,
  // Head orientation is a cost in the whole-body QP.
  kQp,
};

struct Scenario {
  std::string name;
  std::filesystem::path model_path;
  std::filesystem::path profile_path;
  PolicyKind policy = PolicyKind::kStaticTarget;
  // Policy-specific numbers; unknown keys are rejected at load time.
  std::map<std::string, double> policy_params;

  double duration = 5.0;  // s
  std::uint64_t seed = 0;
  double control_rate = 100.0;  // Hz
  double policy_rate = 10.0;    // Hz
  double camera_rate = 30.0;    // Hz

  // Injected delay between capture and receipt, per stream. The bridge is
  // told the same values as its measured latencies.
  std::map<std::string, double> latencies;
  // Uniform receive-time jitter bound for cameras, drawn from `seed`.
  double camera_jitter = 0.0;
  double inference_time = 0.0;
  double execution_latency = 0.0;

  int chunk_steps = 16;
  double step_period = 0.1;  // s between chunk steps
  FrameTag chunk_frame = FrameTag::kWorld;
  GazeMode gaze_mode = GazeMode::kServo;
  PanTiltLimits neck_limits;

  // Throws ValidationError.
  void Validate() const;

  // Relative paths resolve against `base_dir`. Throws SchemaError or
  // ValidationError.
  static Scenario FromJson(std::string_view document, const std::filesystem::path& base_dir);
  static Scenario FromFile(const std::filesystem::path& path);
};

inline const std::vector<std::string>& CameraStreams() {
  static const std::vector<std::string> kStreams = {"head_camera", "left_wrist_camera",
                                                    "right_wrist_camera"};
  return kStreams;
}
inline constexpr std::string_view kProprioStream = "proprio";

// Commanded targets as a function of time.
class ScriptedPolicy {
 public:
  virtual ~ScriptedPolicy() = default;
  virtual DecodedAction TargetAt(double t) const = 0;
};

struct PolicyStart {
  Pose left;
  Pose right;
  Vec3 look_at = Vec3::Zero();
  // Planar base position and yaw at the start.
  Vec3 base = Vec3::Zero();
};

std::unique_ptr<ScriptedPolicy> MakeScriptedPolicy(PolicyKind kind,
                                                   const std::map<std::string, double>& params,
                                                   const PolicyStart& start);

// Initial gripper poses and look-at point of a model at configuration q.
PolicyStart StartFromState(const RobotModel& model, const GeneralizedState& q);

// Answers observation windows with chunks from a scripted policy. Used in
// process by the simulator and over TCP by the policy server.
class ScriptedResponder {
 public:
  ScriptedResponder(const RobotModel& model, const Scenario& scenario);
  ActionChunk Respond(const PolicyRequest& request) const;

 private:
  const RobotModel* model_;
  Scenario scenario_;
  std::unique_ptr<ScriptedPolicy> policy_;
};

struct EpisodeMetrics {
  double ee_pos_rmse = 0.0;   // m, both arms, against emitted targets
  double ee_rot_rmse = 0.0;   // rad
  double gaze_error = 0.0;    // rad, mean
  double max_com_offset = 0.0;  // m, largest |component| of the torso offset
  int constraint_violations = 0;
  double jerk_proxy = 0.0;  // RMS second difference of dq
  double base_path_length = 0.0;  // m

  // Same quantities over the final second.
  double ee_pos_rmse_final = 0.0;
  double ee_rot_rmse_final = 0.0;
  double gaze_error_final = 0.0;  // max

  int ticks = 0;
  int infeasible_ticks = 0;
  double min_collision_margin = 0.0;  // m, distance minus d_safe
  double max_inter_gripper_deviation = 0.0;  // m, from the initial distance
  int discarded_steps = 0;
  int chunks_scheduled = 0;
  int bridge_warnings = 0;
};

struct TickRecord {
  int tick = 0;
  double t = 0.0;
  Eigen::VectorXd q;   // after the tick
  Eigen::VectorXd dq;  // total displacement this tick, neck included
  Emission emission;
  IkDiagnostics diagnostics;
  double margin_min = 0.0;
  double gaze_error = 0.0;
  TrackingError left_error;
  TrackingError right_error;
  double inter_gripper_distance = 0.0;
};

struct EpisodeResult {
  std::string scenario_name;
  std::string profile_name;
  std::vector<TickRecord> ticks;
  std::vector<ScheduleReport> schedule_reports;
  std::vector<std::string> warnings;
  EpisodeMetrics metrics;
};

struct EpisodeOptions {
  // Profile to use instead of the scenario's.
  std::optional<IkProfile> profile;
  std::optional<std::uint64_t> seed;
  // Remote policy. Called synchronously in virtual time.
  std::function<ActionChunk(const PolicyRequest&)> policy;
};

// Virtual-time episode: scripted policy at the policy rate, bridge, IK at
// the control rate. Deterministic for a given scenario and seed.
EpisodeResult RunEpisode(const Scenario& scenario, const EpisodeOptions& options = {});
EpisodeResult RunEpisode(const RobotModel& model, const IkProfile& profile,
                         const Scenario& scenario, const EpisodeOptions& options = {});

// CSV with one row per control tick.
void WriteTrajectoryCsv(std::ostream& out, const EpisodeResult& result, int nv);
std::string MetricsToJson(const EpisodeResult& result);

struct MetricDelta {
  std::string name;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;  // b - a
  bool exceeded = false;
};

struct CompareReport {
  std::string scenario;
  std::vector<MetricDelta> deltas;
  bool any_exceeded = false;
};

class ScenarioMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-metric comparison of two metrics documents from the same scenario.
CompareReport CompareRuns(std::string_view metrics_a, std::string_view metrics_b,
                          double tolerance = 1e-9);

}  // namespace wbc

#endif  // WBC_SIM_HPP_
