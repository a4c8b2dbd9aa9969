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
#include "wbc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <set>

#include "json_util.hpp"
#include "wbc/collision.hpp"
#include "wbc/errors.hpp"

namespace wbc {
namespace {

using json_util::json;

constexpr double kMarginTolerance = 1e-8;
constexpr double kEqualityTolerance = 1e-9;
constexpr std::size_t kHistoryLength = 64;

const std::map<PolicyKind, std::map<std::string, double>>& PolicyDefaults() {
  static const std::map<PolicyKind, std::map<std::string, double>> kDefaults = {
      {PolicyKind::kStaticTarget, {{"dx", 0.15}, {"dy", 0.1}, {"dz", 0.0}, {"dyaw", 0.3}}},
      {PolicyKind::kFigureEight, {{"amplitude", 0.1}, {"period", 5.0}}},
      {PolicyKind::kBoxCarry,
       {{"distance", 0.4}, {"yaw", 0.3}, {"lift", 0.05}, {"ramp_time", 4.0}}},
      {PolicyKind::kSearchThenApproach,
       {{"search_time", 3.0},
        {"sweep", 0.8},
        {"object_x", 1.5},
        {"object_y", 0.0},
        {"object_z", 0.8},
        {"approach", 0.5},
        {"approach_time", 3.0}}},
      {PolicyKind::kBlockedTarget,
       {{"x", 0.2}, {"left_y", -0.3}, {"right_y", 0.3}, {"z", 1.3}, {"ramp_time", 2.0}}},
  };
  return kDefaults;
}

double Param(const std::map<std::string, double>& params, PolicyKind kind, const char* key) {
  const auto it = params.find(key);
  return it != params.end() ? it->second : PolicyDefaults().at(kind).at(key);
}

// Cosine ease from 0 to 1 over u in [0, 1].
double Ramp(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * u));
}

Pose PlanarMotion(const Vec3& pivot, const Vec3& translation, double yaw) {
  return Pose::Translation(pivot + translation) *
         Pose::FromRotation(Rotation::AxisAngle(Vec3::UnitZ(), yaw)) * Pose::Translation(-pivot);
}

DecodedAction Hold(const PolicyStart& s) {
  DecodedAction a;
  a.left = s.left;
  a.right = s.right;
  a.look_at = s.look_at;
  a.widths = Eigen::Vector2d(0.04, 0.04);
  return a;
}

class StaticTarget : public ScriptedPolicy {
 public:
  StaticTarget(const std::map<std::string, double>& p, const PolicyStart& s) : action_(Hold(s)) {
    const PolicyKind k = PolicyKind::kStaticTarget;
    const Pose w = PlanarMotion(Vec3(s.base.x(), s.base.y(), 0.0),
                                Vec3(Param(p, k, "dx"), Param(p, k, "dy"), Param(p, k, "dz")),
                                Param(p, k, "dyaw"));
    action_.left = w * s.left;
    action_.right = w * s.right;
    action_.look_at = w.Apply(s.look_at);
  }
  DecodedAction TargetAt(double) const override { return action_; }

 private:
  DecodedAction action_;
};

class FigureEight : public ScriptedPolicy {
 public:
  FigureEight(const std::map<std::string, double>& p, const PolicyStart& s)
      : start_(s),
        amplitude_(Param(p, PolicyKind::kFigureEight, "amplitude")),
        omega_(2.0 * std::numbers::pi / Param(p, PolicyKind::kFigureEight, "period")) {}
  DecodedAction TargetAt(double t) const override {
    const Vec3 offset(0.0, amplitude_ * std::sin(omega_ * t),
                      0.5 * amplitude_ * std::sin(2.0 * omega_ * t));
    DecodedAction a = Hold(start_);
    a.left.translation += offset;
    a.right.translation += offset;
    a.look_at += offset;
    return a;
  }

 private:
  PolicyStart start_;
  double amplitude_;
  double omega_;
};

// Both grippers ride on one rigid frame.
class BoxCarry : public ScriptedPolicy {
 public:
  BoxCarry(const std::map<std::string, double>& p, const PolicyStart& s) : start_(s) {
    const PolicyKind k = PolicyKind::kBoxCarry;
    distance_ = Param(p, k, "distance");
    yaw_ = Param(p, k, "yaw");
    lift_ = Param(p, k, "lift");
    ramp_time_ = Param(p, k, "ramp_time");
    center_ = 0.5 * (s.left.translation + s.right.translation);
  }
  DecodedAction TargetAt(double t) const override {
    const double u = Ramp(t / ramp_time_);
    const Pose b = PlanarMotion(center_, Vec3(distance_ * u, 0.0, lift_ * u), yaw_ * u);
    DecodedAction a = Hold(start_);
    a.left = b * start_.left;
    a.right = b * start_.right;
    a.look_at = b.Apply(start_.look_at);
    return a;
  }

 private:
  PolicyStart start_;
  Vec3 center_;
  double distance_, yaw_, lift_, ramp_time_;
};

// Look-at sweeps side to side, then settles on an object while the grippers
// move toward it.
class SearchThenApproach : public ScriptedPolicy {
 public:
  SearchThenApproach(const std::map<std::string, double>& p, const PolicyStart& s) : start_(s) {
    const PolicyKind k = PolicyKind::kSearchThenApproach;
    search_time_ = Param(p, k, "search_time");
    sweep_ = Param(p, k, "sweep");
    object_ = Vec3(s.base.x() + Param(p, k, "object_x"), s.base.y() + Param(p, k, "object_y"),
                   Param(p, k, "object_z"));
    approach_ = Param(p, k, "approach");
    approach_time_ = Param(p, k, "approach_time");
  }
  DecodedAction TargetAt(double t) const override {
    DecodedAction a = Hold(start_);
    if (t < search_time_) {
      const double s = std::sin(2.0 * std::numbers::pi * t / search_time_);
      a.look_at = object_ + Vec3(0.0, sweep_ * s, 0.0);
      return a;
    }
    const Vec3 shift(approach_ * Ramp((t - search_time_) / approach_time_), 0.0, 0.0);
    a.left.translation += shift;
    a.right.translation += shift;
    a.look_at = object_;
    return a;
  }

 private:
  PolicyStart start_;
  Vec3 object_;
  double search_time_, sweep_, approach_, approach_time_;
};

// Each gripper is sent across the body toward the other arm's side.
class BlockedTarget : public ScriptedPolicy {
 public:
  BlockedTarget(const std::map<std::string, double>& p, const PolicyStart& s) : start_(s) {
    const PolicyKind k = PolicyKind::kBlockedTarget;
    const Pose base = PlanarMotion(Vec3::Zero(), Vec3(s.base.x(), s.base.y(), 0.0), s.base.z());
    left_goal_ = base.Apply(Vec3(Param(p, k, "x"), Param(p, k, "left_y"), Param(p, k, "z")));
    right_goal_ = base.Apply(Vec3(Param(p, k, "x"), Param(p, k, "right_y"), Param(p, k, "z")));
    ramp_time_ = Param(p, k, "ramp_time");
  }
  DecodedAction TargetAt(double t) const override {
    const double u = Ramp(t / ramp_time_);
    DecodedAction a = Hold(start_);
    a.left.translation = start_.left.translation + u * (left_goal_ - start_.left.translation);
    a.right.translation = start_.right.translation + u * (right_goal_ - start_.right.translation);
    return a;
  }

 private:
  PolicyStart start_;
  Vec3 left_goal_, right_goal_;
  double ramp_time_;
};

double Sq(double x) { return x * x; }

Eigen::VectorXd Displacement(const RobotModel& model, const Eigen::VectorXd& from,
                             const Eigen::VectorXd& to) {
  Eigen::VectorXd d = to - from;
  if (const auto b = model.BaseCoordinate()) d[*b + 2] = WrapAngle(d[*b + 2]);
  return d;
}

// Neck coordinates as (pan, tilt), taken from the model's neck group.
std::vector<int> NeckCoordinates(const RobotModel& model) {
  const std::vector<int> coords = model.GroupCoordinates("neck");
  if (coords.size() != 2) {
    throw ValidationError("servo gaze needs a 'neck' group with exactly two joints (pan, tilt)");
  }
  return coords;
}

const JointSpec& JointOfCoordinate(const RobotModel& model, int coord) {
  for (const JointSpec& j : model.joints()) {
    if (coord >= j.q_index && coord < j.q_index + j.dof) return j;
  }
  throw std::out_of_range("coordinate has no joint");
}

}  // namespace

std::string_view ToString(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kStaticTarget:
      return "static-target";
    case PolicyKind::kFigureEight:
      return "figure-eight-bimanual";
    case PolicyKind::kBoxCarry:
      return "box-carry";
    case PolicyKind::kSearchThenApproach:
      return "search-then-approach";
    case PolicyKind::kBlockedTarget:
      return "blocked-target";
  }
  return "unknown";
}

PolicyKind PolicyKindFromString(std::string_view name) {
  for (const auto& [kind, defaults] : PolicyDefaults()) {
    if (ToString(kind) == name) return kind;
  }
  throw SchemaError("unknown scripted policy '" + std::string(name) + "'");
}

void Scenario::Validate() const {
  const auto fail = [&](const std::string& what) {
    throw ValidationError("scenario '" + name + "': " + what);
  };
  if (!(duration >= 0.0)) fail("duration must be >= 0");
  if (!(control_rate > 0.0 && policy_rate > 0.0 && camera_rate > 0.0)) fail("rates must be > 0");
  const double ratio = control_rate / policy_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
    fail("control_rate must be an integer multiple of policy_rate");
  }
  for (const auto& [stream, latency] : latencies) {
    const bool known = stream == kProprioStream ||
                       std::find(CameraStreams().begin(), CameraStreams().end(), stream) !=
                           CameraStreams().end();
    if (!known) fail("unknown stream '" + stream + "' in latencies");
    if (!(latency >= 0.0)) fail("latencies must be >= 0");
  }
  if (!(camera_jitter >= 0.0 && camera_jitter < 0.5 / camera_rate)) {
    fail("camera_jitter must be in [0, half a camera period)");
  }
  if (!(inference_time >= 0.0 && execution_latency >= 0.0)) {
    fail("inference_time and execution_latency must be >= 0");
  }
  if (chunk_steps < 1 || chunk_steps > kMaxChunkSteps) {
    fail("chunk_steps must be in [1, " + std::to_string(kMaxChunkSteps) + "]");
  }
  if (!(step_period > 0.0)) fail("step_period must be > 0");
  if (chunk_frame != FrameTag::kWorld && chunk_frame != FrameTag::kLeftGripper) {
    fail("chunk_frame must be world or left_gripper");
  }
  const auto& defaults = PolicyDefaults().at(policy);
  for (const auto& [key, value] : policy_params) {
    if (!defaults.contains(key)) fail("unknown parameter '" + key + "' for " + std::string(ToString(policy)));
    if (!std::isfinite(value)) fail("parameter '" + key + "' is not finite");
  }
  for (const char* key : {"period", "ramp_time", "search_time", "approach_time"}) {
    if (defaults.contains(key) && !(Param(policy_params, policy, key) > 0.0)) {
      fail(std::string(key) + " must be > 0");
    }
  }
}

Scenario Scenario::FromJson(std::string_view document, const std::filesystem::path& base_dir) {
  using namespace json_util;
  const json doc = json_util::Parse(document, "scenario");
  if (!doc.is_object()) throw SchemaError("scenario: top level must be an object");
  static const std::set<std::string> kKeys = {
      "name", "model", "profile", "policy", "policy_params", "duration", "seed",
      "control_rate", "policy_rate", "camera_rate", "latencies", "camera_jitter",
      "inference_time", "execution_latency", "chunk_steps", "step_period", "chunk_frame",
      "gaze_mode", "neck_limits"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!kKeys.contains(it.key())) throw SchemaError("scenario: unknown field '" + it.key() + "'");
  }
  Scenario s;
  const std::string ctx = "scenario";
  s.name = doc.value("name", std::string("unnamed"));
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  s.model_path = resolve(RequireString(doc, "model", ctx));
  s.profile_path = resolve(RequireString(doc, "profile", ctx));
  s.policy = PolicyKindFromString(RequireString(doc, "policy", ctx));
  if (doc.contains("policy_params")) {
    const json& p = doc["policy_params"];
    if (!p.is_object()) throw SchemaError("scenario.policy_params: expected an object");
    for (auto it = p.begin(); it != p.end(); ++it) {
      s.policy_params[it.key()] = Number(it.value(), "scenario.policy_params." + it.key());
    }
  }
  const auto number = [&](const char* key, double& out) {
    if (doc.contains(key)) out = Number(doc[key], ctx + "." + key);
  };
  number("duration", s.duration);
  number("control_rate", s.control_rate);
  number("policy_rate", s.policy_rate);
  number("camera_rate", s.camera_rate);
  number("camera_jitter", s.camera_jitter);
  number("inference_time", s.inference_time);
  number("execution_latency", s.execution_latency);
  number("step_period", s.step_period);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw SchemaError("scenario.seed: expected a nonnegative integer");
    s.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("chunk_steps")) {
    if (!doc["chunk_steps"].is_number_integer()) throw SchemaError("scenario.chunk_steps: expected an integer");
    s.chunk_steps = doc["chunk_steps"].get<int>();
  }
  if (doc.contains("latencies")) {
    const json& l = doc["latencies"];
    if (!l.is_object()) throw SchemaError("scenario.latencies: expected an object");
    for (auto it = l.begin(); it != l.end(); ++it) {
      s.latencies[it.key()] = Number(it.value(), "scenario.latencies." + it.key());
    }
  }
  if (doc.contains("chunk_frame")) {
    try {
      s.chunk_frame = FrameTagFromString(RequireString(doc, "chunk_frame", ctx));
    } catch (const std::invalid_argument& e) {
      throw SchemaError(std::string("scenario.chunk_frame: ") + e.what());
    }
  }
  if (doc.contains("gaze_mode")) {
    const std::string mode = RequireString(doc, "gaze_mode", ctx);
    if (mode == "servo") {
      s.gaze_mode = GazeMode::kServo;
    } else if (mode == "qp") {
      s.gaze_mode = GazeMode::kQp;
    } else {
      throw SchemaError("scenario.gaze_mode: expected 'servo' or 'qp'");
    }
  }
  if (doc.contains("neck_limits")) {
    const json& n = doc["neck_limits"];
    s.neck_limits.pan_min = RequireNumber(n, "pan_min", "scenario.neck_limits");
    s.neck_limits.pan_max = RequireNumber(n, "pan_max", "scenario.neck_limits");
    s.neck_limits.tilt_min = RequireNumber(n, "tilt_min", "scenario.neck_limits");
    s.neck_limits.tilt_max = RequireNumber(n, "tilt_max", "scenario.neck_limits");
  }
  s.Validate();
  return s;
}

Scenario Scenario::FromFile(const std::filesystem::path& path) {
  return FromJson(json_util::ReadFile(path), path.parent_path());
}

std::unique_ptr<ScriptedPolicy> MakeScriptedPolicy(PolicyKind kind,
                                                   const std::map<std::string, double>& params,
                                                   const PolicyStart& start) {
  switch (kind) {
    case PolicyKind::kStaticTarget:
      return std::make_unique<StaticTarget>(params, start);
    case PolicyKind::kFigureEight:
      return std::make_unique<FigureEight>(params, start);
    case PolicyKind::kBoxCarry:
      return std::make_unique<BoxCarry>(params, start);
    case PolicyKind::kSearchThenApproach:
      return std::make_unique<SearchThenApproach>(params, start);
    case PolicyKind::kBlockedTarget:
      return std::make_unique<BlockedTarget>(params, start);
  }
  throw std::invalid_argument("unknown policy kind");
}

PolicyStart StartFromState(const RobotModel& model, const GeneralizedState& q) {
  const Kinematics kin(model, q);
  PolicyStart s;
  s.left = kin.FramePose("left_gripper");
  s.right = kin.FramePose("right_gripper");
  const Pose head = kin.FramePose("head");
  s.look_at = head.translation + head.rotation.col(2);
  if (const auto b = model.BaseCoordinate()) s.base = q.q.segment<3>(*b);
  return s;
}

ScriptedResponder::ScriptedResponder(const RobotModel& model, const Scenario& scenario)
    : model_(&model),
      scenario_(scenario),
      policy_(MakeScriptedPolicy(scenario.policy, scenario.policy_params,
                                 StartFromState(model, GeneralizedState{model.nominal_posture()}))) {}

ActionChunk ScriptedResponder::Respond(const PolicyRequest& request) const {
  if (request.anchor_times.empty()) throw ProtocolError("request has no anchor times");
  ActionChunk chunk;
  chunk.anchor_time = request.anchor_times.back();
  chunk.frame = scenario_.chunk_frame;
  std::optional<Pose> to_gripper;
  if (chunk.frame == FrameTag::kLeftGripper) {
    if (request.proprio.empty() || request.proprio.back().size() != model_->nv()) {
      throw ProtocolError("gripper-frame chunks need proprioception with " +
                          std::to_string(model_->nv()) + " coordinates");
    }
    const Pose ref =
        ForwardKinematics(*model_, GeneralizedState{request.proprio.back()}, "left_gripper");
    chunk.reference_pose = ref;
    to_gripper = Inverse(ref);
  }
  for (int j = 1; j <= scenario_.chunk_steps; ++j) {
    const double t = chunk.anchor_time + j * scenario_.step_period;
    DecodedAction a = policy_->TargetAt(t);
    if (to_gripper) {
      a.left = *to_gripper * a.left;
      a.right = *to_gripper * a.right;
      a.look_at = to_gripper->Apply(a.look_at);
    }
    chunk.steps.push_back(ActionStep{t, EncodeAction(a)});
  }
  return chunk;
}

EpisodeResult RunEpisode(const Scenario& scenario, const EpisodeOptions& options) {
  const RobotModel model = RobotModel::FromFile(scenario.model_path);
  const IkProfile profile =
      options.profile ? *options.profile : IkProfile::FromFile(scenario.profile_path);
  return RunEpisode(model, profile, scenario, options);
}

EpisodeResult RunEpisode(const RobotModel& model, const IkProfile& profile,
                         const Scenario& scenario, const EpisodeOptions& options) {
  scenario.Validate();
  const double dt = 1.0 / scenario.control_rate;
  const int n_ticks = static_cast<int>(std::llround(scenario.duration * scenario.control_rate));
  const int policy_every =
      static_cast<int>(std::llround(scenario.control_rate / scenario.policy_rate));
  const std::uint64_t seed = options.seed ? *options.seed : scenario.seed;

  EpisodeResult result;
  result.scenario_name = scenario.name;
  result.profile_name = profile.name;

  IkOptions ik_options;
  std::vector<int> neck;
  if (scenario.gaze_mode == GazeMode::kServo) {
    neck = NeckCoordinates(model);
    for (int c : neck) ik_options.extra_frozen_joints.push_back(JointOfCoordinate(model, c).name);
  }
  WholeBodyIk ik(model, profile, ik_options);
  const ScriptedResponder responder(model, scenario);
  const auto pairs = model.CollisionPairs();

  Eigen::VectorXd q = model.nominal_posture();
  const PolicyStart start = StartFromState(model, GeneralizedState{q});
  TargetStreamer streamer(
      StreamTarget{start.left, start.right, start.look_at, Eigen::Vector2d(0.04, 0.04)});
  ScheduledBuffer buffer;

  const auto latency = [&](const std::string& stream) {
    const auto it = scenario.latencies.find(stream);
    return it == scenario.latencies.end() ? 0.0 : it->second;
  };
  AlignmentConfig align;
  align.latencies = scenario.latencies;
  align.rate = scenario.policy_rate;
  align.depth = 2;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-scenario.camera_jitter, scenario.camera_jitter);

  std::map<std::string, std::vector<TimestampedSample>> cameras;
  std::map<std::string, long long> next_capture;
  std::deque<TimestampedSample> in_flight;
  std::vector<TimestampedSample> proprio;
  struct Delivery {
    double time;
    ActionChunk chunk;
  };
  std::deque<Delivery> deliveries;

  const double initial_gripper_distance = (start.left.translation - start.right.translation).norm();
  Eigen::VectorXd dq_prev = Eigen::VectorXd::Zero(model.nv());
  Eigen::VectorXd dq_prev2 = Eigen::VectorXd::Zero(model.nv());

  for (int k = 0; k < n_ticks; ++k) {
    const double t = k * dt;

    // Sensors: captures up to now enter the network, arrivals up to now are
    // received.
    for (const std::string& cam : CameraStreams()) {
      long long& c = next_capture[cam];
      while (c / scenario.camera_rate <= t + kTimeEpsilon) {
        const double capture = c / scenario.camera_rate;
        const double receive = capture + latency(cam) + (scenario.camera_jitter > 0.0 ? jitter(rng) : 0.0);
        char ref[64];
        std::snprintf(ref, sizeof(ref), "%s/%06lld", cam.c_str(), c);
        in_flight.push_back(TimestampedSample{cam, std::max(receive, capture), std::string(ref)});
        ++c;
      }
    }
    in_flight.push_back(
        TimestampedSample{std::string(kProprioStream), t + latency(std::string(kProprioStream)), q});
    std::stable_sort(in_flight.begin(), in_flight.end(),
                     [](const TimestampedSample& a, const TimestampedSample& b) {
                       return a.capture_time < b.capture_time;
                     });
    while (!in_flight.empty() && in_flight.front().capture_time <= t + kTimeEpsilon) {
      TimestampedSample s = std::move(in_flight.front());
      in_flight.pop_front();
      auto& history = s.stream_id == kProprioStream ? proprio : cameras[s.stream_id];
      history.push_back(std::move(s));
      if (history.size() > kHistoryLength) history.erase(history.begin());
    }

    // Policy round trip.
    if (k % policy_every == 0) {
      bool ready = proprio.size() > 0;
      for (const std::string& cam : CameraStreams()) ready = ready && !cameras[cam].empty();
      if (!ready) {
        result.warnings.push_back("t=" + std::to_string(t) + ": policy tick skipped, streams not ready");
      } else {
        const ObservationWindow w = AlignObservations(cameras, proprio, align);
        for (const std::string& msg : w.warnings) result.warnings.push_back(msg);
        result.metrics.bridge_warnings += static_cast<int>(w.warnings.size());
        PolicyRequest request;
        request.anchor_times = w.anchor_times;
        request.proprio = w.proprio;
        for (const auto& [cam, aligned] : w.cameras) {
          const auto& sample = cameras[cam][static_cast<std::size_t>(aligned.back().index)];
          request.frame_refs.push_back(std::get<std::string>(sample.payload));
        }
        ActionChunk chunk = options.policy ? options.policy(request) : responder.Respond(request);
        deliveries.push_back(Delivery{t + scenario.inference_time, std::move(chunk)});
      }
    }
    while (!deliveries.empty() && deliveries.front().time <= t + kTimeEpsilon) {
      const Delivery& d = deliveries.front();
      const ScheduleReport report =
          buffer.Schedule(d.chunk, d.time, scenario.inference_time, scenario.execution_latency);
      if (report.empty_after_filter) {
        result.warnings.push_back("t=" + std::to_string(t) + ": every step of chunk " +
                                  std::to_string(report.chunk_id) + " was stale");
      }
      result.metrics.discarded_steps += report.discarded;
      ++result.metrics.chunks_scheduled;
      result.schedule_reports.push_back(report);
      deliveries.pop_front();
    }

    const Emission emission = streamer.Tick(t, buffer);

    // Gaze.
    Eigen::VectorXd q_work = q;
    std::optional<Rotation> head_target;
    {
      const Kinematics kin(model, GeneralizedState{q});
      const Pose head = kin.FramePose("head");
      try {
        head_target = LookAtRotation(head.translation, head.rotation, emission.target.look_at);
      } catch (const DegenerateInputError& e) {
        result.warnings.push_back("t=" + std::to_string(t) + ": " + e.what());
      }
      if (scenario.gaze_mode == GazeMode::kServo && head_target) {
        const PanTilt pt =
            PanTiltFromRotation(*head_target, kin.FramePose("neck_mount"), scenario.neck_limits);
        const double goal[2] = {pt.pan, pt.tilt};
        Eigen::VectorXd step = Eigen::VectorXd::Zero(model.nv());
        for (int i = 0; i < 2; ++i) {
          const JointSpec& j = JointOfCoordinate(model, neck[i]);
          double g = goal[i];
          if (j.position_limits) g = std::clamp(g, j.position_limits->first, j.position_limits->second);
          const double lim = profile.velocity_safety * j.velocity_limit * dt;
          step[neck[i]] = std::clamp(g - q[neck[i]], -lim, lim);
        }
        // Neck motion may not bring the head closer than allowed.
        const auto before = CollisionDistances(kin, pairs);
        double scale = 1.0;
        for (int tries = 0; tries < 12; ++tries) {
          const auto after = CollisionDistances(model, GeneralizedState{q + scale * step}, pairs);
          bool ok = true;
          for (std::size_t p = 0; p < after.size(); ++p) {
            if (after[p].distance < std::min(profile.d_safe, before[p].distance)) ok = false;
          }
          if (ok) break;
          scale = tries == 11 ? 0.0 : 0.5 * scale;
        }
        q_work = q + scale * step;
      }
    }

    TrackingTargets targets{emission.target.left, emission.target.right, std::nullopt};
    if (scenario.gaze_mode == GazeMode::kQp) targets.head_rotation = head_target;
    IkStep step = ik.Step(GeneralizedState{q_work}, targets, dt);

    TickRecord rec;
    rec.tick = k;
    rec.t = t;
    rec.q = step.q_next.q;
    rec.dq = Displacement(model, q, step.q_next.q);
    rec.emission = emission;
    rec.diagnostics = step.diagnostics;
    rec.left_error = step.diagnostics.left_ee;
    rec.right_error = step.diagnostics.right_ee;
    rec.margin_min = std::numeric_limits<double>::infinity();
    for (const auto& [name, m] : step.diagnostics.constraint_margins) {
      rec.margin_min = std::min(rec.margin_min, m);
      const double tol = name == "equality" ? kEqualityTolerance : kMarginTolerance;
      if (m < -tol) ++result.metrics.constraint_violations;
    }
    if (step.diagnostics.status == QpStatus::kInfeasible) ++result.metrics.infeasible_ticks;
    {
      const Kinematics next(model, step.q_next);
      const Pose head = next.FramePose("head");
      const Vec3 to_target = emission.target.look_at - head.translation;
      rec.gaze_error = to_target.norm() > kLookAtDegeneracy
                           ? std::acos(std::clamp(head.rotation.col(2).dot(to_target.normalized()), -1.0, 1.0))
                           : 0.0;
      rec.inter_gripper_distance = (next.FramePose("left_gripper").translation -
                                    next.FramePose("right_gripper").translation)
                                       .norm();
    }

    EpisodeMetrics& m = result.metrics;
    m.max_com_offset = std::max(m.max_com_offset, step.diagnostics.com_offset.cwiseAbs().maxCoeff());
    m.max_inter_gripper_deviation =
        std::max(m.max_inter_gripper_deviation,
                 std::abs(rec.inter_gripper_distance - initial_gripper_distance));
    const double cmargin = step.diagnostics.min_collision_distance - profile.d_safe;
    m.min_collision_margin = k == 0 ? cmargin : std::min(m.min_collision_margin, cmargin);
    if (const auto b = model.BaseCoordinate()) {
      m.base_path_length += (step.q_next.q.segment<2>(*b) - q.segment<2>(*b)).norm();
    }
    if (k >= 2) m.jerk_proxy += (rec.dq - 2.0 * dq_prev + dq_prev2).squaredNorm();
    dq_prev2 = dq_prev;
    dq_prev = rec.dq;

    q = step.q_next.q;
    result.ticks.push_back(std::move(rec));
  }

  // Averages.
  EpisodeMetrics& m = result.metrics;
  m.ticks = n_ticks;
  if (n_ticks > 0) {
    const int final_from = std::max(0, n_ticks - static_cast<int>(std::llround(scenario.control_rate)));
    double pos = 0.0, rot = 0.0, gaze = 0.0, pos_f = 0.0, rot_f = 0.0;
    for (const TickRecord& r : result.ticks) {
      const double p2 = 0.5 * (Sq(r.left_error.position) + Sq(r.right_error.position));
      const double r2 = 0.5 * (Sq(r.left_error.rotation) + Sq(r.right_error.rotation));
      pos += p2;
      rot += r2;
      gaze += r.gaze_error;
      if (r.tick >= final_from) {
        pos_f += p2;
        rot_f += r2;
        m.gaze_error_final = std::max(m.gaze_error_final, r.gaze_error);
      }
    }
    const double n = n_ticks;
    const double nf = n_ticks - final_from;
    m.ee_pos_rmse = std::sqrt(pos / n);
    m.ee_rot_rmse = std::sqrt(rot / n);
    m.gaze_error = gaze / n;
    m.ee_pos_rmse_final = std::sqrt(pos_f / nf);
    m.ee_rot_rmse_final = std::sqrt(rot_f / nf);
    m.jerk_proxy = n_ticks > 2 ? std::sqrt(m.jerk_proxy / (n - 2)) : 0.0;
  }
  return result;
}

void WriteTrajectoryCsv(std::ostream& out, const EpisodeResult& result, int nv) {
  out << "tick,time";
  for (int i = 0; i < nv; ++i) out << ",q_" << i;
  for (const char* side : {"l", "r"}) {
    for (const char* c : {"x", "y", "z", "qw", "qx", "qy", "qz"}) out << ",ee_" << side << "_" << c;
  }
  out << ",lookat_x,lookat_y,lookat_z,margin_min,com_dx,com_dy\n";
  char buf[64];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), ",%.17g", v);
    out << buf;
  };
  for (const TickRecord& r : result.ticks) {
    out << r.tick;
    put(r.t);
    for (int i = 0; i < nv; ++i) put(r.q[i]);
    for (const Pose* p : {&r.emission.target.left, &r.emission.target.right}) {
      for (double v : PoseToArray(*p)) put(v);
    }
    for (int i = 0; i < 3; ++i) put(r.emission.target.look_at[i]);
    put(r.margin_min);
    put(r.diagnostics.com_offset.x());
    put(r.diagnostics.com_offset.y());
    out << '\n';
  }
}

std::string MetricsToJson(const EpisodeResult& result) {
  const EpisodeMetrics& m = result.metrics;
  json j;
  j["scenario"] = result.scenario_name;
  j["profile"] = result.profile_name;
  j["metrics"] = {
      {"ee_pos_rmse", m.ee_pos_rmse},
      {"ee_rot_rmse", m.ee_rot_rmse},
      {"gaze_error", m.gaze_error},
      {"max_com_offset", m.max_com_offset},
      {"constraint_violations", m.constraint_violations},
      {"jerk_proxy", m.jerk_proxy},
      {"base_path_length", m.base_path_length},
      {"ee_pos_rmse_final", m.ee_pos_rmse_final},
      {"ee_rot_rmse_final", m.ee_rot_rmse_final},
      {"gaze_error_final", m.gaze_error_final},
      {"ticks", m.ticks},
      {"infeasible_ticks", m.infeasible_ticks},
      {"min_collision_margin", m.min_collision_margin},
      {"max_inter_gripper_deviation", m.max_inter_gripper_deviation},
      {"discarded_steps", m.discarded_steps},
      {"chunks_scheduled", m.chunks_scheduled},
      {"bridge_warnings", m.bridge_warnings},
  };
  return j.dump(2);
}

CompareReport CompareRuns(std::string_view metrics_a, std::string_view metrics_b, double tolerance) {
  const json a = json_util::Parse(metrics_a, "metrics");
  const json b = json_util::Parse(metrics_b, "metrics");
  const std::string sa = json_util::RequireString(a, "scenario", "metrics");
  const std::string sb = json_util::RequireString(b, "scenario", "metrics");
  if (sa != sb) throw ScenarioMismatchError("runs come from different scenarios: '" + sa + "' vs '" + sb + "'");
  const json& ma = json_util::Require(a, "metrics", "metrics");
  const json& mb = json_util::Require(b, "metrics", "metrics");
  CompareReport report;
  report.scenario = sa;
  for (auto it = ma.begin(); it != ma.end(); ++it) {
    if (!it.value().is_number() || !mb.contains(it.key()) || !mb[it.key()].is_number()) continue;
    MetricDelta d;
    d.name = it.key();
    d.a = it.value().get<double>();
    d.b = mb[it.key()].get<double>();
    d.delta = d.b - d.a;
    d.exceeded = std::abs(d.delta) > tolerance;
    report.any_exceeded = report.any_exceeded || d.exceeded;
    report.deltas.push_back(d);
  }
  return report;
}

}  // namespace wbc
