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
#ifndef WBC_EXEC_BRIDGE_HPP_
#define WBC_EXEC_BRIDGE_HPP_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "wbc/frames.hpp"
#include "wbc/se3.hpp"

namespace wbc {

inline constexpr int kActionDim = 23;
inline constexpr int kMaxChunkSteps = 32;
inline constexpr double kCommandDuration = 0.1;  // s
// Slack on timestamp comparisons, well below any tick period.
inline constexpr double kTimeEpsilon = 1e-9;

using ActionVector = Eigen::Matrix<double, kActionDim, 1>;

// Layout: left position(3), left 6D rotation(6), right position(3), right 6D
// rotation(6), look-at(3), gripper widths(2).
struct DecodedAction {
  Pose left;
  Pose right;
  Vec3 look_at = Vec3::Zero();
  Eigen::Vector2d widths = Eigen::Vector2d::Zero();
};

// Throws DegenerateInputError when a 6D block does not decode.
DecodedAction DecodeAction(const ActionVector& a);
ActionVector EncodeAction(const DecodedAction& d);

struct ActionStep {
  double t = 0.0;
  ActionVector action = ActionVector::Zero();
};

struct ActionChunk {
  double anchor_time = 0.0;
  std::vector<ActionStep> steps;
  // kWorld or kLeftGripper.
  FrameTag frame = FrameTag::kWorld;
  // Left gripper in world at the anchor. Required for gripper-frame chunks.
  std::optional<Pose> reference_pose;

  // Throws ValidationError.
  void Validate() const;
};

// One scheduled command, in the world frame.
struct TimedPoseCommand {
  double t = 0.0;
  Pose left;
  Pose right;
  Vec3 look_at = Vec3::Zero();
  Eigen::Vector2d widths = Eigen::Vector2d::Zero();

  // Provenance for audits.
  std::uint64_t chunk_id = 0;
  int step_index = 0;
  double earliest_feasible = 0.0;
};

struct ScheduleReport {
  std::uint64_t chunk_id = 0;
  double earliest_feasible = 0.0;
  int kept = 0;
  int discarded = 0;
  int superseded = 0;
  // Every step was stale; the buffer is unchanged.
  bool empty_after_filter = false;
};

// earliest = max(now, anchor + inference_time) + execution_latency.
double EarliestFeasibleTime(double anchor_time, double now, double inference_time,
                            double execution_latency);

class ScheduledBuffer {
 public:
  // Drops steps earlier than the earliest feasible execution time, then
  // replaces buffered commands at or after the first kept step.
  ScheduleReport Schedule(const ActionChunk& chunk, double now, double inference_time,
                          double execution_latency);

  const std::deque<TimedPoseCommand>& pending() const { return pending_; }
  bool empty() const { return pending_.empty(); }
  std::size_t size() const { return pending_.size(); }

  const TimedPoseCommand& front() const { return pending_.front(); }
  void pop_front() { pending_.pop_front(); }

 private:
  std::deque<TimedPoseCommand> pending_;
  std::uint64_t next_chunk_id_ = 1;
};

struct StreamTarget {
  Pose left;
  Pose right;
  Vec3 look_at = Vec3::Zero();
  Eigen::Vector2d widths = Eigen::Vector2d::Zero();
};

StreamTarget InterpolateTarget(const StreamTarget& from, const StreamTarget& to, double alpha);

struct Emission {
  double t = 0.0;
  StreamTarget target;
  double alpha = 1.0;
  // No command in progress; the last target is repeated.
  bool holding = true;
  // Command being interpolated toward, and where the interpolation started.
  std::optional<TimedPoseCommand> source;
  StreamTarget from;
};

// Produces one interpolated target per control tick. A command with
// timestamp t_k becomes active once the last emission time t_e reaches
// t_k - duration. It is interpolated from the target emitted at t_e with
// alpha = (t - t_e) / duration, so consecutive commands chain without a
// repeated sample.
class TargetStreamer {
 public:
  explicit TargetStreamer(StreamTarget initial, double duration = kCommandDuration);

  Emission Tick(double t, ScheduledBuffer& buffer);

  const StreamTarget& last() const { return last_; }
  double duration() const { return duration_; }

 private:
  StreamTarget last_;
  double duration_;
  std::optional<TimedPoseCommand> active_;
  StreamTarget from_;
  double t0_ = 0.0;
  std::optional<double> last_time_;
};

using SamplePayload = std::variant<std::monostate, std::string, Eigen::VectorXd>;

struct TimestampedSample {
  std::string stream_id;
  // Receive time on the monotonic clock, before latency correction.
  double capture_time = 0.0;
  SamplePayload payload;
};

class EmptyStreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AlignedSample {
  // Index into the stream's sample list.
  int index = -1;
  double corrected_time = 0.0;
  bool stale = false;
};

struct ObservationWindow {
  std::vector<double> anchor_times;
  // Per camera stream, one entry per anchor.
  std::map<std::string, std::vector<AlignedSample>> cameras;
  std::vector<Eigen::VectorXd> proprio;
  std::vector<bool> proprio_extrapolated;
  std::vector<std::string> warnings;
};

struct AlignmentConfig {
  // Per-stream latency in seconds; missing streams have zero latency.
  std::map<std::string, double> latencies;
  double rate = 10.0;  // Hz
  int depth = 2;
};

// Latency-corrected alignment of camera streams and proprioception to a
// window of anchors ending at the latest corrected camera time. Samples
// within each stream must be strictly increasing in time. Throws
// EmptyStreamError or ValidationError.
ObservationWindow AlignObservations(
    const std::map<std::string, std::vector<TimestampedSample>>& cameras,
    const std::vector<TimestampedSample>& proprio, const AlignmentConfig& config);

}  // namespace wbc

#endif  // WBC_EXEC_BRIDGE_HPP_
