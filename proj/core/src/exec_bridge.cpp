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
#include "wbc/exec_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wbc/errors.hpp"

namespace wbc {

DecodedAction DecodeAction(const ActionVector& a) {
  DecodedAction d;
  d.left = PoseFrom9D(a.segment<9>(0));
  d.right = PoseFrom9D(a.segment<9>(9));
  d.look_at = a.segment<3>(18);
  d.widths = a.segment<2>(21);
  return d;
}

ActionVector EncodeAction(const DecodedAction& d) {
  ActionVector a;
  a.segment<9>(0) = PoseTo9D(d.left);
  a.segment<9>(9) = PoseTo9D(d.right);
  a.segment<3>(18) = d.look_at;
  a.segment<2>(21) = d.widths;
  return a;
}

void ActionChunk::Validate() const {
  if (!std::isfinite(anchor_time)) throw ValidationError("chunk: anchor_time is not finite");
  if (steps.size() > static_cast<std::size_t>(kMaxChunkSteps)) {
    throw ValidationError("chunk: " + std::to_string(steps.size()) + " steps exceeds " +
                          std::to_string(kMaxChunkSteps));
  }
  if (frame != FrameTag::kWorld && frame != FrameTag::kLeftGripper) {
    throw ValidationError("chunk: frame must be world or left_gripper");
  }
  if (frame == FrameTag::kLeftGripper && !reference_pose) {
    throw ValidationError("chunk: left_gripper chunks need a reference pose");
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!std::isfinite(steps[i].t) || !steps[i].action.allFinite()) {
      throw ValidationError("chunk: step " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && !(steps[i].t > steps[i - 1].t)) {
      throw ValidationError("chunk: step timestamps must be strictly increasing");
    }
    try {
      DecodeAction(steps[i].action);
    } catch (const DegenerateInputError& e) {
      throw ValidationError("chunk: step " + std::to_string(i) + ": " + e.what());
    }
  }
}

double EarliestFeasibleTime(double anchor_time, double now, double inference_time,
                            double execution_latency) {
  return std::max(now, anchor_time + inference_time) + execution_latency;
}

ScheduleReport ScheduledBuffer::Schedule(const ActionChunk& chunk, double now,
                                         double inference_time, double execution_latency) {
  chunk.Validate();
  ScheduleReport report;
  report.chunk_id = next_chunk_id_++;
  report.earliest_feasible =
      EarliestFeasibleTime(chunk.anchor_time, now, inference_time, execution_latency);

  std::vector<TimedPoseCommand> fresh;
  for (std::size_t i = 0; i < chunk.steps.size(); ++i) {
    const ActionStep& step = chunk.steps[i];
    if (step.t < report.earliest_feasible - kTimeEpsilon) {
      ++report.discarded;
      continue;
    }
    DecodedAction d = DecodeAction(step.action);
    if (chunk.frame == FrameTag::kLeftGripper) {
      const Pose& ref = *chunk.reference_pose;
      d.left = ref * d.left;
      d.right = ref * d.right;
      d.look_at = ref.Apply(d.look_at);
    }
    fresh.push_back(TimedPoseCommand{step.t, d.left, d.right, d.look_at, d.widths,
                                     report.chunk_id, static_cast<int>(i),
                                     report.earliest_feasible});
  }
  if (fresh.empty()) {
    report.empty_after_filter = true;
    return report;
  }
  const double first = fresh.front().t;
  while (!pending_.empty() && pending_.back().t >= first - kTimeEpsilon) {
    pending_.pop_back();
    ++report.superseded;
  }
  for (TimedPoseCommand& c : fresh) pending_.push_back(std::move(c));
  report.kept = static_cast<int>(fresh.size());
  return report;
}

StreamTarget InterpolateTarget(const StreamTarget& from, const StreamTarget& to, double alpha) {
  StreamTarget out;
  out.left = InterpolatePose(from.left, to.left, alpha);
  out.right = InterpolatePose(from.right, to.right, alpha);
  if (alpha <= 0.0) {
    out.look_at = from.look_at;
    out.widths = from.widths;
  } else if (alpha >= 1.0) {
    out.look_at = to.look_at;
    out.widths = to.widths;
  } else {
    out.look_at = from.look_at + alpha * (to.look_at - from.look_at);
    out.widths = from.widths + alpha * (to.widths - from.widths);
  }
  return out;
}

TargetStreamer::TargetStreamer(StreamTarget initial, double duration)
    : last_(std::move(initial)), duration_(duration) {
  if (!(duration > 0.0)) throw std::invalid_argument("command duration must be > 0");
}

Emission TargetStreamer::Tick(double t, ScheduledBuffer& buffer) {
  // Interpolation restarts from the last emission, at the time it was made.
  const double t_prev = last_time_ ? *last_time_ : t;
  // Activate every command whose window opened by the last emission; the
  // latest wins.
  while (!buffer.empty() && buffer.front().t - duration_ <= t_prev + kTimeEpsilon) {
    active_ = buffer.front();
    buffer.pop_front();
    from_ = last_;
    t0_ = t_prev;
  }
  last_time_ = t;
  Emission e;
  e.t = t;
  if (!active_) {
    e.target = last_;
    e.from = last_;
    return e;
  }
  const double alpha = std::min(1.0, (t - t0_) / duration_);
  const StreamTarget goal{active_->left, active_->right, active_->look_at, active_->widths};
  e.target = InterpolateTarget(from_, goal, alpha);
  e.alpha = alpha;
  e.holding = false;
  e.source = active_;
  e.from = from_;
  last_ = e.target;
  if (alpha >= 1.0) active_.reset();
  return e;
}

namespace {

void CheckIncreasing(const std::vector<TimestampedSample>& samples, const std::string& stream) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i].capture_time)) {
      throw ValidationError("stream '" + stream + "': capture time is not finite");
    }
    if (i > 0 && !(samples[i].capture_time > samples[i - 1].capture_time)) {
      throw ValidationError("stream '" + stream + "': capture times must be strictly increasing");
    }
  }
}

double Latency(const AlignmentConfig& config, const std::string& stream) {
  const auto it = config.latencies.find(stream);
  return it == config.latencies.end() ? 0.0 : it->second;
}

const Eigen::VectorXd& ProprioValue(const TimestampedSample& s) {
  const auto* v = std::get_if<Eigen::VectorXd>(&s.payload);
  if (v == nullptr) throw ValidationError("proprioception sample without a vector payload");
  return *v;
}

}  // namespace

ObservationWindow AlignObservations(
    const std::map<std::string, std::vector<TimestampedSample>>& cameras,
    const std::vector<TimestampedSample>& proprio, const AlignmentConfig& config) {
  if (!(config.rate > 0.0) || config.depth < 1) {
    throw std::invalid_argument("alignment needs rate > 0 and depth >= 1");
  }
  if (cameras.empty()) throw EmptyStreamError("no camera streams");
  if (proprio.empty()) throw EmptyStreamError("proprioception stream is empty");

  double anchor = -std::numeric_limits<double>::infinity();
  for (const auto& [id, samples] : cameras) {
    if (samples.empty()) throw EmptyStreamError("camera stream '" + id + "' is empty");
    CheckIncreasing(samples, id);
    anchor = std::max(anchor, samples.back().capture_time - Latency(config, id));
  }
  const std::string proprio_id = proprio.front().stream_id;
  CheckIncreasing(proprio, proprio_id);

  ObservationWindow w;
  const double period = 1.0 / config.rate;
  for (int k = config.depth - 1; k >= 0; --k) w.anchor_times.push_back(anchor - k * period);

  const double stale_after = 3.0 * period;
  for (const auto& [id, samples] : cameras) {
    const double latency = Latency(config, id);
    auto& aligned = w.cameras[id];
    for (double a : w.anchor_times) {
      // Latest sample with corrected time at or before the anchor.
      int best = -1;
      for (int i = static_cast<int>(samples.size()) - 1; i >= 0; --i) {
        if (samples[static_cast<std::size_t>(i)].capture_time - latency <= a + kTimeEpsilon) {
          best = i;
          break;
        }
      }
      AlignedSample s;
      if (best < 0) {
        best = 0;
        s.stale = true;
        std::ostringstream msg;
        msg << "stream '" << id << "' has no sample at or before anchor " << a;
        w.warnings.push_back(msg.str());
      }
      s.index = best;
      s.corrected_time = samples[static_cast<std::size_t>(best)].capture_time - latency;
      if (a - s.corrected_time > stale_after) {
        s.stale = true;
        std::ostringstream msg;
        msg << "stream '" << id << "' is stale: nearest sample is " << (a - s.corrected_time)
            << " s before anchor " << a;
        w.warnings.push_back(msg.str());
      }
      aligned.push_back(s);
    }
  }

  const double platency = Latency(config, proprio_id);
  for (double a : w.anchor_times) {
    const auto corrected = [&](std::size_t i) { return proprio[i].capture_time - platency; };
    if (a <= corrected(0)) {
      w.proprio.push_back(ProprioValue(proprio.front()));
      w.proprio_extrapolated.push_back(a < corrected(0));
      continue;
    }
    if (a >= corrected(proprio.size() - 1)) {
      w.proprio.push_back(ProprioValue(proprio.back()));
      w.proprio_extrapolated.push_back(a > corrected(proprio.size() - 1));
      continue;
    }
    std::size_t hi = 1;
    while (corrected(hi) < a) ++hi;
    const double t0 = corrected(hi - 1);
    const double t1 = corrected(hi);
    const double u = (a - t0) / (t1 - t0);
    const Eigen::VectorXd& v0 = ProprioValue(proprio[hi - 1]);
    const Eigen::VectorXd& v1 = ProprioValue(proprio[hi]);
    if (v0.size() != v1.size()) throw DimensionError("proprioception sample sizes differ");
    w.proprio.push_back(v0 + u * (v1 - v0));
    w.proprio_extrapolated.push_back(false);
  }
  for (std::size_t i = 0; i < w.proprio_extrapolated.size(); ++i) {
    if (w.proprio_extrapolated[i]) {
      std::ostringstream msg;
      msg << "proprioception held at anchor " << w.anchor_times[i] << " (no bracketing samples)";
      w.warnings.push_back(msg.str());
    }
  }
  return w;
}

}  // namespace wbc
