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
#include "wbc/gaze.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wbc {

Vec3 LookAtInWorld(const LookAtPoint& look_at, const Pose& left_gripper) {
  switch (look_at.frame) {
    case FrameTag::kWorld:
      return look_at.point;
    case FrameTag::kLeftGripper:
      return left_gripper.Apply(look_at.point);
    default:
      throw std::invalid_argument("look-at point must be in the world or left-gripper frame");
  }
}

Rotation LookAtRotation(const Vec3& head_position, const Rotation& current_rotation,
                        const Vec3& target, const Vec3& world_up) {
  const Vec3 diff = target - head_position;
  const double dist = diff.norm();
  if (!(dist > kLookAtDegeneracy)) {
    throw DegenerateTargetError("look-at target is at the head position");
  }
  const Vec3 d = diff / dist;
  Vec3 x = current_rotation.col(0);
  Vec3 xp = x - x.dot(d) * d;
  if (xp.norm() <= kLookAtDegeneracy) {
    x = world_up;
    xp = x - x.dot(d) * d;
    if (xp.norm() <= kLookAtDegeneracy) {
      throw DegenerateUpError("world-up vector is parallel to the viewing direction");
    }
  }
  const Vec3 xh = xp.normalized();
  const Vec3 yh = d.cross(xh);
  Mat3 m;
  m.col(0) = xh;
  m.col(1) = yh;
  m.col(2) = d;
  return Rotation::FromMatrixUnchecked(m);
}

PanTilt PanTiltFromRotation(const Rotation& r, const Pose& neck_mount, const PanTiltLimits& limits) {
  const Vec3 f = (neck_mount.rotation.inverse() * r.col(2)).normalized();
  PanTilt out;
  out.pan = std::atan2(f.y(), f.x());
  out.tilt = std::asin(std::clamp(f.z(), -1.0, 1.0));
  const double pan = std::clamp(out.pan, limits.pan_min, limits.pan_max);
  const double tilt = std::clamp(out.tilt, limits.tilt_min, limits.tilt_max);
  out.clamped = pan != out.pan || tilt != out.tilt;
  out.pan = pan;
  out.tilt = tilt;
  return out;
}

Vec3 ForwardFromPanTilt(double pan, double tilt) {
  return Vec3(std::cos(tilt) * std::cos(pan), std::cos(tilt) * std::sin(pan), std::sin(tilt));
}

}  // namespace wbc
