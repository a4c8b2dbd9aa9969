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
#ifndef WBC_GAZE_HPP_
#define WBC_GAZE_HPP_

#include <string>

#include "wbc/frames.hpp"
#include "wbc/se3.hpp"

namespace wbc {

// Look-at target coincides with the head position.
class DegenerateTargetError : public DegenerateInputError {
 public:
  using DegenerateInputError::DegenerateInputError;
};

// The world-up fallback is itself parallel to the viewing direction.
class DegenerateUpError : public DegenerateInputError {
 public:
  using DegenerateInputError::DegenerateInputError;
};

inline constexpr double kLookAtDegeneracy = 1e-6;

struct LookAtPoint {
  Vec3 point = Vec3::Zero();
  // kWorld or kLeftGripper.
  FrameTag frame = FrameTag::kWorld;
};

// World coordinates of a look-at point given the current left-gripper pose.
// Throws std::invalid_argument for other frames.
Vec3 LookAtInWorld(const LookAtPoint& look_at, const Pose& left_gripper);

// Head orientation whose third column points from `head_position` to
// `target` while keeping the current x axis as close as possible. Falls back
// to `world_up` for the x axis when the current one is parallel to the viewing
// direction.
Rotation LookAtRotation(const Vec3& head_position, const Rotation& current_rotation,
                        const Vec3& target, const Vec3& world_up = Vec3::UnitZ());

struct PanTiltLimits {
  double pan_min = -2.0;
  double pan_max = 2.0;
  double tilt_min = -1.2;
  double tilt_max = 0.5;
};

struct PanTilt {
  double pan = 0.0;   // rad, about mount z
  double tilt = 0.0;  // rad, positive looks up
  bool clamped = false;
};

// Neck angles that point the mount x axis along the rotation's forward
// (third) column.
PanTilt PanTiltFromRotation(const Rotation& r, const Pose& neck_mount,
                            const PanTiltLimits& limits = {});

// Unit forward direction in the mount frame for the given angles.
Vec3 ForwardFromPanTilt(double pan, double tilt);

}  // namespace wbc

#endif  // WBC_GAZE_HPP_
