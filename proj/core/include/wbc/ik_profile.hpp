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
#ifndef WBC_IK_PROFILE_HPP_
#define WBC_IK_PROFILE_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace wbc {

enum class UprightMode {
  // Velocities of the upright joints sum to zero.
  kSumZero,
  // Each upright joint is held at zero velocity.
  kIndividuallyFixed,
};

// Every weight, bound and switch of one whole-body IK configuration.
struct IkProfile {
  std::string name;

  // End-effector tracking.
  double w_p = 10000.0;
  double w_o = 10000.0;
  // Nominal-posture regularization.
  double w_nom_torso = 50.0;
  double w_nom_arm = 50.0;
  // Current-posture regularization.
  double w_curr = 50.0;
  double w_base_pos = 50.0;
  double w_base_ori = 50.0;
  // Torso-over-base support.
  double w_com = 100000.0;
  double b_x = 0.08;  // m
  double b_y = 0.08;  // m
  // Torso-minus-base xy offset to hold. Defaults to the offset at the model's
  // nominal posture.
  std::optional<Eigen::Vector2d> com_offset;

  double lambda = 1e-6;
  double velocity_safety = 0.9;
  double base_linear_velocity_limit = 1.0;   // m/s
  double base_angular_velocity_limit = 1.0;  // rad/s

  double d_safe = 0.01;  // m
  double d_inf = 0.02;   // m
  // Velocity-damper gain, per tick.
  double collision_gain = 0.5;

  UprightMode upright_mode = UprightMode::kSumZero;
  std::vector<std::string> upright_joints = {"torso_1", "torso_2", "torso_3"};
  std::vector<std::string> frozen_joints = {"torso_0", "torso_4", "torso_5"};

  // Weight of the optional head-orientation tracking cost.
  double w_head = 100.0;

  // Throws ValidationError when an invariant does not hold.
  void Validate() const;

  static IkProfile FromJson(std::string_view document);
  static IkProfile FromFile(const std::filesystem::path& path);
  std::string ToJson() const;

  friend bool operator==(const IkProfile&, const IkProfile&) = default;
};

std::string_view ToString(UprightMode mode);

}  // namespace wbc

#endif  // WBC_IK_PROFILE_HPP_
