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
#ifndef WBC_IO_HPP_
#define WBC_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "wbc/gaze.hpp"
#include "wbc/ik_profile.hpp"
#include "wbc/robot_model.hpp"
#include "wbc/se3.hpp"
#include "wbc/wbik.hpp"

namespace wbc {

// Small JSON documents used by the command-line tools. Poses are 7 numbers,
// translation then quaternion (w, x, y, z).
//
//   state:     {"q": [n_v numbers]}
//   targets:   {"left_ee": pose, "right_ee": pose, "head_rotation": [9, row-major]?}
//   head pose: {"pose": pose}
//
// All readers throw SchemaError, ValidationError or DimensionError.
GeneralizedState StateFromJson(std::string_view document, const RobotModel& model);
TrackingTargets TargetsFromJson(std::string_view document);
Pose PoseDocumentFromJson(std::string_view document);

std::string StateToJson(const GeneralizedState& state);
std::string TargetsToJson(const TrackingTargets& targets);
std::string PoseDocumentToJson(const Pose& pose);

// Reads a whole file; throws SchemaError when it cannot be opened.
std::string ReadTextFile(const std::filesystem::path& path);

// dq, status and diagnostics of one IK step, plus the profile it used.
std::string IkStepToJson(const IkStep& step, const IkProfile& profile);

std::string GazeToJson(const Rotation& r, const PanTilt& pan_tilt);

}  // namespace wbc

#endif  // WBC_IO_HPP_
