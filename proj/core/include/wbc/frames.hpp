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
#ifndef WBC_FRAMES_HPP_
#define WBC_FRAMES_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "wbc/se3.hpp"

namespace wbc {

enum class FrameTag { kWorld, kCamera, kLeftGripper, kRightGripper };

std::string_view ToString(FrameTag tag);
// Throws std::invalid_argument for an unknown name.
FrameTag FrameTagFromString(std::string_view name);

struct TaggedPose {
  Pose pose;
  FrameTag frame = FrameTag::kWorld;
};

// Per-pixel grid of 3D points, row-major.
struct Pointmap {
  int width = 0;
  int height = 0;
  std::vector<Vec3> points;
  std::vector<std::uint8_t> valid;  // 0 or 1 per pixel
  FrameTag frame = FrameTag::kCamera;

  static Pointmap Filled(int width, int height, const Vec3& point, FrameTag frame = FrameTag::kCamera);

  std::size_t Index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
  const Vec3& At(int row, int col) const { return points[Index(row, col)]; }
  bool IsValid(int row, int col) const { return valid[Index(row, col)] != 0; }
  std::size_t CountValid() const;

  // Throws DimensionError or ValidationError.
  void Check() const;
};

class EmptyPointmapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Re-expresses an item given in `item_frame` (a world pose) in the gripper
// frame.
Vec3 ToGripperFrame(const Vec3& point, const Pose& item_frame_in_world,
                    const Pose& gripper_in_world);
Pose ToGripperFrame(const Pose& pose, const Pose& item_frame_in_world,
                    const Pose& gripper_in_world);
Pointmap ToGripperFrame(const Pointmap& pm, const Pose& item_frame_in_world,
                        const Pose& gripper_in_world,
                        FrameTag gripper = FrameTag::kLeftGripper);

// Gripper frame back to world.
Vec3 FromGripperFrame(const Vec3& point, const Pose& gripper_in_world);
Pose FromGripperFrame(const Pose& pose, const Pose& gripper_in_world);
Pointmap FromGripperFrame(const Pointmap& pm, const Pose& gripper_in_world);

// Clears validity of every point lying behind either gripper (z < 0 in that
// gripper's frame). Points stay in the camera frame.
Pointmap MaskArmPoints(const Pointmap& pm, const Pose& camera_in_world,
                       const Pose& left_gripper_in_world, const Pose& right_gripper_in_world);

// Row/column of the sample taken for output cell `cell`.
inline int PatchCenterIndex(int cell, int patch) { return cell * patch + patch / 2; }

// Nearest-neighbor downsampling: one sample per patch×patch block. Throws
// DimensionError when the patch does not divide both dimensions.
Pointmap DownsamplePointmap(const Pointmap& pm, int patch);

// Pixel nearest the image center (height/2, width/2) holding a valid point.
// Ties break on (row, col). Throws EmptyPointmapError.
std::pair<int, int> NearestValidToCenter(const Pointmap& pm);

// World position of the valid sample nearest the image center.
Vec3 ExtractLookAtPoint(const Pointmap& pm, const Pose& camera_in_world);

// Binary container: "PMAP", u32 width, u32 height, width·height·3
// little-endian float32, then validity bits (LSB first, row-major).
void WritePointmap(std::ostream& out, const Pointmap& pm);
void WritePointmap(const std::filesystem::path& path, const Pointmap& pm);
// The file carries no frame; the result is tagged `frame`. Throws SchemaError.
Pointmap ReadPointmap(std::istream& in, FrameTag frame = FrameTag::kCamera);
Pointmap ReadPointmap(const std::filesystem::path& path, FrameTag frame = FrameTag::kCamera);

}  // namespace wbc

#endif  // WBC_FRAMES_HPP_
