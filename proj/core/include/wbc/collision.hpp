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
#ifndef WBC_COLLISION_HPP_
#define WBC_COLLISION_HPP_

#include <utility>
#include <vector>

#include "wbc/robot_model.hpp"
#include "wbc/se3.hpp"

namespace wbc {

// A sphere (p0 == p1) or capsule, already placed in the world frame.
struct WorldPrimitive {
  Vec3 p0;
  Vec3 p1;
  double radius = 0.0;
};

struct DistanceResult {
  // Signed surface-to-surface distance; negative means penetration.
  double distance = 0.0;
  // Closest points on the two surfaces (on the cores when the cores touch).
  Vec3 witness_a = Vec3::Zero();
  Vec3 witness_b = Vec3::Zero();
  // Unit vector pointing from the second body towards the first.
  Vec3 normal = Vec3::UnitZ();
};

// Closest points between segments [p0, p1] and [q0, q1]. Degenerate
// segments (points) are handled.
std::pair<Vec3, Vec3> ClosestPointsSegmentSegment(const Vec3& p0, const Vec3& p1,
                                                  const Vec3& q0, const Vec3& q1);

// Exact distance between two swept spheres. When the cores intersect the
// normal is undefined and falls back to +z.
DistanceResult PrimitiveDistance(const WorldPrimitive& a, const WorldPrimitive& b);

WorldPrimitive PlacePrimitive(const CollisionPrimitive& body, const Pose& link_pose);

// Distances for the given (index, index) pairs into model.collision_bodies().
std::vector<DistanceResult> CollisionDistances(const RobotModel& model,
                                               const GeneralizedState& state,
                                               const std::vector<std::pair<int, int>>& pairs);

std::vector<DistanceResult> CollisionDistances(const Kinematics& kin,
                                               const std::vector<std::pair<int, int>>& pairs);

}  // namespace wbc

#endif  // WBC_COLLISION_HPP_
