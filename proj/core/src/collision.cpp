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
#include "wbc/collision.hpp"

#include <algorithm>
#include <limits>

namespace wbc {

// Closest points of two segments, following the clamped-parameter scheme in
// Ericson, "Real-Time Collision Detection", 5.1.9.
std::pair<Vec3, Vec3> ClosestPointsSegmentSegment(const Vec3& p0, const Vec3& p1,
                                                  const Vec3& q0, const Vec3& q1) {
  constexpr double kEps = 1e-14;
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0;
  double t = 0.0;
  if (a <= kEps && e <= kEps) return {p0, q0};
  if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > kEps * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return {p0 + s * d1, q0 + t * d2};
}

DistanceResult PrimitiveDistance(const WorldPrimitive& a, const WorldPrimitive& b) {
  const auto [ca, cb] = ClosestPointsSegmentSegment(a.p0, a.p1, b.p0, b.p1);
  const Vec3 diff = ca - cb;
  const double core = diff.norm();
  DistanceResult out;
  out.distance = core - a.radius - b.radius;
  out.normal = core > 1e-12 ? Vec3(diff / core) : Vec3::UnitZ();
  out.witness_a = ca - a.radius * out.normal;
  out.witness_b = cb + b.radius * out.normal;
  return out;
}

WorldPrimitive PlacePrimitive(const CollisionPrimitive& body, const Pose& link_pose) {
  return WorldPrimitive{link_pose.Apply(body.p0), link_pose.Apply(body.p1), body.radius};
}

std::vector<DistanceResult> CollisionDistances(const Kinematics& kin,
                                               const std::vector<std::pair<int, int>>& pairs) {
  const auto& bodies = kin.model().collision_bodies();
  std::vector<DistanceResult> out;
  out.reserve(pairs.size());
  for (const auto& [ia, ib] : pairs) {
    const auto& a = bodies.at(ia);
    const auto& b = bodies.at(ib);
    out.push_back(PrimitiveDistance(PlacePrimitive(a, kin.LinkPose(a.link_index)),
                                    PlacePrimitive(b, kin.LinkPose(b.link_index))));
  }
  return out;
}

std::vector<DistanceResult> CollisionDistances(const RobotModel& model,
                                               const GeneralizedState& state,
                                               const std::vector<std::pair<int, int>>& pairs) {
  return CollisionDistances(Kinematics(model, state), pairs);
}

}  // namespace wbc
