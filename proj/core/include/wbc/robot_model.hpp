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
#ifndef WBC_ROBOT_MODEL_HPP_
#define WBC_ROBOT_MODEL_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wbc/se3.hpp"

namespace wbc {

using Matrix6X = Eigen::Matrix<double, 6, Eigen::Dynamic>;

enum class JointType { kRevolute, kPrismatic, kPlanarBase };

struct JointSpec {
  std::string name;
  std::string parent_link;
  std::string child_link;
  JointType type = JointType::kRevolute;
  // Body-frame axis. Ignored by planar-base joints, which move in the xy plane
  // of their joint frame and yaw about its z axis.
  Vec3 axis = Vec3::UnitZ();
  // Parent link -> joint frame at q = 0.
  Pose origin;
  // Absent for planar-base joints.
  std::optional<std::pair<double, double>> position_limits;
  double velocity_limit = 1.0;

  // Filled in by the model loader.
  int q_index = -1;
  int dof = 1;
  int parent_link_index = -1;
  int child_link_index = -1;
};

enum class ShapeType { kSphere, kCapsule };

struct CollisionPrimitive {
  std::string name;
  std::string link;
  ShapeType shape = ShapeType::kSphere;
  double radius = 0.0;
  // Body-frame core: a point for spheres, segment endpoints for capsules.
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  std::string group;

  int link_index = -1;
};

struct NamedFrame {
  std::string link;
  Pose offset;
  int link_index = -1;
};

struct GeneralizedState {
  Eigen::VectorXd q;
};

// Per-tick displacement over all velocity DoFs (rad or m per tick).
struct GeneralizedVelocity {
  Eigen::VectorXd dq;
};

// Immutable kinematic tree. The generalized-coordinate layout follows the
// order of joints in the source document; a planar-base joint contributes
// (x, y, yaw).
class RobotModel {
 public:
  // Parses and validates a model document. Throws SchemaError or
  // ValidationError.
  static RobotModel FromJson(std::string_view document);
  static RobotModel FromFile(const std::filesystem::path& path);

  const std::string& name() const { return name_; }
  int nv() const { return nv_; }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const std::vector<std::string>& links() const { return links_; }
  const std::vector<CollisionPrimitive>& collision_bodies() const {
    return collision_bodies_;
  }
  const std::vector<std::pair<std::string, std::string>>& collision_group_pairs() const {
    return collision_group_pairs_;
  }
  const std::map<std::string, std::vector<int>>& groups() const { return groups_; }
  const std::map<std::string, NamedFrame>& named_frames() const { return named_frames_; }
  const Eigen::VectorXd& nominal_posture() const { return nominal_posture_; }

  std::optional<int> JointIndex(std::string_view name) const;
  std::optional<int> LinkIndex(std::string_view name) const;
  // Joint (index into joints()) whose child is the given link; -1 for the root.
  int ParentJointOfLink(int link_index) const { return link_parent_joint_[link_index]; }
  // Joint indices in parent-before-child order.
  const std::vector<int>& TopologicalOrder() const { return topo_order_; }
  // Generalized-coordinate indices covered by a named group. Empty if the
  // group is unknown.
  std::vector<int> GroupCoordinates(std::string_view group) const;
  // Index of the planar-base joint's first coordinate, if the model has one.
  std::optional<int> BaseCoordinate() const;

  // Resolves a named frame or a link name to (link index, offset on link).
  // Throws UnknownFrameError.
  std::pair<int, Pose> ResolveFrame(std::string_view frame) const;

  // Index pairs into collision_bodies() for every configured group pair.
  std::vector<std::pair<int, int>> CollisionPairs() const;

 private:
  void Validate();

  std::string name_;
  int nv_ = 0;
  std::vector<JointSpec> joints_;
  std::vector<std::string> links_;
  std::vector<int> link_parent_joint_;
  std::vector<int> topo_order_;
  std::vector<CollisionPrimitive> collision_bodies_;
  std::vector<std::pair<std::string, std::string>> collision_group_pairs_;
  std::map<std::string, std::vector<int>> groups_;
  std::map<std::string, NamedFrame> named_frames_;
  Eigen::VectorXd nominal_posture_;
};

// World poses of every link and joint frame for one configuration.
// Construct once per tick and query many frames.
class Kinematics {
 public:
  Kinematics(const RobotModel& model, const GeneralizedState& state);

  const RobotModel& model() const { return *model_; }
  const Pose& LinkPose(int link_index) const { return link_poses_[link_index]; }

  Pose FramePose(std::string_view frame) const;

  // Geometric Jacobian of the frame origin in the world frame: linear rows on
  // top, angular rows below.
  Matrix6X FrameJacobian(std::string_view frame) const;

  // Jacobian of a world point rigidly attached to `link_index`.
  Matrix6X PointJacobian(int link_index, const Vec3& world_point) const;

 private:
  const RobotModel* model_;
  Eigen::VectorXd q_;
  std::vector<Pose> link_poses_;
  // Joint frame (parent link pose composed with origin) per joint.
  std::vector<Pose> joint_frames_;
};

Pose ForwardKinematics(const RobotModel& model, const GeneralizedState& state,
                       std::string_view frame);

Matrix6X FrameJacobian(const RobotModel& model, const GeneralizedState& state,
                       std::string_view frame);

// q + dq with the planar-base yaw wrapped to (-pi, pi]. Joint positions are
// not clamped.
GeneralizedState Integrate(const RobotModel& model, const GeneralizedState& state,
                           const GeneralizedVelocity& velocity);

// Wraps an angle to (-pi, pi].
double WrapAngle(double angle);

}  // namespace wbc

#endif  // WBC_ROBOT_MODEL_HPP_
