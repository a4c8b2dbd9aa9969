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
#include "wbc/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "json_util.hpp"
#include "wbc/errors.hpp"

namespace wbc {
namespace {

using json_util::json;

JointType ParseJointType(const std::string& s, const std::string& ctx) {
  if (s == "revolute") return JointType::kRevolute;
  if (s == "prismatic") return JointType::kPrismatic;
  if (s == "planar_base" || s == "planar-base") return JointType::kPlanarBase;
  throw SchemaError(ctx + ": unknown joint type '" + s + "'");
}

// Local motion of a joint for its coordinates starting at q[q_index].
Pose JointMotion(const JointSpec& j, const Eigen::VectorXd& q) {
  switch (j.type) {
    case JointType::kRevolute:
      return Pose::FromRotation(Rotation::FromMatrixUnchecked(
          Eigen::AngleAxisd(q[j.q_index], j.axis).toRotationMatrix()));
    case JointType::kPrismatic:
      return Pose::Translation(j.axis * q[j.q_index]);
    case JointType::kPlanarBase:
      return Pose{Rotation::FromMatrixUnchecked(
                      Eigen::AngleAxisd(q[j.q_index + 2], Vec3::UnitZ()).toRotationMatrix()),
                  Vec3(q[j.q_index], q[j.q_index + 1], 0.0)};
  }
  return Pose{};
}

}  // namespace

RobotModel RobotModel::FromFile(const std::filesystem::path& path) {
  return FromJson(json_util::ReadFile(path));
}

RobotModel RobotModel::FromJson(std::string_view document) {
  using namespace json_util;
  const json doc = Parse(document, "model");
  if (!doc.is_object()) throw SchemaError("model: top level must be an object");

  RobotModel m;
  m.name_ = doc.value("name", std::string("robot"));

  const json& joints = Require(doc, "joints", "model");
  if (!joints.is_array() || joints.empty()) {
    throw SchemaError("model.joints: expected a non-empty array");
  }
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const json& jj = joints[i];
    const std::string ctx = "model.joints[" + std::to_string(i) + "]";
    JointSpec j;
    j.name = RequireString(jj, "name", ctx);
    j.parent_link = RequireString(jj, "parent_link", ctx);
    j.child_link = RequireString(jj, "child_link", ctx);
    j.type = ParseJointType(RequireString(jj, "type", ctx), ctx);
    if (jj.contains("axis")) j.axis = Vector3(jj["axis"], ctx + ".axis");
    if (jj.contains("origin")) j.origin = PoseFromJson(jj["origin"], ctx + ".origin");
    if (jj.contains("position_limits")) {
      Eigen::VectorXd lim = Vector(jj["position_limits"], ctx + ".position_limits");
      if (lim.size() != 2) throw SchemaError(ctx + ".position_limits: expected [lo, hi]");
      j.position_limits = std::make_pair(lim[0], lim[1]);
    } else if (j.type != JointType::kPlanarBase) {
      throw SchemaError(ctx + ": missing field 'position_limits'");
    }
    j.velocity_limit = RequireNumber(jj, "velocity_limit", ctx);
    j.dof = j.type == JointType::kPlanarBase ? 3 : 1;
    j.q_index = m.nv_;
    m.nv_ += j.dof;
    m.joints_.push_back(std::move(j));
  }

  if (doc.contains("collision_bodies")) {
    const json& bodies = doc["collision_bodies"];
    if (!bodies.is_array()) throw SchemaError("model.collision_bodies: expected an array");
    for (std::size_t i = 0; i < bodies.size(); ++i) {
      const json& b = bodies[i];
      const std::string ctx = "model.collision_bodies[" + std::to_string(i) + "]";
      CollisionPrimitive c;
      c.name = b.value("name", "body" + std::to_string(i));
      c.link = RequireString(b, "link", ctx);
      const std::string shape = RequireString(b, "shape", ctx);
      c.radius = RequireNumber(b, "radius", ctx);
      c.group = RequireString(b, "group", ctx);
      const json& pts = Require(b, "points", ctx);
      if (!pts.is_array()) throw SchemaError(ctx + ".points: expected an array");
      if (shape == "sphere") {
        if (pts.size() != 1) throw SchemaError(ctx + ": sphere needs exactly 1 point");
        c.shape = ShapeType::kSphere;
        c.p0 = c.p1 = Vector3(pts[0], ctx + ".points[0]");
      } else if (shape == "capsule") {
        if (pts.size() != 2) throw SchemaError(ctx + ": capsule needs exactly 2 points");
        c.shape = ShapeType::kCapsule;
        c.p0 = Vector3(pts[0], ctx + ".points[0]");
        c.p1 = Vector3(pts[1], ctx + ".points[1]");
      } else {
        throw SchemaError(ctx + ": unknown shape '" + shape + "'");
      }
      m.collision_bodies_.push_back(std::move(c));
    }
  }

  if (doc.contains("collision_pairs")) {
    const json& pairs = doc["collision_pairs"];
    if (!pairs.is_array()) throw SchemaError("model.collision_pairs: expected an array");
    for (const json& p : pairs) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string()) {
        throw SchemaError("model.collision_pairs: each entry must be [group, group]");
      }
      m.collision_group_pairs_.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    }
  }

  // Joint groups are written by joint name and stored as joint indices.
  std::map<std::string, std::vector<std::string>> group_names;
  if (doc.contains("groups")) {
    const json& groups = doc["groups"];
    if (!groups.is_object()) throw SchemaError("model.groups: expected an object");
    for (auto it = groups.begin(); it != groups.end(); ++it) {
      if (!it.value().is_array()) throw SchemaError("model.groups." + it.key() + ": expected an array");
      for (const json& n : it.value()) {
        if (!n.is_string()) throw SchemaError("model.groups." + it.key() + ": expected joint names");
        group_names[it.key()].push_back(n.get<std::string>());
      }
    }
  }

  if (doc.contains("named_frames")) {
    const json& frames = doc["named_frames"];
    if (!frames.is_object()) throw SchemaError("model.named_frames: expected an object");
    for (auto it = frames.begin(); it != frames.end(); ++it) {
      const std::string ctx = "model.named_frames." + it.key();
      NamedFrame f;
      if (it.value().is_string()) {
        f.link = it.value().get<std::string>();
      } else {
        f.link = RequireString(it.value(), "link", ctx);
        if (it.value().contains("offset")) f.offset = PoseFromJson(it.value()["offset"], ctx + ".offset");
      }
      m.named_frames_[it.key()] = f;
    }
  }

  if (doc.contains("nominal_posture")) {
    m.nominal_posture_ = Vector(doc["nominal_posture"], "model.nominal_posture");
  } else {
    m.nominal_posture_ = Eigen::VectorXd::Zero(m.nv_);
  }

  for (const auto& [group, names] : group_names) {
    std::vector<int> idx;
    for (const auto& n : names) {
      auto j = m.JointIndex(n);
      if (!j) throw ValidationError("group '" + group + "' names unknown joint '" + n + "'");
      idx.push_back(*j);
    }
    m.groups_[group] = std::move(idx);
  }

  m.Validate();
  return m;
}

void RobotModel::Validate() {
  std::set<std::string> joint_names;
  for (const auto& j : joints_) {
    if (!joint_names.insert(j.name).second) {
      throw ValidationError("duplicate joint name '" + j.name + "'");
    }
    if (j.parent_link == j.child_link) {
      throw ValidationError("cycle: joint '" + j.name + "' has link '" + j.child_link +
                            "' as both parent and child");
    }
    if (j.type != JointType::kPlanarBase) {
      if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
        throw ValidationError("joint '" + j.name + "': axis must be unit length");
      }
      if (j.position_limits->first > j.position_limits->second) {
        throw ValidationError("joint '" + j.name + "': position limits have lo > hi");
      }
    }
    if (!(j.velocity_limit > 0.0)) {
      throw ValidationError("joint '" + j.name + "': velocity_limit must be positive");
    }
  }

  // Links: every parent and child. Each link has at most one parent joint.
  std::map<std::string, int> parent_of;
  std::vector<std::string> order;
  auto add_link = [&](const std::string& l) {
    if (std::find(order.begin(), order.end(), l) == order.end()) order.push_back(l);
  };
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    add_link(joints_[i].parent_link);
    add_link(joints_[i].child_link);
    if (!parent_of.emplace(joints_[i].child_link, static_cast<int>(i)).second) {
      throw ValidationError("link '" + joints_[i].child_link + "' has more than one parent joint");
    }
  }
  std::vector<std::string> roots;
  for (const auto& l : order) {
    if (!parent_of.count(l)) roots.push_back(l);
  }
  if (roots.size() != 1) {
    // No root at all means every link has a parent, which implies a cycle.
    if (roots.empty()) throw ValidationError("cycle: kinematic tree has no root link");
    throw ValidationError("kinematic tree must have a single root link");
  }
  links_ = order;
  link_parent_joint_.assign(links_.size(), -1);
  for (std::size_t li = 0; li < links_.size(); ++li) {
    auto it = parent_of.find(links_[li]);
    if (it != parent_of.end()) link_parent_joint_[li] = it->second;
  }
  for (auto& j : joints_) {
    j.parent_link_index = *LinkIndex(j.parent_link);
    j.child_link_index = *LinkIndex(j.child_link);
  }

  // Walk every link to the root; revisiting a link means a cycle.
  for (std::size_t li = 0; li < links_.size(); ++li) {
    std::set<std::string> seen;
    std::string cur = links_[li];
    while (parent_of.count(cur)) {
      if (!seen.insert(cur).second) throw ValidationError("cycle through link '" + cur + "'");
      cur = joints_[parent_of[cur]].parent_link;
    }
  }

  // Parent-before-child joint order by depth.
  std::vector<int> depth(joints_.size(), 0);
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    std::string cur = joints_[i].parent_link;
    while (parent_of.count(cur)) {
      ++depth[i];
      cur = joints_[parent_of[cur]].parent_link;
    }
  }
  topo_order_.resize(joints_.size());
  for (std::size_t i = 0; i < joints_.size(); ++i) topo_order_[i] = static_cast<int>(i);
  std::stable_sort(topo_order_.begin(), topo_order_.end(),
                   [&](int a, int b) { return depth[a] < depth[b]; });

  for (auto& c : collision_bodies_) {
    auto li = LinkIndex(c.link);
    if (!li) throw ValidationError("collision body '" + c.name + "' on unknown link '" + c.link + "'");
    if (!(c.radius > 0.0)) throw ValidationError("collision body '" + c.name + "': radius must be positive");
    c.link_index = *li;
  }
  for (const auto& [a, b] : collision_group_pairs_) {
    auto has = [&](const std::string& g) {
      return std::any_of(collision_bodies_.begin(), collision_bodies_.end(),
                         [&](const CollisionPrimitive& c) { return c.group == g; });
    };
    if (!has(a) || !has(b)) {
      throw ValidationError("collision pair (" + a + ", " + b + ") names an empty group");
    }
  }
  for (auto& [name, f] : named_frames_) {
    auto li = LinkIndex(f.link);
    if (!li) throw ValidationError("named frame '" + name + "' resolves to unknown link '" + f.link + "'");
    f.link_index = *li;
  }
  if (nominal_posture_.size() != nv_) {
    throw ValidationError("nominal_posture has " + std::to_string(nominal_posture_.size()) +
                          " entries, expected n_v = " + std::to_string(nv_));
  }
}

std::optional<int> RobotModel::JointIndex(std::string_view name) const {
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    if (joints_[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> RobotModel::LinkIndex(std::string_view name) const {
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (links_[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::vector<int> RobotModel::GroupCoordinates(std::string_view group) const {
  std::vector<int> out;
  auto it = groups_.find(std::string(group));
  if (it == groups_.end()) return out;
  for (int j : it->second) {
    for (int k = 0; k < joints_[j].dof; ++k) out.push_back(joints_[j].q_index + k);
  }
  return out;
}

std::optional<int> RobotModel::BaseCoordinate() const {
  for (const auto& j : joints_) {
    if (j.type == JointType::kPlanarBase) return j.q_index;
  }
  return std::nullopt;
}

std::pair<int, Pose> RobotModel::ResolveFrame(std::string_view frame) const {
  auto it = named_frames_.find(std::string(frame));
  if (it != named_frames_.end()) return {it->second.link_index, it->second.offset};
  if (auto li = LinkIndex(frame)) return {*li, Pose::Identity()};
  throw UnknownFrameError("unknown frame '" + std::string(frame) + "'");
}

std::vector<std::pair<int, int>> RobotModel::CollisionPairs() const {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(collision_bodies_.size());
  for (const auto& [ga, gb] : collision_group_pairs_) {
    for (int a = 0; a < n; ++a) {
      if (collision_bodies_[a].group != ga) continue;
      for (int b = 0; b < n; ++b) {
        if (collision_bodies_[b].group != gb || a == b) continue;
        if (collision_bodies_[a].link_index == collision_bodies_[b].link_index) continue;
        const auto key = std::minmax(a, b);
        if (std::find(out.begin(), out.end(), std::make_pair(key.first, key.second)) == out.end()) {
          out.emplace_back(a, b);
        }
      }
    }
  }
  return out;
}

Kinematics::Kinematics(const RobotModel& model, const GeneralizedState& state)
    : model_(&model), q_(state.q) {
  if (q_.size() != model.nv()) {
    throw DimensionError("state has " + std::to_string(q_.size()) + " coordinates, model has " +
                         std::to_string(model.nv()));
  }
  const auto& joints = model.joints();
  link_poses_.assign(model.links().size(), Pose::Identity());
  joint_frames_.assign(joints.size(), Pose::Identity());
  for (int ji : model.TopologicalOrder()) {
    const JointSpec& j = joints[ji];
    joint_frames_[ji] = link_poses_[j.parent_link_index] * j.origin;
    link_poses_[j.child_link_index] = joint_frames_[ji] * JointMotion(j, q_);
  }
}

Pose Kinematics::FramePose(std::string_view frame) const {
  const auto [link, offset] = model_->ResolveFrame(frame);
  return link_poses_[link] * offset;
}

Matrix6X Kinematics::FrameJacobian(std::string_view frame) const {
  const auto [link, offset] = model_->ResolveFrame(frame);
  return PointJacobian(link, (link_poses_[link] * offset).translation);
}

Matrix6X Kinematics::PointJacobian(int link_index, const Vec3& p) const {
  Matrix6X jac = Matrix6X::Zero(6, model_->nv());
  const auto& joints = model_->joints();
  int ji = model_->ParentJointOfLink(link_index);
  while (ji >= 0) {
    const JointSpec& j = joints[ji];
    const Pose& jf = joint_frames_[ji];
    const int c = j.q_index;
    switch (j.type) {
      case JointType::kRevolute: {
        const Vec3 axis = jf.rotation * j.axis;
        jac.col(c).head<3>() = axis.cross(p - jf.translation);
        jac.col(c).tail<3>() = axis;
        break;
      }
      case JointType::kPrismatic:
        jac.col(c).head<3>() = jf.rotation * j.axis;
        break;
      case JointType::kPlanarBase: {
        const Vec3 ex = jf.rotation.col(0);
        const Vec3 ey = jf.rotation.col(1);
        const Vec3 ez = jf.rotation.col(2);
        const Vec3 pivot = jf.Apply(Vec3(q_[c], q_[c + 1], 0.0));
        jac.col(c).head<3>() = ex;
        jac.col(c + 1).head<3>() = ey;
        jac.col(c + 2).head<3>() = ez.cross(p - pivot);
        jac.col(c + 2).tail<3>() = ez;
        break;
      }
    }
    ji = model_->ParentJointOfLink(j.parent_link_index);
  }
  return jac;
}

Pose ForwardKinematics(const RobotModel& model, const GeneralizedState& state,
                       std::string_view frame) {
  return Kinematics(model, state).FramePose(frame);
}

Matrix6X FrameJacobian(const RobotModel& model, const GeneralizedState& state,
                       std::string_view frame) {
  return Kinematics(model, state).FrameJacobian(frame);
}

double WrapAngle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (angle > -std::numbers::pi && angle <= std::numbers::pi) return angle;
  return angle - kTwoPi * std::ceil((angle - std::numbers::pi) / kTwoPi);
}

GeneralizedState Integrate(const RobotModel& model, const GeneralizedState& state,
                           const GeneralizedVelocity& velocity) {
  if (state.q.size() != model.nv() || velocity.dq.size() != model.nv()) {
    throw DimensionError("integrate: state/velocity size does not match model n_v");
  }
  GeneralizedState out{state.q + velocity.dq};
  if (auto base = model.BaseCoordinate()) {
    out.q[*base + 2] = WrapAngle(out.q[*base + 2]);
  }
  return out;
}

}  // namespace wbc
