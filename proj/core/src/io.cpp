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
#include "wbc/io.hpp"

#include <Eigen/Geometry>

#include "json_util.hpp"
#include "wbc/errors.hpp"

namespace wbc {

using json_util::json;

GeneralizedState StateFromJson(std::string_view document, const RobotModel& model) {
  const json doc = json_util::Parse(document, "state");
  const Eigen::VectorXd q = json_util::Vector(json_util::Require(doc, "q", "state"), "state.q");
  if (q.size() != model.nv()) {
    throw DimensionError("state.q has " + std::to_string(q.size()) + " entries, model '" +
                         model.name() + "' has " + std::to_string(model.nv()));
  }
  if (!q.allFinite()) throw ValidationError("state.q is not finite");
  return GeneralizedState{q};
}

TrackingTargets TargetsFromJson(std::string_view document) {
  const json doc = json_util::Parse(document, "targets");
  TrackingTargets t;
  t.left_ee = json_util::PoseFromJson(json_util::Require(doc, "left_ee", "targets"), "targets.left_ee");
  t.right_ee =
      json_util::PoseFromJson(json_util::Require(doc, "right_ee", "targets"), "targets.right_ee");
  if (doc.contains("head_rotation") && !doc["head_rotation"].is_null()) {
    const Eigen::VectorXd v = json_util::Vector(doc["head_rotation"], "targets.head_rotation");
    if (v.size() != 9) throw SchemaError("targets.head_rotation: expected 9 numbers");
    Mat3 m;
    m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
    if (!m.allFinite() || (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
        m.determinant() < 0.0) {
      throw ValidationError("targets.head_rotation is not a rotation");
    }
    // Re-project onto SO(3); inputs carry only a few digits.
    t.head_rotation = Rotation::FromQuaternion(Eigen::Quaterniond(m));
  }
  return t;
}

Pose PoseDocumentFromJson(std::string_view document) {
  const json doc = json_util::Parse(document, "pose");
  return json_util::PoseFromJson(json_util::Require(doc, "pose", "pose"), "pose.pose");
}

std::string StateToJson(const GeneralizedState& state) {
  json j;
  j["q"] = json_util::VectorToJson(state.q);
  return j.dump();
}

std::string TargetsToJson(const TrackingTargets& targets) {
  json j;
  j["left_ee"] = json_util::PoseToJson(targets.left_ee);
  j["right_ee"] = json_util::PoseToJson(targets.right_ee);
  if (targets.head_rotation) {
    const Mat3 m = targets.head_rotation->matrix();
    j["head_rotation"] = json::array();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) j["head_rotation"].push_back(m(r, c));
    }
  }
  return j.dump(2);
}

std::string PoseDocumentToJson(const Pose& pose) {
  json j;
  j["pose"] = json_util::PoseToJson(pose);
  return j.dump();
}

std::string ReadTextFile(const std::filesystem::path& path) { return json_util::ReadFile(path); }

std::string IkStepToJson(const IkStep& step, const IkProfile& profile) {
  const IkDiagnostics& d = step.diagnostics;
  json j;
  j["dq"] = json_util::VectorToJson(step.dq.dq);
  j["q_next"] = json_util::VectorToJson(step.q_next.q);
  j["status"] = std::string(ToString(d.status));
  j["kkt_residual"] = d.kkt_residual;
  j["qp_iterations"] = d.qp_iterations;
  j["active_set_size"] = d.active_set_size;
  j["cost_values"] = d.cost_values;
  j["constraint_margins"] = d.constraint_margins;
  j["left_ee_error"] = {{"position", d.left_ee.position}, {"rotation", d.left_ee.rotation}};
  j["right_ee_error"] = {{"position", d.right_ee.position}, {"rotation", d.right_ee.rotation}};
  if (d.head_rotation_error) j["head_rotation_error"] = *d.head_rotation_error;
  j["com_offset"] = {d.com_offset.x(), d.com_offset.y()};
  j["min_collision_distance"] = d.min_collision_distance;
  j["collision_rows"] = d.collision_rows;
  j["dropped_collision_rows"] = d.dropped_collision_rows;
  j["guard_rounds"] = d.guard_rounds;
  j["step_scale"] = d.step_scale;
  j["profile"] = json_util::Parse(profile.ToJson(), "profile");
  return j.dump(2);
}

std::string GazeToJson(const Rotation& r, const PanTilt& pan_tilt) {
  const Mat3 m = r.matrix();
  json j;
  j["rotation"] = json::array();
  for (int row = 0; row < 3; ++row) {
    for (int c = 0; c < 3; ++c) j["rotation"].push_back(m(row, c));
  }
  j["pan"] = pan_tilt.pan;
  j["tilt"] = pan_tilt.tilt;
  j["clamped"] = pan_tilt.clamped;
  return j.dump(2);
}

}  // namespace wbc
