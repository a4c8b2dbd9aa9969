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
#include "wbc/ik_profile.hpp"

#include "json_util.hpp"
#include "wbc/errors.hpp"

namespace wbc {
namespace {

using json_util::json;

std::vector<std::string> StringList(const json& v, const std::string& ctx) {
  if (!v.is_array()) throw SchemaError(ctx + ": expected an array of names");
  std::vector<std::string> out;
  for (const json& s : v) {
    if (!s.is_string()) throw SchemaError(ctx + ": expected an array of names");
    out.push_back(s.get<std::string>());
  }
  return out;
}

}  // namespace

std::string_view ToString(UprightMode mode) {
  return mode == UprightMode::kSumZero ? "sum-zero" : "individually-fixed";
}

void IkProfile::Validate() const {
  const double weights[] = {w_p, w_o, w_nom_torso, w_nom_arm, w_curr,
                            w_base_pos, w_base_ori, w_com, w_head};
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("profile '" + name + "': weights must be >= 0");
  }
  if (!(lambda > 0.0)) throw ValidationError("profile '" + name + "': lambda must be > 0");
  if (!(velocity_safety > 0.0 && velocity_safety <= 1.0)) {
    throw ValidationError("profile '" + name + "': velocity_safety must be in (0, 1]");
  }
  if (!(d_safe > 0.0 && d_safe < d_inf)) {
    throw ValidationError("profile '" + name + "': need 0 < d_safe < d_inf");
  }
  if (!(b_x > 0.0 && b_y > 0.0)) throw ValidationError("profile '" + name + "': b_x, b_y must be > 0");
  if (!(base_linear_velocity_limit > 0.0 && base_angular_velocity_limit > 0.0)) {
    throw ValidationError("profile '" + name + "': base velocity limits must be > 0");
  }
  if (!(collision_gain > 0.0 && collision_gain <= 1.0)) {
    throw ValidationError("profile '" + name + "': collision_gain must be in (0, 1]");
  }
}

IkProfile IkProfile::FromJson(std::string_view document) {
  using namespace json_util;
  const json doc = Parse(document, "profile");
  if (!doc.is_object()) throw SchemaError("profile: top level must be an object");
  IkProfile p;
  const std::string ctx = "profile";
  p.name = doc.value("name", std::string("unnamed"));
  p.w_p = RequireNumber(doc, "w_p", ctx);
  p.w_o = RequireNumber(doc, "w_o", ctx);
  p.w_nom_torso = RequireNumber(doc, "w_nom_torso", ctx);
  p.w_nom_arm = RequireNumber(doc, "w_nom_arm", ctx);
  p.w_curr = RequireNumber(doc, "w_curr", ctx);
  p.w_base_pos = RequireNumber(doc, "w_base_pos", ctx);
  p.w_base_ori = RequireNumber(doc, "w_base_ori", ctx);
  p.w_com = RequireNumber(doc, "w_com", ctx);
  p.b_x = RequireNumber(doc, "b_x", ctx);
  p.b_y = RequireNumber(doc, "b_y", ctx);
  p.lambda = RequireNumber(doc, "lambda", ctx);
  p.velocity_safety = RequireNumber(doc, "velocity_safety", ctx);
  const Eigen::VectorXd base = Vector(Require(doc, "base_vel_limits", ctx), "profile.base_vel_limits");
  if (base.size() != 2) throw SchemaError("profile.base_vel_limits: expected [m/s, rad/s]");
  p.base_linear_velocity_limit = base[0];
  p.base_angular_velocity_limit = base[1];
  p.d_safe = RequireNumber(doc, "d_safe", ctx);
  p.d_inf = RequireNumber(doc, "d_inf", ctx);
  if (doc.contains("collision_gain")) p.collision_gain = Number(doc["collision_gain"], "profile.collision_gain");
  const std::string mode = RequireString(doc, "upright_mode", ctx);
  if (mode == "sum-zero") {
    p.upright_mode = UprightMode::kSumZero;
  } else if (mode == "individually-fixed") {
    p.upright_mode = UprightMode::kIndividuallyFixed;
  } else {
    throw SchemaError("profile.upright_mode: expected 'sum-zero' or 'individually-fixed'");
  }
  if (doc.contains("upright_joints")) p.upright_joints = StringList(doc["upright_joints"], "profile.upright_joints");
  p.frozen_joints = StringList(Require(doc, "frozen_joints", ctx), "profile.frozen_joints");
  if (doc.contains("w_head")) p.w_head = Number(doc["w_head"], "profile.w_head");
  if (doc.contains("com_offset") && !doc["com_offset"].is_null()) {
    const Eigen::VectorXd r = Vector(doc["com_offset"], "profile.com_offset");
    if (r.size() != 2) throw SchemaError("profile.com_offset: expected [x, y]");
    p.com_offset = Eigen::Vector2d(r[0], r[1]);
  }
  p.Validate();
  return p;
}

IkProfile IkProfile::FromFile(const std::filesystem::path& path) {
  return FromJson(json_util::ReadFile(path));
}

std::string IkProfile::ToJson() const {
  json j;
  j["name"] = name;
  j["w_p"] = w_p;
  j["w_o"] = w_o;
  j["w_nom_torso"] = w_nom_torso;
  j["w_nom_arm"] = w_nom_arm;
  j["w_curr"] = w_curr;
  j["w_base_pos"] = w_base_pos;
  j["w_base_ori"] = w_base_ori;
  j["w_com"] = w_com;
  j["b_x"] = b_x;
  j["b_y"] = b_y;
  j["lambda"] = lambda;
  j["velocity_safety"] = velocity_safety;
  j["base_vel_limits"] = {base_linear_velocity_limit, base_angular_velocity_limit};
  j["d_safe"] = d_safe;
  j["d_inf"] = d_inf;
  j["collision_gain"] = collision_gain;
  j["upright_mode"] = std::string(ToString(upright_mode));
  j["upright_joints"] = upright_joints;
  j["frozen_joints"] = frozen_joints;
  j["w_head"] = w_head;
  if (com_offset) {
    j["com_offset"] = {com_offset->x(), com_offset->y()};
  } else {
    j["com_offset"] = nullptr;
  }
  return j.dump(2);
}

}  // namespace wbc
