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
#ifndef WBC_SRC_JSON_UTIL_HPP_
#define WBC_SRC_JSON_UTIL_HPP_

#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <json.hpp>

#include "wbc/errors.hpp"
#include "wbc/se3.hpp"

namespace wbc::json_util {

using nlohmann::json;

inline json Parse(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string(what) + ": " + e.what());
  }
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline const json& Require(const json& obj, std::string_view key, std::string_view ctx) {
  if (!obj.is_object()) throw SchemaError(std::string(ctx) + ": expected an object");
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    throw SchemaError(std::string(ctx) + ": missing field '" + std::string(key) + "'");
  }
  return *it;
}

inline double Number(const json& v, std::string_view ctx) {
  if (!v.is_number()) throw SchemaError(std::string(ctx) + ": expected a number");
  return v.get<double>();
}

inline double RequireNumber(const json& obj, std::string_view key, std::string_view ctx) {
  return Number(Require(obj, key, ctx), std::string(ctx) + "." + std::string(key));
}

inline std::string RequireString(const json& obj, std::string_view key, std::string_view ctx) {
  const json& v = Require(obj, key, ctx);
  if (!v.is_string()) {
    throw SchemaError(std::string(ctx) + "." + std::string(key) + ": expected a string");
  }
  return v.get<std::string>();
}

inline Eigen::VectorXd Vector(const json& v, std::string_view ctx) {
  if (!v.is_array()) throw SchemaError(std::string(ctx) + ": expected an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = Number(v[i], ctx);
  return out;
}

inline Vec3 Vector3(const json& v, std::string_view ctx) {
  Eigen::VectorXd x = Vector(v, ctx);
  if (x.size() != 3) throw SchemaError(std::string(ctx) + ": expected 3 numbers");
  return x;
}

inline Pose PoseFromJson(const json& v, std::string_view ctx) {
  Eigen::VectorXd x = Vector(v, ctx);
  if (x.size() != 7) throw SchemaError(std::string(ctx) + ": pose needs 7 numbers");
  std::array<double, 7> a{};
  for (int i = 0; i < 7; ++i) a[i] = x[i];
  try {
    return PoseFromArray(a);
  } catch (const DegenerateInputError& e) {
    throw ValidationError(std::string(ctx) + ": " + e.what());
  }
}

inline json PoseToJson(const Pose& p) {
  const auto a = PoseToArray(p);
  return json(std::vector<double>(a.begin(), a.end()));
}

template <typename Derived>
json VectorToJson(const Eigen::MatrixBase<Derived>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace wbc::json_util

#endif  // WBC_SRC_JSON_UTIL_HPP_
