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
#ifndef WBC_SE3_HPP_
#define WBC_SE3_HPP_

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace wbc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Raised when a geometric construction has no well-defined answer (zero-length
// axis, parallel Gram-Schmidt inputs, look-at target on top of the eye, ...).
class DegenerateInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Orthonormality tolerance used by Rotation::FromMatrix.
inline constexpr double kRotationTolerance = 1e-9;

// A proper rotation stored as a 3x3 direction-cosine matrix. Column k is the
// k-th axis of the rotated frame expressed in the parent frame.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation Identity() { return Rotation(); }

  // Validates RᵀR = I and det(R) = +1 within kRotationTolerance.
  static Rotation FromMatrix(const Mat3& m);

  // Skips validation. For matrices that are orthonormal by construction
  // (products of rotations, Rodrigues output).
  static Rotation FromMatrixUnchecked(const Mat3& m) { return Rotation(m); }

  // Normalizes q; throws DegenerateInputError for a zero quaternion.
  static Rotation FromQuaternion(const Eigen::Quaterniond& q);

  // Rotation by `angle` rad about `axis` (normalized internally).
  static Rotation AxisAngle(const Vec3& axis, double angle);

  // Exponential map of a rotation vector (axis * angle).
  static Rotation Exp(const Vec3& rotation_vector);

  const Mat3& matrix() const { return m_; }
  Vec3 col(int k) const { return m_.col(k); }

  Rotation inverse() const { return Rotation(m_.transpose()); }

  // Rotation vector w with Exp(w) == *this and |w| in [0, pi].
  Vec3 Log() const;

  // Geodesic angle in [0, pi].
  double angle() const;

  Eigen::Quaterniond quaternion() const;

  bool IsValid(double tol = kRotationTolerance) const;

  friend Rotation operator*(const Rotation& a, const Rotation& b) {
    return Rotation(a.m_ * b.m_);
  }
  friend Vec3 operator*(const Rotation& r, const Vec3& v) { return r.m_ * v; }

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}

  Mat3 m_;
};

// Geodesic distance between two rotations, in [0, pi].
double AngleBetween(const Rotation& a, const Rotation& b);

// Rigid transform. Maps points of the child frame into the parent frame:
// p_parent = rotation * p_child + translation.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Pose Identity() { return Pose{}; }
  static Pose Translation(const Vec3& t) { return Pose{Rotation(), t}; }
  static Pose FromRotation(const Rotation& r) {
    return Pose{r, Vec3::Zero()};
  }

  Vec3 Apply(const Vec3& p) const { return rotation * p + translation; }
};

Pose Compose(const Pose& a, const Pose& b);
Pose Inverse(const Pose& p);

inline Pose operator*(const Pose& a, const Pose& b) { return Compose(a, b); }

// The 6D rotation encoding: first column followed by second column.
using Rot6D = Eigen::Matrix<double, 6, 1>;

Rot6D RotationTo6D(const Rotation& r);

// Gram-Schmidt decode. Scale-invariant in each half. Throws
// DegenerateInputError when the first half is (numerically) zero or the
// second half is parallel to it.
Rotation RotationFrom6D(const Rot6D& v);

// Spherical linear interpolation along the shortest arc.
// alpha = 0 returns `from`, alpha = 1 returns `to`.
Rotation Slerp(const Rotation& from, const Rotation& to, double alpha);

// Linear blend of translations plus shortest-arc slerp of rotations.
// Endpoints are reproduced exactly.
Pose InterpolatePose(const Pose& prev, const Pose& cmd, double alpha);

// Serialized layout: x, y, z, qw, qx, qy, qz.
std::array<double, 7> PoseToArray(const Pose& p);
Pose PoseFromArray(const std::array<double, 7>& v);

// 9-number layout used by the action/proprioception vectors:
// position (3) followed by the 6D rotation encoding.
Eigen::Matrix<double, 9, 1> PoseTo9D(const Pose& p);
Pose PoseFrom9D(const Eigen::Ref<const Eigen::VectorXd>& v);

Mat3 Skew(const Vec3& v);

}  // namespace wbc

#endif  // WBC_SE3_HPP_
