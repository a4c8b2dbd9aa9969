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
#include "wbc/se3.hpp"

#include <cmath>

namespace wbc {
namespace {

// Below this norm a 3-vector is treated as zero in Gram-Schmidt.
constexpr double kDegenerateNorm = 1e-12;

Eigen::Quaterniond ToQuat(const Mat3& m) {
  Eigen::Quaterniond q(m);
  q.normalize();
  return q;
}

}  // namespace

Rotation Rotation::FromMatrix(const Mat3& m) {
  Rotation r(m);
  if (!r.IsValid()) {
    throw std::invalid_argument("matrix is not a proper rotation");
  }
  return r;
}

Rotation Rotation::FromQuaternion(const Eigen::Quaterniond& q) {
  const double n = q.norm();
  if (!(n > kDegenerateNorm) || !std::isfinite(n)) {
    throw DegenerateInputError("quaternion has zero norm");
  }
  return Rotation(q.normalized().toRotationMatrix());
}

Rotation Rotation::AxisAngle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > kDegenerateNorm)) {
    throw DegenerateInputError("rotation axis has zero length");
  }
  return Rotation(Eigen::AngleAxisd(angle, axis / n).toRotationMatrix());
}

Rotation Rotation::Exp(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-12) {
    // First-order Rodrigues, re-orthonormalized through the quaternion.
    Eigen::Quaterniond q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    return Rotation(q.normalized().toRotationMatrix());
  }
  return Rotation(Eigen::AngleAxisd(theta, w / theta).toRotationMatrix());
}

Vec3 Rotation::Log() const {
  Eigen::Quaterniond q = ToQuat(m_);
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 v = q.vec();
  const double s = v.norm();
  if (s < 1e-12) return 2.0 * v;
  const double theta = 2.0 * std::atan2(s, q.w());
  return v * (theta / s);
}

double Rotation::angle() const {
  Eigen::Quaterniond q = ToQuat(m_);
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

Eigen::Quaterniond Rotation::quaternion() const { return ToQuat(m_); }

bool Rotation::IsValid(double tol) const {
  if (!m_.allFinite()) return false;
  const double ortho = (m_.transpose() * m_ - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(m_.determinant() - 1.0) <= tol;
}

double AngleBetween(const Rotation& a, const Rotation& b) {
  return (a.inverse() * b).angle();
}

Pose Compose(const Pose& a, const Pose& b) {
  return Pose{a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose Inverse(const Pose& p) {
  const Rotation rt = p.rotation.inverse();
  return Pose{rt, -(rt * p.translation)};
}

Rot6D RotationTo6D(const Rotation& r) {
  Rot6D v;
  v.head<3>() = r.col(0);
  v.tail<3>() = r.col(1);
  return v;
}

Rotation RotationFrom6D(const Rot6D& v) {
  const Vec3 a = v.head<3>();
  const Vec3 b = v.tail<3>();
  const double na = a.norm();
  if (!(na > kDegenerateNorm) || !std::isfinite(na)) {
    throw DegenerateInputError("6D rotation: first column is zero");
  }
  const Vec3 c1 = a / na;
  const Vec3 b_perp = b - c1.dot(b) * c1;
  const double nb = b_perp.norm();
  // Relative test so that the decode stays scale-invariant.
  if (!(nb > kDegenerateNorm * std::max(1.0, b.norm())) || !std::isfinite(nb)) {
    throw DegenerateInputError("6D rotation: columns are parallel");
  }
  const Vec3 c2 = b_perp / nb;
  Mat3 m;
  m.col(0) = c1;
  m.col(1) = c2;
  m.col(2) = c1.cross(c2);
  return Rotation::FromMatrixUnchecked(m);
}

Rotation Slerp(const Rotation& from, const Rotation& to, double alpha) {
  if (alpha == 0.0) return from;
  if (alpha == 1.0) return to;
  const Eigen::Quaterniond qa = from.quaternion();
  Eigen::Quaterniond qb = to.quaternion();
  if (qa.dot(qb) < 0.0) qb.coeffs() = -qb.coeffs();
  // Relative rotation has w >= 0, so its half-angle lies in [0, pi/2].
  const Eigen::Quaterniond rel = qa.conjugate() * qb;
  const double s = rel.vec().norm();
  Eigen::Quaterniond step;
  if (s < 1e-15) {
    step = Eigen::Quaterniond::Identity();
  } else {
    const double half = std::atan2(s, rel.w());
    const Vec3 axis = rel.vec() / s;
    step.w() = std::cos(alpha * half);
    step.vec() = std::sin(alpha * half) * axis;
  }
  return Rotation::FromQuaternion(qa * step);
}

Pose InterpolatePose(const Pose& prev, const Pose& cmd, double alpha) {
  return Pose{Slerp(prev.rotation, cmd.rotation, alpha),
              (1.0 - alpha) * prev.translation + alpha * cmd.translation};
}

std::array<double, 7> PoseToArray(const Pose& p) {
  Eigen::Quaterniond q = p.rotation.quaternion();
  // Canonical hemisphere keeps serialized files stable.
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return {p.translation.x(), p.translation.y(), p.translation.z(),
          q.w(), q.x(), q.y(), q.z()};
}

Pose PoseFromArray(const std::array<double, 7>& v) {
  return Pose{Rotation::FromQuaternion(Eigen::Quaterniond(v[3], v[4], v[5], v[6])),
              Vec3(v[0], v[1], v[2])};
}

Eigen::Matrix<double, 9, 1> PoseTo9D(const Pose& p) {
  Eigen::Matrix<double, 9, 1> out;
  out.head<3>() = p.translation;
  out.tail<6>() = RotationTo6D(p.rotation);
  return out;
}

Pose PoseFrom9D(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != 9) throw std::invalid_argument("pose vector must have 9 entries");
  return Pose{RotationFrom6D(v.tail<6>()), v.head<3>()};
}

Mat3 Skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace wbc
