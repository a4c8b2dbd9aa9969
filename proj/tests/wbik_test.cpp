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
#include "wbc/wbik.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wbc/collision.hpp"
#include "wbc/errors.hpp"

namespace wbc {
namespace {

constexpr double kDt = 0.01;

class WbikTest : public ::testing::Test {
 protected:
  WbikTest()
      : model_(RobotModel::FromFile(testing::DataPath("models/reference_rby1.json"))),
        laundry_(IkProfile::FromFile(testing::DataPath("profiles/laundry.json"))),
        delivery_(IkProfile::FromFile(testing::DataPath("profiles/delivery.json"))) {}

  GeneralizedState Nominal() const { return GeneralizedState{model_.nominal_posture()}; }

  TrackingTargets TargetsAt(const GeneralizedState& q) const {
    return TrackingTargets{ForwardKinematics(model_, q, "left_gripper"),
                           ForwardKinematics(model_, q, "right_gripper"), std::nullopt};
  }

  TrackingTargets Shifted(const Vec3& dl, const Vec3& dr) const {
    TrackingTargets t = TargetsAt(Nominal());
    t.left_ee.translation += dl;
    t.right_ee.translation += dr;
    return t;
  }

  int Coord(const std::string& joint) const {
    return model_.joints()[*model_.JointIndex(joint)].q_index;
  }

  void ExpectStepInvariants(const IkProfile& profile, const IkStep& s) const {
    const Eigen::VectorXd& dq = s.dq.dq;
    for (const JointSpec& j : model_.joints()) {
      if (j.type == JointType::kPlanarBase) {
        const double lin = profile.velocity_safety * profile.base_linear_velocity_limit * kDt;
        const double ang = profile.velocity_safety * profile.base_angular_velocity_limit * kDt;
        EXPECT_LE(std::abs(dq[j.q_index]), lin + 1e-10);
        EXPECT_LE(std::abs(dq[j.q_index + 1]), lin + 1e-10);
        EXPECT_LE(std::abs(dq[j.q_index + 2]), ang + 1e-10);
        continue;
      }
      EXPECT_LE(std::abs(dq[j.q_index]), profile.velocity_safety * j.velocity_limit * kDt + 1e-10)
          << j.name;
      if (j.position_limits) {
        const double q = s.q_next.q[j.q_index];
        EXPECT_GE(q, j.position_limits->first - 1e-8) << j.name;
        EXPECT_LE(q, j.position_limits->second + 1e-8) << j.name;
      }
    }
    for (const std::string& name : profile.frozen_joints) {
      EXPECT_LE(std::abs(dq[Coord(name)]), 1e-12) << name;
    }
    if (profile.upright_mode == UprightMode::kSumZero) {
      EXPECT_LE(std::abs(dq[Coord("torso_1")] + dq[Coord("torso_2")] + dq[Coord("torso_3")]), 1e-9);
    } else {
      for (const char* name : {"torso_1", "torso_2", "torso_3"}) {
        EXPECT_LE(std::abs(dq[Coord(name)]), 1e-12) << name;
      }
    }
    EXPECT_LE(std::abs(s.diagnostics.com_offset.x()), profile.b_x + 1e-6);
    EXPECT_LE(std::abs(s.diagnostics.com_offset.y()), profile.b_y + 1e-6);
  }

  RobotModel model_;
  IkProfile laundry_;
  IkProfile delivery_;
};

TEST_F(WbikTest, DampingOnlyHessian) {
  IkProfile p = laundry_;
  p.w_p = p.w_o = p.w_nom_torso = p.w_nom_arm = p.w_curr = 0.0;
  p.w_base_pos = p.w_base_ori = p.w_com = p.w_head = 0.0;
  const IkProblem prob = AssembleQp(model_, Nominal(), Shifted(Vec3(0.1, 0, 0), Vec3::Zero()), p, kDt);
  const int n = model_.nv();
  EXPECT_LE(testing::MaxAbs(prob.qp.H - 2.0 * p.lambda * Eigen::MatrixXd::Identity(n, n)), 1e-18);
  EXPECT_LE(prob.qp.g.cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(WbikTest, HessianIsSymmetricPositiveDefinite) {
  const IkProblem prob = AssembleQp(model_, Nominal(), TargetsAt(Nominal()), laundry_, kDt);
  EXPECT_LE(testing::MaxAbs(prob.qp.H - prob.qp.H.transpose()), 1e-9);
  EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(prob.qp.H).info(), Eigen::Success);
}

TEST_F(WbikTest, EqualityRowsFollowUprightMode) {
  const IkProblem sum = AssembleQp(model_, Nominal(), TargetsAt(Nominal()), laundry_, kDt);
  // One sum row plus three frozen joints.
  EXPECT_EQ(sum.qp.num_equalities(), 4);
  const IkProblem fixed = AssembleQp(model_, Nominal(), TargetsAt(Nominal()), delivery_, kDt);
  EXPECT_EQ(fixed.qp.num_equalities(), 6);
}

TEST_F(WbikTest, EndEffectorResidualIsPoseError) {
  const Vec3 dl(0.03, -0.02, 0.01);
  TrackingTargets t = Shifted(dl, Vec3::Zero());
  t.left_ee.rotation = Rotation::AxisAngle(Vec3::UnitZ(), 0.1) * t.left_ee.rotation;
  const IkProblem prob = AssembleQp(model_, Nominal(), t, laundry_, kDt);
  for (const CostTerm& c : prob.costs) {
    if (c.name != "ee_left") continue;
    EXPECT_LE((c.r.head<3>() - dl).norm(), 1e-12);
    EXPECT_LE((c.r.tail<3>() - Vec3(0, 0, 0.1)).norm(), 1e-12);
    EXPECT_EQ(c.w[0], 10000.0);
    EXPECT_EQ(c.w[5], 10000.0);
    return;
  }
  FAIL() << "no ee_left cost";
}

TEST_F(WbikTest, ErrorsOnBadInput) {
  GeneralizedState bad{Eigen::VectorXd::Zero(model_.nv() - 1)};
  EXPECT_THROW(AssembleQp(model_, bad, TargetsAt(Nominal()), laundry_, kDt), DimensionError);
  IkProfile p = laundry_;
  p.frozen_joints.push_back("torso_9");
  EXPECT_THROW(AssembleQp(model_, Nominal(), TargetsAt(Nominal()), p, kDt), ValidationError);
  EXPECT_THROW(WholeBodyIk(model_, p), ValidationError);
  EXPECT_THROW(AssembleQp(model_, Nominal(), TargetsAt(Nominal()), laundry_, 0.0),
               std::invalid_argument);
}

TEST_F(WbikTest, AtTargetStaysPut) {
  const IkStep s = StepIk(model_, Nominal(), TargetsAt(Nominal()), laundry_, kDt);
  EXPECT_EQ(s.diagnostics.status, QpStatus::kOptimal);
  EXPECT_LE(s.dq.dq.cwiseAbs().maxCoeff(), 1e-6);
}

TEST_F(WbikTest, RandomTargetsSatisfyKktAndConstraints) {
  std::mt19937_64 rng(201);
  for (const IkProfile* profile : {&laundry_, &delivery_}) {
    WholeBodyIk ik(model_, *profile);
    for (int trial = 0; trial < 50; ++trial) {
      const TrackingTargets t =
          Shifted(testing::RandomVec3(rng, -0.15, 0.15), testing::RandomVec3(rng, -0.15, 0.15));
      const IkStep s = ik.Step(Nominal(), t, kDt);
      ASSERT_EQ(s.diagnostics.status, QpStatus::kOptimal);
      EXPECT_LE(s.diagnostics.kkt_residual, 1e-7);
      ExpectStepInvariants(*profile, s);
    }
  }
}

TEST_F(WbikTest, StaticTargetConverges) {
  // Planar rigid displacement of both grippers: reachable by the base alone,
  // so the posture terms do not bias the converged pose.
  WholeBodyIk ik(model_, laundry_);
  const Vec3 shift(0.08, 0.04, 0.0);
  const TrackingTargets t = Shifted(shift, shift);
  GeneralizedState q = Nominal();
  IkStep s;
  for (int k = 0; k < 200; ++k) {
    s = ik.Step(q, t, kDt);
    ExpectStepInvariants(laundry_, s);
    q = s.q_next;
  }
  EXPECT_LE(s.diagnostics.left_ee.position, 1e-3);
  EXPECT_LE(s.diagnostics.right_ee.position, 1e-3);
  EXPECT_LE(s.diagnostics.left_ee.rotation, 0.01);
  EXPECT_LE(s.diagnostics.right_ee.rotation, 0.01);
}

TEST_F(WbikTest, BlockedTargetKeepsSafeDistance) {
  // Both grippers are pulled through each other; the arm-arm pair blocks them.
  const Pose l = ForwardKinematics(model_, Nominal(), "left_gripper");
  const Pose r = ForwardKinematics(model_, Nominal(), "right_gripper");
  TrackingTargets t = TargetsAt(Nominal());
  t.left_ee.translation = r.translation;
  t.right_ee.translation = l.translation;
  const auto pairs = model_.CollisionPairs();
  for (const DistanceResult& d : CollisionDistances(model_, Nominal(), pairs)) {
    ASSERT_GE(d.distance, laundry_.d_inf);
  }
  WholeBodyIk ik(model_, laundry_);
  GeneralizedState q = Nominal();
  double closest = 1e9;
  for (int k = 0; k < 300; ++k) {
    const IkStep s = ik.Step(q, t, kDt);
    ASSERT_NE(s.diagnostics.status, QpStatus::kInfeasible);
    q = s.q_next;
    for (const DistanceResult& d : CollisionDistances(model_, q, pairs)) {
      EXPECT_GE(d.distance, laundry_.d_safe - 1e-6) << "tick " << k;
      closest = std::min(closest, d.distance);
    }
  }
  // The dampers were actually engaged.
  EXPECT_LT(closest, laundry_.d_inf);
}

TEST_F(WbikTest, HeadCostAppearsOnlyWithHeadTarget) {
  TrackingTargets t = TargetsAt(Nominal());
  const auto has_head = [&](const TrackingTargets& tt) {
    for (const CostTerm& c : AssembleQp(model_, Nominal(), tt, laundry_, kDt).costs) {
      if (c.name == "head") return true;
    }
    return false;
  };
  EXPECT_FALSE(has_head(t));
  t.head_rotation = ForwardKinematics(model_, Nominal(), "head").rotation;
  EXPECT_TRUE(has_head(t));
  const IkStep s = StepIk(model_, Nominal(), t, laundry_, kDt);
  ASSERT_TRUE(s.diagnostics.head_rotation_error.has_value());
  EXPECT_LE(*s.diagnostics.head_rotation_error, 1e-9);
}

TEST_F(WbikTest, IsDeterministic) {
  const TrackingTargets t = Shifted(Vec3(0.1, 0.05, 0.0), Vec3(-0.05, 0.0, 0.1));
  const auto run = [&] {
    WholeBodyIk ik(model_, laundry_);
    GeneralizedState q = Nominal();
    for (int k = 0; k < 50; ++k) q = ik.Step(q, t, kDt).q_next;
    return q.q;
  };
  EXPECT_EQ(run(), run());
}

TEST_F(WbikTest, ArmDeviationMonotoneInNominalWeight) {
  // Table values for w_nom_arm plus two synthetic ones.
  const std::vector<double> weights = {1.0, 10.0, 50.0, 1000.0, 5000.0};
  const TrackingTargets t = Shifted(Vec3(0.12, 0.05, 0.05), Vec3(0.10, -0.05, 0.05));
  std::vector<int> arms = model_.GroupCoordinates("left_arm");
  for (int i : model_.GroupCoordinates("right_arm")) arms.push_back(i);
  double previous = 1e9;
  for (double w : weights) {
    IkProfile p = laundry_;
    p.w_nom_arm = w;
    WholeBodyIk ik(model_, p);
    GeneralizedState q = Nominal();
    for (int k = 0; k < 600; ++k) q = ik.Step(q, t, kDt).q_next;
    double dev = 0.0;
    for (int i : arms) dev += std::pow(q.q[i] - model_.nominal_posture()[i], 2);
    dev = std::sqrt(dev);
    EXPECT_LE(dev, previous + 1e-9) << "w_nom_arm=" << w;
    previous = dev;
  }
}

}  // namespace
}  // namespace wbc
