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
#include "wbc/qp.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "qp_oracle.hpp"
#include "wbc/errors.hpp"

namespace wbc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

QpProblem OneDof(double w, double v, double lambda) {
  // min w (dq - v)² + λ dq²  ==  1/2 dq (2w + 2λ) dq - 2 w v dq + const
  MatrixXd H(1, 1);
  H << 2.0 * (w + lambda);
  VectorXd g(1);
  g << -2.0 * w * v;
  return QpProblem::Unconstrained(H, g);
}

TEST(SolveQp, OneDofUnconstrained) {
  const QpSolution s = SolveQp(OneDof(10000.0, 0.05, 1e-6));
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.x[0], 10000.0 * 0.05 / (10000.0 + 1e-6), 1e-15);
  EXPECT_LE(s.kkt_residual, 1e-7);
}

TEST(SolveQp, OneDofClippedByVelocityBound) {
  QpProblem p = OneDof(10000.0, 0.05, 1e-6);
  p.G.resize(2, 1);
  p.G << 1.0, -1.0;
  p.h.resize(2);
  p.h << 0.9 * 1.0 * 0.01, 0.9 * 1.0 * 0.01;
  const QpSolution s = SolveQp(p);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.x[0], 0.009, 1e-15);
  ASSERT_EQ(s.active_set.size(), 1u);
  EXPECT_EQ(s.active_set[0], 0);
  EXPECT_GT(s.lambda_ineq[0], 0.0);
}

TEST(SolveQp, TwoDofEqualityLagrange) {
  // min (x - 0.1)² + (y - 0.1)²  s.t.  x + y = 0
  QpProblem p = QpProblem::Unconstrained(2.0 * MatrixXd::Identity(2, 2), VectorXd::Constant(2, -0.2));
  p.A.resize(1, 2);
  p.A << 1.0, 1.0;
  p.b.resize(1);
  p.b << 0.0;
  const QpSolution s = SolveQp(p);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_LE(s.x.cwiseAbs().maxCoeff(), 1e-15);
  // μ = 0.2 from 2(x - 0.1) + μ = 0.
  EXPECT_NEAR(s.lambda_eq[0], 0.2, 1e-15);
}

TEST(SolveQp, MatchesEnumerationOracle) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const QpProblem p = testing::RandomTinyQp(rng);
    const auto oracle = testing::EnumerateQp(p);
    ASSERT_TRUE(oracle.has_value()) << trial;
    const QpSolution s = SolveQp(p);
    ASSERT_EQ(s.status, QpStatus::kOptimal) << trial;
    EXPECT_NEAR(p.Objective(s.x), p.Objective(*oracle), 1e-8) << trial;
    EXPECT_LE(s.kkt.primal, 1e-8) << trial;
    EXPECT_LE(s.kkt.stationarity, 1e-7) << trial;
    EXPECT_LE(s.kkt.complementarity, 1e-7) << trial;
  }
}

TEST(SolveQp, DetectsInfeasibility) {
  // x <= -1 and x >= 1.
  QpProblem p = QpProblem::Unconstrained(MatrixXd::Identity(1, 1), VectorXd::Zero(1));
  p.G.resize(2, 1);
  p.G << 1.0, -1.0;
  p.h.resize(2);
  p.h << -1.0, -1.0;
  const QpSolution s = SolveQp(p);
  EXPECT_EQ(s.status, QpStatus::kInfeasible);
  EXPECT_EQ(s.x.size(), 1);
}

TEST(SolveQp, InconsistentEqualitiesAreInfeasible) {
  QpProblem p = QpProblem::Unconstrained(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  p.A.resize(2, 2);
  p.A << 1.0, 1.0, 2.0, 2.0;
  p.b.resize(2);
  p.b << 1.0, 0.0;
  EXPECT_EQ(SolveQp(p).status, QpStatus::kInfeasible);
}

TEST(SolveQp, RejectsBadShapesAndIndefiniteHessian) {
  QpProblem p = QpProblem::Unconstrained(MatrixXd::Identity(2, 2), VectorXd::Zero(3));
  EXPECT_THROW(SolveQp(p), DimensionError);
  QpProblem q = QpProblem::Unconstrained(-MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  EXPECT_THROW(SolveQp(q), std::invalid_argument);
}

TEST(SolveQp, IsDeterministic) {
  std::mt19937_64 rng(102);
  for (int trial = 0; trial < 50; ++trial) {
    const QpProblem p = testing::RandomTinyQp(rng);
    const QpSolution a = SolveQp(p);
    const QpSolution b = SolveQp(p);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.active_set, b.active_set);
  }
}

TEST(ActiveSetQpSolver, WarmStartReusesActiveSet) {
  QpProblem p = OneDof(1.0, 1.0, 0.0);
  p.G.resize(1, 1);
  p.G << 1.0;
  p.h.resize(1);
  p.h << 0.5;
  ActiveSetQpSolver solver;
  const QpSolution first = solver.Solve(p);
  EXPECT_FALSE(first.warm_started);
  p.h << 0.4;
  const QpSolution second = solver.Solve(p);
  EXPECT_TRUE(second.warm_started);
  EXPECT_NEAR(second.x[0], 0.4, 1e-15);
  EXPECT_EQ(second.status, QpStatus::kOptimal);
}

TEST(ActiveSetQpSolver, WarmAndColdAgree) {
  std::mt19937_64 rng(103);
  ActiveSetQpSolver warm;
  for (int trial = 0; trial < 300; ++trial) {
    const QpProblem p = testing::RandomTinyQp(rng);
    const QpSolution w = warm.Solve(p);
    const QpSolution c = SolveQp(p);
    ASSERT_EQ(w.status, QpStatus::kOptimal);
    EXPECT_NEAR(p.Objective(w.x), p.Objective(c.x), 1e-8) << trial;
  }
}

TEST(ComputeKktResiduals, FlagsWrongMultipliers) {
  QpProblem p = OneDof(1.0, 1.0, 0.0);
  p.G.resize(1, 1);
  p.G << 1.0;
  p.h.resize(1);
  p.h << 0.5;
  const VectorXd x = VectorXd::Constant(1, 0.5);
  // Hx + g = 1 - 2 = -1, so λ = 1.
  EXPECT_LE(ComputeKktResiduals(p, x, VectorXd::Constant(1, 1.0), VectorXd()).Max(), 1e-15);
  const KktResiduals bad = ComputeKktResiduals(p, x, VectorXd::Constant(1, -1.0), VectorXd());
  EXPECT_NEAR(bad.dual, 1.0, 1e-15);
  EXPECT_NEAR(bad.stationarity, 2.0, 1e-15);
}

}  // namespace
}  // namespace wbc
