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
#ifndef WBC_WBIK_HPP_
#define WBC_WBIK_HPP_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wbc/ik_profile.hpp"
#include "wbc/qp.hpp"
#include "wbc/robot_model.hpp"
#include "wbc/se3.hpp"

namespace wbc {

struct TrackingTargets {
  Pose left_ee;
  Pose right_ee;
  std::optional<Rotation> head_rotation;
};

// Model frames and groups the solver reads.
struct IkFrames {
  std::string left_ee = "left_gripper";
  std::string right_ee = "right_gripper";
  std::string head = "head";
  std::string torso = "torso_ref";
  std::string base = "base_ref";
  std::string torso_group = "torso";
  std::string left_arm_group = "left_arm";
  std::string right_arm_group = "right_arm";
};

struct IkOptions {
  IkFrames frames;
  // Joints held at zero velocity on top of the profile's frozen set, e.g. the
  // neck when it is driven by a separate servo.
  std::vector<std::string> extra_frozen_joints;
  // Re-check collision distances and the torso offset at q + dq and tighten
  // the linearized rows when the nonlinear result violates them.
  bool nonlinear_guard = true;
  int guard_rounds = 3;
  ActiveSetQpSolver::Options qp;
};

enum class ConstraintKind {
  kPosition,
  kJointVelocity,
  kBaseVelocity,
  kCom,
  kCollision,
};

std::string_view ToString(ConstraintKind kind);

// What an inequality row encodes. `index` is a coordinate for limit rows, an
// axis (0 = x, 1 = y) for torso-offset rows and a position in
// `collision_pairs` for collision rows.
struct RowTag {
  ConstraintKind kind = ConstraintKind::kPosition;
  int index = 0;
  // +1 for an upper bound on the row quantity, -1 for a lower bound.
  int sign = 1;
  // Signed distance of the pair when the row was built (collision rows).
  double distance = 0.0;
};

// One weighted least-squares term ‖M dq − r‖²_W with W = diag(w).
struct CostTerm {
  std::string name;
  Eigen::MatrixXd M;
  Eigen::VectorXd r;
  Eigen::VectorXd w;

  double Value(const Eigen::VectorXd& dq) const;
};

struct IkProblem {
  QpProblem qp;
  std::vector<CostTerm> costs;
  double lambda = 0.0;
  std::vector<RowTag> rows;
  // Model collision pairs in the order RowTag::index refers to.
  std::vector<std::pair<int, int>> collision_pairs;
  // Damper row (-nᵀ(J_a - J_b) over the linear rows) and signed distance for
  // every pair, including pairs outside the influence distance.
  std::vector<Eigen::RowVectorXd> collision_gradients;
  std::vector<double> collision_distances;
  // Torso-minus-base xy offset minus its target, and its Jacobian.
  Eigen::Vector2d com_offset = Eigen::Vector2d::Zero();
  Eigen::MatrixXd com_jacobian;
  Eigen::Vector2d com_offset_target = Eigen::Vector2d::Zero();
};

// Builds the per-tick QP in dq, the displacement over one tick of length dt.
// Throws ValidationError for unknown frozen or upright joints and
// DimensionError when q does not match the model.
IkProblem AssembleQp(const RobotModel& model, const GeneralizedState& q,
                     const TrackingTargets& targets, const IkProfile& profile, double dt,
                     const IkOptions& options = {});

// Torso-minus-base xy offset at the model's nominal posture.
Eigen::Vector2d NominalComOffset(const RobotModel& model, const IkFrames& frames = {});

struct TrackingError {
  double position = 0.0;  // m
  double rotation = 0.0;  // rad
};

struct IkDiagnostics {
  QpStatus status = QpStatus::kOptimal;
  double kkt_residual = 0.0;
  int active_set_size = 0;
  int qp_iterations = 0;
  bool warm_started = false;

  // Cost terms evaluated at the returned dq.
  std::map<std::string, double> cost_values;
  // Smallest slack per constraint family at the returned step, evaluated on
  // the nonlinear kinematics for collision and torso-offset rows. Negative
  // means violated.
  std::map<std::string, double> constraint_margins;

  TrackingError left_ee;   // at q_next
  TrackingError right_ee;  // at q_next
  std::optional<double> head_rotation_error;

  Eigen::Vector2d com_offset = Eigen::Vector2d::Zero();  // at q_next, minus r_star
  double min_collision_distance = 0.0;                   // at q_next
  int collision_rows = 0;
  int dropped_collision_rows = 0;
  int guard_rounds = 0;
  // Factor applied to the solved step to keep the nonlinear checks satisfied.
  double step_scale = 1.0;
};

struct IkStep {
  GeneralizedVelocity dq;
  GeneralizedState q_next;
  IkDiagnostics diagnostics;
};

// Per-tick whole-body IK. Holds the QP warm start; one instance per control
// loop.
class WholeBodyIk {
 public:
  WholeBodyIk(const RobotModel& model, IkProfile profile, IkOptions options = {});

  IkStep Step(const GeneralizedState& q, const TrackingTargets& targets, double dt);

  const IkProfile& profile() const { return profile_; }
  const IkOptions& options() const { return options_; }
  void Reset() { solver_.ResetWarmStart(); }

 private:
  const RobotModel* model_;
  IkProfile profile_;
  IkOptions options_;
  ActiveSetQpSolver solver_;
};

// Single cold-start step.
IkStep StepIk(const RobotModel& model, const GeneralizedState& q,
              const TrackingTargets& targets, const IkProfile& profile, double dt,
              const IkOptions& options = {});

}  // namespace wbc

#endif  // WBC_WBIK_HPP_
