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

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "wbc/collision.hpp"
#include "wbc/errors.hpp"

namespace wbc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Vector2d TorsoBaseOffset(const Kinematics& kin, const IkFrames& frames) {
  return (kin.FramePose(frames.torso).translation - kin.FramePose(frames.base).translation)
      .head<2>();
}

Eigen::MatrixXd TorsoBaseJacobian(const Kinematics& kin, const IkFrames& frames) {
  return kin.FrameJacobian(frames.torso).topRows(2) - kin.FrameJacobian(frames.base).topRows(2);
}

std::vector<int> JointCoordinates(const RobotModel& model, const std::string& name,
                                  std::string_view what) {
  const auto j = model.JointIndex(name);
  if (!j) throw ValidationError("unknown " + std::string(what) + " joint '" + name + "'");
  const JointSpec& spec = model.joints()[*j];
  std::vector<int> out;
  for (int k = 0; k < spec.dof; ++k) out.push_back(spec.q_index + k);
  return out;
}

struct RowBuilder {
  int n;
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  std::vector<RowTag> tags;

  void Add(const Eigen::RowVectorXd& row, double h, RowTag tag) {
    rows.push_back(row);
    rhs.push_back(h);
    tags.push_back(tag);
  }
  void AddUnit(int i, double sign, double h, RowTag tag) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
    row[i] = sign;
    Add(row, h, tag);
  }
  void Fill(Eigen::MatrixXd& m, Eigen::VectorXd& v) const {
    m.resize(static_cast<Eigen::Index>(rows.size()), n);
    v.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      m.row(static_cast<Eigen::Index>(i)) = rows[i];
      v[static_cast<Eigen::Index>(i)] = rhs[i];
    }
  }
};

void RebuildObjective(IkProblem& p) {
  const int n = p.qp.num_variables();
  Eigen::MatrixXd H = p.lambda * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (const CostTerm& c : p.costs) {
    const Eigen::MatrixXd WM = c.w.asDiagonal() * c.M;
    H.noalias() += c.M.transpose() * WM;
    g.noalias() -= WM.transpose() * c.r;
  }
  p.qp.H = 2.0 * H;
  p.qp.H = 0.5 * (p.qp.H + p.qp.H.transpose());
  p.qp.g = 2.0 * g;
}

void RemoveRows(IkProblem& p, const std::vector<bool>& drop) {
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < drop.size(); ++i) {
    if (!drop[i]) keep.push_back(static_cast<Eigen::Index>(i));
  }
  Eigen::MatrixXd G(static_cast<Eigen::Index>(keep.size()), p.qp.G.cols());
  Eigen::VectorXd h(static_cast<Eigen::Index>(keep.size()));
  std::vector<RowTag> tags;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    G.row(static_cast<Eigen::Index>(k)) = p.qp.G.row(keep[k]);
    h[static_cast<Eigen::Index>(k)] = p.qp.h[keep[k]];
    tags.push_back(p.rows[static_cast<std::size_t>(keep[k])]);
  }
  p.qp.G = std::move(G);
  p.qp.h = std::move(h);
  p.rows = std::move(tags);
}

void AppendRow(IkProblem& p, const Eigen::RowVectorXd& row, double h, RowTag tag) {
  const Eigen::Index m = p.qp.G.rows();
  p.qp.G.conservativeResize(m + 1, Eigen::NoChange);
  p.qp.h.conservativeResize(m + 1);
  p.qp.G.row(m) = row;
  p.qp.h[m] = h;
  p.rows.push_back(tag);
}

int FindRow(const IkProblem& p, ConstraintKind kind, int index, int sign) {
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const RowTag& t = p.rows[i];
    if (t.kind == kind && t.index == index && t.sign == sign) return static_cast<int>(i);
  }
  return -1;
}

// Nonlinear quantities at a candidate configuration.
struct Probe {
  std::vector<double> distances;
  Eigen::Vector2d com = Eigen::Vector2d::Zero();  // offset minus target
};

Probe ProbeAt(const RobotModel& model, const GeneralizedState& q, const IkProblem& p,
              const IkFrames& frames) {
  const Kinematics kin(model, q);
  Probe out;
  for (const DistanceResult& d : CollisionDistances(kin, p.collision_pairs)) {
    out.distances.push_back(d.distance);
  }
  out.com = TorsoBaseOffset(kin, frames) - p.com_offset_target;
  return out;
}

GeneralizedState Advance(const RobotModel& model, const GeneralizedState& q,
                         const Eigen::VectorXd& dq) {
  return Integrate(model, q, GeneralizedVelocity{dq});
}

}  // namespace

std::string_view ToString(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kPosition:
      return "position";
    case ConstraintKind::kJointVelocity:
      return "joint_velocity";
    case ConstraintKind::kBaseVelocity:
      return "base_velocity";
    case ConstraintKind::kCom:
      return "com";
    case ConstraintKind::kCollision:
      return "collision";
  }
  return "unknown";
}

double CostTerm::Value(const Eigen::VectorXd& dq) const {
  const Eigen::VectorXd e = M * dq - r;
  return e.dot(w.asDiagonal() * e);
}

Eigen::Vector2d NominalComOffset(const RobotModel& model, const IkFrames& frames) {
  return TorsoBaseOffset(Kinematics(model, GeneralizedState{model.nominal_posture()}), frames);
}

IkProblem AssembleQp(const RobotModel& model, const GeneralizedState& q,
                     const TrackingTargets& targets, const IkProfile& profile, double dt,
                     const IkOptions& options) {
  const int n = model.nv();
  if (q.q.size() != n) {
    throw DimensionError("configuration has " + std::to_string(q.q.size()) +
                         " coordinates, model expects " + std::to_string(n));
  }
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const IkFrames& frames = options.frames;
  const Kinematics kin(model, q);

  IkProblem p;
  p.lambda = profile.lambda;
  p.com_offset_target = profile.com_offset ? *profile.com_offset : NominalComOffset(model, frames);

  // End-effector tracking.
  const auto ee_term = [&](const char* name, const std::string& frame, const Pose& target) {
    const Pose cur = kin.FramePose(frame);
    CostTerm t;
    t.name = name;
    t.M = kin.FrameJacobian(frame);
    t.r.resize(6);
    t.r.head<3>() = target.translation - cur.translation;
    t.r.tail<3>() = (target.rotation * cur.rotation.inverse()).Log();
    t.w.resize(6);
    t.w << profile.w_p, profile.w_p, profile.w_p, profile.w_o, profile.w_o, profile.w_o;
    p.costs.push_back(std::move(t));
  };
  ee_term("ee_left", frames.left_ee, targets.left_ee);
  ee_term("ee_right", frames.right_ee, targets.right_ee);

  // Nominal posture.
  {
    CostTerm t;
    t.name = "nominal";
    t.M = Eigen::MatrixXd::Identity(n, n);
    t.r = model.nominal_posture() - q.q;
    t.w = Eigen::VectorXd::Zero(n);
    for (int i : model.GroupCoordinates(frames.torso_group)) t.w[i] = profile.w_nom_torso;
    for (int i : model.GroupCoordinates(frames.left_arm_group)) t.w[i] = profile.w_nom_arm;
    for (int i : model.GroupCoordinates(frames.right_arm_group)) t.w[i] = profile.w_nom_arm;
    p.costs.push_back(std::move(t));
  }

  // Current posture.
  const std::optional<int> base = model.BaseCoordinate();
  {
    CostTerm t;
    t.name = "current";
    t.M = Eigen::MatrixXd::Identity(n, n);
    t.r = Eigen::VectorXd::Zero(n);
    t.w = Eigen::VectorXd::Constant(n, profile.w_curr);
    if (base) {
      t.w[*base] = profile.w_base_pos;
      t.w[*base + 1] = profile.w_base_pos;
      t.w[*base + 2] = profile.w_base_ori;
    }
    p.costs.push_back(std::move(t));
  }

  // Torso over base.
  p.com_offset = TorsoBaseOffset(kin, frames) - p.com_offset_target;
  p.com_jacobian = TorsoBaseJacobian(kin, frames);
  {
    CostTerm t;
    t.name = "com";
    t.M = p.com_jacobian;
    t.r = -p.com_offset;
    t.w = Eigen::VectorXd::Constant(2, profile.w_com);
    p.costs.push_back(std::move(t));
  }

  if (targets.head_rotation) {
    const Pose head = kin.FramePose(frames.head);
    CostTerm t;
    t.name = "head";
    t.M = kin.FrameJacobian(frames.head).bottomRows(3);
    t.r = (*targets.head_rotation * head.rotation.inverse()).Log();
    t.w = Eigen::VectorXd::Constant(3, profile.w_head);
    p.costs.push_back(std::move(t));
  }

  p.qp.H.resize(n, n);
  p.qp.g.resize(n);
  RebuildObjective(p);

  // Inequalities.
  RowBuilder ineq{n, {}, {}, {}};
  for (const JointSpec& j : model.joints()) {
    if (!j.position_limits) continue;
    const auto [lo, hi] = *j.position_limits;
    for (int k = 0; k < j.dof; ++k) {
      const int i = j.q_index + k;
      ineq.AddUnit(i, 1.0, hi - q.q[i], {ConstraintKind::kPosition, i, 1});
      ineq.AddUnit(i, -1.0, q.q[i] - lo, {ConstraintKind::kPosition, i, -1});
    }
  }
  for (const JointSpec& j : model.joints()) {
    if (j.type == JointType::kPlanarBase) {
      const double lin = profile.velocity_safety * profile.base_linear_velocity_limit * dt;
      const double ang = profile.velocity_safety * profile.base_angular_velocity_limit * dt;
      const double lim[3] = {lin, lin, ang};
      for (int k = 0; k < 3; ++k) {
        const int i = j.q_index + k;
        ineq.AddUnit(i, 1.0, lim[k], {ConstraintKind::kBaseVelocity, i, 1});
        ineq.AddUnit(i, -1.0, lim[k], {ConstraintKind::kBaseVelocity, i, -1});
      }
      continue;
    }
    const double lim = profile.velocity_safety * j.velocity_limit * dt;
    for (int k = 0; k < j.dof; ++k) {
      const int i = j.q_index + k;
      ineq.AddUnit(i, 1.0, lim, {ConstraintKind::kJointVelocity, i, 1});
      ineq.AddUnit(i, -1.0, lim, {ConstraintKind::kJointVelocity, i, -1});
    }
  }
  const double bounds[2] = {profile.b_x, profile.b_y};
  for (int a = 0; a < 2; ++a) {
    const Eigen::RowVectorXd row = p.com_jacobian.row(a);
    ineq.Add(row, bounds[a] - p.com_offset[a], {ConstraintKind::kCom, a, 1});
    ineq.Add(-row, bounds[a] + p.com_offset[a], {ConstraintKind::kCom, a, -1});
  }

  // Velocity dampers: nᵀ(J_a − J_b) dq ≥ −ξ(d − d_safe), stored as ≤ rows.
  p.collision_pairs = model.CollisionPairs();
  const auto& bodies = model.collision_bodies();
  const auto distances = CollisionDistances(kin, p.collision_pairs);
  for (std::size_t k = 0; k < p.collision_pairs.size(); ++k) {
    const auto& [ia, ib] = p.collision_pairs[k];
    const DistanceResult& d = distances[k];
    const Eigen::MatrixXd Ja = kin.PointJacobian(bodies[ia].link_index, d.witness_a).topRows(3);
    const Eigen::MatrixXd Jb = kin.PointJacobian(bodies[ib].link_index, d.witness_b).topRows(3);
    const Eigen::RowVectorXd row = -(d.normal.transpose() * (Ja - Jb));
    p.collision_gradients.push_back(row);
    p.collision_distances.push_back(d.distance);
    if (d.distance < profile.d_inf) {
      ineq.Add(row, profile.collision_gain * (d.distance - profile.d_safe),
               {ConstraintKind::kCollision, static_cast<int>(k), 1, d.distance});
    }
  }
  ineq.Fill(p.qp.G, p.qp.h);
  p.rows = std::move(ineq.tags);

  // Equalities.
  std::set<int> frozen;
  for (const std::string& name : profile.frozen_joints) {
    for (int i : JointCoordinates(model, name, "frozen")) frozen.insert(i);
  }
  for (const std::string& name : options.extra_frozen_joints) {
    for (int i : JointCoordinates(model, name, "frozen")) frozen.insert(i);
  }
  std::vector<int> upright;
  for (const std::string& name : profile.upright_joints) {
    for (int i : JointCoordinates(model, name, "upright")) upright.push_back(i);
  }
  RowBuilder eq{n, {}, {}, {}};
  if (profile.upright_mode == UprightMode::kSumZero) {
    if (!upright.empty()) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
      for (int i : upright) row[i] = 1.0;
      eq.Add(row, 0.0, {});
    }
  } else {
    for (int i : upright) frozen.insert(i);
  }
  for (int i : frozen) eq.AddUnit(i, 1.0, 0.0, {});
  eq.Fill(p.qp.A, p.qp.b);

  p.qp.CheckDimensions();
  return p;
}

WholeBodyIk::WholeBodyIk(const RobotModel& model, IkProfile profile, IkOptions options)
    : model_(&model),
      profile_(std::move(profile)),
      options_(std::move(options)),
      solver_(options_.qp) {
  profile_.Validate();
  if (!profile_.com_offset) profile_.com_offset = NominalComOffset(model, options_.frames);
  for (const std::string& name : profile_.frozen_joints) JointCoordinates(model, name, "frozen");
  for (const std::string& name : options_.extra_frozen_joints) {
    JointCoordinates(model, name, "frozen");
  }
  for (const std::string& name : profile_.upright_joints) JointCoordinates(model, name, "upright");
}

IkStep WholeBodyIk::Step(const GeneralizedState& q, const TrackingTargets& targets, double dt) {
  const RobotModel& model = *model_;
  const int n = model.nv();
  IkProblem prob = AssembleQp(model, q, targets, profile_, dt, options_);
  IkDiagnostics diag;
  diag.collision_rows = static_cast<int>(std::count_if(
      prob.rows.begin(), prob.rows.end(),
      [](const RowTag& t) { return t.kind == ConstraintKind::kCollision; }));

  QpSolution sol = solver_.Solve(prob.qp);

  // Infeasible: drop damper rows from the farthest influence band inwards.
  if (sol.status == QpStatus::kInfeasible && diag.collision_rows > 0) {
    const double mid = profile_.d_safe + 0.5 * (profile_.d_inf - profile_.d_safe);
    for (double threshold : {mid, profile_.d_safe, -kInf}) {
      std::vector<bool> drop(prob.rows.size(), false);
      int dropped = 0;
      for (std::size_t i = 0; i < prob.rows.size(); ++i) {
        const RowTag& t = prob.rows[i];
        if (t.kind == ConstraintKind::kCollision && t.distance >= threshold) {
          drop[i] = true;
          ++dropped;
        }
      }
      if (dropped == 0) continue;
      RemoveRows(prob, drop);
      diag.dropped_collision_rows += dropped;
      sol = solver_.Solve(prob.qp);
      if (sol.status != QpStatus::kInfeasible) break;
    }
  }

  Eigen::VectorXd dq = Eigen::VectorXd::Zero(n);
  if (sol.status != QpStatus::kInfeasible) dq = sol.x;

  const Probe now{prob.collision_distances, prob.com_offset};
  const double bounds[2] = {profile_.b_x, profile_.b_y};
  // Violation test on the nonlinear quantities. A pair or axis that already
  // violates at q may not get worse.
  const auto acceptable = [&](const Probe& next) {
    for (std::size_t k = 0; k < next.distances.size(); ++k) {
      const double floor = std::min(profile_.d_safe, now.distances[k]);
      if (next.distances[k] < floor) return false;
    }
    for (int a = 0; a < 2; ++a) {
      const double ceil = std::max(bounds[a], std::abs(now.com[a]));
      if (std::abs(next.com[a]) > ceil) return false;
    }
    return true;
  };

  if (options_.nonlinear_guard && sol.status != QpStatus::kInfeasible) {
    for (int round = 0; round < options_.guard_rounds; ++round) {
      const Probe next = ProbeAt(model, Advance(model, q, dq), prob, options_.frames);
      if (acceptable(next)) break;
      // Shift each violated row by the gap between the nonlinear value and its
      // linear prediction, then re-solve.
      for (std::size_t k = 0; k < next.distances.size(); ++k) {
        if (next.distances[k] >= std::min(profile_.d_safe, now.distances[k])) continue;
        const Eigen::RowVectorXd& row = prob.collision_gradients[k];
        const double predicted = now.distances[k] - row.dot(dq);
        const double gap = next.distances[k] - predicted - 1e-9;
        const int r = FindRow(prob, ConstraintKind::kCollision, static_cast<int>(k), 1);
        if (r >= 0) {
          prob.qp.h[r] += gap;
        } else {
          AppendRow(prob, row,
                    profile_.collision_gain * (now.distances[k] - profile_.d_safe) + gap,
                    {ConstraintKind::kCollision, static_cast<int>(k), 1, now.distances[k]});
          ++diag.collision_rows;
        }
      }
      for (int a = 0; a < 2; ++a) {
        if (std::abs(next.com[a]) <= std::max(bounds[a], std::abs(now.com[a]))) continue;
        const int sign = next.com[a] > 0.0 ? 1 : -1;
        const double predicted = now.com[a] + prob.com_jacobian.row(a).dot(dq);
        const double gap = sign * (next.com[a] - predicted) + 1e-9;
        const int r = FindRow(prob, ConstraintKind::kCom, a, sign);
        if (r >= 0) prob.qp.h[r] -= gap;
      }
      ++diag.guard_rounds;
      QpSolution retry = solver_.Solve(prob.qp);
      if (retry.status == QpStatus::kInfeasible) break;
      sol = std::move(retry);
      dq = sol.x;
    }
    // Last resort: shorten the step. Linear rows stay satisfied because dq = 0
    // satisfies them whenever q itself is admissible.
    if (!acceptable(ProbeAt(model, Advance(model, q, dq), prob, options_.frames))) {
      double scale = 1.0;
      bool ok = false;
      for (int k = 0; k < 30 && !ok; ++k) {
        scale *= 0.5;
        ok = acceptable(ProbeAt(model, Advance(model, q, scale * dq), prob, options_.frames));
      }
      if (!ok) scale = 0.0;
      dq *= scale;
      diag.step_scale = scale;
    }
  }

  IkStep out;
  out.dq.dq = dq;
  out.q_next = Advance(model, q, dq);

  diag.status = sol.status;
  diag.kkt_residual = sol.kkt_residual;
  diag.active_set_size = static_cast<int>(sol.active_set.size());
  diag.qp_iterations = sol.iterations;
  diag.warm_started = sol.warm_started;

  for (const CostTerm& c : prob.costs) diag.cost_values[c.name] = c.Value(dq);
  diag.cost_values["damping"] = prob.lambda * dq.squaredNorm();

  // Margins.
  const Kinematics next_kin(model, out.q_next);
  double pos = kInf, jvel = kInf, bvel = kInf;
  for (const JointSpec& j : model.joints()) {
    for (int k = 0; k < j.dof; ++k) {
      const int i = j.q_index + k;
      if (j.position_limits) {
        const auto [lo, hi] = *j.position_limits;
        pos = std::min({pos, hi - out.q_next.q[i], out.q_next.q[i] - lo});
      }
      if (j.type == JointType::kPlanarBase) {
        const double lim = profile_.velocity_safety * dt *
                           (k < 2 ? profile_.base_linear_velocity_limit
                                  : profile_.base_angular_velocity_limit);
        bvel = std::min(bvel, lim - std::abs(dq[i]));
      } else {
        jvel = std::min(jvel, profile_.velocity_safety * j.velocity_limit * dt - std::abs(dq[i]));
      }
    }
  }
  if (pos < kInf) diag.constraint_margins["position"] = pos;
  if (jvel < kInf) diag.constraint_margins["joint_velocity"] = jvel;
  if (bvel < kInf) diag.constraint_margins["base_velocity"] = bvel;

  diag.com_offset = TorsoBaseOffset(next_kin, options_.frames) - prob.com_offset_target;
  diag.constraint_margins["com"] = std::min(profile_.b_x - std::abs(diag.com_offset.x()),
                                            profile_.b_y - std::abs(diag.com_offset.y()));
  diag.min_collision_distance = kInf;
  for (const DistanceResult& d : CollisionDistances(next_kin, prob.collision_pairs)) {
    diag.min_collision_distance = std::min(diag.min_collision_distance, d.distance);
  }
  if (!prob.collision_pairs.empty()) {
    diag.constraint_margins["collision"] = diag.min_collision_distance - profile_.d_safe;
  }
  if (prob.qp.num_equalities() > 0) {
    diag.constraint_margins["equality"] = -(prob.qp.A * dq - prob.qp.b).cwiseAbs().maxCoeff();
  }

  const auto track = [&](const std::string& frame, const Pose& target) {
    const Pose cur = next_kin.FramePose(frame);
    return TrackingError{(target.translation - cur.translation).norm(),
                         AngleBetween(target.rotation, cur.rotation)};
  };
  diag.left_ee = track(options_.frames.left_ee, targets.left_ee);
  diag.right_ee = track(options_.frames.right_ee, targets.right_ee);
  if (targets.head_rotation) {
    diag.head_rotation_error =
        AngleBetween(*targets.head_rotation, next_kin.FramePose(options_.frames.head).rotation);
  }

  out.diagnostics = std::move(diag);
  return out;
}

IkStep StepIk(const RobotModel& model, const GeneralizedState& q, const TrackingTargets& targets,
              const IkProfile& profile, double dt, const IkOptions& options) {
  IkOptions cold = options;
  cold.qp.warm_start = false;
  WholeBodyIk ik(model, profile, cold);
  return ik.Step(q, targets, dt);
}

}  // namespace wbc
