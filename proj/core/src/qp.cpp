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

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "wbc/errors.hpp"

namespace wbc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Options = ActiveSetQpSolver::Options;

// Rows of the working set: all equalities first, then the listed
// inequalities in order.
MatrixXd WorkingMatrix(const QpProblem& p, const std::vector<int>& working) {
  const int me = p.num_equalities();
  MatrixXd aw(me + static_cast<int>(working.size()), p.num_variables());
  if (me > 0) aw.topRows(me) = p.A;
  for (std::size_t k = 0; k < working.size(); ++k) aw.row(me + static_cast<int>(k)) = p.G.row(working[k]);
  return aw;
}

struct EqpStep {
  VectorXd step;
  VectorXd lambda;
};

// Minimizes 1/2 pᵀHp + cᵀp subject to Aw p = 0 with the range-space method:
// with H = L Lᵀ, M = L⁻¹ Awᵀ and u = L⁻¹ c the multipliers are the least
// squares solution of M λ ≈ -u and p = -L⁻ᵀ (u + M λ).
EqpStep SolveEqp(const Eigen::LLT<MatrixXd>& llt, const VectorXd& c, const MatrixXd& aw) {
  const auto L = llt.matrixL();
  const VectorXd u = L.solve(c);
  EqpStep out;
  if (aw.rows() == 0) {
    out.lambda.resize(0);
    out.step = -llt.matrixU().solve(u);
    return out;
  }
  const MatrixXd m = L.solve(aw.transpose());
  out.lambda = -m.colPivHouseholderQr().solve(u);
  out.step = -llt.matrixU().solve(u + m * out.lambda);
  return out;
}

// Minimizer of the objective subject to Aw x = bw. Used to test a warm-start
// working set.
VectorXd SolveEqualityConstrained(const QpProblem& p, const Eigen::LLT<MatrixXd>& llt,
                                  const MatrixXd& aw, const VectorXd& bw) {
  const auto L = llt.matrixL();
  const VectorXd u = L.solve(p.g);
  if (aw.rows() == 0) return -llt.matrixU().solve(u);
  const MatrixXd m = L.solve(aw.transpose());
  const VectorXd lambda = (m.transpose() * m).ldlt().solve(-bw - m.transpose() * u);
  return -llt.matrixU().solve(u + m * lambda);
}

double MaxViolation(const QpProblem& p, const VectorXd& x) {
  double v = 0.0;
  if (p.num_inequalities() > 0) v = std::max(v, (p.G * x - p.h).maxCoeff());
  if (p.num_equalities() > 0) v = std::max(v, (p.A * x - p.b).cwiseAbs().maxCoeff());
  return v;
}

struct ActiveSetResult {
  VectorXd x;
  std::vector<int> working;
  VectorXd lambda;  // equalities first, then `working`
  QpStatus status = QpStatus::kMaxIterations;
  int iterations = 0;
};

// Primal active-set iterations from a feasible x. `working` lists
// inequalities treated as equalities at the start.
ActiveSetResult RunActiveSet(const QpProblem& p, const Eigen::LLT<MatrixXd>& llt, VectorXd x,
                             std::vector<int> working, const Options& opt) {
  const int me = p.num_equalities();
  const int mi = p.num_inequalities();
  std::vector<char> in_working(mi, 0);
  for (int i : working) in_working[i] = 1;

  bool at_subproblem_minimum = false;
  bool bland = false;
  ActiveSetResult res;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    const MatrixXd aw = WorkingMatrix(p, working);
    const VectorXd c = p.H * x + p.g;
    EqpStep eqp = SolveEqp(llt, c, aw);
    const double step_norm = eqp.step.lpNorm<Eigen::Infinity>();

    if (at_subproblem_minimum || step_norm <= 1e-14 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
      // x minimizes over the working set; check inequality multipliers.
      int drop = -1;
      double most_negative = -opt.dual_tolerance;
      for (std::size_t k = 0; k < working.size(); ++k) {
        const double l = eqp.lambda[me + static_cast<int>(k)];
        if (bland) {
          if (l < -opt.dual_tolerance && (drop < 0 || working[k] < working[drop])) drop = static_cast<int>(k);
        } else if (l < most_negative) {
          most_negative = l;
          drop = static_cast<int>(k);
        }
      }
      if (drop < 0) {
        res.x = std::move(x);
        res.working = std::move(working);
        res.lambda = std::move(eqp.lambda);
        res.status = QpStatus::kOptimal;
        res.iterations = iter + 1;
        return res;
      }
      in_working[working[drop]] = 0;
      working.erase(working.begin() + drop);
      at_subproblem_minimum = false;
      continue;
    }

    // Ratio test over inequalities outside the working set. Strict '<' keeps
    // the lowest index on ties.
    double alpha = 1.0;
    int blocking = -1;
    for (int i = 0; i < mi; ++i) {
      if (in_working[i]) continue;
      const double gp = p.G.row(i).dot(eqp.step);
      if (gp <= 1e-12 * p.G.row(i).norm() * step_norm) continue;
      const double slack = std::max(0.0, p.h[i] - p.G.row(i).dot(x));
      const double ratio = slack / gp;
      if (ratio < alpha) {
        alpha = ratio;
        blocking = i;
      }
    }
    x += alpha * eqp.step;
    if (blocking >= 0) {
      working.push_back(blocking);
      in_working[blocking] = 1;
      at_subproblem_minimum = false;
      // Degenerate (zero-length) steps switch to smallest-index choices.
      if (alpha == 0.0) bland = true;
    } else {
      at_subproblem_minimum = true;
    }
  }
  res.x = std::move(x);
  res.working = std::move(working);
  res.lambda = VectorXd::Zero(me + static_cast<int>(res.working.size()));
  res.status = QpStatus::kMaxIterations;
  res.iterations = opt.max_iterations;
  return res;
}

// Phase one: a point satisfying all constraints, or nullopt when none exists.
// Minimizes the largest violation s through the strictly convex problem
//   min 1/2 ε |x - x_e|² + 1/2 ε s² + s  s.t.  G x - s <= h, -s <= 0, A x = b
// whose starting point (x_e, max violation of x_e) is feasible by construction.
std::optional<VectorXd> FindFeasiblePoint(const QpProblem& p, const Options& opt) {
  const int n = p.num_variables();
  const int me = p.num_equalities();
  const int mi = p.num_inequalities();
  VectorXd xe = VectorXd::Zero(n);
  if (me > 0) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(p.A);
    xe = cod.solve(p.b);
    if ((p.A * xe - p.b).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + p.b.lpNorm<Eigen::Infinity>())) {
      return std::nullopt;
    }
  }
  const double violation = mi > 0 ? (p.G * xe - p.h).maxCoeff() : 0.0;
  if (violation <= opt.feasibility_tolerance) return xe;

  constexpr double kEps = 1e-6;
  QpProblem aux;
  aux.H = kEps * MatrixXd::Identity(n + 1, n + 1);
  aux.g = VectorXd::Zero(n + 1);
  aux.g.head(n) = -kEps * xe;
  aux.g[n] = 1.0;
  aux.G = MatrixXd::Zero(mi + 1, n + 1);
  aux.G.topLeftCorner(mi, n) = p.G;
  aux.G.col(n).head(mi).setConstant(-1.0);
  aux.G(mi, n) = -1.0;
  aux.h = VectorXd::Zero(mi + 1);
  aux.h.head(mi) = p.h;
  aux.A = MatrixXd::Zero(me, n + 1);
  if (me > 0) aux.A.leftCols(n) = p.A;
  aux.b = p.b;

  VectorXd z0(n + 1);
  z0.head(n) = xe;
  z0[n] = violation;
  Eigen::LLT<MatrixXd> llt(aux.H);
  const ActiveSetResult r = RunActiveSet(aux, llt, z0, {}, opt);
  if (r.x[n] > 1e-9) return std::nullopt;
  return VectorXd(r.x.head(n));
}

}  // namespace

QpProblem QpProblem::Unconstrained(const Eigen::MatrixXd& H, const Eigen::VectorXd& g) {
  QpProblem p;
  p.H = H;
  p.g = g;
  p.G.resize(0, g.size());
  p.h.resize(0);
  p.A.resize(0, g.size());
  p.b.resize(0);
  return p;
}

void QpProblem::CheckDimensions() const {
  const auto n = g.size();
  if (H.rows() != n || H.cols() != n) throw DimensionError("QP: H must be n x n");
  if (G.cols() != n || G.rows() != h.size()) throw DimensionError("QP: G must be m x n with h of length m");
  if (A.cols() != n || A.rows() != b.size()) throw DimensionError("QP: A must be k x n with b of length k");
}

double QpProblem::Objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(H * x) + g.dot(x);
}

std::string_view ToString(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kMaxIterations: return "max-iterations";
    case QpStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

double KktResiduals::Max() const {
  return std::max({primal, stationarity, complementarity, dual});
}

KktResiduals ComputeKktResiduals(const QpProblem& p, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& lambda_ineq,
                                 const Eigen::VectorXd& lambda_eq) {
  KktResiduals r;
  r.primal = std::max(0.0, MaxViolation(p, x));
  VectorXd grad = p.H * x + p.g;
  if (p.num_inequalities() > 0) {
    grad += p.G.transpose() * lambda_ineq;
    const VectorXd slack = p.h - p.G * x;
    r.complementarity = lambda_ineq.cwiseProduct(slack).cwiseAbs().maxCoeff();
    r.dual = std::max(0.0, -lambda_ineq.minCoeff());
  }
  if (p.num_equalities() > 0) grad += p.A.transpose() * lambda_eq;
  r.stationarity = grad.lpNorm<Eigen::Infinity>();
  return r;
}

QpSolution ActiveSetQpSolver::Solve(const QpProblem& p) {
  p.CheckDimensions();
  const int n = p.num_variables();
  const int me = p.num_equalities();
  const int mi = p.num_inequalities();
  Eigen::LLT<MatrixXd> llt(p.H);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("QP: H is not positive definite");

  QpSolution sol;
  std::optional<VectorXd> start;
  std::vector<int> working;

  if (options_.warm_start && !previous_active_.empty()) {
    std::vector<int> guess;
    for (int i : previous_active_) {
      if (i < mi) guess.push_back(i);
    }
    const MatrixXd aw = WorkingMatrix(p, guess);
    if (aw.rows() > 0 && aw.rows() <= n) {
      Eigen::ColPivHouseholderQR<MatrixXd> qr(aw.transpose());
      if (qr.rank() == aw.rows()) {
        VectorXd bw(aw.rows());
        bw.head(me) = p.b;
        for (std::size_t k = 0; k < guess.size(); ++k) bw[me + static_cast<int>(k)] = p.h[guess[k]];
        VectorXd xw = SolveEqualityConstrained(p, llt, aw, bw);
        if (xw.allFinite() && MaxViolation(p, xw) <= options_.feasibility_tolerance) {
          start = std::move(xw);
          working = std::move(guess);
          sol.warm_started = true;
        }
      }
    }
  }
  if (!start) {
    start = FindFeasiblePoint(p, options_);
    working.clear();
  }
  if (!start) {
    sol.x = VectorXd::Zero(n);
    sol.status = QpStatus::kInfeasible;
    sol.lambda_ineq = VectorXd::Zero(mi);
    sol.lambda_eq = VectorXd::Zero(me);
    sol.kkt = ComputeKktResiduals(p, sol.x, sol.lambda_ineq, sol.lambda_eq);
    sol.kkt_residual = sol.kkt.Max();
    previous_active_.clear();
    return sol;
  }

  ActiveSetResult r = RunActiveSet(p, llt, std::move(*start), std::move(working), options_);
  sol.x = std::move(r.x);
  sol.status = r.status;
  sol.iterations = r.iterations;
  sol.active_set = r.working;
  sol.lambda_eq = r.lambda.head(me);
  sol.lambda_ineq = VectorXd::Zero(mi);
  for (std::size_t k = 0; k < r.working.size(); ++k) {
    sol.lambda_ineq[r.working[k]] = r.lambda[me + static_cast<int>(k)];
  }
  sol.kkt = ComputeKktResiduals(p, sol.x, sol.lambda_ineq, sol.lambda_eq);
  sol.kkt_residual = sol.kkt.Max();
  if (r.status == QpStatus::kOptimal) {
    previous_active_ = r.working;
  } else {
    previous_active_.clear();
  }
  return sol;
}

QpSolution SolveQp(const QpProblem& problem) {
  ActiveSetQpSolver solver(ActiveSetQpSolver::Options{.warm_start = false});
  return solver.Solve(problem);
}

}  // namespace wbc
