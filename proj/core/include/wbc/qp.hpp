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
#ifndef WBC_QP_HPP_
#define WBC_QP_HPP_

#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace wbc {

// Dense strictly convex QP:
//
//   minimize    1/2 xᵀ H x + gᵀ x
//   subject to  G x <= h
//               A x  = b
//
// H must be symmetric positive definite.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  // Empty constraint blocks with the right column count.
  static QpProblem Unconstrained(const Eigen::MatrixXd& H, const Eigen::VectorXd& g);

  int num_variables() const { return static_cast<int>(g.size()); }
  int num_inequalities() const { return static_cast<int>(h.size()); }
  int num_equalities() const { return static_cast<int>(b.size()); }

  // Throws DimensionError on inconsistent shapes.
  void CheckDimensions() const;

  double Objective(const Eigen::VectorXd& x) const;
};

enum class QpStatus { kOptimal, kMaxIterations, kInfeasible };

std::string_view ToString(QpStatus status);

struct KktResiduals {
  double primal = 0.0;           // max(Gx - h)+ and |Ax - b|
  double stationarity = 0.0;     // |Hx + g + Gᵀλ + Aᵀμ|∞
  double complementarity = 0.0;  // max |λ_i (h_i - G_i x)|
  double dual = 0.0;             // max(-λ)+
  double Max() const;
};

KktResiduals ComputeKktResiduals(const QpProblem& p, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& lambda_ineq,
                                 const Eigen::VectorXd& lambda_eq);

struct QpSolution {
  Eigen::VectorXd x;
  QpStatus status = QpStatus::kInfeasible;
  double kkt_residual = 0.0;
  KktResiduals kkt;
  // Inequality indices in the final working set.
  std::vector<int> active_set;
  Eigen::VectorXd lambda_ineq;
  Eigen::VectorXd lambda_eq;
  int iterations = 0;
  bool warm_started = false;
};

class QpSolver {
 public:
  virtual ~QpSolver() = default;
  virtual QpSolution Solve(const QpProblem& problem) = 0;
};

// Primal active-set method for small dense problems. Keeps the final working
// set of the previous call and tries it first on the next one. One instance
// per control loop.
class ActiveSetQpSolver : public QpSolver {
 public:
  struct Options {
    int max_iterations = 500;
    // Constraint violation accepted for a starting point and reported as
    // feasible.
    double feasibility_tolerance = 1e-10;
    // Multipliers above -dual_tolerance count as nonnegative.
    double dual_tolerance = 1e-12;
    bool warm_start = true;
  };

  ActiveSetQpSolver() = default;
  explicit ActiveSetQpSolver(Options options) : options_(options) {}

  QpSolution Solve(const QpProblem& problem) override;

  void ResetWarmStart() { previous_active_.clear(); }
  const Options& options() const { return options_; }

 private:
  Options options_;
  std::vector<int> previous_active_;
};

// Cold-start convenience wrapper.
QpSolution SolveQp(const QpProblem& problem);

}  // namespace wbc

#endif  // WBC_QP_HPP_
