#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace cldnav {

/// One affine inequality sum_j c_j x_{i_j} <= rhs with a sparse support.
struct LinearConstraint {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0.0;

  double eval(const Eigen::VectorXd& x) const {
    double v = 0.0;
    for (const auto& [i, c] : terms) v += c * x[i];
    return v;
  }
  double slack(const Eigen::VectorXd& x) const { return rhs - eval(x); }
};

/// Smooth convex objective with analytic derivatives. in_domain guards
/// log/power terms whose domain is an open set; value/gradient/hessian are
/// only called on in-domain points.
class SmoothObjective {
 public:
  virtual ~SmoothObjective() = default;
  virtual int dim() const = 0;
  virtual bool in_domain(const Eigen::VectorXd& x) const { return x.allFinite(); }
  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const = 0;
  virtual void hessian(const Eigen::VectorXd& x, Eigen::MatrixXd& hess) const = 0;
};

/// Convex quadratic 1/2 x'Qx + c'x (+ constant).
class QuadraticObjective : public SmoothObjective {
 public:
  QuadraticObjective(Eigen::MatrixXd Q, Eigen::VectorXd c, double constant = 0.0)
      : Q_(std::move(Q)), c_(std::move(c)), constant_(constant) {}
  int dim() const override { return static_cast<int>(c_.size()); }
  double value(const Eigen::VectorXd& x) const override {
    return 0.5 * x.dot(Q_ * x) + c_.dot(x) + constant_;
  }
  void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const override {
    grad = Q_ * x + c_;
  }
  void hessian(const Eigen::VectorXd&, Eigen::MatrixXd& hess) const override { hess = Q_; }

 private:
  Eigen::MatrixXd Q_;
  Eigen::VectorXd c_;
  double constant_ = 0.0;
};

struct BarrierOptions {
  double t_init = 1.0;
  double t_scale = 20.0;          // barrier parameter multiplier per stage
  double kkt_tolerance = 1e-6;    // bound on per-constraint complementarity
  double gap_tolerance = 1e-8;    // bound on m / t at the final stage
  double newton_tolerance = 1e-13;  // stop stage when decrement^2 / 2 below this
  int max_newton_per_stage = 80;
  int max_newton_total = 1200;
};

struct KktResiduals {
  double stationarity = 0.0;        // ||grad f + A' lambda||_inf
  double primal_violation = 0.0;    // max(0, a_i'x - b_i)
  double complementarity = 0.0;     // max_i lambda_i * slack_i
  double dual_violation = 0.0;      // most negative multiplier
};

struct BarrierResult {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // one per inequality
  double objective = 0.0;
  int newton_iters = 0;
  bool converged = false;
  KktResiduals kkt;
};

/// Minimizes f over {x : constraints hold} by a log-barrier interior-point
/// method with damped Newton centering. `x0` must be strictly feasible and
/// in f's domain. Throws SolverFailure on an infeasible start; returns
/// converged = false (with residuals) when the Newton budget runs out.
BarrierResult solve_barrier(const SmoothObjective& f,
                            const std::vector<LinearConstraint>& constraints,
                            const Eigen::VectorXd& x0, const BarrierOptions& options = {});

}  // namespace cldnav
