#include "cldnav/solver.hpp"

#include <cmath>
#include <limits>

#include "cldnav/errors.hpp"

namespace cldnav {

namespace {

double barrier_value(const std::vector<LinearConstraint>& cons, const Eigen::VectorXd& x) {
  double phi = 0.0;
  for (const auto& c : cons) {
    const double s = c.slack(x);
    if (s <= 0.0) return std::numeric_limits<double>::infinity();
    phi -= std::log(s);
  }
  return phi;
}

}  // namespace

BarrierResult solve_barrier(const SmoothObjective& f,
                            const std::vector<LinearConstraint>& constraints,
                            const Eigen::VectorXd& x0, const BarrierOptions& options) {
  const int n = f.dim();
  const int m = static_cast<int>(constraints.size());
  if (x0.size() != n) throw SolverFailure("solve_barrier: start has wrong dimension");
  if (!f.in_domain(x0)) throw SolverFailure("solve_barrier: start outside objective domain");
  for (const auto& c : constraints) {
    if (c.slack(x0) <= 0.0) {
      throw SolverFailure("solve_barrier: start is not strictly feasible");
    }
  }

  BarrierResult result;
  result.x = x0;

  const double t_final =
      std::max({options.t_init, 1.0 / options.kkt_tolerance,
                m > 0 ? static_cast<double>(m) / options.gap_tolerance : 1.0});
  double t = options.t_init;

  Eigen::VectorXd grad_f(n), grad(n);
  Eigen::MatrixXd hess(n, n);
  bool budget_ok = true;

  // Centering objective: f(x) + phi(x)/t. The 1/t scaling keeps the Hessian
  // comparable to f's away from active constraints.
  auto total_value = [&](const Eigen::VectorXd& x) {
    if (!f.in_domain(x)) return std::numeric_limits<double>::infinity();
    const double phi = barrier_value(constraints, x);
    if (!std::isfinite(phi)) return phi;
    return f.value(x) + phi / t;
  };

  while (true) {
    // Newton centering at the current t.
    for (int iter = 0; iter < options.max_newton_per_stage; ++iter) {
      if (result.newton_iters >= options.max_newton_total) {
        budget_ok = false;
        break;
      }
      f.gradient(result.x, grad_f);
      f.hessian(result.x, hess);
      grad = grad_f;
      for (const auto& c : constraints) {
        const double s = c.slack(result.x);
        const double gs = 1.0 / (t * s);
        const double hs = 1.0 / (t * s * s);
        for (const auto& [i, ci] : c.terms) {
          grad[i] += gs * ci;
          for (const auto& [j, cj] : c.terms) hess(i, j) += hs * ci * cj;
        }
      }

      Eigen::LLT<Eigen::MatrixXd> llt(hess);
      Eigen::VectorXd step;
      if (llt.info() == Eigen::Success) {
        step = llt.solve(-grad);
      } else {
        // Ridge fallback for numerically semidefinite Hessians.
        double ridge = 1e-10 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
        Eigen::MatrixXd reg = hess;
        for (int k = 0; k < 12; ++k) {
          reg.diagonal().array() += ridge;
          llt.compute(reg);
          if (llt.info() == Eigen::Success) break;
          ridge *= 10.0;
        }
        if (llt.info() != Eigen::Success) {
          throw SolverFailure("solve_barrier: Hessian factorization failed");
        }
        step = llt.solve(-grad);
      }
      ++result.newton_iters;

      const double decrement2 = -grad.dot(step);
      if (decrement2 * 0.5 <= options.newton_tolerance) break;

      // Largest step keeping all slacks strictly positive.
      double alpha_max = 1.0;
      for (const auto& c : constraints) {
        double dv = 0.0;
        for (const auto& [i, ci] : c.terms) dv += ci * step[i];
        if (dv > 0.0) {
          alpha_max = std::min(alpha_max, 0.99 * c.slack(result.x) / dv);
        }
      }

      const double f0 = total_value(result.x);
      double alpha = alpha_max;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Eigen::VectorXd trial = result.x + alpha * step;
        const double ft = total_value(trial);
        if (std::isfinite(ft) && ft <= f0 + 1e-4 * alpha * grad.dot(step)) {
          result.x = trial;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;  // stalled; the stage is as centered as it gets
    }

    if (!budget_ok || t >= t_final) break;
    t = std::min(t * options.t_scale, t_final);
  }

  // Multiplier estimates: barrier values 1/(t s) for inactive rows, then a
  // least-squares polish over the near-active rows so the reported
  // stationarity reflects the true KKT point rather than the centering
  // residual at finite t.
  result.multipliers.resize(m);
  std::vector<int> active;
  for (int i = 0; i < m; ++i) {
    const double s = constraints[i].slack(result.x);
    result.multipliers[i] = 1.0 / (t * s);
    if (result.multipliers[i] >= std::sqrt(1.0 / t)) active.push_back(i);
  }
  if (!active.empty()) {
    f.gradient(result.x, grad_f);
    Eigen::VectorXd rhs = -grad_f;
    for (int i = 0; i < m; ++i) {
      bool is_active = false;
      for (int a : active) is_active = is_active || a == i;
      if (is_active) continue;
      for (const auto& [j, cj] : constraints[i].terms) rhs[j] -= result.multipliers[i] * cj;
    }
    for (int pass = 0; pass < 4 && !active.empty(); ++pass) {
      Eigen::MatrixXd At = Eigen::MatrixXd::Zero(n, static_cast<int>(active.size()));
      for (std::size_t k = 0; k < active.size(); ++k) {
        for (const auto& [j, cj] : constraints[static_cast<std::size_t>(active[k])].terms) {
          At(j, static_cast<Eigen::Index>(k)) = cj;
        }
      }
      const Eigen::VectorXd lam = At.completeOrthogonalDecomposition().solve(rhs);
      if (lam.minCoeff() >= 0.0) {
        for (std::size_t k = 0; k < active.size(); ++k) {
          result.multipliers[active[k]] = lam[static_cast<Eigen::Index>(k)];
        }
        break;
      }
      // Drop rows whose polished multiplier went negative and retry.
      std::vector<int> kept;
      for (std::size_t k = 0; k < active.size(); ++k) {
        if (lam[static_cast<Eigen::Index>(k)] >= 0.0) kept.push_back(active[k]);
      }
      if (kept.size() == active.size()) break;
      active = std::move(kept);
    }
  }

  f.gradient(result.x, grad_f);
  Eigen::VectorXd stat = grad_f;
  for (int i = 0; i < m; ++i) {
    const double s = constraints[i].slack(result.x);
    const double lam = result.multipliers[i];
    for (const auto& [j, cj] : constraints[i].terms) stat[j] += lam * cj;
    result.kkt.primal_violation = std::max(result.kkt.primal_violation, -s);
    result.kkt.complementarity = std::max(result.kkt.complementarity, lam * std::abs(s));
    result.kkt.dual_violation = std::max(result.kkt.dual_violation, -lam);
  }
  result.kkt.stationarity = stat.size() > 0 ? stat.cwiseAbs().maxCoeff() : 0.0;
  result.objective = f.value(result.x);
  result.converged = budget_ok && t >= t_final;
  return result;
}

}  // namespace cldnav
