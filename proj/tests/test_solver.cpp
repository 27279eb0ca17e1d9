#include "cldnav/solver.hpp"

#include <cmath>
#include <random>

#include <doctest.h>

#include "cldnav/errors.hpp"
#include "test_helpers.hpp"

using namespace cldnav;
using namespace cldnav::testing;

namespace {

// Projected gradient descent on a box-constrained QP; the independent
// reference for the barrier solver.
double projected_gradient_qP(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                             const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                             Eigen::VectorXd x, int iters) {
  const double L = Q.operatorNorm();
  const double step = 1.0 / L;
  for (int k = 0; k < iters; ++k) {
    x = (x - step * (Q * x + c)).cwiseMax(lo).cwiseMin(hi);
  }
  return 0.5 * x.dot(Q * x) + c.dot(x);
}

std::vector<LinearConstraint> box_constraints(const Eigen::VectorXd& lo,
                                              const Eigen::VectorXd& hi) {
  std::vector<LinearConstraint> cons;
  for (int i = 0; i < lo.size(); ++i) {
    cons.push_back({{{i, 1.0}}, hi[i]});
    cons.push_back({{{i, -1.0}}, -lo[i]});
  }
  return cons;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("random box QPs match a projected-gradient reference") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6 + static_cast<int>(uniform01(rng) * 8.0);
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) M(i, j) = uniform(rng, -1, 1);
    }
    const Eigen::MatrixXd Q = M.transpose() * M + 0.3 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd c(n), lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      c[i] = uniform(rng, -2, 2);
      lo[i] = uniform(rng, -1.5, -0.2);
      hi[i] = uniform(rng, 0.2, 1.5);
    }
    const QuadraticObjective obj(Q, c);
    const Eigen::VectorXd x0 = 0.5 * (lo + hi);
    const BarrierResult res = solve_barrier(obj, box_constraints(lo, hi), x0);
    REQUIRE(res.converged);
    const double reference = projected_gradient_qP(Q, c, lo, hi, x0, 20000);
    CHECK(std::abs(res.objective - reference) <= 1e-4 * std::max(1.0, std::abs(reference)));
  }
}

TEST_CASE("active box constraint sits on the boundary with a positive multiplier") {
  // minimize (x - 2)^2 subject to x <= 1: optimum at the bound.
  Eigen::MatrixXd Q(1, 1);
  Q << 2.0;
  Eigen::VectorXd c(1);
  c << -4.0;
  const QuadraticObjective obj(Q, c);
  std::vector<LinearConstraint> cons{{{{0, 1.0}}, 1.0}, {{{0, -1.0}}, 5.0}};
  Eigen::VectorXd x0(1);
  x0 << 0.0;
  BarrierOptions opts;
  opts.kkt_tolerance = 1e-8;
  const BarrierResult res = solve_barrier(obj, cons, x0, opts);
  REQUIRE(res.converged);
  CHECK(std::abs(res.x[0] - 1.0) <= 1e-6);
  CHECK(res.multipliers[0] >= 0.0);
  CHECK(res.multipliers[0] == doctest::Approx(2.0).epsilon(1e-3));  // gradient balance
  CHECK(res.kkt.stationarity <= 1e-6);
  CHECK(res.kkt.complementarity <= 1e-6);
}

TEST_CASE("objective domains are respected by the line search") {
  // minimize -log(x) + x over x in [0.1, 10]: optimum at x = 1; the log's
  // domain excludes x <= 0 and the solver must never step outside.
  class LogObjective final : public SmoothObjective {
   public:
    int dim() const override { return 1; }
    bool in_domain(const Eigen::VectorXd& x) const override { return x[0] > 0.0; }
    double value(const Eigen::VectorXd& x) const override { return -std::log(x[0]) + x[0]; }
    void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const override {
      g.resize(1);
      g[0] = -1.0 / x[0] + 1.0;
    }
    void hessian(const Eigen::VectorXd& x, Eigen::MatrixXd& h) const override {
      h.resize(1, 1);
      h(0, 0) = 1.0 / (x[0] * x[0]);
    }
  };
  LogObjective obj;
  std::vector<LinearConstraint> cons{{{{0, 1.0}}, 10.0}, {{{0, -1.0}}, -0.1}};
  Eigen::VectorXd x0(1);
  x0 << 5.0;
  const BarrierResult res = solve_barrier(obj, cons, x0);
  REQUIRE(res.converged);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("infeasible start is rejected") {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);
  const QuadraticObjective obj(Q, Eigen::VectorXd::Zero(2));
  std::vector<LinearConstraint> cons{{{{0, 1.0}}, 1.0}};
  Eigen::VectorXd x0(2);
  x0 << 2.0, 0.0;
  CHECK_THROWS_AS(solve_barrier(obj, cons, x0), SolverFailure);
}

}  // TEST_SUITE
