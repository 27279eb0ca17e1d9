#pragma once

#include <memory>
#include <vector>

#include "cldnav/planner.hpp"

namespace cldnav {

/// One majorization-minimization iterate: the anchor trajectory plus the
/// per-step linearizations, surrogate expansions, and frozen distance duals
/// built at it.
struct MmIterate {
  RobotState initial_state;
  std::vector<RobotState> states;    // H+1 anchor states
  std::vector<ControlInput> inputs;  // H anchor inputs
  std::vector<RobotState> reference;  // H+1 tracking targets
  std::vector<LinearizedDynamics> dynamics;        // H, one per step
  std::vector<SurrogateExpansion> expansions;      // H+1 (empty when no SE terms)
  std::vector<std::vector<DistanceCertificate>> duals;  // [obstacle][step]
};

/// Frozen affine lower bound on the distance between the robot placed at
/// position q (heading frozen at the iterate) and one obstacle:
/// bound(q) = offset + coeff . q. Weak duality makes it a global minorant of
/// the true pair distance at the frozen heading, so enforcing
/// bound(q) >= d never over-approximates clearance.
struct FrozenSafetyRow {
  int obstacle = 0;
  int step = 0;
  Vec2 coeff = Vec2::Zero();
  double offset = 0.0;
};

/// Smooth convex program over y = [u | d | xi] with states condensed through
/// the per-step affine dynamics: s = s_const + S_u u.
struct ConvexProgram {
  int horizon = 0;
  int n_u = 0, n_d = 0, n_xi = 0;
  Eigen::VectorXd s_const;  // 3(H+1)
  Eigen::MatrixXd S_u;      // 3(H+1) x 2H
  std::vector<LinearConstraint> inequalities;
  std::shared_ptr<SmoothObjective> objective;
  Eigen::VectorXd y_start;  // strictly feasible, in-domain
  std::vector<FrozenSafetyRow> safety_rows;
  double d_min = 0.0, d_max = 0.0;

  int u_index(int step, int comp) const { return 2 * step + comp; }
  int d_index(int step) const { return n_u + step; }
  int xi_index(int row) const { return n_u + n_d + row; }
  Eigen::VectorXd states_for(const Eigen::VectorXd& y) const;
};

/// Assembles the convexified subproblem at the given iterate: quadratic
/// tracking, concave efficiency lower bounds entering negatively, the convex
/// error-power composition, a linear safety reward, input box/rate rows, and
/// the frozen-dual distance rows (their cone and sign conditions hold by
/// construction of the duals). Safety rows carry exact-penalty slacks so the
/// program is always strictly feasible. Throws InfeasibleSeed when the seed
/// inputs cannot be repaired into the limit box.
ConvexProgram build_subproblem(const Environment& env, const PlannerConfig& config,
                               const MmIterate& iterate);

/// Interior-point solve of the assembled program. Fills states/inputs/
/// distances, the KKT residuals, and the subproblem's own cost terms
/// (surrogate-based for c1/c2). Certificates and true cost terms are filled
/// by the MM driver. Throws SolverFailure when the Newton budget runs out.
HorizonSolution solve_subproblem(const ConvexProgram& program, const PlannerConfig& config);

/// Clamps a seed input sequence strictly inside the box and rate limits.
/// Throws InfeasibleSeed when a seed input violates the box by more than its
/// full range.
std::vector<ControlInput> repair_inputs(const std::vector<ControlInput>& seed,
                                        const MotionLimits& limits);

}  // namespace cldnav
