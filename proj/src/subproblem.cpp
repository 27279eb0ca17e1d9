#include "cldnav/subproblem.hpp"

#include <algorithm>
#include <cmath>

#include "cldnav/errors.hpp"

namespace cldnav {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kDomainFloor = 1e-12;

// One spectral-efficiency surrogate term: value
//   g(q) = log2(1 + kappa * (bracket_const - bracket_coeff * r^alpha)),
// r = |q - sensor_pos|, with region parameters frozen at the iterate. The
// bracket is not floored here; the log argument acts as its own barrier and
// the line search keeps iterates inside its domain.
struct SeTerm {
  int step = 0;
  Vec2 sensor_pos = Vec2::Zero();
  double alpha = 0.0;
  double kappa = 0.0;
  double bracket_const = 0.0;
  double bracket_coeff = 0.0;
  bool constant = false;  // alpha == 0: no position dependence
  double const_value = 0.0;

  double arg(const Vec2& q) const {
    const double r = std::max((q - sensor_pos).norm(), 1e-9);
    return 1.0 + kappa * (bracket_const - bracket_coeff * std::pow(r, alpha));
  }
  double value(const Vec2& q) const {
    if (constant) return const_value;
    return std::log2(arg(q));
  }
  // radial first/second derivatives of the value
  void radial(const Vec2& q, double& r, double& d1, double& d2) const {
    r = std::max((q - sensor_pos).norm(), 1e-9);
    const double ra = std::pow(r, alpha);
    const double a = 1.0 + kappa * (bracket_const - bracket_coeff * ra);
    const double kba = kappa * bracket_coeff * alpha;
    d1 = -kba * std::pow(r, alpha - 1.0) / (a * kLn2);
    d2 = -kba *
         ((alpha - 1.0) * std::pow(r, alpha - 2.0) * a +
          kba * std::pow(r, 2.0 * alpha - 2.0)) /
         (a * a * kLn2);
  }
};

struct ModelTerm {
  double coeff = 0.0;       // bandwidth * slot / bits_per_sample
  double historical = 0.0;  // historical sample count
  double scale = 0.0;       // model scale / model count
  double b = 0.0;
  std::vector<int> term_indices;  // SeTerm indices in this model's group
};

class SubproblemObjective final : public SmoothObjective {
 public:
  int H = 0;
  int n_u = 0, n_d = 0, n_xi = 0;
  Eigen::VectorXd s_const;
  Eigen::MatrixXd S_u;
  Eigen::VectorXd ref_stacked;
  double a0 = 1.0, a1 = 0.0, a2 = 0.0, a3 = 0.0, slack_penalty = 0.0;
  std::vector<SeTerm> terms;
  std::vector<ModelTerm> models;

  int dim() const override { return n_u + n_d + n_xi; }

  Eigen::VectorXd states(const Eigen::VectorXd& y) const {
    return s_const + S_u * y.head(n_u);
  }
  Vec2 position(const Eigen::VectorXd& s, int step) const {
    return {s[3 * step], s[3 * step + 1]};
  }

  bool in_domain(const Eigen::VectorXd& y) const override {
    if (!y.allFinite()) return false;
    const Eigen::VectorXd s = states(y);
    for (const auto& t : terms) {
      if (!t.constant && t.arg(position(s, t.step)) <= kDomainFloor) return false;
    }
    for (const auto& m : models) {
      if (model_arg(s, m) <= kDomainFloor) return false;
    }
    return true;
  }

  double model_arg(const Eigen::VectorXd& s, const ModelTerm& m) const {
    double sum = 0.0;
    for (int i : m.term_indices) sum += terms[static_cast<std::size_t>(i)].value(position(s, terms[static_cast<std::size_t>(i)].step));
    return m.historical + m.coeff * sum;
  }

  double value(const Eigen::VectorXd& y) const override {
    const Eigen::VectorXd s = states(y);
    double val = a0 * (s - ref_stacked).squaredNorm();
    for (const auto& t : terms) val -= a1 * t.value(position(s, t.step));
    for (const auto& m : models) {
      val += a2 * m.scale * std::pow(model_arg(s, m), -m.b);
    }
    for (int h = 0; h < n_d; ++h) val -= a3 * y[n_u + h];
    for (int i = 0; i < n_xi; ++i) val += slack_penalty * y[n_u + n_d + i];
    return val;
  }

  void gradient(const Eigen::VectorXd& y, Eigen::VectorXd& grad) const override {
    const Eigen::VectorXd s = states(y);
    Eigen::VectorXd gs = 2.0 * a0 * (s - ref_stacked);
    const Eigen::VectorXd w = term_weights(s);
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto& t = terms[i];
      if (t.constant) continue;
      const Vec2 q = position(s, t.step);
      double r, d1, d2;
      t.radial(q, r, d1, d2);
      const Vec2 dir = (q - t.sensor_pos) / r;
      gs.segment<2>(3 * t.step) += w[static_cast<Eigen::Index>(i)] * d1 * dir;
    }
    grad.setZero(dim());
    grad.head(n_u) = S_u.transpose() * gs;
    for (int h = 0; h < n_d; ++h) grad[n_u + h] = -a3;
    for (int i = 0; i < n_xi; ++i) grad[n_u + n_d + i] = slack_penalty;
  }

  void hessian(const Eigen::VectorXd& y, Eigen::MatrixXd& hess) const override {
    const Eigen::VectorXd s = states(y);
    const int ns = static_cast<int>(s.size());
    Eigen::MatrixXd hss = Eigen::MatrixXd::Zero(ns, ns);
    hss.diagonal().setConstant(2.0 * a0);
    const Eigen::VectorXd w = term_weights(s);
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto& t = terms[i];
      if (t.constant) continue;
      const Vec2 q = position(s, t.step);
      double r, d1, d2;
      t.radial(q, r, d1, d2);
      const Vec2 dir = (q - t.sensor_pos) / r;
      Mat2 block = d2 * dir * dir.transpose() +
                   (d1 / r) * (Mat2::Identity() - dir * dir.transpose());
      hss.block<2, 2>(3 * t.step, 3 * t.step) += w[static_cast<Eigen::Index>(i)] * block;
    }
    // Error-power composition: scale * total^{-b} with the total affine in the
    // term values; its curvature couples every step in the group.
    for (const auto& m : models) {
      const double warg = model_arg(s, m);
      const double phi2 = m.scale * m.b * (m.b + 1.0) * std::pow(warg, -m.b - 2.0);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(ns);
      for (int idx : m.term_indices) {
        const auto& t = terms[static_cast<std::size_t>(idx)];
        if (t.constant) continue;
        const Vec2 q = position(s, t.step);
        double r, d1, d2;
        t.radial(q, r, d1, d2);
        const Vec2 dir = (q - t.sensor_pos) / r;
        v.segment<2>(3 * t.step) += m.coeff * d1 * dir;
      }
      hss += (a2 * phi2) * v * v.transpose();
    }
    hess.setZero(dim(), dim());
    hess.topLeftCorner(n_u, n_u) = S_u.transpose() * hss * S_u;
  }

  // Weight in front of each term's gradient/Hessian: the communication part
  // plus the chain through every model the term's sensor feeds.
  Eigen::VectorXd term_weights(const Eigen::VectorXd& s) const {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(terms.size()), -a1);
    for (const auto& m : models) {
      const double warg = model_arg(s, m);
      const double phi1 = -m.scale * m.b * std::pow(warg, -m.b - 1.0);
      for (int idx : m.term_indices) w[idx] += a2 * phi1 * m.coeff;
    }
    return w;
  }

  // Unweighted cost pieces at y, for reporting.
  void term_values(const Eigen::VectorXd& y, double& tracking, double& comm,
                   double& learning, double& safety) const {
    const Eigen::VectorXd s = states(y);
    tracking = (s - ref_stacked).squaredNorm();
    comm = 0.0;
    for (const auto& t : terms) comm -= t.value(position(s, t.step));
    learning = 0.0;
    for (const auto& m : models) learning += m.scale * std::pow(model_arg(s, m), -m.b);
    safety = -y.segment(n_u, n_d).sum();
  }
};

}  // namespace

std::vector<ControlInput> repair_inputs(const std::vector<ControlInput>& seed,
                                        const MotionLimits& lim) {
  auto margin = [](double lo, double hi) { return std::min(1e-3, 0.01 * (hi - lo)); };
  const double mv = margin(lim.u_min.v, lim.u_max.v);
  const double mp = margin(lim.u_min.psi, lim.u_max.psi);
  const double rv = std::min({1e-3, 0.25 * -lim.a_min.v, 0.25 * lim.a_max.v});
  const double rp = std::min({1e-3, 0.25 * -lim.a_min.psi, 0.25 * lim.a_max.psi});

  for (const auto& u : seed) {
    if (u.v < lim.u_min.v - (lim.u_max.v - lim.u_min.v) ||
        u.v > lim.u_max.v + (lim.u_max.v - lim.u_min.v) ||
        u.psi < lim.u_min.psi - (lim.u_max.psi - lim.u_min.psi) ||
        u.psi > lim.u_max.psi + (lim.u_max.psi - lim.u_min.psi)) {
      throw InfeasibleSeed("seed input violates limits beyond repair tolerance");
    }
  }

  std::vector<ControlInput> out = seed;
  for (std::size_t h = 0; h < out.size(); ++h) {
    out[h].v = std::clamp(out[h].v, lim.u_min.v + mv, lim.u_max.v - mv);
    out[h].psi = std::clamp(out[h].psi, lim.u_min.psi + mp, lim.u_max.psi - mp);
    if (h > 0) {
      out[h].v = std::clamp(out[h].v, out[h - 1].v + lim.a_min.v + rv,
                            out[h - 1].v + lim.a_max.v - rv);
      out[h].psi = std::clamp(out[h].psi, out[h - 1].psi + lim.a_min.psi + rp,
                              out[h - 1].psi + lim.a_max.psi - rp);
      out[h].v = std::clamp(out[h].v, lim.u_min.v + mv, lim.u_max.v - mv);
      out[h].psi = std::clamp(out[h].psi, lim.u_min.psi + mp, lim.u_max.psi - mp);
    }
  }
  return out;
}

Eigen::VectorXd ConvexProgram::states_for(const Eigen::VectorXd& y) const {
  return s_const + S_u * y.head(n_u);
}

ConvexProgram build_subproblem(const Environment& env, const PlannerConfig& config,
                               const MmIterate& iterate) {
  const int H = config.horizon;
  const int M = static_cast<int>(env.obstacles.size());
  const bool use_se = (config.weights.communication > 0.0 || config.weights.learning > 0.0) &&
                      !env.sensors.empty();

  if (static_cast<int>(iterate.states.size()) != H + 1 ||
      static_cast<int>(iterate.inputs.size()) != H ||
      static_cast<int>(iterate.dynamics.size()) != H ||
      static_cast<int>(iterate.reference.size()) != H + 1) {
    throw LengthMismatch("iterate sizes do not match the horizon");
  }
  if (use_se && static_cast<int>(iterate.expansions.size()) != H + 1) {
    throw LengthMismatch("iterate is missing surrogate expansions");
  }
  if (M > 0 && !env.point_mass_collision) {
    if (static_cast<int>(iterate.duals.size()) != M) {
      throw LengthMismatch("iterate needs one certificate row per obstacle");
    }
    for (const auto& row : iterate.duals) {
      if (static_cast<int>(row.size()) != H + 1) {
        throw LengthMismatch("iterate needs one certificate per horizon step");
      }
    }
  }

  ConvexProgram prog;
  prog.horizon = H;
  prog.n_u = 2 * H;
  prog.n_d = H + 1;
  prog.n_xi = M * (H + 1);
  prog.d_min = config.d_min;
  prog.d_max = config.d_max;

  // Condense states through the per-step affine dynamics.
  prog.s_const.setZero(3 * (H + 1));
  prog.S_u.setZero(3 * (H + 1), 2 * H);
  prog.s_const.head<3>() = iterate.initial_state.vec();
  for (int h = 0; h < H; ++h) {
    const auto& dyn = iterate.dynamics[static_cast<std::size_t>(h)];
    prog.s_const.segment<3>(3 * (h + 1)) = dyn.A * prog.s_const.segment<3>(3 * h) + dyn.c;
    prog.S_u.middleRows(3 * (h + 1), 3) = dyn.A * prog.S_u.middleRows(3 * h, 3);
    prog.S_u.block<3, 2>(3 * (h + 1), 2 * h) += dyn.B;
  }

  // Objective.
  auto obj = std::make_shared<SubproblemObjective>();
  obj->H = H;
  obj->n_u = prog.n_u;
  obj->n_d = prog.n_d;
  obj->n_xi = prog.n_xi;
  obj->s_const = prog.s_const;
  obj->S_u = prog.S_u;
  obj->a0 = config.weights.tracking;
  obj->a1 = config.weights.communication;
  obj->a2 = config.weights.learning;
  obj->a3 = config.weights.safety;
  obj->slack_penalty = config.slack_penalty;
  obj->ref_stacked.resize(3 * (H + 1));
  for (int h = 0; h <= H; ++h) {
    obj->ref_stacked.segment<3>(3 * h) = iterate.reference[static_cast<std::size_t>(h)].vec();
  }

  if (use_se) {
    std::vector<std::vector<int>> terms_by_sensor(env.sensors.size());
    for (int h = 0; h <= H; ++h) {
      const auto& exp = iterate.expansions[static_cast<std::size_t>(h)];
      const int region = env.map.region_index(exp.position());
      const PathLossParams& p = env.map.params_of(region);
      if (p.alpha > 0.0 && p.alpha < 1.0) {
        throw ValidationError("region path-loss exponent in (0, 1) breaks surrogate concavity");
      }
      for (std::size_t k = 0; k < env.sensors.size(); ++k) {
        const auto& sc = exp.sensor_cache(env.sensors[k].id);
        const auto& rc = exp.cache_for(sc, region);
        SeTerm t;
        t.step = h;
        t.sensor_pos = env.sensors[k].position;
        t.alpha = p.alpha;
        t.kappa = p.beta * env.sensors[k].power / env.map.noise_power();
        t.bracket_const = 2.0 * rc.inv_pow_a;
        t.bracket_coeff = rc.inv_pow_2a;
        if (p.alpha == 0.0) {
          t.constant = true;
          t.const_value = std::log2(1.0 + t.kappa);
        }
        terms_by_sensor[k].push_back(static_cast<int>(obj->terms.size()));
        obj->terms.push_back(t);
      }
    }
    if (config.weights.learning > 0.0 && !env.specs.empty()) {
      const double E = static_cast<double>(env.specs.size());
      for (const auto& spec : env.specs) {
        ModelTerm mt;
        mt.coeff = env.bandwidth_hz * env.slot_seconds / spec.bits_per_sample;
        mt.historical = spec.historical_samples;
        mt.scale = spec.a / E;
        mt.b = spec.b;
        for (int id : spec.sensor_group) {
          for (std::size_t k = 0; k < env.sensors.size(); ++k) {
            if (env.sensors[k].id == id) {
              mt.term_indices.insert(mt.term_indices.end(), terms_by_sensor[k].begin(),
                                     terms_by_sensor[k].end());
            }
          }
        }
        obj->models.push_back(std::move(mt));
      }
    }
  }

  // Box and rate rows on the inputs.
  const auto& lim = env.limits;
  auto add_row = [&](std::vector<std::pair<int, double>> terms, double rhs) {
    prog.inequalities.push_back({std::move(terms), rhs});
  };
  for (int h = 0; h < H; ++h) {
    add_row({{prog.u_index(h, 0), 1.0}}, lim.u_max.v);
    add_row({{prog.u_index(h, 0), -1.0}}, -lim.u_min.v);
    add_row({{prog.u_index(h, 1), 1.0}}, lim.u_max.psi);
    add_row({{prog.u_index(h, 1), -1.0}}, -lim.u_min.psi);
  }
  for (int h = 0; h + 1 < H; ++h) {
    for (int c = 0; c < 2; ++c) {
      const double amax = c == 0 ? lim.a_max.v : lim.a_max.psi;
      const double amin = c == 0 ? lim.a_min.v : lim.a_min.psi;
      add_row({{prog.u_index(h + 1, c), 1.0}, {prog.u_index(h, c), -1.0}}, amax);
      add_row({{prog.u_index(h + 1, c), -1.0}, {prog.u_index(h, c), 1.0}}, -amin);
    }
  }
  for (int h = 0; h <= H; ++h) {
    add_row({{prog.d_index(h), 1.0}}, config.d_max);
    add_row({{prog.d_index(h), -1.0}}, -config.d_min);
  }
  for (int i = 0; i < prog.n_xi; ++i) {
    add_row({{prog.xi_index(i), -1.0}}, 0.0);
  }

  // Frozen safety rows: bound(q_h) + xi >= d_h + margin. Dual rows are
  // tightened further by the heading rotation the settle tolerance allows;
  // ball rows are heading-free and keep the base margin.
  const double robot_radius = env.robot_shape.circumradius(Vec2::Zero());
  const double dual_margin =
      config.safety_margin + config.settle_tolerance * robot_radius;
  std::vector<double> row_margin(static_cast<std::size_t>(M * (H + 1)), 0.0);
  for (int m = 0; m < M; ++m) {
    const double obstacle_radius =
        env.obstacles[static_cast<std::size_t>(m)].circumradius(env.obstacle_centers[static_cast<std::size_t>(m)]);
    for (int h = 0; h <= H; ++h) {
      const Vec2 q_star = iterate.states[static_cast<std::size_t>(h)].position();
      FrozenSafetyRow row;
      row.obstacle = m;
      row.step = h;
      bool use_ball = env.point_mass_collision;
      if (!use_ball) {
        const auto& cert = iterate.duals.at(static_cast<std::size_t>(m)).at(static_cast<std::size_t>(h));
        if (cert.distance < 1e-7) {
          use_ball = true;  // overlapping at the iterate: no dual direction
        } else {
          row.coeff = env.obstacles[static_cast<std::size_t>(m)].face_normals().transpose() * cert.lambda;
          row.offset = cert.distance - row.coeff.dot(q_star);
        }
      }
      if (use_ball) {
        // Center-distance-minus-radii bound, linearized at the iterate; an
        // affine minorant of a convex function, so globally sound.
        const Vec2 c = env.obstacle_centers[static_cast<std::size_t>(m)];
        const double dist = std::max((q_star - c).norm(), 1e-9);
        const Vec2 dir = (q_star - c) / dist;
        row.coeff = dir;
        row.offset = dist - robot_radius - obstacle_radius - dir.dot(q_star);
      }
      prog.safety_rows.push_back(row);

      // Row in y: -coeff . q(u) + d_h - xi <= offset + coeff . q_const - margin.
      // The current state (h = 0) is immutable, so no margin is applied there
      // and its slack never flags the plan.
      const int row_index = m * (H + 1) + h;
      const double margin =
          h >= 1 ? (use_ball ? config.safety_margin : dual_margin) : 0.0;
      row_margin[static_cast<std::size_t>(row_index)] = margin;
      std::vector<std::pair<int, double>> terms;
      for (int j = 0; j < prog.n_u; ++j) {
        const double v = -(row.coeff.x() * prog.S_u(3 * h, j) + row.coeff.y() * prog.S_u(3 * h + 1, j));
        if (std::abs(v) > 1e-14) terms.emplace_back(j, v);
      }
      terms.emplace_back(prog.d_index(h), 1.0);
      terms.emplace_back(prog.xi_index(row_index), -1.0);
      const Vec2 q_const(prog.s_const[3 * h], prog.s_const[3 * h + 1]);
      add_row(std::move(terms), row.offset + row.coeff.dot(q_const) - margin);
    }
  }

  prog.objective = obj;

  // Strictly feasible start: repaired seed inputs, interior safety distances,
  // slacks covering any seed violation.
  const std::vector<ControlInput> u0 = repair_inputs(iterate.inputs, lim);
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(prog.n_u + prog.n_d + prog.n_xi);
  for (int h = 0; h < H; ++h) {
    y0[prog.u_index(h, 0)] = u0[static_cast<std::size_t>(h)].v;
    y0[prog.u_index(h, 1)] = u0[static_cast<std::size_t>(h)].psi;
  }
  const Eigen::VectorXd s0 = prog.states_for(y0);
  const double dd = std::min(1e-3, 0.01 * (config.d_max - config.d_min));
  std::vector<double> bound_at_start(static_cast<std::size_t>(M * (H + 1)), 0.0);
  for (const auto& row : prog.safety_rows) {
    const Vec2 q(s0[3 * row.step], s0[3 * row.step + 1]);
    bound_at_start[static_cast<std::size_t>(row.obstacle * (H + 1) + row.step)] =
        row.offset + row.coeff.dot(q);
  }
  for (int h = 0; h <= H; ++h) {
    double ub = config.d_max;
    for (int m = 0; m < M; ++m) {
      const int i = m * (H + 1) + h;
      ub = std::min(ub, bound_at_start[static_cast<std::size_t>(i)] -
                            row_margin[static_cast<std::size_t>(i)]);
    }
    y0[prog.d_index(h)] = std::clamp(ub - dd, config.d_min + dd, config.d_max - dd);
  }
  for (int m = 0; m < M; ++m) {
    for (int h = 0; h <= H; ++h) {
      const int i = m * (H + 1) + h;
      const double gap = y0[prog.d_index(h)] + row_margin[static_cast<std::size_t>(i)] -
                         bound_at_start[static_cast<std::size_t>(i)];
      y0[prog.xi_index(i)] = std::max(1e-3, gap + 1e-3);
    }
  }
  prog.y_start = y0;

  for (const auto& c : prog.inequalities) {
    if (c.slack(prog.y_start) <= 0.0) {
      throw InfeasibleSeed("subproblem start is not strictly feasible");
    }
  }
  if (!prog.objective->in_domain(prog.y_start)) {
    throw InfeasibleSeed("subproblem start lies outside the surrogate domain");
  }
  return prog;
}

HorizonSolution solve_subproblem(const ConvexProgram& program, const PlannerConfig& config) {
  BarrierOptions opts;
  opts.kkt_tolerance = config.kkt_tolerance;
  opts.gap_tolerance = std::max(1e-8, config.kkt_tolerance);
  BarrierResult res = solve_barrier(*program.objective, program.inequalities, program.y_start, opts);
  if (!res.converged) {
    throw SolverFailure(
        "subproblem interior-point solve exhausted its Newton budget (stationarity " +
        std::to_string(res.kkt.stationarity) + ", complementarity " +
        std::to_string(res.kkt.complementarity) + ")");
  }

  const int H = program.horizon;
  HorizonSolution sol;
  const Eigen::VectorXd s = program.states_for(res.x);
  sol.states.resize(static_cast<std::size_t>(H + 1));
  for (int h = 0; h <= H; ++h) {
    sol.states[static_cast<std::size_t>(h)] = RobotState::from_vec(s.segment<3>(3 * h));
  }
  sol.inputs.resize(static_cast<std::size_t>(H));
  for (int h = 0; h < H; ++h) {
    sol.inputs[static_cast<std::size_t>(h)] = {res.x[program.u_index(h, 0)],
                                               res.x[program.u_index(h, 1)]};
  }
  sol.safety_distances.resize(static_cast<std::size_t>(H + 1));
  for (int h = 0; h <= H; ++h) {
    sol.safety_distances[static_cast<std::size_t>(h)] =
        std::clamp(res.x[program.d_index(h)], program.d_min, program.d_max);
  }
  // Only future steps can flag infeasibility; the h = 0 slack merely records
  // the (unchangeable) current clearance deficit.
  sol.max_safety_slack = 0.0;
  for (const auto& row : program.safety_rows) {
    if (row.step < 1) continue;
    const int i = row.obstacle * (H + 1) + row.step;
    sol.max_safety_slack = std::max(sol.max_safety_slack, res.x[program.xi_index(i)]);
  }
  sol.kkt = res.kkt;

  const auto* obj = static_cast<const SubproblemObjective*>(program.objective.get());
  obj->term_values(res.x, sol.c0, sol.c1, sol.c2, sol.c3);
  const auto& w = config.weights;
  sol.objective_value = w.tracking * sol.c0 + w.communication * sol.c1 + w.learning * sol.c2 +
                        w.safety * sol.c3;
  return sol;
}

}  // namespace cldnav
