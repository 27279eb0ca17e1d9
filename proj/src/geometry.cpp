#include "cldnav/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cldnav/errors.hpp"

namespace cldnav {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFeasTol = 1e-8;

// Closest point on segment [a, b] to point p.
Vec2 closest_on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 1e-24) return a;
  double t = (p - a).dot(ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return a + t * ab;
}

// Closest pair between segments [p1, p2] and [q1, q2].
std::pair<Vec2, Vec2> closest_segment_pair(const Vec2& p1, const Vec2& p2,
                                           const Vec2& q1, const Vec2& q2) {
  // Candidate set: each endpoint projected on the other segment. For
  // non-intersecting planar segments the minimum is always attained at one
  // of these four pairs.
  std::pair<Vec2, Vec2> best{p1, closest_on_segment(q1, q2, p1)};
  double best_d = (best.first - best.second).squaredNorm();
  auto consider = [&](const Vec2& a, const Vec2& b) {
    const double d = (a - b).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = {a, b};
    }
  };
  consider(p2, closest_on_segment(q1, q2, p2));
  consider(closest_on_segment(p1, p2, q1), q1);
  consider(closest_on_segment(p1, p2, q2), q2);
  return best;
}

// Solves M' lam = rhs for lam >= 0 supported on the active faces; columns of
// M are the active unit normals. Tries single faces, then pairs.
bool solve_active_multipliers(const std::vector<int>& active, const Eigen::MatrixX2d& normals,
                              const Vec2& rhs, Eigen::VectorXd& out) {
  out.setZero(normals.rows());
  for (int i : active) {
    const Vec2 n = normals.row(i).transpose();
    const double s = n.dot(rhs);
    if (s >= -1e-12 && (n * s - rhs).norm() <= 1e-9) {
      out[i] = std::max(s, 0.0);
      return true;
    }
  }
  for (std::size_t ii = 0; ii < active.size(); ++ii) {
    for (std::size_t jj = ii + 1; jj < active.size(); ++jj) {
      const int i = active[ii];
      const int j = active[jj];
      Mat2 M;
      M.col(0) = normals.row(i).transpose();
      M.col(1) = normals.row(j).transpose();
      const double det = M.determinant();
      if (std::abs(det) < 1e-12) continue;
      const Vec2 s = M.inverse() * rhs;
      if (s[0] >= -1e-10 && s[1] >= -1e-10 &&
          (M * s - rhs).norm() <= 1e-9) {
        out[i] = std::max(s[0], 0.0);
        out[j] = std::max(s[1], 0.0);
        return true;
      }
    }
  }
  return false;
}

}  // namespace

ConvexPolytope ConvexPolytope::from_halfspaces(const Eigen::MatrixX2d& normals,
                                               const Eigen::VectorXd& offsets) {
  if (normals.rows() != offsets.size()) {
    throw ValidationError("face_normals and face_offsets row counts differ");
  }
  if (normals.rows() < 3) {
    throw ValidationError("a bounded planar polytope needs at least 3 faces");
  }
  ConvexPolytope poly;
  poly.normals_.resize(normals.rows(), 2);
  poly.offsets_.resize(offsets.size());
  for (int i = 0; i < normals.rows(); ++i) {
    const double norm = normals.row(i).norm();
    if (norm < 1e-12) {
      throw ValidationError("face normal row has zero length");
    }
    poly.normals_.row(i) = normals.row(i) / norm;
    poly.offsets_[i] = offsets[i] / norm;
  }

  // Bounded iff the unit normals leave no angular gap of pi or more.
  std::vector<double> angles(poly.normals_.rows());
  for (int i = 0; i < poly.normals_.rows(); ++i) {
    angles[i] = std::atan2(poly.normals_(i, 1), poly.normals_(i, 0));
  }
  std::sort(angles.begin(), angles.end());
  double max_gap = angles.front() + 2.0 * kPi - angles.back();
  for (std::size_t i = 1; i < angles.size(); ++i) {
    max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
  }
  if (max_gap >= kPi - 1e-12) {
    throw ValidationError("polytope is unbounded (face normals span less than a half-turn)");
  }

  poly.enumerate_vertices();
  if (poly.vertices_.size() < 3) {
    throw ValidationError("polytope is empty or lower-dimensional");
  }
  // Interior point must exist strictly.
  const Vec2 c = poly.interior_point();
  const double min_slack = (poly.offsets_ - poly.normals_ * c).minCoeff();
  if (min_slack <= 1e-9) {
    throw ValidationError("polytope has no interior point");
  }
  return poly;
}

ConvexPolytope ConvexPolytope::from_vertices(const std::vector<Vec2>& ccw_vertices) {
  std::vector<Vec2> v;
  for (const auto& p : ccw_vertices) {
    if (v.empty() || (p - v.back()).norm() > 1e-12) v.push_back(p);
  }
  if (v.size() >= 2 && (v.front() - v.back()).norm() <= 1e-12) v.pop_back();
  if (v.size() < 3) {
    throw ValidationError("vertex list needs at least 3 distinct points");
  }
  double area2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % v.size()];
    area2 += p.x() * q.y() - q.x() * p.y();
  }
  if (area2 <= 1e-12) {
    throw ValidationError("vertices must be in counter-clockwise order with positive area");
  }
  const std::size_t n = v.size();
  Eigen::MatrixX2d normals(n, 2);
  Eigen::VectorXd offsets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = v[(i + 1) % n] - v[i];
    // Outward normal of a CCW edge.
    Vec2 nrm(e.y(), -e.x());
    const double len = nrm.norm();
    if (len < 1e-12) throw ValidationError("degenerate polygon edge");
    nrm /= len;
    normals.row(i) = nrm.transpose();
    offsets[i] = nrm.dot(v[i]);
  }
  // Convexity: every vertex satisfies every face.
  for (const auto& p : v) {
    if (((normals * p - offsets).maxCoeff()) > 1e-9) {
      throw ValidationError("vertex list is not convex");
    }
  }
  return from_halfspaces(normals, offsets);
}

ConvexPolytope ConvexPolytope::box(const Vec2& lo, const Vec2& hi) {
  return from_vertices({{lo.x(), lo.y()}, {hi.x(), lo.y()}, {hi.x(), hi.y()}, {lo.x(), hi.y()}});
}

void ConvexPolytope::enumerate_vertices() {
  vertices_.clear();
  const int n = num_faces();
  std::vector<Vec2> cand;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Mat2 M;
      M.row(0) = normals_.row(i);
      M.row(1) = normals_.row(j);
      const double det = M.determinant();
      if (std::abs(det) < 1e-10) continue;
      const Vec2 z = M.inverse() * Vec2(offsets_[i], offsets_[j]);
      if (((normals_ * z - offsets_).maxCoeff()) <= kFeasTol * (1.0 + z.norm())) {
        cand.push_back(z);
      }
    }
  }
  // Dedupe and order counter-clockwise around the centroid.
  std::vector<Vec2> uniq;
  for (const auto& p : cand) {
    bool dup = false;
    for (const auto& q : uniq) {
      if ((p - q).norm() <= 1e-8) {
        dup = true;
        break;
      }
    }
    if (!dup) uniq.push_back(p);
  }
  if (uniq.empty()) return;
  Vec2 c = Vec2::Zero();
  for (const auto& p : uniq) c += p;
  c /= static_cast<double>(uniq.size());
  std::sort(uniq.begin(), uniq.end(), [&](const Vec2& a, const Vec2& b) {
    return std::atan2(a.y() - c.y(), a.x() - c.x()) < std::atan2(b.y() - c.y(), b.x() - c.x());
  });
  vertices_ = std::move(uniq);
}

bool ConvexPolytope::contains(const Vec2& point, double tol) const {
  return ((normals_ * point - offsets_).maxCoeff()) <= tol;
}

Vec2 ConvexPolytope::interior_point() const {
  Vec2 c = Vec2::Zero();
  for (const auto& p : vertices_) c += p;
  return c / static_cast<double>(vertices_.size());
}

double ConvexPolytope::circumradius(const Vec2& center) const {
  double r = 0.0;
  for (const auto& p : vertices_) r = std::max(r, (p - center).norm());
  return r;
}

ConvexPolytope ConvexPolytope::translated(const Vec2& offset) const {
  ConvexPolytope out(*this);
  out.offsets_ += out.normals_ * offset;
  for (auto& v : out.vertices_) v += offset;
  return out;
}

Placement Placement::from_state(const RobotState& s) {
  Placement p;
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  p.rotation << c, -sn, sn, c;
  p.translation = {s.x, s.y};
  return p;
}

ConvexPolytope occupied_region(const ConvexPolytope& shape, const RobotState& state) {
  const Placement pl = Placement::from_state(state);
  // {z : G R'(z - p) <= g}  ==  {z : (G R') z <= g + (G R') p}
  const Eigen::MatrixX2d rotated = shape.face_normals() * pl.rotation.transpose();
  const Eigen::VectorXd offsets = shape.face_offsets() + rotated * pl.translation;
  return ConvexPolytope::from_halfspaces(rotated, offsets);
}

bool contains(const ConvexPolytope& region, const Vec2& point) {
  return region.contains(point);
}

bool polytopes_intersect(const ConvexPolytope& a, const ConvexPolytope& b) {
  auto separated_by = [](const ConvexPolytope& faces, const ConvexPolytope& other) {
    for (int i = 0; i < faces.num_faces(); ++i) {
      const Vec2 n = faces.face_normals().row(i).transpose();
      double lo = std::numeric_limits<double>::infinity();
      for (const auto& v : other.vertices()) lo = std::min(lo, n.dot(v));
      if (lo > faces.face_offsets()[i] + 1e-12) return true;
    }
    return false;
  };
  return !separated_by(a, b) && !separated_by(b, a);
}

double CertificateResiduals::worst() const {
  return std::max(std::max(nonneg, objective), std::max(stationarity, cone));
}

CertificateResiduals check_certificate(const DistanceCertificate& cert,
                                       const ConvexPolytope& a,
                                       const ConvexPolytope& b) {
  CertificateResiduals r;
  double most_negative = 0.0;
  if (cert.lambda.size() > 0) most_negative = std::min(most_negative, cert.lambda.minCoeff());
  if (cert.mu.size() > 0) most_negative = std::min(most_negative, cert.mu.minCoeff());
  most_negative = std::min(most_negative, cert.slack);
  r.nonneg = -most_negative;

  const double dual_obj =
      -cert.lambda.dot(a.face_offsets()) - cert.mu.dot(b.face_offsets()) - cert.slack;
  r.objective = std::abs(dual_obj - cert.distance);

  const Vec2 stat = b.face_normals().transpose() * cert.mu +
                    a.face_normals().transpose() * cert.lambda;
  r.stationarity = stat.norm();

  r.cone = std::max(0.0, (a.face_normals().transpose() * cert.lambda).norm() - 1.0);
  return r;
}

DistanceCertificate min_distance(const ConvexPolytope& a, const ConvexPolytope& b) {
  DistanceCertificate cert;
  cert.lambda.setZero(a.num_faces());
  cert.mu.setZero(b.num_faces());

  if (polytopes_intersect(a, b)) {
    return cert;  // distance 0; the zero multipliers certify it
  }

  const auto& va = a.vertices();
  const auto& vb = b.vertices();
  double best = std::numeric_limits<double>::infinity();
  Vec2 xa = Vec2::Zero();
  Vec2 xb = Vec2::Zero();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const Vec2& p1 = va[i];
    const Vec2& p2 = va[(i + 1) % va.size()];
    for (std::size_t j = 0; j < vb.size(); ++j) {
      const Vec2& q1 = vb[j];
      const Vec2& q2 = vb[(j + 1) % vb.size()];
      const auto [pa, pb] = closest_segment_pair(p1, p2, q1, q2);
      const double d = (pa - pb).norm();
      if (d < best) {
        best = d;
        xa = pa;
        xb = pb;
      }
    }
  }

  if (best < 1e-9) {
    return cert;  // effectively touching; report as intersection
  }
  cert.distance = best;

  // Unit direction from the b-side point toward the a-side point; the duals
  // satisfy H' lambda = -u and G' mu = u on the active faces.
  const Vec2 u = (xa - xb) / best;

  auto active_faces = [](const ConvexPolytope& poly, const Vec2& p) {
    std::vector<int> act;
    const Eigen::VectorXd res = poly.face_normals() * p - poly.face_offsets();
    for (int i = 0; i < poly.num_faces(); ++i) {
      if (std::abs(res[i]) <= 1e-7) act.push_back(i);
    }
    return act;
  };

  const bool ok_a = solve_active_multipliers(active_faces(a, xa), a.face_normals(), -u, cert.lambda);
  const bool ok_b = solve_active_multipliers(active_faces(b, xb), b.face_normals(), u, cert.mu);
  if (!ok_a || !ok_b) {
    throw SolverFailure("min_distance: could not recover dual multipliers "
                        "(degenerate or ill-scaled polytope pair)");
  }
  return cert;
}

}  // namespace cldnav
