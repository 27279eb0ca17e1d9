#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cldnav/kinematics.hpp"

namespace cldnav {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Bounded planar convex polytope in half-space form {z : G z <= g}.
/// Rows of G are normalized to unit length at construction so offsets and
/// dual distances are in meters. Construction verifies that the set is
/// nonempty with an interior point and bounded.
class ConvexPolytope {
 public:
  /// Empty placeholder; real instances come from the factories below.
  ConvexPolytope() = default;

  /// Builds from (G, g); throws ValidationError on zero-norm rows, empty,
  /// lower-dimensional, or unbounded systems.
  static ConvexPolytope from_halfspaces(const Eigen::MatrixX2d& normals,
                                        const Eigen::VectorXd& offsets);

  /// Builds from a counter-clockwise simple convex vertex list.
  static ConvexPolytope from_vertices(const std::vector<Vec2>& ccw_vertices);

  /// Axis-aligned box helper.
  static ConvexPolytope box(const Vec2& lo, const Vec2& hi);

  const Eigen::MatrixX2d& face_normals() const { return normals_; }
  const Eigen::VectorXd& face_offsets() const { return offsets_; }
  int num_faces() const { return static_cast<int>(normals_.rows()); }

  /// Vertices in counter-clockwise order.
  const std::vector<Vec2>& vertices() const { return vertices_; }

  /// Closed-set membership: G p <= g componentwise (small tolerance).
  bool contains(const Vec2& point, double tol = 1e-9) const;

  /// A strictly interior point (vertex centroid).
  Vec2 interior_point() const;

  /// Max distance from `center` to any vertex.
  double circumradius(const Vec2& center) const;

  ConvexPolytope translated(const Vec2& offset) const;

 private:
  void enumerate_vertices();

  Eigen::MatrixX2d normals_;
  Eigen::VectorXd offsets_;
  std::vector<Vec2> vertices_;
};

/// Rigid placement: rotation R(theta) and translation p.
struct Placement {
  Mat2 rotation = Mat2::Identity();
  Vec2 translation = Vec2::Zero();

  static Placement from_state(const RobotState& s);
  Vec2 apply(const Vec2& local) const { return rotation * local + translation; }
};

/// Multipliers certifying a polytope-pair distance through LP duality.
/// For min_distance(a, b), lambda pairs with a's faces (the (H, h) role) and
/// mu with b's faces (the (G, g) role, identity placement). The invariants
///   lambda, mu >= 0, slack >= 0
///   -lambda' h - mu' g - slack == distance
///   mu' G + lambda' H == 0
///   ||H' lambda||_2 <= 1
/// hold for every returned certificate; check_certificate() evaluates them.
struct DistanceCertificate {
  double distance = 0.0;
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  double slack = 0.0;
};

/// Residuals of the certificate system, for tests and diagnostics.
struct CertificateResiduals {
  double nonneg = 0.0;       // most negative multiplier (0 when all >= 0)
  double objective = 0.0;    // |dual objective - distance|
  double stationarity = 0.0; // ||mu' G + lambda' H||
  double cone = 0.0;         // max(0, ||H' lambda|| - 1)
  double worst() const;
};

CertificateResiduals check_certificate(const DistanceCertificate& cert,
                                       const ConvexPolytope& a,
                                       const ConvexPolytope& b);

/// Places a body-frame shape at the given state:
/// {z : G R(theta)' (z - p) <= g}.
ConvexPolytope occupied_region(const ConvexPolytope& shape, const RobotState& state);

/// Minimum Euclidean distance between two polytopes (0 when they intersect)
/// together with optimal dual multipliers. Closest features are found by
/// exact enumeration over boundary segments; the duals are recovered from
/// the active faces in closed form.
DistanceCertificate min_distance(const ConvexPolytope& a, const ConvexPolytope& b);

/// Region membership used by the channel model (closed region).
bool contains(const ConvexPolytope& region, const Vec2& point);

/// Exact intersection test for convex polygons (separating-axis theorem over
/// face normals; touching counts as intersecting).
bool polytopes_intersect(const ConvexPolytope& a, const ConvexPolytope& b);

}  // namespace cldnav
