#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rangelab {

/// Integer lattice point; components beyond the active dimension stay zero.
using IVec = std::array<std::int64_t, 3>;

inline IVec ivec(std::int64_t x, std::int64_t y = 0, std::int64_t z = 0) {
  return {x, y, z};
}

enum class ShapeKind { Box, Ball, Polygon, Cardioid };

/// Fixed-point scale for ball and polygon parameters.  Coordinates are
/// snapped to multiples of 1/kGeomQuant at construction so that lattice
/// membership tests reduce to exact integer arithmetic.
inline constexpr std::int64_t kGeomQuant = 1 << 20;

/// An open bounded domain D in R^d (d = 1, 2 or 3).
///
/// Box is the unit box (0,1)^d and covers the interval (d=1), unit-square
/// (d=2) and cube (d=3) shapes.  Ball and Polygon store exact fixed-point
/// parameters; Cardioid is the polar curve r = s(1 + cos t) about `center`.
class DomainSpec {
 public:
  static DomainSpec interval();
  static DomainSpec unit_square();
  static DomainSpec cube();
  static DomainSpec ball(int dim, const Eigen::Vector3d& center, double radius);
  static DomainSpec polygon(const std::vector<Eigen::Vector2d>& vertices);
  static DomainSpec cardioid(double scale = 0.35,
                             const Eigen::Vector2d& center = {0.2, 0.5});

  ShapeKind kind() const { return kind_; }
  int dim() const { return dim_; }

  /// Open membership: true iff p lies strictly inside D.
  bool contains(const Eigen::Vector3d& p) const;

  /// Exact lattice membership: true iff x/n lies strictly inside D.
  bool contains_scaled(const IVec& x, std::int64_t n) const;

  /// Axis-aligned bounding box strictly containing D.
  void bounding_box(Eigen::Vector3d& lo, Eigen::Vector3d& hi) const;

  /// Smallest c > 0 with a + c*m outside D (a in D, m != 0).
  double ray_exit_scale(const Eigen::Vector3d& a, const Eigen::Vector3d& m) const;

  /// Fraction t in (0,1] such that p + t*h*e_axis*dir is the first boundary
  /// crossing along the grid arm, or 1 if the full arm stays inside.
  double boundary_arm(const Eigen::Vector3d& p, int axis, int dir, double h) const;

  /// Hash of the shape's semantic parameters (kind, dim, quantized data).
  std::uint64_t hash() const;

  std::string describe() const;

  double ball_radius() const { return static_cast<double>(radius_q_) / kGeomQuant; }
  Eigen::Vector3d ball_center() const;
  const std::vector<std::array<std::int64_t, 2>>& polygon_q() const { return poly_q_; }
  double cardioid_scale() const { return cardioid_scale_; }
  Eigen::Vector2d cardioid_center() const { return cardioid_center_; }

 private:
  DomainSpec() = default;

  bool cardioid_inside(double px, double py) const;

  ShapeKind kind_ = ShapeKind::Box;
  int dim_ = 2;
  // ball (fixed point, units of 1/kGeomQuant)
  std::array<std::int64_t, 3> center_q_{0, 0, 0};
  std::int64_t radius_q_ = 0;
  // polygon (fixed point)
  std::vector<std::array<std::int64_t, 2>> poly_q_;
  // cardioid
  double cardioid_scale_ = 0.0;
  Eigen::Vector2d cardioid_center_{0.0, 0.0};
};

}  // namespace rangelab
