#include "rangelab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rangelab/errors.hpp"

namespace rangelab {

namespace {

using i128 = __int128;

std::int64_t quantize(double v) {
  return std::llround(v * static_cast<double>(kGeomQuant));
}

// Orientation of p relative to the directed segment a -> b (exact).
int cross_sign(i128 ax, i128 ay, i128 bx, i128 by, i128 px, i128 py) {
  const i128 c = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
  return c > 0 ? 1 : (c < 0 ? -1 : 0);
}

bool on_segment(i128 ax, i128 ay, i128 bx, i128 by, i128 px, i128 py) {
  if (cross_sign(ax, ay, bx, by, px, py) != 0) return false;
  return std::min(ax, bx) <= px && px <= std::max(ax, bx) &&
         std::min(ay, by) <= py && py <= std::max(ay, by);
}

// Exact segment intersection test for the polygon simplicity check.
bool segments_cross(const std::array<std::int64_t, 2>& a,
                    const std::array<std::int64_t, 2>& b,
                    const std::array<std::int64_t, 2>& c,
                    const std::array<std::int64_t, 2>& d) {
  const int d1 = cross_sign(c[0], c[1], d[0], d[1], a[0], a[1]);
  const int d2 = cross_sign(c[0], c[1], d[0], d[1], b[0], b[1]);
  const int d3 = cross_sign(a[0], a[1], b[0], b[1], c[0], c[1]);
  const int d4 = cross_sign(a[0], a[1], b[0], b[1], d[0], d[1]);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && on_segment(c[0], c[1], d[0], d[1], a[0], a[1])) return true;
  if (d2 == 0 && on_segment(c[0], c[1], d[0], d[1], b[0], b[1])) return true;
  if (d3 == 0 && on_segment(a[0], a[1], b[0], b[1], c[0], c[1])) return true;
  if (d4 == 0 && on_segment(a[0], a[1], b[0], b[1], d[0], d[1])) return true;
  return false;
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

DomainSpec DomainSpec::interval() {
  DomainSpec d;
  d.kind_ = ShapeKind::Box;
  d.dim_ = 1;
  return d;
}

DomainSpec DomainSpec::unit_square() {
  DomainSpec d;
  d.kind_ = ShapeKind::Box;
  d.dim_ = 2;
  return d;
}

DomainSpec DomainSpec::cube() {
  DomainSpec d;
  d.kind_ = ShapeKind::Box;
  d.dim_ = 3;
  return d;
}

DomainSpec DomainSpec::ball(int dim, const Eigen::Vector3d& center, double radius) {
  if (dim < 2 || dim > 3) throw ValidationError("ball: dimension must be 2 or 3");
  if (!(radius > 0)) throw ValidationError("ball: radius must be positive");
  DomainSpec d;
  d.kind_ = ShapeKind::Ball;
  d.dim_ = dim;
  for (int i = 0; i < dim; ++i) d.center_q_[i] = quantize(center[i]);
  d.radius_q_ = quantize(radius);
  if (d.radius_q_ <= 0) throw ValidationError("ball: radius below resolution");
  return d;
}

DomainSpec DomainSpec::polygon(const std::vector<Eigen::Vector2d>& vertices) {
  if (vertices.size() < 3) throw ValidationError("polygon: needs >= 3 vertices");
  DomainSpec d;
  d.kind_ = ShapeKind::Polygon;
  d.dim_ = 2;
  d.poly_q_.reserve(vertices.size());
  for (const auto& v : vertices) d.poly_q_.push_back({quantize(v.x()), quantize(v.y())});
  const std::size_t n = d.poly_q_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = d.poly_q_[i];
    const auto& b = d.poly_q_[(i + 1) % n];
    if (a == b) throw ValidationError("polygon: repeated vertex after quantization");
    for (std::size_t j = i + 1; j < n; ++j) {
      // adjacent edges share an endpoint; skip those pairs
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      const auto& c = d.poly_q_[j];
      const auto& e = d.poly_q_[(j + 1) % n];
      if (segments_cross(a, b, c, e))
        throw ValidationError("polygon: edges intersect (not a simple closed curve)");
    }
  }
  return d;
}

DomainSpec DomainSpec::cardioid(double scale, const Eigen::Vector2d& center) {
  if (!(scale > 0)) throw ValidationError("cardioid: scale must be positive");
  DomainSpec d;
  d.kind_ = ShapeKind::Cardioid;
  d.dim_ = 2;
  d.cardioid_scale_ = scale;
  d.cardioid_center_ = center;
  return d;
}

Eigen::Vector3d DomainSpec::ball_center() const {
  return {static_cast<double>(center_q_[0]) / kGeomQuant,
          static_cast<double>(center_q_[1]) / kGeomQuant,
          static_cast<double>(center_q_[2]) / kGeomQuant};
}

bool DomainSpec::cardioid_inside(double px, double py) const {
  // r = s(1 + cos t)  <=>  (|q|^2 - s q_x)^2 < s^2 |q|^2 strictly inside,
  // with q the offset from the cusp center; lhs < 0 is automatically inside.
  const double qx = px - cardioid_center_.x();
  const double qy = py - cardioid_center_.y();
  const double r2 = qx * qx + qy * qy;
  if (r2 == 0.0) return true;  // cusp center is interior for s > 0
  const double lhs = r2 - cardioid_scale_ * qx;
  if (lhs < 0) return true;
  return lhs * lhs < cardioid_scale_ * cardioid_scale_ * r2;
}

bool DomainSpec::contains(const Eigen::Vector3d& p) const {
  switch (kind_) {
    case ShapeKind::Box:
      for (int i = 0; i < dim_; ++i)
        if (!(p[i] > 0.0 && p[i] < 1.0)) return false;
      return true;
    case ShapeKind::Ball: {
      double s = 0;
      for (int i = 0; i < dim_; ++i) {
        const double d = p[i] - static_cast<double>(center_q_[i]) / kGeomQuant;
        s += d * d;
      }
      const double r = static_cast<double>(radius_q_) / kGeomQuant;
      return s < r * r;
    }
    case ShapeKind::Polygon: {
      // Ray-crossing parity on the quantized polygon, evaluated in doubles
      // (continuum queries come from PDE grids, not lattice membership).
      const double px = p.x(), py = p.y();
      bool inside = false;
      const std::size_t n = poly_q_.size();
      for (std::size_t i = 0; i < n; ++i) {
        const double ax = static_cast<double>(poly_q_[i][0]) / kGeomQuant;
        const double ay = static_cast<double>(poly_q_[i][1]) / kGeomQuant;
        const double bx = static_cast<double>(poly_q_[(i + 1) % n][0]) / kGeomQuant;
        const double by = static_cast<double>(poly_q_[(i + 1) % n][1]) / kGeomQuant;
        if ((ay > py) != (by > py)) {
          const double c = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
          if ((c > 0) == (by > ay)) inside = !inside;
        }
      }
      return inside;
    }
    case ShapeKind::Cardioid:
      return cardioid_inside(p.x(), p.y());
  }
  return false;
}

bool DomainSpec::contains_scaled(const IVec& x, std::int64_t n) const {
  switch (kind_) {
    case ShapeKind::Box:
      for (int i = 0; i < dim_; ++i)
        if (!(x[i] > 0 && x[i] < n)) return false;
      return true;
    case ShapeKind::Ball: {
      // |x*Q - n*c_q|^2 < (n*r_q)^2, exact in 128-bit integers.
      i128 s = 0;
      for (int i = 0; i < dim_; ++i) {
        const i128 d = static_cast<i128>(x[i]) * kGeomQuant -
                       static_cast<i128>(n) * center_q_[i];
        s += d * d;
      }
      const i128 r = static_cast<i128>(n) * radius_q_;
      return s < r * r;
    }
    case ShapeKind::Polygon: {
      // Point P = x*Q against vertices W = v_q*n; all coordinates integral,
      // so parity and on-edge tests are exact.  D open: boundary is outside.
      const i128 px = static_cast<i128>(x[0]) * kGeomQuant;
      const i128 py = static_cast<i128>(x[1]) * kGeomQuant;
      const std::size_t m = poly_q_.size();
      bool inside = false;
      for (std::size_t i = 0; i < m; ++i) {
        const i128 ax = static_cast<i128>(poly_q_[i][0]) * n;
        const i128 ay = static_cast<i128>(poly_q_[i][1]) * n;
        const i128 bx = static_cast<i128>(poly_q_[(i + 1) % m][0]) * n;
        const i128 by = static_cast<i128>(poly_q_[(i + 1) % m][1]) * n;
        if (on_segment(ax, ay, bx, by, px, py)) return false;
        if ((ay > py) != (by > py)) {
          const int c = cross_sign(ax, ay, bx, by, px, py);
          if ((c > 0) == (by > ay)) inside = !inside;
        }
      }
      return inside;
    }
    case ShapeKind::Cardioid:
      return cardioid_inside(static_cast<double>(x[0]) / static_cast<double>(n),
                             static_cast<double>(x[1]) / static_cast<double>(n));
  }
  return false;
}

void DomainSpec::bounding_box(Eigen::Vector3d& lo, Eigen::Vector3d& hi) const {
  lo.setZero();
  hi.setZero();
  switch (kind_) {
    case ShapeKind::Box:
      for (int i = 0; i < dim_; ++i) {
        lo[i] = 0.0;
        hi[i] = 1.0;
      }
      return;
    case ShapeKind::Ball: {
      const double r = ball_radius();
      const auto c = ball_center();
      for (int i = 0; i < dim_; ++i) {
        lo[i] = c[i] - r;
        hi[i] = c[i] + r;
      }
      return;
    }
    case ShapeKind::Polygon: {
      double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
      double ylo = xlo, yhi = xhi;
      for (const auto& v : poly_q_) {
        xlo = std::min(xlo, static_cast<double>(v[0]) / kGeomQuant);
        xhi = std::max(xhi, static_cast<double>(v[0]) / kGeomQuant);
        ylo = std::min(ylo, static_cast<double>(v[1]) / kGeomQuant);
        yhi = std::max(yhi, static_cast<double>(v[1]) / kGeomQuant);
      }
      lo = {xlo, ylo, 0.0};
      hi = {xhi, yhi, 0.0};
      return;
    }
    case ShapeKind::Cardioid: {
      // x offset in [-s/4, 2s], |y| <= (3*sqrt(3)/4) s for r = s(1 + cos t).
      const double s = cardioid_scale_;
      const double ymax = 0.75 * std::sqrt(3.0) * s;
      lo = {cardioid_center_.x() - 0.25 * s, cardioid_center_.y() - ymax, 0.0};
      hi = {cardioid_center_.x() + 2.0 * s, cardioid_center_.y() + ymax, 0.0};
      return;
    }
  }
}

double DomainSpec::ray_exit_scale(const Eigen::Vector3d& a,
                                  const Eigen::Vector3d& m) const {
  if (!contains(a)) throw ValidationError("ray_exit_scale: start not inside D");
  double mnorm = 0;
  for (int i = 0; i < dim_; ++i) mnorm += m[i] * m[i];
  if (!(mnorm > 0)) throw ValidationError("ray_exit_scale: zero direction");
  switch (kind_) {
    case ShapeKind::Box: {
      double c = std::numeric_limits<double>::infinity();
      for (int i = 0; i < dim_; ++i) {
        if (m[i] > 0) c = std::min(c, (1.0 - a[i]) / m[i]);
        if (m[i] < 0) c = std::min(c, -a[i] / m[i]);
      }
      return c;
    }
    case ShapeKind::Ball: {
      const auto ctr = ball_center();
      const double r = ball_radius();
      double alpha = 0, beta = 0, gamma = -r * r;
      for (int i = 0; i < dim_; ++i) {
        const double v = a[i] - ctr[i];
        alpha += m[i] * m[i];
        beta += v * m[i];
        gamma += v * v;
      }
      return (-beta + std::sqrt(beta * beta - alpha * gamma)) / alpha;
    }
    case ShapeKind::Polygon: {
      // First positive hit of the ray a + c m with any edge.
      double best = std::numeric_limits<double>::infinity();
      const std::size_t n = poly_q_.size();
      for (std::size_t i = 0; i < n; ++i) {
        const double ax = static_cast<double>(poly_q_[i][0]) / kGeomQuant;
        const double ay = static_cast<double>(poly_q_[i][1]) / kGeomQuant;
        const double bx = static_cast<double>(poly_q_[(i + 1) % n][0]) / kGeomQuant;
        const double by = static_cast<double>(poly_q_[(i + 1) % n][1]) / kGeomQuant;
        const double ex = bx - ax, ey = by - ay;
        const double den = m[0] * ey - m[1] * ex;
        if (den == 0) continue;  // parallel
        const double c = ((ax - a[0]) * ey - (ay - a[1]) * ex) / den;
        const double hx = a[0] + c * m[0] - ax;
        const double hy = a[1] + c * m[1] - ay;
        const double t = std::abs(ex) >= std::abs(ey) ? hx / ex : hy / ey;
        if (c > 0 && t >= 0 && t <= 1) best = std::min(best, c);
      }
      return best;
    }
    case ShapeKind::Cardioid: {
      // Bisection on the polynomial membership along the ray.
      double hi = 1.0 / std::sqrt(mnorm);
      while (cardioid_inside(a[0] + hi * m[0], a[1] + hi * m[1])) hi *= 2.0;
      double lo = 0.0;
      for (int it = 0; it < 200 && (hi - lo) > 1e-14 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cardioid_inside(a[0] + mid * m[0], a[1] + mid * m[1]))
          lo = mid;
        else
          hi = mid;
      }
      return hi;
    }
  }
  return 0;
}

double DomainSpec::boundary_arm(const Eigen::Vector3d& p, int axis, int dir,
                                double h) const {
  Eigen::Vector3d q = p;
  q[axis] += dir * h;
  if (contains(q)) return 1.0;
  // bisect the crossing point; membership flips exactly once along one cell
  // for the convex built-ins and effectively so at grid resolution otherwise
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    Eigen::Vector3d r = p;
    r[axis] += dir * mid * h;
    if (contains(r))
      lo = mid;
    else
      hi = mid;
  }
  return std::max(hi, 1e-9);
}

std::uint64_t DomainSpec::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, static_cast<std::uint64_t>(kind_));
  h = fnv1a(h, static_cast<std::uint64_t>(dim_));
  switch (kind_) {
    case ShapeKind::Box:
      break;
    case ShapeKind::Ball:
      for (int i = 0; i < 3; ++i) h = fnv1a(h, static_cast<std::uint64_t>(center_q_[i]));
      h = fnv1a(h, static_cast<std::uint64_t>(radius_q_));
      break;
    case ShapeKind::Polygon:
      for (const auto& v : poly_q_) {
        h = fnv1a(h, static_cast<std::uint64_t>(v[0]));
        h = fnv1a(h, static_cast<std::uint64_t>(v[1]));
      }
      break;
    case ShapeKind::Cardioid: {
      h = fnv1a(h, static_cast<std::uint64_t>(quantize(cardioid_scale_)));
      h = fnv1a(h, static_cast<std::uint64_t>(quantize(cardioid_center_.x())));
      h = fnv1a(h, static_cast<std::uint64_t>(quantize(cardioid_center_.y())));
      break;
    }
  }
  return h;
}

std::string DomainSpec::describe() const {
  switch (kind_) {
    case ShapeKind::Box:
      return dim_ == 1 ? "interval" : (dim_ == 2 ? "unit-square" : "cube");
    case ShapeKind::Ball:
      return dim_ == 2 ? "disk" : "ball";
    case ShapeKind::Polygon:
      return "polygon[" + std::to_string(poly_q_.size()) + "]";
    case ShapeKind::Cardioid:
      return "cardioid";
  }
  return "?";
}

}  // namespace rangelab
