#include "rangelab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rangelab/errors.hpp"

namespace rangelab {

namespace {

void lattice_box(const DomainSpec& spec, std::int64_t n, IVec& lo, IVec& hi) {
  Eigen::Vector3d blo, bhi;
  spec.bounding_box(blo, bhi);
  lo = {0, 0, 0};
  hi = {0, 0, 0};
  for (int i = 0; i < spec.dim(); ++i) {
    lo[i] = static_cast<std::int64_t>(std::floor(blo[i] * static_cast<double>(n))) - 1;
    hi[i] = static_cast<std::int64_t>(std::ceil(bhi[i] * static_cast<double>(n))) + 1;
  }
}

// Sup-norm distance from an interior point to a segment (all in scaled units).
double linf_point_segment(double px, double py, double ax, double ay, double bx,
                          double by) {
  const double ex = bx - ax, ey = by - ay;
  // phi(t) = max(|px-ax-t ex|, |py-ay-t ey|) is convex piecewise linear;
  // minimize over candidate breakpoints clamped to [0,1].
  std::vector<double> cand{0.0, 1.0};
  const double dx0 = px - ax, dy0 = py - ay;
  if (ex != 0) cand.push_back(dx0 / ex);
  if (ey != 0) cand.push_back(dy0 / ey);
  // |dx| = |dy| breakpoints: dx - t ex = +-(dy - t ey)
  if (ex - ey != 0) cand.push_back((dx0 - dy0) / (ex - ey));
  if (ex + ey != 0) cand.push_back((dx0 + dy0) / (ex + ey));
  double best = std::numeric_limits<double>::infinity();
  for (double t : cand) {
    t = std::clamp(t, 0.0, 1.0);
    const double vx = std::abs(dx0 - t * ex);
    const double vy = std::abs(dy0 - t * ey);
    best = std::min(best, std::max(vx, vy));
  }
  return best;
}

}  // namespace

MembershipGrid::MembershipGrid(const DomainSpec& spec, std::int64_t n)
    : dim_(spec.dim()) {
  IVec lo, hi;
  lattice_box(spec, n, lo, hi);
  lo_ = lo;
  hi_ = hi;
  cells_ = 1;
  for (int i = 0; i < dim_; ++i) {
    ext_[i] = hi[i] - lo[i] + 1;
    cells_ *= static_cast<std::uint64_t>(ext_[i]);
  }
  bits_.assign((cells_ + 63) / 64, 0);
  IVec x = lo;
  for (std::uint64_t idx = 0; idx < cells_; ++idx) {
    if (spec.contains_scaled(x, n)) bits_[idx >> 6] |= (1ULL << (idx & 63));
    // odometer increment matching the index layout (axis 0 fastest)
    for (int i = 0; i < dim_; ++i) {
      if (++x[i] <= hi[i]) break;
      x[i] = lo[i];
    }
  }
}

LatticeDomain::LatticeDomain(DomainSpec spec, std::int64_t n)
    : spec_(std::move(spec)), n_(n) {
  if (n < 1) throw ValidationError("LatticeDomain: N must be positive");
  if (spec_.kind() != ShapeKind::Box) {
    IVec lo, hi;
    lattice_box(spec_, n_, lo, hi);
    std::uint64_t cells = 1;
    for (int i = 0; i < spec_.dim(); ++i)
      cells *= static_cast<std::uint64_t>(hi[i] - lo[i] + 1);
    if (cells <= (1ULL << 26)) grid_ = std::make_shared<MembershipGrid>(spec_, n_);
  }
}

double LatticeDomain::boundary_distance(const IVec& x) const {
  if (!contains(x))
    throw ValidationError("boundary_distance: point not in D_N");
  const auto nd = static_cast<double>(n_);
  switch (spec_.kind()) {
    case ShapeKind::Box: {
      double d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < dim(); ++i) {
        d = std::min(d, static_cast<double>(x[i]));
        d = std::min(d, nd - static_cast<double>(x[i]));
      }
      return d;
    }
    case ShapeKind::Ball: {
      // Largest t with the sup-norm box x + [-t,t]^d inside the scaled ball:
      // the worst corner solves sum_i (|v_i| + t)^2 = (n r)^2.
      const auto c = spec_.ball_center();
      const double r = spec_.ball_radius() * nd;
      double s1 = 0, s2 = 0;
      const int d = dim();
      for (int i = 0; i < d; ++i) {
        const double v = std::abs(static_cast<double>(x[i]) - c[i] * nd);
        s1 += v;
        s2 += v * v;
      }
      const double disc = s1 * s1 - d * (s2 - r * r);
      return (-s1 + std::sqrt(std::max(disc, 0.0))) / d;
    }
    case ShapeKind::Polygon: {
      const auto& vq = spec_.polygon_q();
      const double px = static_cast<double>(x[0]);
      const double py = static_cast<double>(x[1]);
      double best = std::numeric_limits<double>::infinity();
      const std::size_t m = vq.size();
      for (std::size_t i = 0; i < m; ++i) {
        const double ax = static_cast<double>(vq[i][0]) / kGeomQuant * nd;
        const double ay = static_cast<double>(vq[i][1]) / kGeomQuant * nd;
        const double bx = static_cast<double>(vq[(i + 1) % m][0]) / kGeomQuant * nd;
        const double by = static_cast<double>(vq[(i + 1) % m][1]) / kGeomQuant * nd;
        best = std::min(best, linf_point_segment(px, py, ax, ay, bx, by));
      }
      return best;
    }
    case ShapeKind::Cardioid: {
      // Sample the boundary curve densely and take the sup-norm minimum; the
      // curve is smooth away from the cusp, so 1/N accuracy is ample here.
      const double s = spec_.cardioid_scale() * nd;
      const double cx = spec_.cardioid_center().x() * nd;
      const double cy = spec_.cardioid_center().y() * nd;
      const double px = static_cast<double>(x[0]);
      const double py = static_cast<double>(x[1]);
      double best = std::numeric_limits<double>::infinity();
      const int samples = 8192;
      for (int k = 0; k < samples; ++k) {
        const double t = 2.0 * M_PI * k / samples;
        const double r = s * (1.0 + std::cos(t));
        const double bx = cx + r * std::cos(t);
        const double by = cy + r * std::sin(t);
        best = std::min(best, std::max(std::abs(px - bx), std::abs(py - by)));
      }
      return best;
    }
  }
  return 0;
}

std::vector<IVec> LatticeDomain::enumerate_interior() const {
  IVec lo, hi;
  lattice_bounds(lo, hi);
  std::vector<IVec> out;
  const int d = dim();
  IVec x{0, 0, 0};
  // lexicographic order: x[0] major, then x[1], then x[2]
  for (std::int64_t a = lo[0]; a <= hi[0]; ++a) {
    x[0] = a;
    if (d == 1) {
      if (contains(x)) out.push_back(x);
      continue;
    }
    for (std::int64_t b = lo[1]; b <= hi[1]; ++b) {
      x[1] = b;
      if (d == 2) {
        if (contains(x)) out.push_back(x);
        continue;
      }
      for (std::int64_t c = lo[2]; c <= hi[2]; ++c) {
        x[2] = c;
        if (contains(x)) out.push_back(x);
      }
    }
  }
  return out;
}

void LatticeDomain::lattice_bounds(IVec& lo, IVec& hi) const {
  lattice_box(spec_, n_, lo, hi);
}

std::uint64_t LatticeDomain::hash() const {
  std::uint64_t h = spec_.hash();
  h ^= 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(n_) + (h << 6) + (h >> 2);
  return h;
}

double boundary_layer_width(std::int64_t n) {
  const double l = std::log(static_cast<double>(n));
  return static_cast<double>(n) / (l * l);
}

}  // namespace rangelab
