#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rangelab/geometry.hpp"

namespace rangelab {

/// Bit-set membership table over the lattice bounding box of N*D.
/// Built once from the exact predicate; read-only and shareable afterwards.
class MembershipGrid {
 public:
  MembershipGrid(const DomainSpec& spec, std::int64_t n);

  bool inside(const IVec& x) const {
    std::uint64_t idx = 0;
    for (int i = dim_ - 1; i >= 0; --i) {
      const std::int64_t c = x[i] - lo_[i];
      if (c < 0 || c >= ext_[i]) return false;
      idx = idx * static_cast<std::uint64_t>(ext_[i]) + static_cast<std::uint64_t>(c);
    }
    return (bits_[idx >> 6] >> (idx & 63)) & 1;
  }

  const IVec& lo() const { return lo_; }
  const IVec& hi() const { return hi_; }
  std::uint64_t cells() const { return cells_; }

 private:
  int dim_;
  IVec lo_{}, hi_{}, ext_{};
  std::uint64_t cells_;
  std::vector<std::uint64_t> bits_;
};

/// The lattice domain D_N = { x in Z^d : x/N in D } for an open bounded D.
///
/// Immutable after construction; shared freely across workers.  For non-box
/// shapes a membership bitmap over the bounding box is precomputed when it
/// fits in a modest budget, which keeps the per-step membership test cheap
/// inside the walk kernels.
class LatticeDomain {
 public:
  LatticeDomain(DomainSpec spec, std::int64_t n);

  const DomainSpec& spec() const { return spec_; }
  std::int64_t n() const { return n_; }
  int dim() const { return spec_.dim(); }

  /// true iff x/N in D (exact for box/ball/interval/polygon).
  bool contains(const IVec& x) const {
    if (grid_) return grid_->inside(x);
    return spec_.contains_scaled(x, n_);
  }

  /// Sup-norm distance from an interior x to the complement of N*D, so the
  /// box of that half-width around x is inscribed in D_N exactly.
  /// Throws ValidationError if x is not interior.
  double boundary_distance(const IVec& x) const;

  /// All interior points in lexicographic order.
  std::vector<IVec> enumerate_interior() const;

  /// Lattice bounding box [lo, hi] (inclusive) of candidate interior points.
  void lattice_bounds(IVec& lo, IVec& hi) const;

  bool is_box() const { return spec_.kind() == ShapeKind::Box; }
  const MembershipGrid* grid() const { return grid_.get(); }

  std::uint64_t hash() const;

 private:
  DomainSpec spec_;
  std::int64_t n_;
  std::shared_ptr<const MembershipGrid> grid_;
};

/// Deep/shallow split of D_N at sup-norm width w; with w = N/log^2(N) on the
/// unit square the deep set is the midband used by the conductance bounds.
struct BoundaryLayer {
  double width;

  bool deep(const LatticeDomain& dom, const IVec& x) const {
    return dom.boundary_distance(x) >= width;
  }
};

/// The midband width N/log^2(N).
double boundary_layer_width(std::int64_t n);

}  // namespace rangelab
