#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "rangelab/geometry.hpp"

namespace rangelab {

/// Packs a lattice point into one 64-bit key (21 bits per axis, offset
/// binary).  Valid while every coordinate stays within (-2^20, 2^20), which
/// covers all domains and walk lengths this lab runs; a zero key cannot
/// occur and doubles as the empty-slot sentinel.
inline std::uint64_t pack_point(const IVec& x) {
  constexpr std::int64_t kOff = 1 << 20;
  assert(x[0] > -kOff && x[0] < kOff && x[1] > -kOff && x[1] < kOff &&
         x[2] > -kOff && x[2] < kOff);
  return static_cast<std::uint64_t>(x[0] + kOff) |
         (static_cast<std::uint64_t>(x[1] + kOff) << 21) |
         (static_cast<std::uint64_t>(x[2] + kOff) << 42);
}

inline IVec unpack_point(std::uint64_t key) {
  constexpr std::int64_t kOff = 1 << 20;
  return {static_cast<std::int64_t>(key & 0x1FFFFF) - kOff,
          static_cast<std::int64_t>((key >> 21) & 0x1FFFFF) - kOff,
          static_cast<std::int64_t>((key >> 42) & 0x1FFFFF) - kOff};
}

/// Open-addressing visit-count map, insert/increment only.  Expected size is
/// O(tau); linear probing over a power-of-two table keeps the per-step cost
/// at a couple of cache touches.
class VisitCounts {
 public:
  explicit VisitCounts(std::size_t expected = 64) { rehash(capacity_for(expected)); }

  /// Increment the count at p; returns the new count.
  std::uint32_t add(std::uint64_t key) {
    if ((size_ + 1) * 3 > cap_ * 2) rehash(cap_ * 2);
    std::size_t i = index_of(key);
    while (true) {
      Slot& s = slots_[i];
      if (s.key == key) return ++s.count;
      if (s.key == 0) {
        s.key = key;
        s.count = 1;
        ++size_;
        return 1;
      }
      i = (i + 1) & (cap_ - 1);
    }
  }

  std::uint32_t count(std::uint64_t key) const {
    std::size_t i = index_of(key);
    while (true) {
      const Slot& s = slots_[i];
      if (s.key == key) return s.count;
      if (s.key == 0) return 0;
      i = (i + 1) & (cap_ - 1);
    }
  }

  std::size_t distinct() const { return size_; }

  template <class F>
  void for_each(F&& f) const {
    for (const Slot& s : slots_)
      if (s.key != 0) f(s.key, s.count);
  }

  void clear() {
    for (Slot& s : slots_) s = Slot{};
    size_ = 0;
  }

 private:
  struct Slot {
    std::uint64_t key = 0;
    std::uint32_t count = 0;
  };

  static std::size_t capacity_for(std::size_t expected) {
    std::size_t c = 64;
    while (c * 2 < expected * 3) c <<= 1;
    return c;
  }

  std::size_t index_of(std::uint64_t key) const {
    std::uint64_t h = key;
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h) & (cap_ - 1);
  }

  void rehash(std::size_t ncap) {
    std::vector<Slot> old = std::move(slots_);
    cap_ = ncap;
    slots_.assign(cap_, Slot{});
    for (const Slot& s : old) {
      if (s.key == 0) continue;
      std::size_t i = index_of(s.key);
      while (slots_[i].key != 0) i = (i + 1) & (cap_ - 1);
      slots_[i] = s;
    }
  }

  std::vector<Slot> slots_;
  std::size_t cap_ = 0;
  std::size_t size_ = 0;
};

/// Per-site visit counts of one walk over times 0 <= n < tau, plus the exit
/// time and starting point.  The start counts as occupied at time 0, so
/// sum of counts == tau exactly.
struct VisitHistogram {
  VisitCounts counts;
  std::uint64_t tau = 0;
  IVec start{0, 0, 0};
};

}  // namespace rangelab
