#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rangelab/geometry.hpp"
#include "rangelab/histogram.hpp"
#include "rangelab/lattice.hpp"
#include "rangelab/rng.hpp"

namespace rangelab {

enum class LawKind { Simple, MeanZero, Biased };

struct StepEntry {
  IVec step;
  double prob;
};

/// A finite-range step law on Z^d.
///
/// `simple` is the nearest-neighbour walk with probability 1/(2d) per
/// direction.  Table laws are validated at construction (probabilities sum
/// to 1; mean zero where required) and sampled through a Walker alias table
/// with 64-bit integer thresholds, so draws are exact and reproducible.
class WalkLaw {
 public:
  static WalkLaw simple(int dim);
  static WalkLaw mean_zero(int dim, std::vector<StepEntry> support);
  static WalkLaw biased(int dim, std::vector<StepEntry> support);

  LawKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::vector<StepEntry>& support() const { return support_; }

  Eigen::Vector3d mean() const { return mean_; }
  Eigen::Matrix3d covariance() const { return cov_; }
  std::int64_t max_step_linf() const { return max_linf_; }

  /// One step draw (alias method for table laws, direct for simple).
  IVec sample_step(Xoshiro256pp& rng) const {
    if (kind_ == LawKind::Simple) {
      const std::uint32_t r = rng.bounded(static_cast<std::uint32_t>(2 * dim_));
      IVec v{0, 0, 0};
      v[r >> 1] = (r & 1) ? 1 : -1;
      return v;
    }
    const auto n = static_cast<std::uint32_t>(support_.size());
    const std::uint32_t j = rng.bounded(n);
    const std::uint64_t u = rng.next();
    return u < alias_threshold_[j] ? support_[j].step : support_[alias_index_[j]].step;
  }

  std::string describe() const;

 private:
  WalkLaw(LawKind kind, int dim, std::vector<StepEntry> support);
  void build_alias();

  LawKind kind_;
  int dim_;
  std::vector<StepEntry> support_;
  std::vector<std::uint64_t> alias_threshold_;
  std::vector<std::uint32_t> alias_index_;
  Eigen::Vector3d mean_ = Eigen::Vector3d::Zero();
  Eigen::Matrix3d cov_ = Eigen::Matrix3d::Zero();
  std::int64_t max_linf_ = 1;
};

/// Range statistics of one exit path.  multi[p-1] counts sites visited
/// exactly p times (p = 1..p_max); visits beyond p_max land in the overflow
/// bucket, tracked both as sites and as total visit mass so that
/// sum_p p*multi[p] + overflow_mass == tau stays checkable.
struct ExitSample {
  std::uint64_t replicate = 0;
  std::uint64_t seed = 0;
  std::uint64_t tau = 0;
  std::uint64_t range = 0;
  std::vector<std::uint64_t> multi;
  std::uint64_t overflow_sites = 0;
  std::uint64_t overflow_mass = 0;
};

/// Default step cap: 10^4 * N^2 (about 10^4 times the mean exit scale).
std::uint64_t default_step_cap(std::int64_t n);

/// Runs X_0 = start until the first n with X_n outside D_N; returns the
/// occupation histogram of times 0..tau-1.  Throws SimulationError if the
/// walk exceeds step_cap (a mis-specified config guard; exits from a bounded
/// domain happen geometrically fast).
VisitHistogram run_until_exit(const WalkLaw& law, const LatticeDomain& dom,
                              const IVec& start, std::uint64_t stream_seed,
                              std::uint64_t step_cap);

/// Tallies range and exact-p counts from a histogram.
ExitSample extract_statistics(const VisitHistogram& hist, int p_max);

struct ProfilePoint {
  std::uint64_t n = 0;
  std::uint64_t range = 0;
  std::vector<std::uint64_t> multi;  // exact-p counts, p = 1..p_max
};

/// One unconstrained trajectory sampled at increasing checkpoints.
std::vector<ProfilePoint> unconstrained_range_profile(
    const WalkLaw& law, const std::vector<std::uint64_t>& checkpoints, int p_max,
    std::uint64_t stream_seed);

struct ReturnEstimate {
  double p_hat = 0;
  double std_error = 0;
  std::uint64_t replicates = 0;
  std::uint64_t n_cutoff = 0;
  /// The estimate misses returns after n_cutoff, so it is biased low by
  /// P(return after cutoff) = O(cutoff^(1-d/2)) for the simple walk.
  std::string tail_note;
};

/// Monte Carlo estimate of the return probability p0 of the simple walk on
/// Z^d, d >= 3 (transient).  Throws ValidationError for d <= 2.
ReturnEstimate estimate_return_probability(int dim, std::uint64_t n_cutoff,
                                           std::uint64_t replicates,
                                           const SeedPolicy& seeds, int workers = 1);

/// Same estimate for an arbitrary transient law (used for biased walks,
/// which are transient in every dimension).
ReturnEstimate estimate_return_probability(const WalkLaw& law,
                                           std::uint64_t n_cutoff,
                                           std::uint64_t replicates,
                                           const SeedPolicy& seeds, int workers = 1);

}  // namespace rangelab
