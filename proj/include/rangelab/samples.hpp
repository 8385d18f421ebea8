#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rangelab/walk.hpp"

namespace rangelab {

/// Replicate samples from one (law, domain, N, start) configuration.
///
/// Samples are kept sorted by replicate index and summaries are always folded
/// in that canonical order, so merging is associative, commutative and gives
/// bitwise-identical results for any partitioning of the same replicate set.
class SampleBatch {
 public:
  SampleBatch() = default;
  SampleBatch(std::uint64_t config_tag, int p_max)
      : config_tag_(config_tag), p_max_(p_max) {}

  std::uint64_t config_tag() const { return config_tag_; }
  int p_max() const { return p_max_; }
  const std::vector<ExitSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

  void add(ExitSample s);

  /// Merge another batch in; throws ValidationError when the configurations
  /// (tag or p_max) differ or replicate indices collide.
  void merge(const SampleBatch& other);

 private:
  std::uint64_t config_tag_ = 0;
  int p_max_ = 0;
  std::vector<ExitSample> samples_;
};

SampleBatch merge(const SampleBatch& a, const SampleBatch& b);

/// Mean and batch-means standard error of f(sample) over the batch in
/// canonical order.  Blocks of 100 replicates; with fewer than two full
/// blocks the plain iid standard error of the mean is used instead.
struct MeanSE {
  double mean = 0;
  double se = 0;
};

template <class F>
MeanSE mean_and_se(const std::vector<ExitSample>& samples, F&& f,
                   std::size_t block = 100) {
  MeanSE out;
  const std::size_t n = samples.size();
  if (n == 0) return out;
  double sum = 0;
  for (const auto& s : samples) sum += f(s);
  out.mean = sum / static_cast<double>(n);
  const std::size_t nblocks = n / block;
  if (nblocks >= 2) {
    double bvar = 0;
    for (std::size_t b = 0; b < nblocks; ++b) {
      double bs = 0;
      for (std::size_t i = b * block; i < (b + 1) * block; ++i) bs += f(samples[i]);
      const double bm = bs / static_cast<double>(block);
      bvar += (bm - out.mean) * (bm - out.mean);
    }
    bvar /= static_cast<double>(nblocks - 1);
    out.se = std::sqrt(bvar / static_cast<double>(nblocks));
  } else {
    double var = 0;
    for (const auto& s : samples) {
      const double v = f(s) - out.mean;
      var += v * v;
    }
    var /= static_cast<double>(n > 1 ? n - 1 : 1);
    out.se = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

/// Empirical k-th factorial moment E[X(X-1)...(X-k+1)] of a raw count.
template <class F>
MeanSE factorial_moment_of(const std::vector<ExitSample>& samples, F&& raw,
                           int k) {
  return mean_and_se(samples, [&](const ExitSample& s) {
    const double x = raw(s);
    double prod = 1;
    for (int j = 0; j < k; ++j) prod *= (x - j);
    return prod;
  });
}

}  // namespace rangelab
