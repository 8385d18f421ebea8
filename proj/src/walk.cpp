#include "rangelab/walk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "rangelab/errors.hpp"

namespace rangelab {

namespace {

constexpr double kProbTol = 1e-9;

}  // namespace

WalkLaw::WalkLaw(LawKind kind, int dim, std::vector<StepEntry> support)
    : kind_(kind), dim_(dim), support_(std::move(support)) {
  if (dim < 1 || dim > 3) throw ValidationError("walk law: dimension must be 1..3");
  if (kind_ != LawKind::Simple) {
    if (support_.empty()) throw ValidationError("walk law: empty step support");
    long double total = 0;
    for (const auto& e : support_) {
      if (!(e.prob > 0)) throw ValidationError("walk law: step probabilities must be positive");
      for (int i = dim; i < 3; ++i)
        if (e.step[i] != 0) throw ValidationError("walk law: step uses unused dimension");
      total += e.prob;
    }
    if (std::abs(static_cast<double>(total) - 1.0) > kProbTol)
      throw ValidationError("walk law: step probabilities must sum to 1");
    for (const auto& e : support_)
      for (int i = 0; i < dim; ++i)
        mean_[i] += e.prob * static_cast<double>(e.step[i]);
    for (const auto& e : support_)
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          cov_(i, j) += e.prob * (static_cast<double>(e.step[i]) - mean_[i]) *
                        (static_cast<double>(e.step[j]) - mean_[j]);
    for (const auto& e : support_)
      for (int i = 0; i < dim; ++i)
        max_linf_ = std::max(max_linf_, std::abs(e.step[i]));
    build_alias();
  } else {
    for (int i = 0; i < dim; ++i) cov_(i, i) = 1.0 / dim;
  }
}

WalkLaw WalkLaw::simple(int dim) {
  std::vector<StepEntry> sup;
  for (int i = 0; i < dim; ++i) {
    IVec plus{0, 0, 0}, minus{0, 0, 0};
    plus[i] = 1;
    minus[i] = -1;
    sup.push_back({plus, 1.0 / (2 * dim)});
    sup.push_back({minus, 1.0 / (2 * dim)});
  }
  return WalkLaw(LawKind::Simple, dim, std::move(sup));
}

WalkLaw WalkLaw::mean_zero(int dim, std::vector<StepEntry> support) {
  WalkLaw law(LawKind::MeanZero, dim, std::move(support));
  for (int i = 0; i < dim; ++i)
    if (std::abs(law.mean_[i]) > kProbTol)
      throw ValidationError("mean-zero law: step mean is not zero");
  law.mean_.setZero();
  return law;
}

WalkLaw WalkLaw::biased(int dim, std::vector<StepEntry> support) {
  WalkLaw law(LawKind::Biased, dim, std::move(support));
  if (law.mean_.norm() <= kProbTol)
    throw ValidationError("biased law: step mean must be nonzero");
  return law;
}

void WalkLaw::build_alias() {
  // Walker alias table with integer acceptance thresholds: draw a column j
  // uniformly, keep it when u64 < threshold[j], else take alias[j].
  const std::size_t n = support_.size();
  alias_threshold_.assign(n, 0);
  alias_index_.assign(n, 0);
  std::vector<long double> scaled(n);
  long double total = 0;
  for (const auto& e : support_) total += static_cast<long double>(e.prob);
  for (std::size_t i = 0; i < n; ++i)
    scaled[i] = static_cast<long double>(support_[i].prob) / total * static_cast<long double>(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i)
    (scaled[i] < 1.0L ? small : large).push_back(i);
  const long double two64 = 18446744073709551616.0L;
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    const long double t = scaled[s] * two64;
    alias_threshold_[s] =
        t >= two64 ? ~0ULL : static_cast<std::uint64_t>(t);
    alias_index_[s] = static_cast<std::uint32_t>(l);
    scaled[l] -= (1.0L - scaled[s]);
    if (scaled[l] < 1.0L) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) {
    alias_threshold_[i] = ~0ULL;
    alias_index_[i] = static_cast<std::uint32_t>(i);
  }
  for (std::size_t i : small) {
    alias_threshold_[i] = ~0ULL;
    alias_index_[i] = static_cast<std::uint32_t>(i);
  }
}

std::string WalkLaw::describe() const {
  switch (kind_) {
    case LawKind::Simple:
      return "simple";
    case LawKind::MeanZero:
      return "mean-zero[" + std::to_string(support_.size()) + "]";
    case LawKind::Biased:
      return "biased[" + std::to_string(support_.size()) + "]";
  }
  return "?";
}

std::uint64_t default_step_cap(std::int64_t n) {
  return 10000ULL * static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
}

namespace {

// Walk kernel, templated on a membership predicate and a step sampler so
// the per-step cost stays at a few instructions for the common cases.
template <class Inside, class Step>
std::uint64_t exit_kernel(Inside&& inside, Step&& step, const IVec& start,
                          std::uint64_t step_cap, Xoshiro256pp& rng,
                          VisitCounts& counts) {
  IVec x = start;
  counts.add(pack_point(x));
  std::uint64_t t = 1;
  while (true) {
    const IVec v = step(rng);
    x[0] += v[0];
    x[1] += v[1];
    x[2] += v[2];
    if (!inside(x)) return t;
    counts.add(pack_point(x));
    if (++t > step_cap)
      throw SimulationError("run_until_exit: step cap exceeded (cap=" +
                            std::to_string(step_cap) + ")");
  }
}

struct BoxInside {
  std::int64_t n;
  int dim;
  bool operator()(const IVec& x) const {
    for (int i = 0; i < dim; ++i)
      if (static_cast<std::uint64_t>(x[i] - 1) >= static_cast<std::uint64_t>(n - 1))
        return false;
    return true;
  }
};

struct GridInside {
  const MembershipGrid* g;
  bool operator()(const IVec& x) const { return g->inside(x); }
};

struct ExactInside {
  const LatticeDomain* dom;
  bool operator()(const IVec& x) const {
    return dom->spec().contains_scaled(x, dom->n());
  }
};

struct SimpleStep {
  int two_d;
  IVec operator()(Xoshiro256pp& rng) const {
    const std::uint32_t r = rng.bounded(static_cast<std::uint32_t>(two_d));
    IVec v{0, 0, 0};
    v[r >> 1] = (r & 1) ? 1 : -1;
    return v;
  }
};

struct LawStep {
  const WalkLaw* law;
  IVec operator()(Xoshiro256pp& rng) const { return law->sample_step(rng); }
};

template <class Inside>
std::uint64_t dispatch_step(const WalkLaw& law, Inside&& inside, const IVec& start,
                            std::uint64_t cap, Xoshiro256pp& rng, VisitCounts& counts) {
  if (law.kind() == LawKind::Simple)
    return exit_kernel(inside, SimpleStep{2 * law.dim()}, start, cap, rng, counts);
  return exit_kernel(inside, LawStep{&law}, start, cap, rng, counts);
}

}  // namespace

VisitHistogram run_until_exit(const WalkLaw& law, const LatticeDomain& dom,
                              const IVec& start, std::uint64_t stream_seed,
                              std::uint64_t step_cap) {
  if (law.dim() != dom.dim())
    throw ValidationError("run_until_exit: law/domain dimension mismatch");
  if (!dom.contains(start))
    throw ValidationError("run_until_exit: start point not in D_N");
  if (step_cap == 0) throw ValidationError("run_until_exit: step cap must be positive");
  Xoshiro256pp rng(stream_seed);
  VisitHistogram hist;
  hist.start = start;
  if (dom.is_box())
    hist.tau = dispatch_step(law, BoxInside{dom.n(), dom.dim()}, start, step_cap,
                             rng, hist.counts);
  else if (dom.grid())
    hist.tau = dispatch_step(law, GridInside{dom.grid()}, start, step_cap, rng,
                             hist.counts);
  else
    hist.tau = dispatch_step(law, ExactInside{&dom}, start, step_cap, rng,
                             hist.counts);
  return hist;
}

ExitSample extract_statistics(const VisitHistogram& hist, int p_max) {
  if (p_max < 1) throw ValidationError("extract_statistics: p_max must be >= 1");
  ExitSample s;
  s.tau = hist.tau;
  s.range = hist.counts.distinct();
  s.multi.assign(static_cast<std::size_t>(p_max), 0);
  hist.counts.for_each([&](std::uint64_t, std::uint32_t c) {
    if (c <= static_cast<std::uint32_t>(p_max)) {
      ++s.multi[c - 1];
    } else {
      ++s.overflow_sites;
      s.overflow_mass += c;
    }
  });
  return s;
}

std::vector<ProfilePoint> unconstrained_range_profile(
    const WalkLaw& law, const std::vector<std::uint64_t>& checkpoints, int p_max,
    std::uint64_t stream_seed) {
  if (checkpoints.empty()) return {};
  for (std::size_t i = 1; i < checkpoints.size(); ++i)
    if (checkpoints[i] <= checkpoints[i - 1])
      throw ValidationError("profile: checkpoints must be increasing");
  if (p_max < 1) throw ValidationError("profile: p_max must be >= 1");

  Xoshiro256pp rng(stream_seed);
  VisitCounts counts(1 << 16);
  // incremental exact-p occupancy: bucket[p-1] = #sites with count p,
  // plus one overflow bucket for counts beyond p_max
  std::vector<std::uint64_t> bucket(static_cast<std::size_t>(p_max) + 1, 0);
  IVec x{0, 0, 0};
  auto visit = [&](const IVec& p) {
    const std::uint32_t c = counts.add(pack_point(p));
    const auto pm = static_cast<std::uint32_t>(p_max);
    if (c == 1) {
      ++bucket[0];
    } else if (c <= pm) {
      --bucket[c - 2];
      ++bucket[c - 1];
    } else if (c == pm + 1) {
      --bucket[pm - 1];
      ++bucket[pm];
    }
  };
  // Visit-count convention: occupations at times 0..n, so R_1 counts both
  // endpoints of the first step when they differ.
  visit(x);
  std::vector<ProfilePoint> out;
  std::uint64_t t = 0;
  for (const std::uint64_t cp : checkpoints) {
    while (t < cp) {
      const IVec v = law.sample_step(rng);
      x[0] += v[0];
      x[1] += v[1];
      x[2] += v[2];
      visit(x);
      ++t;
    }
    ProfilePoint pt;
    pt.n = cp;
    pt.range = counts.distinct();
    pt.multi.assign(bucket.begin(), bucket.end() - 1);
    out.push_back(std::move(pt));
  }
  return out;
}

namespace {

// Tight return-to-origin loop for the simple walk: the position lives in one
// packed word (21 bits per axis, offset binary), so a step is one add and
// the return test one compare.
bool simple_walk_returns(int dim, std::uint64_t n_cutoff, Xoshiro256pp& rng) {
  constexpr std::uint64_t kOff = 1ULL << 20;
  const std::uint64_t origin = kOff | (kOff << 21) | (kOff << 42);
  std::uint64_t pos = origin;
  std::uint64_t deltas[6];
  for (int i = 0; i < dim; ++i) {
    deltas[2 * i] = 1ULL << (21 * i);
    deltas[2 * i + 1] = ~deltas[2 * i] + 1;  // two's complement subtract
  }
  const auto two_d = static_cast<std::uint32_t>(2 * dim);
  for (std::uint64_t t = 0; t < n_cutoff; ++t) {
    pos += deltas[rng.bounded(two_d)];
    if (pos == origin) return true;
  }
  return false;
}

// Simple walk in d up to 6 without packing (used beyond the packed range).
bool simple_walk_returns_generic(int dim, std::uint64_t n_cutoff,
                                 Xoshiro256pp& rng) {
  std::array<std::int64_t, 6> x{};
  const auto two_d = static_cast<std::uint32_t>(2 * dim);
  for (std::uint64_t t = 0; t < n_cutoff; ++t) {
    const std::uint32_t r = rng.bounded(two_d);
    x[r >> 1] += (r & 1) ? 1 : -1;
    std::int64_t any = 0;
    for (int i = 0; i < dim; ++i) any |= x[i];
    if (any == 0) return true;
  }
  return false;
}

bool law_walk_returns(const WalkLaw& law, std::uint64_t n_cutoff,
                      Xoshiro256pp& rng) {
  IVec x{0, 0, 0};
  const std::int64_t smax = law.max_step_linf();
  for (std::uint64_t t = 0; t < n_cutoff; ++t) {
    const IVec v = law.sample_step(rng);
    x[0] += v[0];
    x[1] += v[1];
    x[2] += v[2];
    if (x[0] == 0 && x[1] == 0 && x[2] == 0) return true;
    if ((t & 63) == 0) {
      // unreachable-origin cutoff: remaining steps cannot cover the distance
      const std::int64_t dist =
          std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])});
      if (dist > static_cast<std::int64_t>(n_cutoff - t - 1) * smax) return false;
    }
  }
  return false;
}

template <class Returns>
ReturnEstimate run_return_mc(Returns&& returns, std::uint64_t n_cutoff,
                             std::uint64_t replicates, const SeedPolicy& seeds,
                             int workers, std::string tail_note) {
  workers = std::max(1, workers);
  std::atomic<std::uint64_t> next{0};
  std::vector<std::uint64_t> hits(static_cast<std::size_t>(workers), 0);
  auto body = [&](int w) {
    std::uint64_t local = 0;
    constexpr std::uint64_t kBlock = 256;
    while (true) {
      const std::uint64_t begin = next.fetch_add(kBlock);
      if (begin >= replicates) break;
      const std::uint64_t end = std::min(begin + kBlock, replicates);
      for (std::uint64_t r = begin; r < end; ++r) {
        Xoshiro256pp rng(seeds.stream_seed(r));
        if (returns(rng)) ++local;
      }
    }
    hits[static_cast<std::size_t>(w)] = local;
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& th : pool) th.join();
  }
  std::uint64_t total = 0;
  for (const auto h : hits) total += h;
  ReturnEstimate est;
  est.replicates = replicates;
  est.n_cutoff = n_cutoff;
  est.p_hat = static_cast<double>(total) / static_cast<double>(replicates);
  est.std_error =
      std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(replicates));
  est.tail_note = std::move(tail_note);
  return est;
}

}  // namespace

ReturnEstimate estimate_return_probability(int dim, std::uint64_t n_cutoff,
                                           std::uint64_t replicates,
                                           const SeedPolicy& seeds, int workers) {
  if (dim <= 2)
    throw ValidationError(
        "estimate_return_probability: recurrent for d <= 2 (p0 = 1)");
  if (dim > 6) throw ValidationError("estimate_return_probability: d > 6 unsupported");
  if (n_cutoff < 10000)
    throw ValidationError("estimate_return_probability: cutoff must be >= 1e4");
  // d = 3 runs the packed kernel while the displacement bound |x_i| <= cutoff
  // fits the 21-bit fields; otherwise plain coordinates.
  std::string note = "biased low by P(return after cutoff) = O(cutoff^(1-d/2))";
  if (dim == 3 && n_cutoff < (1ULL << 20)) {
    return run_return_mc(
        [&](Xoshiro256pp& rng) { return simple_walk_returns(3, n_cutoff, rng); },
        n_cutoff, replicates, seeds, workers, std::move(note));
  }
  return run_return_mc(
      [&](Xoshiro256pp& rng) {
        return simple_walk_returns_generic(dim, n_cutoff, rng);
      },
      n_cutoff, replicates, seeds, workers, std::move(note));
}

ReturnEstimate estimate_return_probability(const WalkLaw& law,
                                           std::uint64_t n_cutoff,
                                           std::uint64_t replicates,
                                           const SeedPolicy& seeds, int workers) {
  if (law.kind() != LawKind::Biased && law.dim() <= 2)
    throw ValidationError("estimate_return_probability: law is recurrent");
  return run_return_mc(
      [&](Xoshiro256pp& rng) { return law_walk_returns(law, n_cutoff, rng); },
      n_cutoff, replicates, seeds, workers,
      "biased low by the (sub-geometric) tail beyond the cutoff");
}

}  // namespace rangelab
