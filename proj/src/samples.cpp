#include "rangelab/samples.hpp"

#include <algorithm>

#include "rangelab/errors.hpp"

namespace rangelab {

void SampleBatch::add(ExitSample s) {
  const auto pos = std::lower_bound(
      samples_.begin(), samples_.end(), s.replicate,
      [](const ExitSample& a, std::uint64_t r) { return a.replicate < r; });
  if (pos != samples_.end() && pos->replicate == s.replicate)
    throw ValidationError("SampleBatch: duplicate replicate index");
  samples_.insert(pos, std::move(s));
}

void SampleBatch::merge(const SampleBatch& other) {
  if (other.samples_.empty()) return;
  if (samples_.empty() && config_tag_ == 0 && p_max_ == 0) {
    *this = other;
    return;
  }
  if (config_tag_ != other.config_tag_ || p_max_ != other.p_max_)
    throw ValidationError("SampleBatch::merge: incompatible configurations");
  std::vector<ExitSample> merged;
  merged.reserve(samples_.size() + other.samples_.size());
  auto a = samples_.begin();
  auto b = other.samples_.begin();
  while (a != samples_.end() && b != other.samples_.end()) {
    if (a->replicate == b->replicate)
      throw ValidationError("SampleBatch::merge: duplicate replicate index");
    merged.push_back(a->replicate < b->replicate ? *a++ : *b++);
  }
  merged.insert(merged.end(), a, samples_.end());
  merged.insert(merged.end(), b, other.samples_.end());
  samples_ = std::move(merged);
}

SampleBatch merge(const SampleBatch& a, const SampleBatch& b) {
  SampleBatch out = a;
  out.merge(b);
  return out;
}

}  // namespace rangelab
