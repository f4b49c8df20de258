#pragma once

#include <cstdint>
#include <vector>

namespace parrep {

// Counter-based splittable pseudo-random stream.  Every output is a pure
// function of (key, counter), and child streams derive a fresh key from
// (parent key, child index) without advancing the parent.  This gives each
// trial / step its own reproducible stream from one 64-bit master seed.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t master_seed);

  // Derived stream for `index` (trial number, round number, ...).  Does not
  // advance or otherwise touch this stream.
  SplitRng split(std::uint64_t index) const;

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();

  // Uniform integer in [0, n), unbiased (rejection).  n >= 1.
  std::uint64_t uniform_below(std::uint64_t n);

  // Index sampled proportionally to weights (non-negative; normalised
  // internally).  Throws if the total weight is below 1e-12.
  std::size_t sample_discrete(const std::vector<double>& weights);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  SplitRng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace parrep
