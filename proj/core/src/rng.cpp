#include "parrep/rng.hpp"

#include <stdexcept>

namespace parrep {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finaliser.
std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

SplitRng::SplitRng(std::uint64_t master_seed) : key_(mix(master_seed + kGolden)), counter_(0) {}

SplitRng SplitRng::split(std::uint64_t index) const {
  return SplitRng(mix(key_ ^ mix((index + 1) * kGolden)), 0);
}

std::uint64_t SplitRng::next_u64() { return mix(key_ + (++counter_) * kGolden); }

double SplitRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t SplitRng::uniform_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
  if (n == 1) return 0;
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  for (;;) {
    const std::uint64_t u = next_u64();
    if (u < limit) return u % n;
  }
}

std::size_t SplitRng::sample_discrete(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total < 1e-12) throw std::runtime_error("sample_discrete: all weights vanish");
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  bool seen = false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    seen = true;
    acc += weights[i];
    if (u < acc) return i;
  }
  if (!seen) throw std::runtime_error("sample_discrete: all weights vanish");
  return last_positive;
}

}  // namespace parrep
