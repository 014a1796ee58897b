#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace topicstab {

// All randomness in the project flows through the two primitives below.
// Both are fully pinned: splitmix64 is the reference implementation from
// Steele et al., and std::mt19937_64 is specified bit-for-bit by the C++
// standard. Distributions from <random> are never used because their
// output is implementation-defined.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Per-member seed derivation: the (index+1)-th output of the splitmix64
// stream started at master_seed. Distinct for distinct indices.
inline std::uint64_t split_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(master_seed + 0x9E3779B97F4A7C15ULL * index);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on the open interval (0, 1): 53-bit mantissa, offset by half an ulp.
  double next_open01() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Unbiased integer in [0, n) by rejection sampling.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

private:
  std::mt19937_64 gen_;
};

// Fisher-Yates shuffle driven by the pinned generator.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace topicstab
