#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace loglin::rng {

// All randomness in the library flows through std::mt19937_64 (whose output
// sequence is fixed by the standard) plus the explicit transforms below, so
// seeded runs are reproducible across compilers and standard libraries.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a stream id.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  return splitmix64(base + 0x632be59bd9b4e019ULL * (stream + 1));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be positive.
inline uint64_t uniform_below(std::mt19937_64& gen, uint64_t n) {
  // Multiply-shift rejection (unbiased).
  const uint64_t threshold = (0 - n) % n;
  for (;;) {
    const uint64_t r = gen();
    const unsigned __int128 m = static_cast<unsigned __int128>(r) * n;
    if (static_cast<uint64_t>(m) >= threshold) {
      return static_cast<uint64_t>(m >> 64);
    }
  }
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& gen) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(uniform_below(gen, i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Index permutation of {0,..,n-1}; identity when shuffled with n <= 1.
inline std::vector<uint32_t> permutation(size_t n, std::mt19937_64& gen) {
  std::vector<uint32_t> p(n);
  for (size_t i = 0; i < n; ++i) p[i] = static_cast<uint32_t>(i);
  shuffle(p, gen);
  return p;
}

}  // namespace loglin::rng
