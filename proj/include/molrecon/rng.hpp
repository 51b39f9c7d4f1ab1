#pragma once

#include <cstdint>
#include <random>

namespace molrecon {

/// Base seed plus a stream index (trial or block number).
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent engine per (seed, stream); identical inputs give identical draws.
inline Engine make_engine(RngSeed s) {
  std::uint64_t state = s.seed ^ (0xd1b54a32d192ed03ULL * (s.stream + 1));
  std::uint32_t words[8];
  for (int i = 0; i < 8; i += 2) {
    const std::uint64_t v = splitmix64(state);
    words[i] = static_cast<std::uint32_t>(v);
    words[i + 1] = static_cast<std::uint32_t>(v >> 32);
  }
  std::seed_seq seq(std::begin(words), std::end(words));
  return Engine(seq);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Engine& eng) noexcept {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Fair coin flips served from a 64-bit buffer.
class BitSource {
 public:
  explicit BitSource(Engine& eng) noexcept : eng_(&eng) {}

  /// Next n (<= 64) random bits in the low positions.
  std::uint64_t take(int n) noexcept {
    if (left_ < n) {
      buffer_ = (*eng_)();
      left_ = 64;
    }
    const std::uint64_t out = n == 64 ? buffer_ : buffer_ & ((std::uint64_t{1} << n) - 1);
    buffer_ = n == 64 ? 0 : buffer_ >> n;
    left_ -= n;
    return out;
  }

 private:
  Engine* eng_;
  std::uint64_t buffer_ = 0;
  int left_ = 0;
};

}  // namespace molrecon
