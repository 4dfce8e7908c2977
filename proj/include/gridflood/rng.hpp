#pragma once

#include <cstdint>
#include <initializer_list>

namespace gridflood {

// SplitMix64 finalizer. Used both as the output function of RngStream and to
// hash-chain derived stream identities.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based random stream: the state advances by a fixed odd gamma and
// each output is mix64(state). Identical (seed, derivation path) pairs give
// identical draw sequences on every platform, which is what makes parallel
// trials reproducible.
class RngStream {
 public:
  RngStream() noexcept : state_(0) {}
  explicit RngStream(std::uint64_t seed) noexcept : state_(mix64(seed ^ kSalt)) {}

  // Derives an independent child stream, e.g. derive(seed, {kWalkTag, agent}).
  static RngStream derive(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = mix64(seed ^ kSalt);
    for (std::uint64_t p : path) s = mix64((s + kGamma) ^ mix64(p ^ kPathSalt));
    RngStream r;
    r.state_ = s;
    return r;
  }

  std::uint64_t next_u64() noexcept {
    state_ += kGamma;
    return mix64(state_);
  }

  // Unbiased draw in [0, bound) via Lemire's multiply-shift with rejection.
  std::uint32_t next_below(std::uint32_t bound) noexcept {
    std::uint64_t x = next_u64() >> 32;
    std::uint64_t m = x * bound;
    auto low = static_cast<std::uint32_t>(m);
    if (low < bound) {
      const std::uint32_t threshold = (0u - bound) % bound;
      while (low < threshold) {
        x = next_u64() >> 32;
        m = x * bound;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kSalt = 0x8AD6D4F2D9E3C1A7ULL;
  static constexpr std::uint64_t kPathSalt = 0x2545F4914F6CDD1DULL;

  std::uint64_t state_;
};

// Stream derivation tags, one per purpose so that draws never alias.
inline constexpr std::uint64_t kWalkTag = 0x57414C4Bull;   // agent movement
inline constexpr std::uint64_t kInitTag = 0x494E4954ull;   // initial placement
inline constexpr std::uint64_t kTrialTag = 0x5452494Cull;  // sweep trials
inline constexpr std::uint64_t kProbeTag = 0x50524F42ull;  // MC probes

}  // namespace gridflood
