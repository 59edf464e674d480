#pragma once

#include <cstdint>
#include <limits>

namespace pcorr {

// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator keyed by (seed, index, stream).
///
/// Output k of a stream is mix64(key + (k+1)*golden), so a stream is fully
/// determined by its key and any sample can be regenerated without replaying
/// the others. This is what makes Monte Carlo runs independent of the worker
/// schedule.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  constexpr CounterRng(std::uint64_t seed, std::uint64_t index = 0,
                       std::uint64_t stream = 0) noexcept
      : key_(derive_key(seed, index, stream)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  /// Uniform on [0, bound) by rejection; bound must be positive.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = max() - max() % bound;
    for (;;) {
      const std::uint64_t x = (*this)();
      if (x < limit) return x % bound;
    }
  }

  /// Uniform double on [0, 1) with 53 random bits.
  constexpr double uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t index,
                                            std::uint64_t stream) noexcept {
    std::uint64_t k = mix64(seed + kGolden);
    k = mix64(k ^ (index + 0x632be59bd9b4e019ULL));
    k = mix64(k ^ (stream * 0x8cb92ba72f3d8dd7ULL + 1));
    return k;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace pcorr
