#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "pcorr/error.hpp"
#include "pcorr/rng.hpp"

namespace pcorr {

/// A point of R/Z held as a 64-bit fixed-point fraction: value = raw / 2^64.
///
/// Addition and subtraction are exact (wrapping arithmetic is the torus
/// group law), so differences x_i - x_j - gamma never accumulate rounding.
class TorusPoint {
 public:
  constexpr TorusPoint() = default;

  static constexpr TorusPoint from_raw(std::uint64_t raw) noexcept {
    TorusPoint p;
    p.raw_ = raw;
    return p;
  }

  /// Reduces x mod 1 and truncates to the 2^-64 grid.
  static TorusPoint from_double(double x) {
    if (!std::isfinite(x)) throw Error("torus coordinate must be finite");
    double frac = x - std::floor(x);
    if (frac >= 1.0) frac = 0.0;
    return from_raw(static_cast<std::uint64_t>(std::floor(std::ldexp(frac, 64))));
  }

  constexpr std::uint64_t raw() const noexcept { return raw_; }
  double value() const noexcept { return std::ldexp(static_cast<double>(raw_), -64); }

  /// Distance to 0 in units of 2^-64, in [0, 2^63].
  constexpr std::uint64_t norm_raw() const noexcept {
    return raw_ <= (std::uint64_t{1} << 63) ? raw_ : std::uint64_t{0} - raw_;
  }
  double norm() const noexcept { return std::ldexp(static_cast<double>(norm_raw()), -64); }

  constexpr TorusPoint operator+(TorusPoint o) const noexcept { return from_raw(raw_ + o.raw_); }
  constexpr TorusPoint operator-(TorusPoint o) const noexcept { return from_raw(raw_ - o.raw_); }
  constexpr TorusPoint operator-() const noexcept { return from_raw(std::uint64_t{0} - raw_); }

  constexpr auto operator<=>(const TorusPoint&) const = default;

 private:
  std::uint64_t raw_ = 0;
};

/// Closed arc radius around 0: either the whole torus or [-raw, raw] * 2^-64.
struct ArcRadius {
  bool covers_all = false;
  std::uint64_t raw = 0;

  /// Radius r >= 0 measured on R/Z. Anything >= 1/2 covers the torus.
  static ArcRadius from_double(double r) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw Error("arc radius must be finite and >= 0");
    if (r >= 0.5) return {true, 0};
    return {false, static_cast<std::uint64_t>(std::floor(std::ldexp(r, 64)))};
  }

  constexpr bool contains(TorusPoint offset) const noexcept {
    return covers_all || offset.norm_raw() <= raw;
  }
};

/// A torus point carried at arbitrary fixed-point precision: value = sum of
/// limbs_[k] * 2^(-64 (k + 1)), most significant limb first.
///
/// Used as the dilation factor alpha. Multiplying an L-limb angle by an
/// integer is exact modulo 2^(64 L), so a_n * alpha mod 1 stays accurate no
/// matter how many bits a_n has.
class PreciseAngle {
 public:
  PreciseAngle() : limbs_(1, 0) {}

  explicit PreciseAngle(std::vector<std::uint64_t> limbs) : limbs_(std::move(limbs)) {
    if (limbs_.empty()) limbs_.push_back(0);
  }

  explicit PreciseAngle(TorusPoint p) : limbs_{p.raw()} {}

  /// Exact conversion of the double's fractional part.
  static PreciseAngle from_double(double x) {
    if (!std::isfinite(x)) throw Error("angle must be finite");
    double frac = x - std::floor(x);
    if (frac >= 1.0) frac = 0.0;
    if (frac == 0.0) return PreciseAngle{};
    int exp = 0;
    const double mant = std::frexp(frac, &exp);  // frac = mant * 2^exp, exp <= 0
    const auto m = static_cast<std::uint64_t>(std::ldexp(mant, 53));
    // frac = m * 2^(exp - 53); lowest set bit sits at fractional position 53 - exp.
    const int lowest = 53 - exp;
    const std::size_t limbs = static_cast<std::size_t>((lowest + 63) / 64);
    std::vector<std::uint64_t> out(limbs, 0);
    // Place bit b of m (weight 2^(b + exp - 53)) at fractional position 53 - exp - b.
    for (int b = 0; b < 53; ++b) {
      if (!((m >> b) & 1U)) continue;
      const int pos = lowest - b;  // 1-based fractional position
      const int limb = (pos - 1) / 64;
      const int shift = 63 - (pos - 1) % 64;
      out[static_cast<std::size_t>(limb)] |= std::uint64_t{1} << shift;
    }
    return PreciseAngle(std::move(out));
  }

  static PreciseAngle random(CounterRng& rng, std::size_t limbs) {
    std::vector<std::uint64_t> out(std::max<std::size_t>(limbs, 1));
    for (auto& w : out) w = rng();
    return PreciseAngle(std::move(out));
  }

  std::size_t limb_count() const noexcept { return limbs_.size(); }
  std::span<const std::uint64_t> limbs() const noexcept { return limbs_; }

  TorusPoint torus_point() const noexcept { return TorusPoint::from_raw(limbs_.front()); }
  double value() const noexcept {
    double v = 0.0;
    for (std::size_t k = std::min<std::size_t>(limbs_.size(), 2); k-- > 0;)
      v = (v + static_cast<double>(limbs_[k])) * 0x1.0p-64;
    return v;
  }

  /// frac(2^shift * alpha), truncated to 64 bits.
  TorusPoint shifted(std::size_t shift) const noexcept {
    const std::size_t limb = shift / 64;
    const unsigned bit = static_cast<unsigned>(shift % 64);
    const std::uint64_t hi = limb < limbs_.size() ? limbs_[limb] : 0;
    const std::uint64_t lo = limb + 1 < limbs_.size() ? limbs_[limb + 1] : 0;
    if (bit == 0) return TorusPoint::from_raw(hi);
    return TorusPoint::from_raw((hi << bit) | (lo >> (64 - bit)));
  }

  /// Top 64 bits of frac(a * alpha) for a little-endian multi-limb integer a.
  /// `scratch` is reused across calls to avoid allocation in hot loops.
  TorusPoint times(std::span<const std::uint64_t> a, std::vector<std::uint64_t>& scratch) const {
    const std::size_t L = limbs_.size();
    if (L == 1 && !a.empty()) return TorusPoint::from_raw(a[0] * limbs_[0]);
    scratch.assign(L, 0);
    // Integer view of alpha is little-endian: A[j] = limbs_[L - 1 - j].
    const std::size_t top = std::min(a.size(), L);
    for (std::size_t i = 0; i < top; ++i) {
      const std::uint64_t ai = a[i];
      if (ai == 0) continue;
      std::uint64_t carry = 0;
      for (std::size_t j = 0; i + j < L; ++j) {
        const unsigned __int128 t = static_cast<unsigned __int128>(ai) * limbs_[L - 1 - j] +
                                    scratch[i + j] + carry;
        scratch[i + j] = static_cast<std::uint64_t>(t);
        carry = static_cast<std::uint64_t>(t >> 64);
      }
    }
    return TorusPoint::from_raw(scratch[L - 1]);
  }

 private:
  std::vector<std::uint64_t> limbs_;
};

/// x + shift mod 1 for every point; the rotation used before equidistribution checks.
inline std::vector<TorusPoint> rotate(std::span<const TorusPoint> points, TorusPoint shift) {
  std::vector<TorusPoint> out;
  out.reserve(points.size());
  for (const auto p : points) out.push_back(p + shift);
  return out;
}

}  // namespace pcorr
