#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "pcorr/error.hpp"
#include "pcorr/sequence.hpp"
#include "pcorr/torus.hpp"

namespace pcorr {

// ---------------------------------------------------------------------------
// Pair correlation F(gamma, s, N, x)
// ---------------------------------------------------------------------------

/// Arc radius s/N used by the pair-correlation window (inclusive boundary).
inline ArcRadius pair_window(double s, std::size_t n) {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error("s must be a positive finite real");
  return ArcRadius::from_double(s / static_cast<double>(n));
}

/// Number of ordered pairs (i, j), i != j, with ||x_i - x_j - gamma|| <= s/n,
/// where n = points.size(). Direct double loop.
inline std::uint64_t pair_count_naive(std::span<const TorusPoint> points, TorusPoint gamma,
                                      double s) {
  const std::size_t n = points.size();
  if (n == 0) throw Error("empty sequence");
  const ArcRadius window = pair_window(s, n);
  if (window.covers_all) return static_cast<std::uint64_t>(n) * (n - 1);
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && window.contains(points[i] - points[j] - gamma)) ++count;
    }
  }
  return count;
}

inline double pair_corr_naive(std::span<const TorusPoint> points, TorusPoint gamma, double s) {
  const std::uint64_t c = pair_count_naive(points, gamma, s);
  return static_cast<double>(c) / static_cast<double>(points.size());
}

/// Sorted form of {x_j + gamma} for repeated O(n log n) pair counts at several s.
class PairCorrelator {
 public:
  PairCorrelator(std::span<const TorusPoint> points, TorusPoint gamma)
      : points_(points.begin(), points.end()), gamma_(gamma) {
    if (points_.empty()) throw Error("empty sequence");
    shifted_.reserve(points_.size());
    for (const auto p : points_) shifted_.push_back((p + gamma).raw());
    std::sort(shifted_.begin(), shifted_.end());
  }

  std::size_t size() const noexcept { return points_.size(); }

  std::uint64_t count(double s) const {
    const std::size_t n = points_.size();
    const ArcRadius window = pair_window(s, n);
    if (window.covers_all) return static_cast<std::uint64_t>(n) * (n - 1);
    const std::uint64_t r = window.raw;
    std::uint64_t total = 0;
    const auto first = shifted_.begin();
    const auto last = shifted_.end();
    for (const auto p : points_) {
      // ||x_i - y|| <= r  <=>  y in [x_i - r, x_i + r] on the circle.
      const std::uint64_t lo = p.raw() - r;
      const std::uint64_t hi = p.raw() + r;
      const auto lo_it = std::lower_bound(first, last, lo);
      const auto hi_it = std::upper_bound(first, last, hi);
      if (lo <= hi) {
        total += static_cast<std::uint64_t>(hi_it - lo_it);
      } else {
        total += static_cast<std::uint64_t>(last - lo_it) + static_cast<std::uint64_t>(hi_it - first);
      }
    }
    // Each i matches its own shifted copy exactly when ||gamma|| <= r.
    if (gamma_.norm_raw() <= r) total -= n;
    return total;
  }

  double f(double s) const {
    return static_cast<double>(count(s)) / static_cast<double>(points_.size());
  }

 private:
  std::vector<TorusPoint> points_;
  TorusPoint gamma_;
  std::vector<std::uint64_t> shifted_;
};

inline std::uint64_t pair_count_fast(std::span<const TorusPoint> points, TorusPoint gamma,
                                     double s) {
  return PairCorrelator(points, gamma).count(s);
}

inline double pair_corr_fast(std::span<const TorusPoint> points, TorusPoint gamma, double s) {
  return PairCorrelator(points, gamma).f(s);
}

// ---------------------------------------------------------------------------
// Dilation x_n = a_n alpha mod 1
// ---------------------------------------------------------------------------

inline void dilate_into(const IntegerSequence& seq, std::size_t n, const PreciseAngle& alpha,
                        std::vector<TorusPoint>& out) {
  seq.require(n);
  out.resize(n);
  std::vector<std::uint64_t> scratch;
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha.times(seq.limbs(i), scratch);
}

/// First n points of (a_i alpha mod 1). Exact modulo the 64-bit output grid.
inline std::vector<TorusPoint> dilate(const IntegerSequence& seq, std::size_t n,
                                      const PreciseAngle& alpha) {
  std::vector<TorusPoint> out;
  dilate_into(seq, n, alpha, out);
  return out;
}

inline std::vector<TorusPoint> dilate(const IntegerSequence& seq, std::size_t n, double alpha) {
  return dilate(seq, n, PreciseAngle::from_double(alpha));
}

// ---------------------------------------------------------------------------
// Difference representations r_A(d) and additive energy
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::uint64_t kDenseSpanLimit = std::uint64_t{1} << 25;
inline constexpr std::uint64_t kResiduePrime = (std::uint64_t{1} << 61) - 1;

// One class of equal positive differences a_i - a_j (i > j) with its multiplicity.
struct DifferenceClass {
  std::uint32_t i;
  std::uint32_t j;
  std::uint64_t count;
};

inline std::uint64_t mod_mersenne61(u128 x) {
  const u128 p = kResiduePrime;
  x = (x & p) + (x >> 61);
  x = (x & p) + (x >> 61);
  auto r = static_cast<std::uint64_t>(x);
  if (r >= kResiduePrime) r -= kResiduePrime;
  return r;
}

inline std::uint64_t residue_mod_p(std::span<const std::uint64_t> limbs) {
  // 2^64 mod (2^61 - 1) = 8.
  std::uint64_t r = 0;
  for (std::size_t k = limbs.size(); k-- > 0;) {
    r = mod_mersenne61(static_cast<u128>(r) * 8 + limbs[k]);
  }
  return r;
}

inline u128 value_u128(std::span<const std::uint64_t> limbs) {
  u128 v = limbs[0];
  if (limbs.size() > 1) v |= static_cast<u128>(limbs[1]) << 64;
  return v;
}

inline void subtract_limbs(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                           std::vector<std::uint64_t>& out) {
  out.resize(a.size());
  std::uint64_t borrow = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const u128 t = static_cast<u128>(a[k]) - b[k] - borrow;
    out[k] = static_cast<std::uint64_t>(t);
    borrow = static_cast<std::uint64_t>(t >> 64) != 0 ? 1 : 0;
  }
}

inline std::uint64_t pack_pair(std::size_t i, std::size_t j) {
  return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

// Residue key of a_i - a_j: (d mod 2^64, d mod (2^61 - 1)). Equal differences
// give equal keys; colliding unequal differences are separated afterwards.
struct ResidueTable {
  std::vector<std::uint64_t> low;
  std::vector<std::uint64_t> modp;

  ResidueTable(const IntegerSequence& seq, std::size_t n) : low(n), modp(n) {
    for (std::size_t i = 0; i < n; ++i) {
      low[i] = seq.limbs(i)[0];
      modp[i] = residue_mod_p(seq.limbs(i));
    }
  }

  u128 key(std::size_t i, std::size_t j) const {
    const std::uint64_t lo = low[i] - low[j];
    std::uint64_t mp = modp[i] + kResiduePrime - modp[j];
    if (mp >= kResiduePrime) mp -= kResiduePrime;
    return (static_cast<u128>(lo) << 64) | mp;
  }
};

// Splits a set of pairs sharing a residue key into exact-difference classes.
inline void refine_exact(const IntegerSequence& seq, std::vector<std::uint64_t>& pairs,
                         std::vector<DifferenceClass>& out) {
  std::vector<std::vector<std::uint64_t>> diffs(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto i = static_cast<std::size_t>(pairs[k] >> 32);
    const auto j = static_cast<std::size_t>(pairs[k] & 0xffffffffU);
    subtract_limbs(seq.limbs(i), seq.limbs(j), diffs[k]);
  }
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int c = compare_limbs(diffs[a], diffs[b]);
    return c != 0 ? c < 0 : pairs[a] < pairs[b];
  });
  std::size_t start = 0;
  for (std::size_t k = 1; k <= order.size(); ++k) {
    if (k == order.size() || compare_limbs(diffs[order[k]], diffs[order[start]]) != 0) {
      const std::uint64_t rep = pairs[order[start]];
      out.push_back({static_cast<std::uint32_t>(rep >> 32), static_cast<std::uint32_t>(rep & 0xffffffffU),
                     static_cast<std::uint64_t>(k - start)});
      start = k;
    }
  }
}

// All classes of equal positive differences among the first n elements, each
// with a representative pair. Deterministic order.
inline std::vector<DifferenceClass> positive_classes(const IntegerSequence& seq, std::size_t n) {
  seq.require(n);
  if (n > 0xffffffffULL) throw Error("prefix too large");
  std::vector<DifferenceClass> classes;
  if (n < 2) return classes;
  if (seq.width() <= 2) {
    std::vector<std::pair<u128, std::uint64_t>> diffs;
    diffs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 1; i < n; ++i) {
      const u128 ai = value_u128(seq.limbs(i));
      for (std::size_t j = 0; j < i; ++j) diffs.emplace_back(ai - value_u128(seq.limbs(j)), pack_pair(i, j));
    }
    std::sort(diffs.begin(), diffs.end());
    std::size_t start = 0;
    for (std::size_t k = 1; k <= diffs.size(); ++k) {
      if (k == diffs.size() || diffs[k].first != diffs[start].first) {
        const std::uint64_t rep = diffs[start].second;
        classes.push_back({static_cast<std::uint32_t>(rep >> 32),
                           static_cast<std::uint32_t>(rep & 0xffffffffU), static_cast<std::uint64_t>(k - start)});
        start = k;
      }
    }
    return classes;
  }
  const ResidueTable table(seq, n);
  std::vector<std::pair<u128, std::uint64_t>> keyed;
  keyed.reserve(n * (n - 1) / 2);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) keyed.emplace_back(table.key(i, j), pack_pair(i, j));
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::uint64_t> group;
  std::size_t start = 0;
  for (std::size_t k = 1; k <= keyed.size(); ++k) {
    if (k == keyed.size() || keyed[k].first != keyed[start].first) {
      group.clear();
      for (std::size_t m = start; m < k; ++m) group.push_back(keyed[m].second);
      refine_exact(seq, group, classes);
      start = k;
    }
  }
  return classes;
}

// Multiplicities of the distinct positive differences (energy-only fast paths).
inline std::vector<std::uint64_t> positive_multiplicities(const IntegerSequence& seq, std::size_t n) {
  seq.require(n);
  std::vector<std::uint64_t> mult;
  if (n < 2) return mult;
  if (seq.fits_u64() && seq.u64(n - 1) - seq.u64(0) <= kDenseSpanLimit) {
    const std::uint64_t base = seq.u64(0);
    std::vector<std::uint32_t> counts(seq.u64(n - 1) - base + 1, 0);
    for (std::size_t i = 1; i < n; ++i) {
      const std::uint64_t ai = seq.u64(i);
      for (std::size_t j = 0; j < i; ++j) ++counts[ai - seq.u64(j)];
    }
    for (const auto c : counts)
      if (c != 0) mult.push_back(c);
    return mult;
  }
  if (seq.width() <= 2) {
    std::vector<u128> diffs;
    diffs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 1; i < n; ++i) {
      const u128 ai = value_u128(seq.limbs(i));
      for (std::size_t j = 0; j < i; ++j) diffs.push_back(ai - value_u128(seq.limbs(j)));
    }
    std::sort(diffs.begin(), diffs.end());
    std::size_t start = 0;
    for (std::size_t k = 1; k <= diffs.size(); ++k) {
      if (k == diffs.size() || diffs[k] != diffs[start]) {
        mult.push_back(k - start);
        start = k;
      }
    }
    return mult;
  }
  // Wide elements: sort residue keys only, then re-examine colliding keys exactly.
  const ResidueTable table(seq, n);
  std::vector<u128> keys;
  keys.reserve(n * (n - 1) / 2);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) keys.push_back(table.key(i, j));
  std::sort(keys.begin(), keys.end());
  std::vector<u128> shared;
  std::size_t start = 0;
  for (std::size_t k = 1; k <= keys.size(); ++k) {
    if (k == keys.size() || keys[k] != keys[start]) {
      if (k - start == 1) {
        mult.push_back(1);
      } else {
        shared.push_back(keys[start]);
      }
      start = k;
    }
  }
  keys.clear();
  keys.shrink_to_fit();
  if (shared.empty()) return mult;
  std::vector<std::pair<u128, std::uint64_t>> members;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const u128 key = table.key(i, j);
      if (std::binary_search(shared.begin(), shared.end(), key)) members.emplace_back(key, pack_pair(i, j));
    }
  }
  std::sort(members.begin(), members.end());
  std::vector<std::uint64_t> group;
  std::vector<DifferenceClass> refined;
  start = 0;
  for (std::size_t k = 1; k <= members.size(); ++k) {
    if (k == members.size() || members[k].first != members[start].first) {
      group.clear();
      for (std::size_t m = start; m < k; ++m) group.push_back(members[m].second);
      refine_exact(seq, group, refined);
      start = k;
    }
  }
  for (const auto& c : refined) mult.push_back(c.count);
  return mult;
}

}  // namespace detail

/// r_A(d) for every d in A_N - A_N, sorted by d. Negative and zero differences
/// are included, so the invariants sum r = N^2, r(0) = N, r(d) = r(-d) hold
/// on the stored entries directly.
class RepresentationProfile {
 public:
  struct Entry {
    Natural d;  // signed; cpp_int carries the sign
    std::uint64_t r;
  };

  RepresentationProfile() = default;
  RepresentationProfile(std::size_t n, std::vector<Entry> entries)
      : n_(n), entries_(std::move(entries)) {}

  std::size_t n() const noexcept { return n_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t support_size() const noexcept { return entries_.size(); }

  std::uint64_t operator[](const Natural& d) const {
    const auto it = std::lower_bound(entries_.begin(), entries_.end(), d,
                                     [](const Entry& e, const Natural& x) { return e.d < x; });
    return (it != entries_.end() && it->d == d) ? it->r : 0;
  }

  u128 total() const {
    u128 t = 0;
    for (const auto& e : entries_) t += e.r;
    return t;
  }

  /// Sum of r(d)^2, which is the additive energy.
  u128 sum_of_squares() const {
    u128 t = 0;
    for (const auto& e : entries_) t += static_cast<u128>(e.r) * e.r;
    return t;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Entry> entries_;
};

inline RepresentationProfile repr_profile(const IntegerSequence& seq, std::size_t n) {
  if (n == 0) throw Error("n must be >= 1");
  seq.require(n);
  const auto classes = detail::positive_classes(seq, n);
  std::vector<RepresentationProfile::Entry> positive;
  positive.reserve(classes.size());
  for (const auto& c : classes) positive.push_back({seq.at(c.i) - seq.at(c.j), c.count});
  std::sort(positive.begin(), positive.end(), [](const auto& a, const auto& b) { return a.d < b.d; });
  std::vector<RepresentationProfile::Entry> all;
  all.reserve(2 * positive.size() + 1);
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) all.push_back({-it->d, it->r});
  all.push_back({Natural(0), static_cast<std::uint64_t>(n)});
  for (auto& e : positive) all.push_back(std::move(e));
  return RepresentationProfile(n, std::move(all));
}

/// Energy together with the shape of the representation function.
struct DifferenceSummary {
  std::size_t n = 0;
  u128 energy = 0;
  std::uint64_t support = 0;      // distinct d, including 0 and both signs
  std::uint64_t max_r_nonzero = 0;  // max over d != 0
};

inline DifferenceSummary difference_summary(const IntegerSequence& seq, std::size_t n) {
  if (n == 0) throw Error("n must be >= 1");
  const auto mult = detail::positive_multiplicities(seq, n);
  DifferenceSummary s;
  s.n = n;
  u128 sq = 0;
  for (const auto m : mult) {
    sq += static_cast<u128>(m) * m;
    s.max_r_nonzero = std::max(s.max_r_nonzero, m);
  }
  s.energy = static_cast<u128>(n) * n + 2 * sq;
  s.support = 2 * mult.size() + 1;
  return s;
}

/// #{(a,b,c,d) in A_N^4 : a + b = c + d}, computed as sum_d r_A(d)^2.
inline u128 additive_energy(const IntegerSequence& seq, std::size_t n) {
  return difference_summary(seq, n).energy;
}

inline long double to_long_double(u128 x) { return static_cast<long double>(x); }

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// Mean of F(s, n) over (alpha, gamma) in T^2: 2 s (n - 1) / n, valid while 2s/n <= 1.
inline double f_expectation(double s, std::size_t n) {
  if (!(s > 0.0)) throw Error("s must be positive");
  if (n < 1) throw Error("n must be >= 1");
  if (2.0 * s / static_cast<double>(n) > 1.0) throw Error("formula out of range");
  return 2.0 * s * static_cast<double>(n - 1) / static_cast<double>(n);
}

/// Mean of F(s, n) for any s: past 2s/n >= 1 the window covers the torus and F = n - 1.
inline double f_mean_exact(double s, std::size_t n) {
  if (2.0 * s / static_cast<double>(n) >= 1.0) return static_cast<double>(n - 1);
  return f_expectation(s, n);
}

/// Upper bound 2 E s / n^3 for the variance of F(s, n) over T^2.
inline double variance_bound(u128 energy, std::size_t n, double s) {
  if (n < 1) throw Error("n must be >= 1");
  const long double nn = static_cast<long double>(n);
  return static_cast<double>(2.0L * to_long_double(energy) * static_cast<long double>(s) / (nn * nn * nn));
}

}  // namespace pcorr
