#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pcorr/error.hpp"
#include "pcorr/parallel.hpp"
#include "pcorr/rng.hpp"
#include "pcorr/sequence.hpp"
#include "pcorr/torus.hpp"

namespace pcorr {

using Rational = boost::multiprecision::cpp_rational;

/// phi(0..m) by a linear sieve; phi[0] = 0.
inline std::vector<std::uint64_t> totient_sieve(std::uint64_t m) {
  std::vector<std::uint64_t> phi(m + 1);
  std::vector<std::uint64_t> primes;
  if (m >= 1) phi[1] = 1;
  for (std::uint64_t i = 2; i <= m; ++i) {
    if (phi[i] == 0) {
      phi[i] = i - 1;
      primes.push_back(i);
    }
    for (const auto p : primes) {
      if (i * p > m) break;
      if (i % p == 0) {
        phi[i * p] = phi[i] * p;
        break;
      }
      phi[i * p] = phi[i] * (p - 1);
    }
  }
  return phi;
}

struct Fraction {
  std::uint64_t p = 0;
  std::uint64_t q = 1;
  friend bool operator==(const Fraction&, const Fraction&) = default;
};

/// Adjacent fractions lo <= x < hi of the Farey sequence of order m.
struct FareyBracket {
  Fraction lo;
  Fraction hi;
};

/// Farey neighbors of x = raw / 2^64 by Stern-Brocot descent, taking runs of
/// same-direction steps in one batch so the cost is O(log m). Exact.
inline FareyBracket farey_bracket(TorusPoint x, std::uint64_t m) {
  if (m < 1) throw Error("farey order must be >= 1");
  if (m > (std::uint64_t{1} << 32)) throw Error("farey order too large");
  const u128 X = x.raw();
  const u128 one = u128{1} << 64;
  Fraction lo{0, 1};
  Fraction hi{1, 1};
  // Invariant: lo <= x < hi, hi.q * lo.p + 1 = lo.q * hi.p.
  while (lo.q + hi.q <= m) {
    const Fraction med{lo.p + hi.p, lo.q + hi.q};
    const std::uint64_t k_max_q = (m - lo.q) / hi.q;
    if (med.p * one <= X * med.q) {
      // Advance lo = lo + k hi while (lo + k hi) <= x.
      const u128 num = X * lo.q - lo.p * one;  // >= 0
      const u128 den = hi.p * one - X * hi.q;  // > 0
      const u128 k_x = num / den;
      const std::uint64_t k = static_cast<std::uint64_t>(std::min<u128>(k_x, k_max_q));
      lo = {lo.p + k * hi.p, lo.q + k * hi.q};
    } else {
      // Advance hi = hi + k lo while (hi + k lo) > x.
      const std::uint64_t k_max = (m - hi.q) / lo.q;
      const u128 a = hi.p * one - X * hi.q;  // > 0
      const u128 b = X * lo.q - lo.p * one;  // >= 0
      const u128 k_x = b == 0 ? static_cast<u128>(k_max) : (a - 1) / b;
      const std::uint64_t k = static_cast<std::uint64_t>(std::min<u128>(k_x, k_max));
      hi = {hi.p + k * lo.p, hi.q + k * lo.q};
    }
  }
  return {lo, hi};
}

/// |x - p/q| as a real.
inline long double fraction_distance(TorusPoint x, const Fraction& f) {
  const u128 one = u128{1} << 64;
  const u128 a = static_cast<u128>(x.raw()) * f.q;
  const u128 b = static_cast<u128>(f.p) * one;
  const u128 diff = a > b ? a - b : b - a;
  return static_cast<long double>(diff) / (static_cast<long double>(f.q) * 0x1.0p64L);
}

/// alpha within sigma / m^2 of a fraction with denominator <= m.
inline bool in_farey_strips(TorusPoint alpha, std::uint64_t m, double sigma) {
  const auto br = farey_bracket(alpha, m);
  const long double r = static_cast<long double>(sigma) / (static_cast<long double>(m) * m);
  return fraction_distance(alpha, br.lo) <= r || fraction_distance(alpha, br.hi) <= r;
}

/// ||d alpha - gamma|| <= tau / m for some 1 <= d <= m.
inline bool in_winding_strips(TorusPoint alpha, TorusPoint gamma, std::uint64_t m, double tau) {
  const ArcRadius r = ArcRadius::from_double(tau / static_cast<double>(m));
  TorusPoint x = alpha;
  for (std::uint64_t d = 1; d <= m; ++d, x = x + alpha) {
    if (r.contains(x - gamma)) return true;
  }
  return false;
}

struct FareyBound {
  Rational exact;
  double value = 0.0;
  bool clamped = false;
};

/// (4 sigma tau / m^3) sum_{d <= m} d phi(d), clamped to 1. Exact: doubles
/// are dyadic rationals.
inline FareyBound farey_strip_bound(std::uint64_t m, double sigma, double tau) {
  if (m < 1) throw Error("farey order must be >= 1");
  if (!(sigma >= 0.0 && sigma <= 0.5) || !(tau >= 0.0 && tau <= 0.5))
    throw Error("sigma and tau must lie in [0, 1/2]");
  const auto phi = totient_sieve(m);
  Natural sum = 0;
  for (std::uint64_t d = 1; d <= m; ++d) sum += Natural(d) * phi[d];
  const Rational mm(m);
  Rational bound = Rational(4) * Rational(sigma) * Rational(tau) * Rational(sum) / (mm * mm * mm);
  FareyBound out;
  if (bound > 1) {
    bound = 1;
    out.clamped = true;
  }
  out.exact = bound;
  out.value = static_cast<double>(bound);
  return out;
}

struct FareyMcReport {
  std::uint64_t m = 0;
  double sigma = 0.0;
  double tau = 0.0;
  std::size_t samples = 0;
  std::size_t in_s = 0;
  std::size_t in_t = 0;
  std::size_t in_both = 0;
  double estimate = 0.0;
  FareyBound bound;
  double tolerance = 0.0;  // 4 / sqrt(K)
  bool pass = false;       // estimate >= bound - tolerance
};

inline constexpr std::uint64_t kGammaStream = 0;
inline constexpr std::uint64_t kAlphaStream = 1;
inline constexpr std::uint64_t kPointStream = 2;

/// Monte Carlo estimate of Leb(S cap T) over uniform (alpha, gamma).
inline FareyMcReport farey_strip_mc(std::uint64_t m, double sigma, double tau, std::size_t samples,
                                    std::uint64_t seed, std::size_t workers = 1) {
  if (samples < 1) throw Error("samples must be >= 1");
  FareyMcReport rep;
  rep.m = m;
  rep.sigma = sigma;
  rep.tau = tau;
  rep.samples = samples;
  rep.bound = farey_strip_bound(m, sigma, tau);
  std::vector<std::uint8_t> flags(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    const TorusPoint gamma = TorusPoint::from_raw(CounterRng(seed, i, kGammaStream)());
    const TorusPoint alpha = TorusPoint::from_raw(CounterRng(seed, i, kAlphaStream)());
    const bool s = in_farey_strips(alpha, m, sigma);
    const bool t = in_winding_strips(alpha, gamma, m, tau);
    flags[i] = static_cast<std::uint8_t>((s ? 1 : 0) | (t ? 2 : 0));
  });
  for (const auto f : flags) {
    rep.in_s += f & 1;
    rep.in_t += (f >> 1) & 1;
    rep.in_both += f == 3;
  }
  rep.estimate = static_cast<double>(rep.in_both) / static_cast<double>(samples);
  rep.tolerance = 4.0 / std::sqrt(static_cast<double>(samples));
  rep.pass = rep.estimate >= rep.bound.value - rep.tolerance;
  return rep;
}

}  // namespace pcorr
