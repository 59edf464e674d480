#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "pcorr/core_stats.hpp"
#include "pcorr/error.hpp"
#include "pcorr/torus.hpp"

namespace pcorr {

/// Half-open arc [left, left + length) on the torus, possibly wrapping.
class TorusInterval {
 public:
  TorusInterval() = default;

  static TorusInterval full() {
    TorusInterval i;
    i.full_ = true;
    return i;
  }

  /// [left, right); left == right is empty.
  static TorusInterval from_bounds(double left, double right) {
    TorusInterval i;
    i.left_ = TorusPoint::from_double(left);
    i.length_ = (TorusPoint::from_double(right) - i.left_).raw();
    return i;
  }

  static TorusInterval from_raw(std::uint64_t left, std::uint64_t length) {
    TorusInterval i;
    i.left_ = TorusPoint::from_raw(left);
    i.length_ = length;
    return i;
  }

  bool is_full() const noexcept { return full_; }
  TorusPoint left() const noexcept { return left_; }
  double length() const noexcept { return full_ ? 1.0 : static_cast<double>(length_) * 0x1.0p-64; }

  bool contains(TorusPoint x) const noexcept { return full_ || (x - left_).raw() < length_; }

 private:
  TorusPoint left_;
  std::uint64_t length_ = 0;
  bool full_ = false;
};

struct IntervalCount {
  std::size_t count = 0;
  double normalized = 0.0;  // A_N(I) = count / N
};

inline IntervalCount interval_count(std::span<const TorusPoint> points, const TorusInterval& interval) {
  IntervalCount out;
  for (const auto p : points) out.count += interval.contains(p);
  out.normalized = points.empty() ? 0.0 : static_cast<double>(out.count) / static_cast<double>(points.size());
  return out;
}

/// D*_N = max_i max(i/N - x_(i), x_(i) - (i-1)/N) over the sorted points.
inline double star_discrepancy(std::span<const TorusPoint> points) {
  if (points.empty()) throw Error("empty sequence");
  std::vector<std::uint64_t> x;
  x.reserve(points.size());
  for (const auto p : points) x.push_back(p.raw());
  std::sort(x.begin(), x.end());
  const long double n = static_cast<long double>(x.size());
  long double d = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double v = static_cast<long double>(x[i]) * 0x1.0p-64L;
    const long double k = static_cast<long double>(i + 1);
    d = std::max({d, k / n - v, v - (k - 1) / n});
  }
  return static_cast<double>(d);
}

struct OverrepResult {
  std::size_t index = 0;       // arc j covers [j/(K+1), (j+1)/(K+1))
  double left = 0.0;
  double length = 0.0;
  std::size_t checkpoint = 0;  // where the excess is largest
  double excess = 0.0;         // max over checkpoints of A_N(I) - Leb(I)
};

/// Scans the K+1 equal arcs across the checkpoints (prefix sizes of
/// `points`) and returns the arc with the largest excess A_N(I) - Leb(I).
inline OverrepResult overrep_search(std::span<const TorusPoint> points, std::size_t k,
                                    const std::vector<std::size_t>& checkpoints) {
  if (k < 2) throw Error("k_partition must be >= 2");
  if (checkpoints.empty()) throw Error("no checkpoints");
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    if (checkpoints[c] < 1 || checkpoints[c] > points.size()) throw Error("checkpoint out of range");
    if (c > 0 && checkpoints[c] <= checkpoints[c - 1]) throw Error("checkpoints must be strictly increasing");
  }
  const std::size_t arcs = k + 1;
  const double leb = 1.0 / static_cast<double>(arcs);
  std::vector<std::size_t> counts(arcs, 0);
  OverrepResult best;
  best.length = leb;
  best.excess = -1.0;
  std::size_t next = 0;
  for (const auto n : checkpoints) {
    for (; next < n; ++next) ++counts[static_cast<std::size_t>((static_cast<u128>(points[next].raw()) * arcs) >> 64)];
    for (std::size_t j = 0; j < arcs; ++j) {
      const double excess = static_cast<double>(counts[j]) / static_cast<double>(n) - leb;
      if (excess > best.excess) {
        best.index = j;
        best.left = static_cast<double>(j) * leb;
        best.checkpoint = n;
        best.excess = excess;
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Non-equidistributed sequences cannot have gamma-PPC
// ---------------------------------------------------------------------------

/// At most `mass` of the points lie in [0, cut). The bound also needs
/// ||gamma|| - s/n > 1 - cut; see separated().
struct NonequidistParams {
  double cut = 0.5;
  double mass = 0.25;
  TorusPoint gamma;

  void validate() const {
    if (!(0.0 < mass && mass < cut && cut < 1.0)) throw Error("need 0 < mass < cut < 1");
  }

  bool separated(double s_over_n) const { return 1.0 - cut < gamma.norm() - s_over_n; }

  /// (mass/cut)(2 - mass/cut)
  double theta() const {
    const double r = mass / cut;
    return r * (2.0 - r);
  }
};

struct PpcBound {
  double theta = 0.0;
  double asymptotic = 0.0;  // (2s+1) theta
  double finite = 0.0;      // quadratic form at the plug-in assignment, divided by n
  std::size_t m = 0;        // floor(n cut)
};

/// Upper bound for F(gamma, s, n) when at most mass * n points lie in [0, cut).
inline PpcBound gamma_ppc_upper_bound(const NonequidistParams& params, std::uint64_t s, std::size_t n) {
  params.validate();
  if (s < 1) throw Error("s must be a positive integer");
  if (n < 1) throw Error("n must be >= 1");
  if (!params.separated(static_cast<double>(s) / static_cast<double>(n))) throw Error("γ too close to the deficient arc");
  PpcBound out;
  out.theta = params.theta();
  const double w = 2.0 * static_cast<double>(s) + 1.0;
  out.asymptotic = w * out.theta;
  const double nn = static_cast<double>(n);
  out.m = static_cast<std::size_t>(std::floor(nn * params.cut));
  if (out.m == 0 || out.m == n) throw Error("n too small for the cut");
  const double x_lo = nn * params.mass / static_cast<double>(out.m);
  const double x_hi = nn * (1.0 - params.mass) / static_cast<double>(n - out.m);
  const double hi_terms = 2.0 * static_cast<double>(n - out.m) * w;
  out.finite = (x_lo * x_hi * hi_terms + x_lo * x_lo * (nn * w - hi_terms)) / nn;
  return out;
}

struct PpcCheckpoint {
  std::size_t n = 0;
  double low_mass = 0.0;  // A_N([0, cut))
  bool qualifying = false;  // low_mass <= mass
  bool separated = false;   // ||gamma|| - s_max/N > 1 - cut
  std::vector<double> f;      // per s
  std::vector<double> limit;  // (2s+1) theta (1 + 5/sqrt(N)) per s
  std::vector<bool> within;
};

struct PpcFailureReport {
  NonequidistParams params;
  std::vector<std::uint64_t> s_list;
  double theta = 0.0;
  std::vector<PpcCheckpoint> checkpoints;
  std::size_t qualifying = 0;
  std::uint64_t s_max = 0;
  double certified_bound = 0.0;  // (2 s_max + 1) theta
  bool certified = false;        // (2 s_max + 1) theta < 2 s_max
  bool bound_holds = true;       // F within limit at every qualifying checkpoint
  bool separated = true;         // gamma precondition met at every qualifying checkpoint
  bool pass() const { return certified && bound_holds; }

  std::string certificate() const {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s: %.12g %s %.12g", certified ? "failure certified" : "not certified",
                  certified_bound, certified ? "<" : ">=", 2.0 * static_cast<double>(s_max));
    return buf;
  }
};

/// Checks F(gamma, s, N) <= (2s+1) theta (1 + 5/sqrt(N)) at every checkpoint N
/// (prefix sizes of `points`) where A_N([0, cut)) <= mass, and whether the
/// bound rules out F -> 2s for the largest s. The gamma precondition is
/// recorded, not enforced.
inline PpcFailureReport verify_ppc_failure(std::span<const TorusPoint> points, const NonequidistParams& params,
                                           const std::vector<std::uint64_t>& s_list,
                                           const std::vector<std::size_t>& checkpoints) {
  params.validate();
  if (s_list.empty()) throw Error("empty s list");
  if (checkpoints.empty()) throw Error("no checkpoints");
  PpcFailureReport rep;
  rep.params = params;
  rep.s_list = s_list;
  rep.theta = params.theta();
  rep.s_max = *std::max_element(s_list.begin(), s_list.end());
  rep.certified_bound = (2.0 * static_cast<double>(rep.s_max) + 1.0) * rep.theta;
  rep.certified = rep.certified_bound < 2.0 * static_cast<double>(rep.s_max);
  const auto low = TorusInterval::from_bounds(0.0, params.cut);
  for (const auto n : checkpoints) {
    if (n < 1 || n > points.size()) throw Error("checkpoint out of range");
    const auto prefix = points.first(n);
    PpcCheckpoint cp;
    cp.n = n;
    cp.low_mass = interval_count(prefix, low).normalized;
    cp.qualifying = cp.low_mass <= params.mass;
    cp.separated = params.separated(static_cast<double>(rep.s_max) / static_cast<double>(n));
    if (cp.qualifying) {
      ++rep.qualifying;
      if (!cp.separated) rep.separated = false;
      const PairCorrelator pc(prefix, params.gamma);
      const double slack = 1.0 + 5.0 / std::sqrt(static_cast<double>(n));
      for (const auto s : s_list) {
        const double f = pc.f(static_cast<double>(s));
        const double limit = (2.0 * static_cast<double>(s) + 1.0) * rep.theta * slack;
        cp.f.push_back(f);
        cp.limit.push_back(limit);
        cp.within.push_back(f <= limit);
        if (f > limit) rep.bound_holds = false;
      }
    }
    rep.checkpoints.push_back(std::move(cp));
  }
  if (rep.qualifying == 0) throw Error("no qualifying checkpoint");
  return rep;
}

}  // namespace pcorr
