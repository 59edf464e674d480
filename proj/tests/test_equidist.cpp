#include <gtest/gtest.h>

#include <functional>

#include "pcorr/equidist.hpp"
#include "pcorr/experiments.hpp"
#include "test_util.hpp"

using namespace pcorr;
using test::tp;

namespace {

std::vector<TorusPoint> uniform_on(double a, double b, std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, 0, kPointStream);
  std::vector<TorusPoint> out(n);
  for (auto& p : out) p = tp(a + (b - a) * rng.uniform01());
  return out;
}

std::vector<TorusPoint> equispaced(std::size_t n) {
  std::vector<TorusPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = tp((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return out;
}

std::vector<TorusPoint> van_der_corput(std::size_t n) {
  std::vector<TorusPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t k = i + 1, r = 0;
    for (int b = 0; b < 64; ++b, k >>= 1) r = (r << 1) | (k & 1);
    out[i] = TorusPoint::from_raw(r);
  }
  return out;
}

}  // namespace

TEST(IntervalCount, Basic) {
  const std::vector<TorusPoint> pts{tp(0.1), tp(0.2), tp(0.5), tp(0.9)};
  EXPECT_EQ(interval_count(pts, TorusInterval::from_bounds(0.0, 0.5)).count, 2u);
  EXPECT_EQ(interval_count(pts, TorusInterval::from_bounds(0.5, 1.0)).count, 2u);
  EXPECT_EQ(interval_count(pts, TorusInterval::from_bounds(0.8, 0.15)).count, 2u);
  EXPECT_EQ(interval_count(pts, TorusInterval::from_bounds(0.3, 0.3)).count, 0u);
  EXPECT_EQ(interval_count(pts, TorusInterval::full()).normalized, 1.0);
  EXPECT_NEAR(TorusInterval::from_bounds(0.8, 0.15).length(), 0.35, 1e-15);
}

TEST(IntervalCount, PartitionSumsToN) {
  CounterRng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    std::vector<TorusPoint> pts(n);
    for (auto& p : pts) p = TorusPoint::from_raw(rng());
    const std::size_t k = 1 + rng.below(20);
    const double shift = rng.uniform01();
    std::size_t total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const double a = shift + static_cast<double>(j) / static_cast<double>(k);
      const double b = shift + static_cast<double>(j + 1) / static_cast<double>(k);
      total += interval_count(pts, k == 1 ? TorusInterval::full() : TorusInterval::from_bounds(a, b)).count;
    }
    EXPECT_EQ(total, n);
  }
}

TEST(StarDiscrepancy, Examples) {
  EXPECT_NEAR(star_discrepancy(std::vector<TorusPoint>{tp(0.5)}), 0.5, 1e-15);
  EXPECT_NEAR(star_discrepancy(std::vector<TorusPoint>(5, tp(0.0))), 1.0, 1e-15);
  EXPECT_NEAR(star_discrepancy(equispaced(8)), 1.0 / 16, 1e-15);
  EXPECT_THROW(star_discrepancy(std::vector<TorusPoint>{}), Error);
}

TEST(StarDiscrepancy, MatchesIntervalSweepAndLowerBound) {
  CounterRng rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<TorusPoint> pts(n);
    for (auto& p : pts) p = TorusPoint::from_raw(rng() & ~std::uint64_t{0xfff});
    // sup over [0, t) and [0, t] at every point t.
    double sweep = 0.0;
    for (const auto t : pts) {
      std::size_t below = 0, at_most = 0;
      for (const auto p : pts) {
        below += p.raw() < t.raw();
        at_most += p.raw() <= t.raw();
      }
      const double v = t.value();
      sweep = std::max({sweep, v - static_cast<double>(below) / n, static_cast<double>(at_most) / n - v});
    }
    sweep = std::max(sweep, 1.0 - static_cast<double>(n) / n);
    const double d = star_discrepancy(pts);
    EXPECT_NEAR(d, sweep, 1e-12);
    EXPECT_GE(d, 0.5 / static_cast<double>(n) - 1e-15);
  }
}

TEST(Overrep, LowDiscrepancyHasSmallExcess) {
  const auto pts = van_der_corput(4096);
  const auto r = overrep_search(pts, 15, {1024, 2048, 4096});
  EXPECT_LE(r.excess, 1e-12);
  EXPECT_NEAR(r.length, 1.0 / 16, 1e-15);
}

TEST(Overrep, FindsConcentratedArc) {
  const auto pts = uniform_on(0.5, 1.0, 5000, 2);
  const auto r = overrep_search(pts, 9, {100, 1000, 5000});
  EXPECT_GE(r.left, 0.5);
  EXPECT_GT(r.excess, 0.05);
  EXPECT_THROW(overrep_search(pts, 1, {10}), Error);
  EXPECT_THROW(overrep_search(pts, 9, {6000}), Error);
  EXPECT_THROW(overrep_search(pts, 9, {20, 10}), Error);
}

TEST(Overrep, SinglePoint) {
  const std::vector<TorusPoint> pts{tp(0.3)};
  const auto r = overrep_search(pts, 4, {1});
  EXPECT_EQ(r.index, 1u);
  EXPECT_NEAR(r.excess, 0.8, 1e-15);
}

// ---------------------------------------------------------------------------

namespace {

NonequidistParams params(double cut, double mass, double gamma) {
  NonequidistParams p;
  p.cut = cut;
  p.mass = mass;
  p.gamma = tp(gamma);
  return p;
}

// Quadratic form sum_i sum_{|j| <= s} X_i X_{i + floor(gamma n) + j} over cells.
double quadratic_form(const std::vector<int>& x, std::uint64_t s, double gamma) {
  const long n = static_cast<long>(x.size());
  const long g = static_cast<long>(std::floor(gamma * static_cast<double>(n)));
  const long ss = static_cast<long>(s);
  double q = 0;
  for (long i = 0; i < n; ++i)
    for (long j = -ss; j <= ss; ++j) q += x[i] * x[((i + g + j) % n + n) % n];
  return q;
}

// Max of the quadratic form over integer cell counts summing to n with at most
// floor(mass n) points in the first floor(cut n) cells.
double brute_max_quadratic_form(std::size_t n, std::uint64_t s, const NonequidistParams& p) {
  const std::size_t m = static_cast<std::size_t>(std::floor(static_cast<double>(n) * p.cut));
  const int low_cap = static_cast<int>(std::floor(static_cast<double>(n) * p.mass));
  std::vector<int> x(n, 0);
  double best = 0;
  std::function<void(std::size_t, int, int)> rec = [&](std::size_t i, int left, int low) {
    if (i + 1 == n) {
      x[i] = left;
      best = std::max(best, quadratic_form(x, s, p.gamma.value()));
      return;
    }
    for (int c = 0; c <= left; ++c) {
      if (i < m && low + c > low_cap) break;
      x[i] = c;
      rec(i + 1, left - c, i < m ? low + c : low);
    }
    x[i] = 0;
  };
  rec(0, static_cast<int>(n), 0);
  return best;
}

}  // namespace

TEST(PpcBound, Examples) {
  EXPECT_DOUBLE_EQ(params(0.5, 0.25, 0.75).theta(), 0.75);
  const auto b = gamma_ppc_upper_bound(params(0.75, 0.375, 0.5), 1, 1000);
  EXPECT_DOUBLE_EQ(b.theta, 0.75);
  EXPECT_DOUBLE_EQ(b.asymptotic, 2.25);
  EXPECT_EQ(b.m, 750u);
  EXPECT_NEAR(b.finite, b.asymptotic, 1e-12);
  EXPECT_NEAR(params(0.5, 0.4999999, 0.75).theta(), 1.0, 1e-12);
  EXPECT_NEAR(params(0.5, 1e-9, 0.75).theta(), 0.0, 1e-8);
}

TEST(PpcBound, FiniteConvergesToAsymptotic) {
  CounterRng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const double cut = 0.55 + 0.4 * rng.uniform01();
    const double mass = cut * (0.05 + 0.9 * rng.uniform01());
    const double norm = 1.0 - cut + (cut - 0.5) * (0.1 + 0.9 * rng.uniform01());
    const auto p = params(cut, mass, rng.below(2) ? norm : 1.0 - norm);
    const std::uint64_t s = 1 + rng.below(5);
    const auto b = gamma_ppc_upper_bound(p, s, 10'000'000);
    EXPECT_NEAR(b.finite, b.asymptotic, 1e-5 * b.asymptotic) << cut << " " << mass;
    EXPECT_LT(b.theta, 1.0);
  }
}

TEST(PpcBound, Errors) {
  EXPECT_THROW(gamma_ppc_upper_bound(params(0.5, 0.6, 0.75), 1, 100), Error);
  EXPECT_THROW(gamma_ppc_upper_bound(params(0.5, 0.25, 0.75), 1, 100), Error);
  EXPECT_THROW(gamma_ppc_upper_bound(params(0.75, 0.25, 0.3), 10, 100), Error);
  EXPECT_NO_THROW(gamma_ppc_upper_bound(params(0.75, 0.25, 0.3), 1, 100));
  EXPECT_THROW(gamma_ppc_upper_bound(params(0.75, 0.25, 0.5), 0, 100), Error);
}

// The plug-in assignment (x_lo on the deficient arc, x_hi elsewhere) is not
// the maximum of the quadratic form: mass may concentrate on a few cells.
TEST(PpcBound, PlugInAssignmentIsNotTheMaximum) {
  for (const std::size_t n : {8u, 10u, 12u}) {
    const auto p = params(0.75, 0.25, 0.5);
    const auto b = gamma_ppc_upper_bound(p, 1, n);
    const double brute = brute_max_quadratic_form(n, 1, p);
    EXPECT_GT(brute, b.finite * static_cast<double>(n)) << n;
    // All low mass on cell 0, the rest on the cell gamma maps onto it.
    std::vector<int> two(n, 0);
    two[0] = static_cast<int>(n / 4);
    two[n / 2] = static_cast<int>(n - n / 4);
    EXPECT_LE(quadratic_form(two, 1, 0.5), brute);
    EXPECT_GT(quadratic_form(two, 1, 0.5), b.asymptotic * static_cast<double>(n));
  }
}

TEST(PpcFailure, CertifiedOnDeficientFixtures) {
  struct Fixture {
    double a, b, cut, mass, gamma;
    std::uint64_t s;
  };
  const Fixture fixtures[] = {
      {0.8, 1.0, 0.75, 0.1, 0.5, 2},
      {0.6, 1.0, 0.6, 0.2, 0.45, 4},
      {0.9, 1.0, 0.85, 0.05, 0.3, 8},
  };
  for (const auto& f : fixtures) {
    const auto pts = uniform_on(f.a, f.b, 4096, 3);
    const auto rep = verify_ppc_failure(pts, params(f.cut, f.mass, f.gamma), {1, f.s}, {1024, 4096});
    EXPECT_TRUE(rep.certified) << rep.certificate();
    EXPECT_TRUE(rep.separated);
    EXPECT_TRUE(rep.bound_holds);
    EXPECT_EQ(rep.qualifying, 2u);
    EXPECT_EQ(rep.certificate().rfind("failure certified: ", 0), 0u);
  }
}

TEST(PpcFailure, DeficientFixtureExceedsPlugInBound) {
  const auto pts = uniform_on(0.5, 1.0, 1 << 14, 1);
  const auto rep = verify_ppc_failure(pts, params(0.5, 0.25, 0.75), {4}, {1 << 14});
  EXPECT_TRUE(rep.certified);
  EXPECT_FALSE(rep.separated);
  EXPECT_NEAR(rep.certified_bound, 6.75, 1e-12);
  EXPECT_NEAR(rep.checkpoints[0].f[0], 8.0, 0.3);
  EXPECT_FALSE(rep.bound_holds);
  EXPECT_GE(star_discrepancy(pts), 0.4);
}

TEST(PpcFailure, Errors) {
  const auto pts = van_der_corput(1024);
  EXPECT_THROW(verify_ppc_failure(pts, params(0.5, 0.25, 0.75), {1}, {1024}), Error);
  EXPECT_THROW(verify_ppc_failure(pts, params(0.5, 0.25, 0.75), {}, {1024}), Error);
  EXPECT_THROW(verify_ppc_failure(pts, params(0.5, 0.25, 0.75), {1}, {2000}), Error);
}
