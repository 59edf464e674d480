#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pcorr/sequences.hpp"
#include "test_util.hpp"

using namespace pcorr;

namespace {

std::vector<std::uint64_t> values(const IntegerSequence& s) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back(s.u64(i));
  return out;
}

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

const PsiSpec kLogPsi = PsiSpec::power_log(1.0, 1.0, std::exp(1.0));

}  // namespace

TEST(Generators, Powers) {
  EXPECT_EQ(values(gen_powers(2, 4)), (std::vector<std::uint64_t>{1, 4, 9, 16}));
  EXPECT_EQ(values(gen_powers(1, 3)), (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(values(gen_powers(3, 2)), (std::vector<std::uint64_t>{1, 8}));
  const auto big = gen_powers(5, 10000);  // 10000^5 needs 67 bits
  EXPECT_EQ(big.at(9999), boost::multiprecision::pow(Natural(10000), 5));
  EXPECT_THROW(gen_powers(0, 3), Error);
  EXPECT_THROW(gen_powers(4000, 1000, 1024), Error);
}

TEST(Generators, Primes) {
  EXPECT_EQ(values(gen_primes(5)), (std::vector<std::uint64_t>{2, 3, 5, 7, 11}));
  EXPECT_EQ(values(gen_primes(1)), (std::vector<std::uint64_t>{2}));
  EXPECT_EQ(gen_primes(25).u64(24), 97u);
}

// Crosses many sieve segments; checked against trial division.
TEST(Generators, PrimesMatchTrialDivision) {
  const auto p = gen_primes(30000);
  std::uint64_t expect = 1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    do ++expect;
    while (!is_prime(expect));
    ASSERT_EQ(p.u64(i), expect) << i;
  }
}

TEST(Generators, Lacunary) {
  EXPECT_EQ(values(gen_lacunary(2, 3)), (std::vector<std::uint64_t>{2, 4, 8}));
  EXPECT_EQ(values(gen_lacunary(3, 2)), (std::vector<std::uint64_t>{3, 9}));
  // Powers of two form a Sidon set: E = 2 N^2 - N.
  EXPECT_EQ(additive_energy(gen_lacunary(2, 10), 10), 190u);
  const auto wide = gen_lacunary(2, 200);
  EXPECT_EQ(wide.bit_length(), 201u);
  EXPECT_EQ(additive_energy(wide, 200), 2u * 200 * 200 - 200);
  EXPECT_THROW(gen_lacunary(1, 3), Error);
  EXPECT_THROW(gen_lacunary(2, 5000, 4096), Error);
}

TEST(Generators, OutputsStrictlyIncreasing) {
  for (const auto& s : {gen_powers(3, 500), gen_primes(500), gen_lacunary(3, 100)}) {
    for (std::size_t i = 1; i < s.size(); ++i) ASSERT_LT(s.at(i - 1), s.at(i));
    ASSERT_GE(s.at(0), 1);
  }
}

TEST(Psi, Examples) {
  EXPECT_EQ(PsiSpec::constant(1.0)(12345.0), 1.0);
  EXPECT_NEAR(PsiSpec::power_log(1, 1)(std::exp(2.0)), 0.5, 1e-15);
  const auto table = PsiSpec::table({{1, 1}, {2, 0.5}});
  EXPECT_EQ(table(2), 0.5);
  EXPECT_EQ(table(1), 1.0);
  EXPECT_EQ(table(100), 0.5);
  EXPECT_THROW(table(0.5), Error);
}

TEST(Psi, DomainErrors) {
  EXPECT_THROW(PsiSpec::power_log(1, 1)(1.0), Error);   // log 1 = 0
  EXPECT_THROW(PsiSpec::iterated_log(2)(10.0), Error);  // log log 10 < 1
  EXPECT_NO_THROW(PsiSpec::iterated_log(2)(100.0));
  EXPECT_THROW(PsiSpec::constant(0.0), Error);
  EXPECT_THROW(PsiSpec::constant(1.5), Error);
  EXPECT_THROW(PsiSpec::table({{1, 0.5}, {2, 0.75}}), Error);
  EXPECT_THROW(PsiSpec::table({{2, 0.5}, {1, 0.25}}), Error);
}

TEST(Psi, WeaklyDecreasing) {
  for (const auto& psi : {kLogPsi, PsiSpec::power_log(0.5, 2, 3), PsiSpec::iterated_log(2)}) {
    double prev = 2.0;
    for (double n = 20; n < 1e7; n *= 1.7) {
      const double v = psi(n);
      EXPECT_LE(v, prev);
      EXPECT_GT(v, 0.0);
      prev = v;
    }
  }
}

TEST(Psi, ParseRoundTrip) {
  for (const char* text : {"constant:0.25", "powerlog:1,1", "powerlog:0.5,2,3", "iterlog:2",
                           "table:1=1,2=0.5,10=0.125"}) {
    const auto psi = PsiSpec::parse(text);
    const auto again = PsiSpec::parse(psi.to_string());
    EXPECT_EQ(again.to_string(), psi.to_string());
    EXPECT_EQ(again(1000.0), psi(1000.0)) << text;
  }
  EXPECT_NEAR(PsiSpec::parse("powerlog:1,1")(1.0), 1.0 / std::log(1.0 + std::exp(1.0)), 1e-15);
  EXPECT_THROW(PsiSpec::parse("bogus:1"), Error);
  EXPECT_THROW(PsiSpec::parse("powerlog:1"), Error);
  EXPECT_THROW(PsiSpec::parse("constant:abc"), Error);
}

TEST(Psi, NormalizedInverse) {
  EXPECT_EQ(PsiSpec::constant(0.5).inverse_floor(7), 2u);
  EXPECT_EQ(PsiSpec::constant(0.3).inverse_floor(7), 3u);
  EXPECT_DOUBLE_EQ(PsiSpec::constant(0.3).normalized(7), 1.0 / 3.0);
}

TEST(Blocks, DegenerateLevel) {
  const auto b = build_blocks(PsiSpec::constant(0.5), 1.0 / 400, 0, 1);
  ASSERT_EQ(b.levels.size(), 1u);
  const auto& l = b.levels[0];
  EXPECT_GE(l.base.size(), 1u);
  EXPECT_LE(l.base.size(), 2u);
  EXPECT_EQ(l.delta_log2, 0u);
  EXPECT_TRUE(verify_block(b, 0).pass());
}

TEST(Blocks, BuiltLevelsVerify) {
  const auto b = build_blocks(kLogPsi, 1.0 / 400, 10, 7);
  ASSERT_EQ(b.levels.size(), 11u);
  for (int t = 0; t <= 10; ++t) {
    const auto rep = verify_block(b, t);
    EXPECT_TRUE(rep.pass()) << "level " << t;
    const auto& l = b.level(t);
    EXPECT_EQ(l.n, std::uint64_t{1} << t);
    EXPECT_EQ(l.inverse_psi, kLogPsi.inverse_floor(static_cast<double>(l.n)));
  }
  EXPECT_THROW(verify_block(b, 11), Error);
  EXPECT_EQ(b.checkpoints().back(), b.concatenated.size());
}

// Independent recount of (1)-(3) on the scaled elements, with r taken over
// actual differences of B rather than over the base set.
TEST(Blocks, PropertiesOnScaledElements) {
  const auto b = build_blocks(kLogPsi, 1.0 / 400, 6, 3);
  for (const auto& l : b.levels) {
    const auto el = l.elements();
    const IntegerSequence block(el);
    const auto profile = repr_profile(block, block.size());
    const Natural delta = l.delta();
    const double psi = 1.0 / static_cast<double>(l.inverse_psi);
    const double n = static_cast<double>(l.n);
    for (const auto& e : profile.entries()) {
      if (e.d == 0) continue;
      ASSERT_EQ(e.d % delta, 0);
      EXPECT_LE(static_cast<double>(e.r), 2 * n * psi);
    }
    for (std::int64_t d = 1; static_cast<double>(d) < n / (10 * psi); ++d)
      EXPECT_GE(static_cast<double>(profile[delta * d]), n * psi / 2) << "t=" << l.t << " d=" << d;
    EXPECT_LE(n / 2, static_cast<double>(el.size()));
    EXPECT_LE(static_cast<double>(el.size()), 2 * n);
    for (const auto& x : el) {
      EXPECT_GT(x, delta * l.window_low());
      EXPECT_LE(x, delta * l.window_high());
    }
  }
}

TEST(Blocks, Deterministic) {
  const auto a = build_blocks(kLogPsi, 1.0 / 400, 8, 42);
  const auto b = build_blocks(kLogPsi, 1.0 / 400, 8, 42);
  const auto c = build_blocks(kLogPsi, 1.0 / 400, 8, 43);
  EXPECT_EQ(a.concatenated, b.concatenated);
  EXPECT_FALSE(a.concatenated == c.concatenated);
}

// A lower level does not depend on t_max.
TEST(Blocks, LevelsIndependentOfDepth) {
  const auto a = build_blocks(kLogPsi, 1.0 / 400, 5, 9);
  const auto b = build_blocks(kLogPsi, 1.0 / 400, 8, 9);
  for (int t = 0; t <= 5; ++t) {
    EXPECT_EQ(a.level(t).base, b.level(t).base);
    EXPECT_EQ(a.level(t).delta_log2, b.level(t).delta_log2);
  }
}

TEST(Blocks, DeltaSchedule) {
  const auto b = build_blocks(kLogPsi, 1.0 / 400, 8, 5);
  Natural prev_max = 0;
  for (const auto& l : b.levels) {
    const Natural bound = Natural(4 * l.n * l.inverse_psi) * prev_max;
    EXPECT_GT(l.delta(), bound);
    if (l.delta_log2 > 0) {
      EXPECT_LE(l.delta() / 2, bound);
    }
    const auto el = l.elements();
    EXPECT_GT(el.front(), prev_max);
    prev_max = el.back();
  }
}

TEST(Blocks, EnergyDominatesPreviousBlock) {
  const auto b = build_blocks(kLogPsi, 1.0 / 400, 7, 11);
  const auto cps = b.checkpoints();
  for (std::size_t k = 1; k < b.levels.size(); ++k) {
    const IntegerSequence prev(b.levels[k - 1].elements());
    const u128 floor_energy = additive_energy(prev, prev.size());
    for (std::size_t n = cps[k - 1] + 1; n <= cps[k]; n += 1 + (cps[k] - cps[k - 1]) / 7)
      EXPECT_GE(additive_energy(b.concatenated, n), floor_energy) << "n=" << n;
  }
}

// Energy of the concatenation splits into block energies plus the
// unavoidable quadruples {a, b} = {c, d} across blocks.
TEST(Blocks, CrossBlockIsolation) {
  const auto b = build_blocks(kLogPsi, 1.0 / 400, 4, 13);
  const auto& all = b.concatenated;
  const std::size_t n = all.size();
  std::vector<std::size_t> block_of;
  u128 block_energy = 0;
  u128 same_block_pairs = 0;
  for (std::size_t k = 0; k < b.levels.size(); ++k) {
    const IntegerSequence blk(b.levels[k].elements());
    block_energy += additive_energy(blk, blk.size());
    same_block_pairs += static_cast<u128>(blk.size()) * blk.size();
    block_of.insert(block_of.end(), blk.size(), k);
  }
  EXPECT_EQ(additive_energy(all, n), block_energy + 2 * (static_cast<u128>(n) * n - same_block_pairs));

  const auto v = all.to_naturals();
  std::size_t nontrivial = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          const bool mixed = !(block_of[i] == block_of[j] && block_of[j] == block_of[k] && block_of[k] == block_of[l]);
          const bool trivial = (i == k && j == l) || (i == l && j == k);
          if (mixed && !trivial && v[i] + v[j] == v[k] + v[l]) ++nontrivial;
        }
  EXPECT_EQ(nontrivial, 0u);
}

// E(A_N) / (N^3 psi(N)) over block-boundary checkpoints.
TEST(Blocks, EnergyBand) {
  const auto b = build_blocks(kLogPsi, 1.0 / 400, 8, 7);
  for (const auto n : b.checkpoints()) {
    const double ratio = static_cast<double>(additive_energy(b.concatenated, n)) /
                         (std::pow(static_cast<double>(n), 3) * kLogPsi(static_cast<double>(n)));
    EXPECT_GE(ratio, 1.0 / 64) << n;
    EXPECT_LE(ratio, 64.0) << n;
  }
}

TEST(Blocks, Errors) {
  EXPECT_THROW(build_blocks(kLogPsi, 1.0 / 320, 3, 1), Error);
  EXPECT_THROW(build_blocks(kLogPsi, 0.0, 3, 1), Error);
  EXPECT_THROW(build_blocks(kLogPsi, 1.0 / 400, 15, 1), Error);
  EXPECT_THROW(build_blocks(kLogPsi, 1.0 / 400, 10, 1, {.max_bits = 64}), Error);
  // N = 1, q = 16: property (2) needs r(1) >= 1 from a single element.
  try {
    build_blocks(PsiSpec::constant(1.0 / 16), 1.0 / 400, 0, 1, {.max_attempts = 3});
    FAIL();
  } catch (const BlockBuildError& e) {
    EXPECT_EQ(e.level(), 0);
    EXPECT_EQ(e.property(), "2");
  }
}

TEST(VerifyBlock, OversizedBlockFailsSize) {
  // N = 4, q = 3 and 12 elements: all of (12, 24].
  std::vector<std::uint64_t> base(12);
  for (std::size_t i = 0; i < 12; ++i) base[i] = 13 + i;
  const auto rep = check_block_properties(base, 4, 3);
  EXPECT_FALSE(rep.size.pass);
  EXPECT_EQ(rep.size.witness_r, 12u);
  EXPECT_FALSE(rep.pass());
}

TEST(VerifyBlock, ProgressionFailsUpperBound) {
  // N = 64, q = 4: N psi = 16 < N/2 and r(1) = 63 > 2 N psi = 32.
  std::vector<std::uint64_t> base(64);
  for (std::size_t i = 0; i < 64; ++i) base[i] = 257 + i;
  const auto rep = check_block_properties(base, 64, 4);
  EXPECT_TRUE(rep.in_window);
  EXPECT_FALSE(rep.upper.pass);
  EXPECT_EQ(rep.upper.witness_d, 1);
  EXPECT_EQ(rep.upper.witness_r, 63u);
}

TEST(VerifyBlock, OutOfWindow) {
  const std::vector<std::uint64_t> base{1, 2};
  EXPECT_FALSE(check_block_properties(base, 2, 1).in_window);
}
