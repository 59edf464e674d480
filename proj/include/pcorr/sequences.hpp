#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pcorr/core_stats.hpp"
#include "pcorr/error.hpp"
#include "pcorr/rng.hpp"
#include "pcorr/sequence.hpp"

namespace pcorr {

/// Largest element bit length a generator may produce.
inline constexpr std::size_t kDefaultMaxBits = std::size_t{1} << 16;

// ---------------------------------------------------------------------------
// Simple families
// ---------------------------------------------------------------------------

/// (1^k, 2^k, ..., count^k).
inline IntegerSequence gen_powers(unsigned k, std::size_t count, std::size_t max_bits = kDefaultMaxBits) {
  if (k < 1) throw Error("k must be >= 1");
  if (count < 1) throw Error("count must be >= 1");
  const double bits = static_cast<double>(k) * std::log2(static_cast<double>(count));
  if (bits > static_cast<double>(max_bits))
    throw Error("integer overflow: " + std::to_string(count) + "^" + std::to_string(k) +
                " exceeds " + std::to_string(max_bits) + " bits");
  if (bits < 63.0) {
    std::vector<std::uint64_t> out(count);
    for (std::size_t n = 1; n <= count; ++n) {
      std::uint64_t v = 1;
      for (unsigned e = 0; e < k; ++e) v *= n;
      out[n - 1] = v;
    }
    return IntegerSequence(out);
  }
  std::vector<Natural> out;
  out.reserve(count);
  for (std::size_t n = 1; n <= count; ++n) out.push_back(boost::multiprecision::pow(Natural(n), k));
  return IntegerSequence(out);
}

/// All primes below `limit`, by a segmented sieve over odd numbers.
inline std::vector<std::uint64_t> primes_below(std::uint64_t limit) {
  std::vector<std::uint64_t> primes;
  if (limit <= 2) return primes;
  primes.push_back(2);
  const auto root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(limit))) + 1;
  // Base primes up to root with a plain sieve.
  std::vector<char> small(root + 1, 1);
  std::vector<std::uint64_t> base;
  for (std::uint64_t p = 3; p <= root; p += 2) {
    if (!small[p]) continue;
    base.push_back(p);
    for (std::uint64_t m = p * p; m <= root; m += 2 * p) small[m] = 0;
  }
  constexpr std::uint64_t kSegment = std::uint64_t{1} << 16;  // odd numbers per segment
  std::vector<char> seg(kSegment);
  // Segment covers odd numbers lo, lo+2, ..., lo + 2 (kSegment - 1).
  for (std::uint64_t lo = 3; lo < limit; lo += 2 * kSegment) {
    std::fill(seg.begin(), seg.end(), 1);
    const std::uint64_t hi = std::min(limit, lo + 2 * kSegment);  // exclusive
    for (const auto p : base) {
      if (p * p >= hi) break;
      std::uint64_t start = std::max(p * p, (lo + p - 1) / p * p);
      if (start % 2 == 0) start += p;
      for (std::uint64_t m = start; m < hi; m += 2 * p) seg[(m - lo) / 2] = 0;
    }
    for (std::uint64_t v = lo; v < hi; v += 2)
      if (seg[(v - lo) / 2]) primes.push_back(v);
  }
  return primes;
}

/// The first `count` primes.
inline IntegerSequence gen_primes(std::size_t count) {
  if (count < 1) throw Error("count must be >= 1");
  // Rosser: p_n < n (ln n + ln ln n) for n >= 6.
  const double n = static_cast<double>(std::max<std::size_t>(count, 6));
  auto limit = static_cast<std::uint64_t>(n * (std::log(n) + std::log(std::log(n)))) + 16;
  auto primes = primes_below(limit);
  while (primes.size() < count) {
    limit *= 2;
    primes = primes_below(limit);
  }
  primes.resize(count);
  return IntegerSequence(primes);
}

/// (base^1, ..., base^count).
inline IntegerSequence gen_lacunary(std::uint64_t base, std::size_t count,
                                    std::size_t max_bits = kDefaultMaxBits) {
  if (base < 2) throw Error("base must be >= 2");
  if (count < 1) throw Error("count must be >= 1");
  const double bits = static_cast<double>(count) * std::log2(static_cast<double>(base));
  if (bits > static_cast<double>(max_bits))
    throw Error("integer overflow: " + std::to_string(base) + "^" + std::to_string(count) +
                " exceeds " + std::to_string(max_bits) + " bits");
  std::vector<Natural> out;
  out.reserve(count);
  Natural v = 1;
  for (std::size_t i = 0; i < count; ++i) {
    v *= base;
    out.push_back(v);
  }
  return IntegerSequence(out);
}

// ---------------------------------------------------------------------------
// psi specifications
// ---------------------------------------------------------------------------

/// Weakly decreasing psi : N -> (0, 1], the energy profile E(A_N) ~ N^3 psi(N).
class PsiSpec {
 public:
  struct Constant {
    double c = 1.0;
  };
  /// c / log(N + shift)^p
  struct PowerLog {
    double c = 1.0;
    double p = 1.0;
    double shift = 0.0;
  };
  /// 1 / (log N * log log N * ... ), `level` factors.
  struct IteratedLog {
    int level = 1;
  };
  /// Step function: the value of the last entry whose key is <= N.
  struct Table {
    std::vector<std::pair<double, double>> entries;
  };
  using Form = std::variant<Constant, PowerLog, IteratedLog, Table>;

  PsiSpec() = default;
  explicit PsiSpec(Form form) : form_(std::move(form)) { validate(); }

  static PsiSpec constant(double c) { return PsiSpec(Constant{c}); }
  static PsiSpec power_log(double c, double p, double shift = 0.0) { return PsiSpec(PowerLog{c, p, shift}); }
  static PsiSpec iterated_log(int level) { return PsiSpec(IteratedLog{level}); }
  static PsiSpec table(std::vector<std::pair<double, double>> entries) { return PsiSpec(Table{std::move(entries)}); }

  const Form& form() const noexcept { return form_; }

  /// psi(n); throws "psi undefined" outside the domain or when the value leaves (0, 1].
  double operator()(double n) const {
    const double v = std::visit([n](const auto& f) { return eval(f, n); }, form_);
    if (!(v > 0.0) || v > 1.0 || !std::isfinite(v)) throw Error("psi undefined at " + format_real(n));
    return v;
  }

  /// floor(1 / psi(n)), the integer inverse used by the block construction.
  std::uint64_t inverse_floor(double n) const {
    const double inv = 1.0 / (*this)(n);
    // Guard against 1/psi landing a hair under an integer it equals exactly.
    const double r = std::nearbyint(inv);
    if (std::fabs(inv - r) <= 1e-12 * r) return static_cast<std::uint64_t>(r);
    return static_cast<std::uint64_t>(std::floor(inv));
  }

  /// Normalized value 1 / floor(1 / psi(n)).
  double normalized(double n) const { return 1.0 / static_cast<double>(inverse_floor(n)); }

  /// Canonical text form, accepted by parse().
  std::string to_string() const {
    struct Printer {
      std::string operator()(const Constant& f) const { return "constant:" + format_real(f.c); }
      std::string operator()(const PowerLog& f) const {
        return "powerlog:" + format_real(f.c) + "," + format_real(f.p) + "," + format_real(f.shift);
      }
      std::string operator()(const IteratedLog& f) const { return "iterlog:" + std::to_string(f.level); }
      std::string operator()(const Table& f) const {
        std::string s = "table:";
        for (std::size_t k = 0; k < f.entries.size(); ++k) {
          if (k) s += ",";
          s += format_real(f.entries[k].first) + "=" + format_real(f.entries[k].second);
        }
        return s;
      }
    };
    return std::visit(Printer{}, form_);
  }

  /// Grammar: constant:c | powerlog:c,p[,shift] | iterlog:level | table:n=v,n=v,...
  /// A missing powerlog shift defaults to e, so psi(1) is defined; "e" is
  /// accepted as a literal for the shift.
  static PsiSpec parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw Error("malformed psi spec '" + std::string(text) + "'");
    const std::string kind(text.substr(0, colon));
    const auto args = split(text.substr(colon + 1), ',');
    if (kind == "constant" && args.size() == 1) return constant(parse_real(args[0]));
    if (kind == "powerlog" && (args.size() == 2 || args.size() == 3)) {
      const double shift = args.size() == 3 ? parse_real(args[2]) : std::exp(1.0);
      return power_log(parse_real(args[0]), parse_real(args[1]), shift);
    }
    if (kind == "iterlog" && args.size() == 1) return iterated_log(static_cast<int>(parse_real(args[0])));
    if (kind == "table" && !args.empty()) {
      std::vector<std::pair<double, double>> entries;
      for (const auto& a : args) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) throw Error("malformed psi table entry '" + a + "'");
        entries.emplace_back(parse_real(a.substr(0, eq)), parse_real(a.substr(eq + 1)));
      }
      return table(std::move(entries));
    }
    throw Error("malformed psi spec '" + std::string(text) + "'");
  }

  static std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

 private:
  static double eval(const Constant& f, double) { return f.c; }
  static double eval(const PowerLog& f, double n) {
    const double l = std::log(n + f.shift);
    if (!(l > 0.0)) return 0.0;
    return f.c / std::pow(l, f.p);
  }
  static double eval(const IteratedLog& f, double n) {
    double x = n;
    double product = 1.0;
    for (int k = 0; k < f.level; ++k) {
      x = std::log(x);
      if (!(x > 1.0)) return 0.0;
      product *= x;
    }
    return 1.0 / product;
  }
  static double eval(const Table& f, double n) {
    double v = 0.0;
    for (const auto& [key, value] : f.entries) {
      if (key > n) break;
      v = value;
    }
    return v;
  }

  void validate() const {
    if (const auto* c = std::get_if<Constant>(&form_)) {
      if (!(c->c > 0.0 && c->c <= 1.0)) throw Error("constant psi must lie in (0, 1]");
    } else if (const auto* p = std::get_if<PowerLog>(&form_)) {
      if (!(p->c > 0.0) || !(p->p >= 0.0) || !(p->shift >= 0.0)) throw Error("powerlog psi needs c > 0, p >= 0, shift >= 0");
    } else if (const auto* i = std::get_if<IteratedLog>(&form_)) {
      if (i->level < 1) throw Error("iterated-log level must be >= 1");
    } else if (const auto* t = std::get_if<Table>(&form_)) {
      if (t->entries.empty()) throw Error("psi table is empty");
      for (std::size_t k = 0; k < t->entries.size(); ++k) {
        const auto [key, value] = t->entries[k];
        if (!(value > 0.0 && value <= 1.0)) throw Error("psi table values must lie in (0, 1]");
        if (k > 0 && !(key > t->entries[k - 1].first)) throw Error("psi table keys must increase");
        if (k > 0 && value > t->entries[k - 1].second) throw Error("psi table must be weakly decreasing");
      }
    }
  }

  static std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t k = 0; k <= s.size(); ++k) {
      if (k == s.size() || s[k] == sep) {
        out.emplace_back(s.substr(start, k - start));
        start = k + 1;
      }
    }
    return out;
  }

  static double parse_real(const std::string& s) {
    if (s == "e") return std::exp(1.0);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw Error("");
      return v;
    } catch (const std::exception&) {
      throw Error("malformed number '" + s + "' in psi spec");
    }
  }

  Form form_ = Constant{1.0};
};

inline double psi_eval(const PsiSpec& psi, double n) { return psi(n); }

// ---------------------------------------------------------------------------
// Block construction
// ---------------------------------------------------------------------------

/// One block B_N = delta * base with N = 2^t and base inside (N q, 2 N q],
/// q = floor(1 / psi(N)).
struct BlockLevel {
  int t = 0;
  std::uint64_t n = 1;
  std::uint64_t inverse_psi = 1;
  std::size_t delta_log2 = 0;
  std::vector<std::uint64_t> base;
  std::size_t attempts = 0;

  Natural delta() const { return Natural(1) << delta_log2; }
  std::uint64_t window_low() const { return n * inverse_psi; }        // exclusive
  std::uint64_t window_high() const { return 2 * n * inverse_psi; }   // inclusive
  std::vector<Natural> elements() const {
    std::vector<Natural> out;
    out.reserve(base.size());
    for (const auto b : base) out.push_back(Natural(b) << delta_log2);
    return out;
  }
};

struct BlockConstruction {
  PsiSpec psi;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::vector<BlockLevel> levels;
  IntegerSequence concatenated;

  /// #B_1 + ... + #B_{2^t} for every level t.
  std::vector<std::size_t> checkpoints() const {
    std::vector<std::size_t> out;
    std::size_t total = 0;
    for (const auto& l : levels) {
      total += l.base.size();
      out.push_back(total);
    }
    return out;
  }

  const BlockLevel& level(int t) const {
    for (const auto& l : levels)
      if (l.t == t) return l;
    throw Error("block level " + std::to_string(t) + " does not exist");
  }
};

struct PropertyCheck {
  bool pass = true;
  std::int64_t witness_d = 0;  // failing difference (in units of delta), 0 when passing
  std::uint64_t witness_r = 0;
};

struct BlockReport {
  int t = 0;
  bool in_window = true;     // base inside (N q, 2 N q]
  PropertyCheck upper;       // (1) r(delta d) <= 2 N psi
  PropertyCheck lower;       // (2) r(delta d) >= N psi / 2 for 0 < |d| < N / (10 psi)
  PropertyCheck size;        // (3) N/2 <= #B <= 2N; witness_r holds #B
  bool pass() const { return in_window && upper.pass && lower.pass && size.pass; }
};

/// Checks properties (1)-(3) for base set S of a block with parameters (N, q),
/// using the normalized psi = 1/q. r_B(delta d) = r_S(d).
inline BlockReport check_block_properties(std::span<const std::uint64_t> base, std::uint64_t n,
                                          std::uint64_t q, int t = 0) {
  BlockReport rep;
  rep.t = t;
  for (std::size_t k = 0; k < base.size(); ++k) {
    if (base[k] <= n * q || base[k] > 2 * n * q) rep.in_window = false;
    if (k > 0 && base[k] <= base[k - 1]) rep.in_window = false;
  }
  const std::uint64_t size = base.size();
  rep.size.witness_r = size;
  rep.size.pass = n <= 2 * size && size <= 2 * n;
  if (base.empty()) {
    rep.lower.pass = 10 >= n * q;  // no d in range when N q / 10 <= 1
    return rep;
  }
  const auto [lo, hi] = std::minmax_element(base.begin(), base.end());
  std::vector<std::uint64_t> r(*hi - *lo + 1, 0);
  for (std::size_t i = 0; i < base.size(); ++i)
    for (std::size_t j = 0; j < base.size(); ++j)
      if (base[i] > base[j]) ++r[base[i] - base[j]];
  for (std::uint64_t d = 1; d < r.size(); ++d) {
    if (q * r[d] > 2 * n && rep.upper.pass) {
      rep.upper = {false, static_cast<std::int64_t>(d), r[d]};
    }
  }
  // 0 < d < N q / 10, i.e. 10 d < N q.
  for (std::uint64_t d = 1; 10 * d < n * q; ++d) {
    const std::uint64_t rd = d < r.size() ? r[d] : 0;
    if (2 * q * rd < n) {
      rep.lower = {false, static_cast<std::int64_t>(d), rd};
      break;
    }
  }
  return rep;
}

inline BlockReport verify_block(const BlockConstruction& b, int t) {
  const auto& level = b.level(t);
  return check_block_properties(level.base, level.n, level.inverse_psi, t);
}

/// Raised when no candidate block passes verification within the retry budget.
class BlockBuildError : public Error {
 public:
  BlockBuildError(int level, std::string property)
      : Error("block search failed at level t=" + std::to_string(level) + ": property " + property),
        level_(level),
        property_(std::move(property)) {}
  int level() const noexcept { return level_; }
  const std::string& property() const noexcept { return property_; }

 private:
  int level_;
  std::string property_;
};

struct BlockOptions {
  int max_level = 14;
  std::size_t max_attempts = 64;
  std::size_t max_bits = kDefaultMaxBits;
};

inline constexpr std::uint64_t kBlockStream = 0xb10c;

namespace detail {

inline std::size_t bit_length(const Natural& x) {
  return x == 0 ? 0 : static_cast<std::size_t>(boost::multiprecision::msb(x)) + 1;
}

// N distinct values from (lo, lo + width], sorted; all of them when N >= width.
inline std::vector<std::uint64_t> sample_window(CounterRng& rng, std::uint64_t lo, std::uint64_t width,
                                                std::uint64_t count) {
  std::vector<std::uint64_t> pool(width);
  std::iota(pool.begin(), pool.end(), lo + 1);
  if (count < width) {
    for (std::uint64_t k = 0; k < count; ++k) {
      const std::uint64_t pick = k + rng.below(width - k);
      std::swap(pool[k], pool[pick]);
    }
    pool.resize(count);
  }
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace detail

/// Concatenated blocks B_1, B_2, B_4, ..., B_{2^t_max}.
///
/// Each base set is a seeded random N-subset of (N q, 2 N q], kept only if it
/// passes properties (1)-(3); delta_N is the smallest power of two strictly
/// above 4 N q max(previous elements). Deterministic given (psi, epsilon,
/// t_max, seed); each level draws from its own RNG substream.
inline BlockConstruction build_blocks(const PsiSpec& psi, double epsilon, int t_max, std::uint64_t seed,
                                      const BlockOptions& options = {}) {
  if (!(epsilon > 0.0 && epsilon < 1.0 / 320.0)) throw Error("epsilon out of range (0, 1/320)");
  if (t_max < 0 || t_max > options.max_level)
    throw Error("t_max must lie in [0, " + std::to_string(options.max_level) + "]");
  if (t_max > 30) throw Error("t_max too large");

  // Width check against the worst case max(S) = 2 N q before any search.
  {
    std::size_t bits = 0;
    for (int t = 0; t <= t_max; ++t) {
      const std::uint64_t n = std::uint64_t{1} << t;
      const std::uint64_t q = psi.inverse_floor(static_cast<double>(n));
      const auto nq_bits = detail::bit_length(Natural(4 * n * q));
      const std::size_t delta_log2 = bits == 0 ? 0 : bits + nq_bits;
      bits = delta_log2 + detail::bit_length(Natural(2 * n * q));
    }
    if (bits > options.max_bits)
      throw Error("integer width exceeded: construction needs ~" + std::to_string(bits) + " bits");
  }

  BlockConstruction out;
  out.psi = psi;
  out.epsilon = epsilon;
  out.seed = seed;
  Natural previous_max = 0;
  std::vector<Natural> all;
  for (int t = 0; t <= t_max; ++t) {
    BlockLevel level;
    level.t = t;
    level.n = std::uint64_t{1} << t;
    level.inverse_psi = psi.inverse_floor(static_cast<double>(level.n));
    const std::uint64_t width = level.n * level.inverse_psi;
    CounterRng rng(seed, static_cast<std::uint64_t>(t), kBlockStream);
    BlockReport last;
    bool found = false;
    for (std::size_t attempt = 1; attempt <= options.max_attempts; ++attempt) {
      auto base = detail::sample_window(rng, width, width, level.n);
      last = check_block_properties(base, level.n, level.inverse_psi, t);
      if (last.pass()) {
        level.base = std::move(base);
        level.attempts = attempt;
        found = true;
        break;
      }
    }
    if (!found) {
      const std::string prop = !last.size.pass ? "3" : !last.upper.pass ? "1" : !last.lower.pass ? "2" : "window";
      throw BlockBuildError(t, prop);
    }
    const Natural bound = Natural(4 * level.n * level.inverse_psi) * previous_max;
    level.delta_log2 = detail::bit_length(bound);  // 2^bitlen(x) > x, and 2^0 = 1 when x = 0
    auto elements = level.elements();
    previous_max = elements.back();
    for (auto& e : elements) all.push_back(std::move(e));
    out.levels.push_back(std::move(level));
  }
  out.concatenated = IntegerSequence(all);
  return out;
}

}  // namespace pcorr
