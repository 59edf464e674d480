#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pcorr/core_stats.hpp"
#include "pcorr/error.hpp"
#include "pcorr/farey.hpp"
#include "pcorr/parallel.hpp"
#include "pcorr/rng.hpp"
#include "pcorr/sequences.hpp"
#include "pcorr/torus.hpp"

namespace pcorr {

/// Neumaier summation; adding the same values in the same order always
/// produces the same result.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

enum class SampleMode { dilated, iid };

inline const char* to_string(SampleMode m) { return m == SampleMode::dilated ? "dilated" : "iid"; }

struct ExperimentConfig {
  std::uint64_t master_seed = 0;
  std::size_t samples = 1;
  std::vector<double> s_grid;
  std::vector<std::size_t> n_schedule;
  SampleMode mode = SampleMode::dilated;
  std::size_t workers = 1;
  bool keep_trajectories = false;

  void validate() const {
    if (samples < 1) throw Error("samples must be >= 1");
    if (s_grid.empty() || n_schedule.empty()) throw Error("empty grid");
    for (const double s : s_grid)
      if (!(s > 0.0) || !std::isfinite(s)) throw Error("s values must be positive");
    for (std::size_t k = 0; k < n_schedule.size(); ++k) {
      if (n_schedule[k] < 1) throw Error("checkpoints must be >= 1");
      if (k > 0 && n_schedule[k] <= n_schedule[k - 1]) throw Error("checkpoints must be strictly increasing");
    }
  }
};

struct McCell {
  double s = 0.0;
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased; 0 when K = 1
  double min = 0.0;
  double max = 0.0;
  double target = 0.0;     // mean of F over T^2
  double deviation = 0.0;  // |mean - target|
  double shortfall = 0.0;  // fraction of samples with F < target / 2
};

struct McReport {
  ExperimentConfig config;
  std::vector<McCell> cells;  // n-major, then s in grid order
  /// trajectories[i][c] = F of sample i at cells[c]; kept on request.
  std::vector<std::vector<double>> trajectories;

  const McCell& cell(double s, std::size_t n) const {
    for (const auto& c : cells)
      if (c.s == s && c.n == n) return c;
    throw Error("no such grid cell");
  }
};

/// The (alpha, gamma) pair of sample `index`. alpha gets one limb more than
/// the sequence width so every bit of a_n alpha mod 1 is exact.
struct SamplePoint {
  PreciseAngle alpha;
  TorusPoint gamma;
};

inline SamplePoint draw_sample(std::uint64_t seed, std::uint64_t index, std::size_t alpha_limbs) {
  CounterRng g(seed, index, kGammaStream);
  CounterRng a(seed, index, kAlphaStream);
  return {PreciseAngle::random(a, alpha_limbs), TorusPoint::from_raw(g())};
}

/// Draws K samples of F over the (s, n) grid. Results depend only on the
/// config (and sequence), never on the worker count: each sample is computed
/// from its own RNG substream and aggregation runs in sample order.
inline McReport run_mc(const ExperimentConfig& config, const IntegerSequence* seq = nullptr) {
  config.validate();
  const std::size_t n_max = config.n_schedule.back();
  const std::size_t cells = config.n_schedule.size() * config.s_grid.size();
  IntegerSequence prefix;
  std::size_t alpha_limbs = 1;
  if (config.mode == SampleMode::dilated) {
    if (seq == nullptr) throw Error("dilated mode needs a sequence");
    if (seq->size() < n_max) throw Error("sequence too short for checkpoint " + std::to_string(n_max));
    prefix = seq->prefix(n_max);
    alpha_limbs = prefix.width() + 1;
  }

  std::vector<double> values(config.samples * cells);
  parallel_for(config.samples, config.workers, [&](std::size_t i) {
    std::vector<TorusPoint> points;
    TorusPoint gamma;
    if (config.mode == SampleMode::dilated) {
      const auto sp = draw_sample(config.master_seed, i, alpha_limbs);
      gamma = sp.gamma;
      dilate_into(prefix, n_max, sp.alpha, points);
    } else {
      gamma = TorusPoint::from_raw(CounterRng(config.master_seed, i, kGammaStream)());
      CounterRng p(config.master_seed, i, kPointStream);
      points.resize(n_max);
      for (auto& x : points) x = TorusPoint::from_raw(p());
    }
    double* row = values.data() + i * cells;
    std::size_t c = 0;
    for (const auto n : config.n_schedule) {
      const PairCorrelator pc(std::span<const TorusPoint>(points.data(), n), gamma);
      for (const double s : config.s_grid) row[c++] = pc.f(s);
    }
  });

  McReport rep;
  rep.config = config;
  std::size_t c = 0;
  const double k = static_cast<double>(config.samples);
  for (const auto n : config.n_schedule) {
    for (const double s : config.s_grid) {
      McCell cell;
      cell.s = s;
      cell.n = n;
      cell.target = f_mean_exact(s, n);
      CompensatedSum sum;
      cell.min = std::numeric_limits<double>::infinity();
      cell.max = -std::numeric_limits<double>::infinity();
      std::size_t short_count = 0;
      for (std::size_t i = 0; i < config.samples; ++i) {
        const double f = values[i * cells + c];
        sum.add(f);
        cell.min = std::min(cell.min, f);
        cell.max = std::max(cell.max, f);
        if (f < cell.target / 2) ++short_count;
      }
      cell.mean = sum.value() / k;
      if (config.samples > 1) {
        CompensatedSum sq;
        for (std::size_t i = 0; i < config.samples; ++i) {
          const double d = values[i * cells + c] - cell.mean;
          sq.add(d * d);
        }
        cell.variance = sq.value() / (k - 1.0);
      }
      cell.deviation = std::fabs(cell.mean - cell.target);
      cell.shortfall = static_cast<double>(short_count) / k;
      rep.cells.push_back(cell);
      ++c;
    }
  }
  if (config.keep_trajectories) {
    rep.trajectories.resize(config.samples);
    for (std::size_t i = 0; i < config.samples; ++i)
      rep.trajectories[i].assign(values.begin() + static_cast<std::ptrdiff_t>(i * cells),
                                 values.begin() + static_cast<std::ptrdiff_t>((i + 1) * cells));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Checks against the closed forms
// ---------------------------------------------------------------------------

struct CheckCell {
  double s = 0.0;
  std::size_t n = 0;
  double observed = 0.0;  // sample mean or sample variance
  double reference = 0.0;  // target mean or variance bound
  double limit = 0.0;      // allowed |mean - target|, or allowed variance
  double ratio = 0.0;      // variance / bound (variance check only)
  bool pass = false;
};

struct CheckReport {
  McReport mc;
  std::vector<CheckCell> cells;
  bool pass() const {
    return std::all_of(cells.begin(), cells.end(), [](const CheckCell& c) { return c.pass; });
  }
};

/// |mean - 2s(n-1)/n| <= 4 sqrt(bound / K), with bound = 2 E(A_n) s / n^3 for
/// dilated sequences and 2s/n for i.i.d. points.
inline std::vector<CheckCell> check_expectation(const McReport& mc, const IntegerSequence* seq = nullptr) {
  const auto& config = mc.config;
  const double k = static_cast<double>(config.samples);
  std::vector<CheckCell> out;
  std::size_t c = 0;
  for (const auto n : config.n_schedule) {
    const u128 e = config.mode == SampleMode::dilated ? additive_energy(*seq, n) : 0;
    for (std::size_t m = 0; m < config.s_grid.size(); ++m, ++c) {
      const auto& cell = mc.cells[c];
      const double bound = config.mode == SampleMode::dilated ? variance_bound(e, n, cell.s)
                                                              : 2.0 * cell.s / static_cast<double>(n);
      CheckCell cc;
      cc.s = cell.s;
      cc.n = n;
      cc.observed = cell.mean;
      cc.reference = cell.target;
      cc.limit = 4.0 * std::sqrt(bound / k);
      cc.pass = cell.deviation <= cc.limit;
      out.push_back(cc);
    }
  }
  return out;
}

/// Sample variance <= 2 E(A_n) s / n^3 * (1 + 5 / sqrt(K)).
inline std::vector<CheckCell> check_variance(const McReport& mc, const IntegerSequence& seq) {
  const auto& config = mc.config;
  if (config.mode != SampleMode::dilated) throw Error("variance check needs dilated mode");
  const double slack = 5.0 / std::sqrt(static_cast<double>(config.samples));
  std::vector<CheckCell> out;
  std::size_t c = 0;
  for (const auto n : config.n_schedule) {
    const u128 e = additive_energy(seq, n);
    for (std::size_t m = 0; m < config.s_grid.size(); ++m, ++c) {
      const auto& cell = mc.cells[c];
      CheckCell cc;
      cc.s = cell.s;
      cc.n = n;
      cc.observed = cell.variance;
      cc.reference = variance_bound(e, n, cell.s);
      cc.limit = cc.reference * (1.0 + slack);
      cc.ratio = cc.reference > 0 ? cell.variance / cc.reference : 0.0;
      cc.pass = cell.variance <= cc.limit;
      out.push_back(cc);
    }
  }
  return out;
}

inline CheckReport expectation_check(const ExperimentConfig& config, const IntegerSequence* seq = nullptr) {
  CheckReport rep;
  rep.mc = run_mc(config, seq);
  rep.cells = check_expectation(rep.mc, seq);
  return rep;
}

inline CheckReport variance_check(const ExperimentConfig& config, const IntegerSequence& seq) {
  if (config.mode != SampleMode::dilated) throw Error("variance check needs dilated mode");
  CheckReport rep;
  rep.mc = run_mc(config, &seq);
  rep.cells = check_variance(rep.mc, seq);
  return rep;
}

// ---------------------------------------------------------------------------
// Pairwise independence of 1_{d, eps}(alpha, gamma) = [ ||d alpha - gamma|| <= eps ]
// ---------------------------------------------------------------------------

struct IndependenceReport {
  std::int64_t d1 = 0;
  std::int64_t d2 = 0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  std::size_t samples = 0;
  double joint = 0.0;
  double marginal1 = 0.0;
  double marginal2 = 0.0;
  double tolerance = 0.0;  // 4 / sqrt(K)
  bool joint_pass = false;
  bool marginal_pass = false;
  bool pass() const { return joint_pass && marginal_pass; }
};

inline IndependenceReport indicator_independence_check(std::int64_t d1, std::int64_t d2, double eps1, double eps2,
                                                       std::size_t samples, std::uint64_t seed,
                                                       std::size_t workers = 1) {
  if (d1 == d2) throw Error("d1 and d2 must differ");
  if (!(eps1 > 0.0 && eps1 <= 0.5) || !(eps2 > 0.0 && eps2 <= 0.5)) throw Error("eps must lie in (0, 1/2]");
  if (samples < 1) throw Error("samples must be >= 1");
  const ArcRadius r1 = ArcRadius::from_double(eps1);
  const ArcRadius r2 = ArcRadius::from_double(eps2);
  std::vector<std::uint8_t> hits(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    const auto alpha = CounterRng(seed, i, kAlphaStream)();
    const auto gamma = TorusPoint::from_raw(CounterRng(seed, i, kGammaStream)());
    const bool a = r1.contains(TorusPoint::from_raw(static_cast<std::uint64_t>(d1) * alpha) - gamma);
    const bool b = r2.contains(TorusPoint::from_raw(static_cast<std::uint64_t>(d2) * alpha) - gamma);
    hits[i] = static_cast<std::uint8_t>((a ? 1 : 0) | (b ? 2 : 0));
  });
  std::size_t n1 = 0, n2 = 0, both = 0;
  for (const auto h : hits) {
    n1 += h & 1;
    n2 += (h >> 1) & 1;
    both += h == 3;
  }
  IndependenceReport rep{d1, d2, eps1, eps2, samples};
  const double k = static_cast<double>(samples);
  rep.joint = static_cast<double>(both) / k;
  rep.marginal1 = static_cast<double>(n1) / k;
  rep.marginal2 = static_cast<double>(n2) / k;
  rep.tolerance = 4.0 / std::sqrt(k);
  rep.joint_pass = std::fabs(rep.joint - 4.0 * eps1 * eps2) <= rep.tolerance;
  rep.marginal_pass = std::fabs(rep.marginal1 - 2.0 * eps1) <= rep.tolerance &&
                      std::fabs(rep.marginal2 - 2.0 * eps2) <= rep.tolerance;
  return rep;
}

// ---------------------------------------------------------------------------
// Divergence probe for the block construction
// ---------------------------------------------------------------------------

struct LevelProbe {
  int t = 0;
  std::size_t checkpoint = 0;  // #B_1 + ... + #B_{2^t}
  double f = 0.0;              // F(alpha, gamma, 1, checkpoint)
  bool in_s = false;
  bool in_t = false;
  bool in_u() const { return in_s && in_t; }
};

/// Membership of (alpha, gamma) in S_N, T_N for every level and F at each
/// checkpoint. With beta = Delta_N alpha mod 1 and psi = 1/q:
///   S_N: ||d beta|| <= psi eps / N for some 0 < d <= N eps,
///   T_N: ||d beta - gamma|| <= 1 / (8N) for some 0 < d <= N / (20 psi).
inline std::vector<LevelProbe> probe_point(const BlockConstruction& b, const PreciseAngle& alpha,
                                           TorusPoint gamma) {
  std::vector<LevelProbe> out;
  const auto cps = b.checkpoints();
  std::vector<TorusPoint> points;
  dilate_into(b.concatenated, b.concatenated.size(), alpha, points);
  for (std::size_t k = 0; k < b.levels.size(); ++k) {
    const auto& l = b.levels[k];
    LevelProbe p;
    p.t = l.t;
    p.checkpoint = cps[k];
    p.f = PairCorrelator(std::span<const TorusPoint>(points.data(), cps[k]), gamma).f(1.0);
    const TorusPoint beta = alpha.shifted(l.delta_log2);
    const double n = static_cast<double>(l.n);
    const double psi = 1.0 / static_cast<double>(l.inverse_psi);
    const auto d_s = static_cast<std::uint64_t>(std::floor(n * b.epsilon));
    const ArcRadius r_s = ArcRadius::from_double(psi * b.epsilon / n);
    TorusPoint x = beta;
    for (std::uint64_t d = 1; d <= d_s && !p.in_s; ++d, x = x + beta) p.in_s = r_s.contains(x);
    const std::uint64_t d_t = l.n * l.inverse_psi / 20;
    const ArcRadius r_t = ArcRadius::from_double(1.0 / (8.0 * n));
    x = beta;
    for (std::uint64_t d = 1; d <= d_t && !p.in_t; ++d, x = x + beta) p.in_t = r_t.contains(x - gamma);
    out.push_back(p);
  }
  return out;
}

struct LimsupLevel {
  int t = 0;
  std::size_t checkpoint = 0;
  double frac_s = 0.0;
  double frac_t = 0.0;
  double frac_u = 0.0;
  double mean_f = 0.0;
};

struct OverlapRatio {
  int t1 = 0;
  int t2 = 0;
  double ratio = 0.0;  // Leb(X_M cap X_N) / (Leb(X_M) Leb(X_N))
};

struct LimsupReport {
  double epsilon = 0.0;
  double threshold = 0.0;  // 1 / (160 eps)
  std::size_t samples = 0;
  std::vector<LimsupLevel> levels;
  std::vector<double> max_f;      // per sample, max over levels
  double frac_exceeding = 0.0;    // samples with max_f >= threshold
  std::size_t samples_in_some_u = 0;
  std::size_t implication_checks = 0;      // (sample, level) pairs inside U
  std::size_t implication_violations = 0;  // of those, F < threshold
  std::vector<OverlapRatio> s_overlaps;    // defined when both levels were hit
  std::vector<OverlapRatio> u_overlaps;
};

inline LimsupReport limsup_probe(const BlockConstruction& b, std::size_t samples, std::uint64_t seed,
                                 std::size_t workers = 1) {
  if (samples < 1) throw Error("samples must be >= 1");
  if (!(b.epsilon > 0.0 && b.epsilon < 1.0 / 320.0)) throw Error("epsilon out of range (0, 1/320)");
  const std::size_t levels = b.levels.size();
  const std::size_t limbs = b.concatenated.width() + 1;
  std::vector<std::vector<LevelProbe>> probes(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    const auto sp = draw_sample(seed, i, limbs);
    probes[i] = probe_point(b, sp.alpha, sp.gamma);
  });

  LimsupReport rep;
  rep.epsilon = b.epsilon;
  rep.threshold = 1.0 / (160.0 * b.epsilon);
  rep.samples = samples;
  const double k = static_cast<double>(samples);
  std::size_t exceeding = 0;
  for (const auto& pr : probes) {
    double m = 0.0;
    bool any_u = false;
    for (const auto& p : pr) {
      m = std::max(m, p.f);
      if (p.in_u()) {
        any_u = true;
        ++rep.implication_checks;
        if (p.f < rep.threshold) ++rep.implication_violations;
      }
    }
    rep.max_f.push_back(m);
    if (m >= rep.threshold) ++exceeding;
    if (any_u) ++rep.samples_in_some_u;
  }
  rep.frac_exceeding = static_cast<double>(exceeding) / k;
  std::vector<std::size_t> count_s(levels), count_u(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    LimsupLevel lv;
    lv.t = b.levels[l].t;
    lv.checkpoint = probes[0][l].checkpoint;
    CompensatedSum f;
    std::size_t s = 0, t = 0, u = 0;
    for (const auto& pr : probes) {
      s += pr[l].in_s;
      t += pr[l].in_t;
      u += pr[l].in_u();
      f.add(pr[l].f);
    }
    count_s[l] = s;
    count_u[l] = u;
    lv.frac_s = static_cast<double>(s) / k;
    lv.frac_t = static_cast<double>(t) / k;
    lv.frac_u = static_cast<double>(u) / k;
    lv.mean_f = f.value() / k;
    rep.levels.push_back(lv);
  }
  for (std::size_t a = 0; a < levels; ++a) {
    for (std::size_t c = a + 1; c < levels; ++c) {
      std::size_t both_s = 0, both_u = 0;
      for (const auto& pr : probes) {
        both_s += pr[a].in_s && pr[c].in_s;
        both_u += pr[a].in_u() && pr[c].in_u();
      }
      const int ta = b.levels[a].t, tc = b.levels[c].t;
      if (count_s[a] && count_s[c])
        rep.s_overlaps.push_back({ta, tc, static_cast<double>(both_s) * k / (static_cast<double>(count_s[a]) * count_s[c])});
      if (count_u[a] && count_u[c])
        rep.u_overlaps.push_back({ta, tc, static_cast<double>(both_u) * k / (static_cast<double>(count_u[a]) * count_u[c])});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Normalized energy E(A_n) / n^3
// ---------------------------------------------------------------------------

struct EnergyPoint {
  std::size_t n = 0;
  u128 energy = 0;
  double ratio = 0.0;  // E / n^3
  double running_min = 0.0;
};

struct EnergyDiagnostic {
  std::vector<EnergyPoint> points;
  double slope = 0.0;  // least-squares slope of log ratio against log n
  /// "decaying" when the ratio falls like a power of n (slope < -0.05),
  /// "bounded_below" otherwise.
  std::string regime;
};

inline EnergyDiagnostic energy_ratio_diagnostic(const IntegerSequence& seq, const std::vector<std::size_t>& checkpoints) {
  if (checkpoints.empty()) throw Error("no checkpoints");
  EnergyDiagnostic out;
  double running = std::numeric_limits<double>::infinity();
  for (const auto n : checkpoints) {
    if (n < 1) throw Error("checkpoints must be >= 1");
    EnergyPoint p;
    p.n = n;
    p.energy = additive_energy(seq, n);
    const long double nn = static_cast<long double>(n);
    p.ratio = static_cast<double>(to_long_double(p.energy) / (nn * nn * nn));
    running = std::min(running, p.ratio);
    p.running_min = running;
    out.points.push_back(p);
  }
  if (out.points.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(out.points.size());
    for (const auto& p : out.points) {
      const double x = std::log(static_cast<double>(p.n));
      const double y = std::log(p.ratio);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double den = m * sxx - sx * sx;
    out.slope = den > 0 ? (m * sxy - sx * sy) / den : 0.0;
  }
  out.regime = out.slope < -0.05 ? "decaying" : "bounded_below";
  return out;
}

inline constexpr double kEnergyBandLow = 1.0 / 64;
inline constexpr double kEnergyBandHigh = 64.0;

struct EnergyBandPoint {
  std::size_t n = 0;
  u128 energy = 0;
  double ratio = 0.0;  // E(A_N) / (N^3 psi(N))
  bool within = false;
};

/// E(A_N) / (N^3 psi(N)) at every block boundary, against the fixed band.
inline std::vector<EnergyBandPoint> block_energy_band(const BlockConstruction& b) {
  std::vector<EnergyBandPoint> out;
  for (const auto n : b.checkpoints()) {
    EnergyBandPoint p;
    p.n = n;
    p.energy = additive_energy(b.concatenated, n);
    const long double nn = static_cast<long double>(n);
    p.ratio = static_cast<double>(to_long_double(p.energy) / (nn * nn * nn * b.psi(static_cast<double>(n))));
    p.within = p.ratio >= kEnergyBandLow && p.ratio <= kEnergyBandHigh;
    out.push_back(p);
  }
  return out;
}

}  // namespace pcorr
