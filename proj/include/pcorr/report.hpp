#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "pcorr/equidist.hpp"
#include "pcorr/error.hpp"
#include "pcorr/experiments.hpp"
#include "pcorr/farey.hpp"
#include "pcorr/sequences.hpp"

namespace pcorr {

using Json = nlohmann::ordered_json;

/// x printed with 12 significant digits.
inline std::string fmt12(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// x rounded to 12 significant digits; the shortest round-trip form of the
/// result has at most 12 digits. Non-finite values become null.
inline Json real(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::strtod(fmt12(x).c_str(), nullptr);
}

/// Exact integer: a JSON number when it fits 64 bits, else a decimal string.
inline Json integer(u128 x) {
  if (x <= std::numeric_limits<std::uint64_t>::max()) return static_cast<std::uint64_t>(x);
  return to_string(x);
}

inline Json reals(const std::vector<double>& xs) {
  Json out = Json::array();
  for (const auto x : xs) out.push_back(real(x));
  return out;
}

// ---------------------------------------------------------------------------

inline Json to_json(const McReport& rep) {
  Json cells = Json::array();
  for (const auto& c : rep.cells) {
    cells.push_back({{"s", real(c.s)},
                     {"n", c.n},
                     {"mean", real(c.mean)},
                     {"variance", real(c.variance)},
                     {"min", real(c.min)},
                     {"max", real(c.max)},
                     {"target", real(c.target)},
                     {"deviation", real(c.deviation)},
                     {"shortfall", real(c.shortfall)}});
  }
  Json out = {{"mode", to_string(rep.config.mode)},
              {"samples", rep.config.samples},
              {"cells", std::move(cells)}};
  if (!rep.trajectories.empty()) {
    Json t = Json::array();
    for (const auto& row : rep.trajectories) t.push_back(reals(row));
    out["trajectories"] = std::move(t);
  }
  return out;
}

inline std::string mc_csv(const McReport& rep) {
  std::ostringstream out;
  out << "s,n,mean,variance,min,max,target,deviation,shortfall\n";
  for (const auto& c : rep.cells) {
    out << fmt12(c.s) << ',' << c.n << ',' << fmt12(c.mean) << ',' << fmt12(c.variance) << ',' << fmt12(c.min)
        << ',' << fmt12(c.max) << ',' << fmt12(c.target) << ',' << fmt12(c.deviation) << ',' << fmt12(c.shortfall)
        << '\n';
  }
  return out.str();
}

inline Json to_json(const std::vector<CheckCell>& cells) {
  Json out = Json::array();
  for (const auto& c : cells) {
    out.push_back({{"s", real(c.s)},
                   {"n", c.n},
                   {"observed", real(c.observed)},
                   {"reference", real(c.reference)},
                   {"limit", real(c.limit)},
                   {"ratio", real(c.ratio)},
                   {"pass", c.pass}});
  }
  return out;
}

inline Json to_json(const FareyMcReport& rep) {
  return {{"m", rep.m},
          {"sigma", real(rep.sigma)},
          {"tau", real(rep.tau)},
          {"samples", rep.samples},
          {"in_s", rep.in_s},
          {"in_t", rep.in_t},
          {"in_both", rep.in_both},
          {"estimate", real(rep.estimate)},
          {"bound", real(rep.bound.value)},
          {"bound_exact", rep.bound.exact.str()},
          {"clamped", rep.bound.clamped},
          {"tolerance", real(rep.tolerance)},
          {"pass", rep.pass}};
}

inline Json to_json(const LimsupReport& rep) {
  Json levels = Json::array();
  for (const auto& l : rep.levels) {
    levels.push_back({{"t", l.t},
                      {"checkpoint", l.checkpoint},
                      {"frac_s", real(l.frac_s)},
                      {"frac_t", real(l.frac_t)},
                      {"frac_u", real(l.frac_u)},
                      {"mean_f", real(l.mean_f)}});
  }
  auto overlaps = [](const std::vector<OverlapRatio>& v) {
    Json out = Json::array();
    for (const auto& o : v) out.push_back({{"t1", o.t1}, {"t2", o.t2}, {"ratio", real(o.ratio)}});
    return out;
  };
  return {{"epsilon", real(rep.epsilon)},
          {"threshold", real(rep.threshold)},
          {"samples", rep.samples},
          {"levels", std::move(levels)},
          {"frac_exceeding", real(rep.frac_exceeding)},
          {"samples_in_some_u", rep.samples_in_some_u},
          {"implication_checks", rep.implication_checks},
          {"implication_violations", rep.implication_violations},
          {"s_overlaps", overlaps(rep.s_overlaps)},
          {"u_overlaps", overlaps(rep.u_overlaps)}};
}

inline Json to_json(const BlockReport& rep) {
  auto prop = [](const PropertyCheck& p) {
    return Json{{"pass", p.pass}, {"witness_d", p.witness_d}, {"witness_r", p.witness_r}};
  };
  return {{"t", rep.t},
          {"in_window", rep.in_window},
          {"upper", prop(rep.upper)},
          {"lower", prop(rep.lower)},
          {"size", prop(rep.size)},
          {"pass", rep.pass()}};
}

inline Json to_json(const std::vector<EnergyBandPoint>& band) {
  Json out = Json::array();
  for (const auto& p : band)
    out.push_back({{"n", p.n}, {"energy", integer(p.energy)}, {"ratio", real(p.ratio)}, {"within", p.within}});
  return out;
}

inline Json to_json(const PpcFailureReport& rep) {
  Json cps = Json::array();
  for (const auto& c : rep.checkpoints) {
    Json row = {{"n", c.n}, {"low_mass", real(c.low_mass)}, {"qualifying", c.qualifying}, {"separated", c.separated}};
    if (c.qualifying) {
      Json per_s = Json::array();
      for (std::size_t i = 0; i < rep.s_list.size(); ++i)
        per_s.push_back({{"s", rep.s_list[i]}, {"f", real(c.f[i])}, {"limit", real(c.limit[i])}, {"within", c.within[i]}});
      row["f"] = std::move(per_s);
    }
    cps.push_back(std::move(row));
  }
  return {{"theta", real(rep.theta)},
          {"s_max", rep.s_max},
          {"certified_bound", real(rep.certified_bound)},
          {"certified", rep.certified},
          {"certificate", rep.certificate()},
          {"qualifying", rep.qualifying},
          {"separated", rep.separated},
          {"bound_holds", rep.bound_holds},
          {"checkpoints", std::move(cps)}};
}

// ---------------------------------------------------------------------------
// Block construction record
// ---------------------------------------------------------------------------

inline Json block_record(const BlockConstruction& b) {
  Json levels = Json::array();
  for (const auto& l : b.levels) {
    levels.push_back({{"t", l.t},
                      {"n", l.n},
                      {"inverse_psi", l.inverse_psi},
                      {"delta_log2", l.delta_log2},
                      {"attempts", l.attempts},
                      {"size", l.base.size()},
                      {"base", l.base}});
  }
  return {{"psi", b.psi.to_string()},
          {"epsilon", b.epsilon},
          {"seed", b.seed},
          {"levels", std::move(levels)}};
}

/// Inverse of block_record. Rebuilds the concatenated sequence from the bases.
inline BlockConstruction load_block_record(const Json& j) {
  try {
    BlockConstruction b;
    b.psi = PsiSpec::parse(j.at("psi").get<std::string>());
    b.epsilon = j.at("epsilon").get<double>();
    b.seed = j.at("seed").get<std::uint64_t>();
    std::vector<Natural> all;
    for (const auto& lj : j.at("levels")) {
      BlockLevel l;
      l.t = lj.at("t").get<int>();
      l.n = lj.at("n").get<std::uint64_t>();
      l.inverse_psi = lj.at("inverse_psi").get<std::uint64_t>();
      l.delta_log2 = lj.at("delta_log2").get<std::size_t>();
      l.attempts = lj.value("attempts", std::size_t{0});
      l.base = lj.at("base").get<std::vector<std::uint64_t>>();
      if (l.base.size() != lj.at("size").get<std::size_t>()) throw Error("block record: size mismatch at t=" + std::to_string(l.t));
      for (auto& e : l.elements()) all.push_back(std::move(e));
      b.levels.push_back(std::move(l));
    }
    if (b.levels.empty()) throw Error("block record: no levels");
    for (std::size_t i = 1; i < all.size(); ++i)
      if (all[i] <= all[i - 1]) throw Error("block record: elements not strictly increasing");
    b.concatenated = IntegerSequence(all);
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("block record: ") + e.what());
  }
}

inline BlockConstruction read_block_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  return load_block_record(j);
}

}  // namespace pcorr
