// pcw: pair correlation workbench.
//
//   pcw gen powers --k 2 --count 4
//   pcw stats --input seq.txt --checkpoints 64,128
//   pcw mc --mode iid --samples 2000 --s 1 --n 10000 --seed 1 --check expectation
//   pcw equi --fixture uniform:0.5,1 --cut 0.5 --mass 0.25 --gamma 0.75 --s 4
//   pcw blocks-verify --record blocks.txt.json --samples 200
//   pcw farey --m 10 --sigma 0.25 --tau 0.25
//
// Exit status: 0 ok, 1 a requested check failed, 2 usage or input error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "pcorr/pcorr.hpp"

#ifndef PCW_VERSION
#define PCW_VERSION "0.0.0"
#endif

using namespace pcorr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

const std::set<std::string> kNotEchoed = {"help", "config", "out", "save-config", "workers", "format"};

struct Common {
  std::uint64_t seed = 0;
  std::size_t workers = default_workers();
  std::string out = "-";
  std::string config;
  std::string save_config;
  std::string format = "json";
};

const CLI::Validator kAtLeastOne(
    [](std::string& v) {
      std::uint64_t x = 0;
      const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
      return r.ec == std::errc() && r.ptr == v.data() + v.size() && x >= 1 ? std::string() : "must be an integer >= 1";
    },
    "INT>=1");

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  sub->add_option("--workers", c.workers, "Worker threads (results do not depend on it)")
      ->check(kAtLeastOne)
      ->capture_default_str();
  sub->add_option("--out", c.out, "Output path, - for stdout")->capture_default_str();
  sub->add_option("--config", c.config, "key=value file; flags take precedence");
  sub->add_option("--save-config", c.save_config, "Write the resolved config as a key=value file");
  sub->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

std::string key_of(const CLI::Option* opt) {
  auto names = opt->get_lnames();
  if (!names.empty()) return names.front();
  return opt->get_name(true, false);
}

/// The resolved value of every option, in declaration order.
std::vector<std::pair<std::string, std::string>> resolved_config(const CLI::App* sub) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string key = key_of(opt);
    if (key.empty() || kNotEchoed.count(key)) continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
    } else {
      value = opt->get_default_str();
      if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
        value = value.substr(1, value.size() - 2);
        std::erase(value, ' ');
      }
      if (value.empty()) continue;
    }
    out.emplace_back(key, value);
  }
  return out;
}

Json config_json(const std::vector<std::pair<std::string, std::string>>& cfg) {
  Json j = Json::object();
  for (const auto& [k, v] : cfg) j[k] = v;
  return j;
}

/// Reads a flat key=value file; '#' starts a comment line.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(path + ":" + std::to_string(lineno) + ": expected key=value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

/// Splices config-file entries into argv right after the subcommand, skipping
/// keys given on the command line.
std::vector<std::string> apply_config(std::vector<std::string> args, const std::set<std::string>& subcommands) {
  std::size_t sub = 0;
  for (std::size_t i = 1; i < args.size(); ++i)
    if (subcommands.count(args[i])) {
      sub = i;
      break;
    }
  if (sub == 0) return args;
  std::string path;
  std::set<std::string> given;
  for (std::size_t i = sub + 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const auto eq = a.find('=');
    const std::string key = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    given.insert(key);
    if (key == "config") path = eq == std::string::npos ? (i + 1 < args.size() ? args[i + 1] : "") : a.substr(eq + 1);
  }
  if (path.empty()) return args;
  std::vector<std::string> extra;
  for (const auto& [k, v] : read_config_file(path)) {
    if (k == "config") throw Error(path + ": nested config is not supported");
    if (!given.count(k)) extra.push_back("--" + k + "=" + v);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, extra.begin(), extra.end());
  return args;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("cannot write " + path);
}

struct Output {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;

  Json envelope(Json result) const {
    return {{"tool", "pcw"}, {"version", PCW_VERSION}, {"command", command}, {"config", config_json(config)},
            {"result", std::move(result)}};
  }

  std::string csv_header() const {
    std::ostringstream out;
    out << "# tool=pcw\n# version=" << PCW_VERSION << "\n# command=" << command << '\n';
    for (const auto& [k, v] : config) out << "# " << k << '=' << v << '\n';
    return out.str();
  }

  void emit(const Common& c, const Json& result, const std::string& csv_body) const {
    if (c.format == "csv") write_text(c.out, csv_header() + csv_body);
    else write_text(c.out, envelope(result).dump(2) + "\n");
  }
};

std::vector<std::size_t> checked_checkpoints(std::vector<std::size_t> cps, std::size_t n) {
  if (cps.empty()) cps.push_back(n);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] < 1 || cps[i] > n) throw Error("checkpoint " + std::to_string(cps[i]) + " out of range [1, " + std::to_string(n) + "]");
    if (i > 0 && cps[i] <= cps[i - 1]) throw Error("checkpoints must be strictly increasing");
  }
  return cps;
}

IntegerSequence read_sequence_file(const std::string& path) {
  if (path == "-") return read_sequence(std::cin);
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  try {
    return read_sequence(in);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) throw Error("bad " + what + " '" + text + "'");
  return v;
}

/// naturals | powers:k | primes | lacunary:b | file:path, first `count` terms.
IntegerSequence make_sequence(const std::string& spec, std::size_t count, std::size_t max_bits) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (name == "naturals") return gen_powers(1, count, max_bits);
  if (name == "powers") return gen_powers(static_cast<unsigned>(parse_u64(arg, "exponent")), count, max_bits);
  if (name == "primes") return gen_primes(count);
  if (name == "lacunary") return gen_lacunary(parse_u64(arg, "base"), count, max_bits);
  if (name == "file") {
    auto seq = read_sequence_file(arg);
    if (seq.size() < count) throw Error(arg + ": has " + std::to_string(seq.size()) + " terms, need " + std::to_string(count));
    return seq.prefix(count);
  }
  throw Error("unknown sequence '" + spec + "'");
}

std::vector<TorusPoint> read_points(const std::string& path) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (path != "-") {
    file.open(path);
    if (!file) throw Error("cannot read " + path);
    in = &file;
  }
  std::vector<TorusPoint> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(*in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    char* end = nullptr;
    const double x = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || line.find_first_not_of(" \t\r", static_cast<std::size_t>(end - line.c_str())) != std::string::npos)
      throw Error(path + ": line " + std::to_string(lineno) + ": malformed real");
    if (!(x >= 0.0 && x < 1.0)) throw Error(path + ": line " + std::to_string(lineno) + ": point outside [0, 1)");
    out.push_back(TorusPoint::from_double(x));
  }
  return out;
}

/// uniform:a,b | equispaced | vdc, n points.
std::vector<TorusPoint> make_fixture(const std::string& spec, std::size_t n, std::uint64_t seed) {
  std::vector<TorusPoint> out(n);
  if (spec == "equispaced") {
    for (std::size_t i = 0; i < n; ++i) out[i] = TorusPoint::from_raw(static_cast<std::uint64_t>((u128{i} << 64) / n));
    return out;
  }
  if (spec == "vdc") {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t k = i + 1, r = 0;
      for (int b = 0; b < 64; ++b, k >>= 1) r = (r << 1) | (k & 1);
      out[i] = TorusPoint::from_raw(r);
    }
    return out;
  }
  if (spec.rfind("uniform:", 0) == 0) {
    double a = 0, b = 0;
    char tail = 0;
    if (std::sscanf(spec.c_str() + 8, "%lf,%lf%c", &a, &b, &tail) != 2 || !(0.0 <= a && a < b && b <= 1.0))
      throw Error("bad fixture '" + spec + "', expected uniform:a,b with 0 <= a < b <= 1");
    CounterRng rng(seed, 0, kPointStream);
    for (auto& p : out) p = TorusPoint::from_double(a + (b - a) * rng.uniform01());
    return out;
  }
  throw Error("unknown fixture '" + spec + "'");
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string family = "powers";
  unsigned k = 2;
  std::uint64_t base = 2;
  std::size_t count = 10;
  std::string psi = "powerlog:1,1";
  double epsilon = 0.0025;
  int tmax = 6;
  std::string input;
  std::size_t max_bits = kDefaultMaxBits;
};

int run_gen(const GenArgs& a, const Common& c, const Output& o) {
  IntegerSequence seq;
  if (a.family == "powers") seq = gen_powers(a.k, a.count, a.max_bits);
  else if (a.family == "primes") seq = gen_primes(a.count);
  else if (a.family == "lacunary") seq = gen_lacunary(a.base, a.count, a.max_bits);
  else if (a.family == "file") {
    if (a.input.empty()) throw Error("family file needs --input");
    seq = read_sequence_file(a.input);
  } else {
    if (c.out.empty() || c.out == "-") throw Error("family blocks needs --out");
    const auto b = build_blocks(PsiSpec::parse(a.psi), a.epsilon, a.tmax, c.seed, {.max_bits = a.max_bits});
    std::ostringstream text;
    write_sequence(text, b.concatenated);
    write_text(c.out, text.str());
    write_text(c.out + ".json", o.envelope(block_record(b)).dump(2) + "\n");
    return kExitOk;
  }
  std::ostringstream text;
  write_sequence(text, seq);
  write_text(c.out, text.str());
  return kExitOk;
}

struct StatsArgs {
  std::string input;
  std::vector<std::size_t> checkpoints;
  std::string profile;
};

int run_stats(const StatsArgs& a, const Common& c, const Output& o) {
  const auto seq = read_sequence_file(a.input);
  if (seq.size() == 0) throw Error(a.input + ": empty sequence");
  const auto cps = checked_checkpoints(a.checkpoints, seq.size());
  Json rows = Json::array();
  std::ostringstream csv;
  csv << "N,E,E_over_N3,support,max_r\n";
  for (const auto n : cps) {
    const auto d = difference_summary(seq, n);
    const long double nn = static_cast<long double>(n);
    const double ratio = static_cast<double>(to_long_double(d.energy) / (nn * nn * nn));
    rows.push_back({{"N", n}, {"E", integer(d.energy)}, {"E_over_N3", real(ratio)}, {"support", d.support},
                    {"max_r", d.max_r_nonzero}});
    csv << n << ',' << to_string(d.energy) << ',' << fmt12(ratio) << ',' << d.support << ',' << d.max_r_nonzero << '\n';
  }
  if (!a.profile.empty()) {
    const auto prof = repr_profile(seq, cps.back());
    std::ostringstream p;
    p << "d,r\n";
    for (const auto& [d, r] : prof.entries()) p << d << ',' << r << '\n';
    write_text(a.profile, p.str());
  }
  o.emit(c, {{"rows", rows}}, csv.str());
  return kExitOk;
}

struct McArgs {
  std::string mode = "dilated";
  std::string sequence = "powers:2";
  std::size_t samples = 1000;
  std::vector<double> s{1.0};
  std::vector<std::size_t> n{1024};
  std::string check = "none";
  std::size_t max_bits = kDefaultMaxBits;
};

int run_mc_cmd(const McArgs& a, const Common& c, const Output& o) {
  ExperimentConfig cfg;
  cfg.master_seed = c.seed;
  cfg.samples = a.samples;
  cfg.s_grid = a.s;
  cfg.n_schedule = a.n;
  cfg.mode = a.mode == "iid" ? SampleMode::iid : SampleMode::dilated;
  cfg.workers = c.workers;
  cfg.validate();
  const bool want_exp = a.check == "expectation" || a.check == "all";
  const bool want_var = a.check == "variance" || a.check == "all";
  if (want_var && cfg.mode == SampleMode::iid) throw Error("variance check needs mode dilated");
  IntegerSequence seq;
  if (cfg.mode == SampleMode::dilated) seq = make_sequence(a.sequence, cfg.n_schedule.back(), a.max_bits);
  const IntegerSequence* sp = cfg.mode == SampleMode::dilated ? &seq : nullptr;
  const auto mc = run_mc(cfg, sp);
  Json result = to_json(mc);
  bool pass = true;
  std::ostringstream csv;
  csv << mc_csv(mc);
  auto add_check = [&](const char* name, const std::vector<CheckCell>& cells) {
    result[name] = to_json(cells);
    csv << "\ncheck,s,n,observed,reference,limit,pass\n";
    for (const auto& cc : cells) {
      pass = pass && cc.pass;
      csv << name << ',' << fmt12(cc.s) << ',' << cc.n << ',' << fmt12(cc.observed) << ',' << fmt12(cc.reference)
          << ',' << fmt12(cc.limit) << ',' << (cc.pass ? "pass" : "fail") << '\n';
    }
  };
  if (want_exp) add_check("expectation", check_expectation(mc, sp));
  if (want_var) add_check("variance", check_variance(mc, seq));
  if (a.check != "none") result["pass"] = pass;
  o.emit(c, result, csv.str());
  return pass ? kExitOk : kExitCheckFailed;
}

struct EquiArgs {
  std::string points;
  std::string fixture;
  std::string sequence;
  std::string alpha;
  std::size_t n = 4096;
  double rotate = 0.0;
  double cut = 0.0;
  double mass = 0.0;
  double gamma = 0.0;
  std::vector<std::uint64_t> s{4};
  std::vector<std::size_t> checkpoints;
  std::size_t k_partition = 10;
  std::string check = "none";
  std::size_t max_bits = kDefaultMaxBits;
};

int run_equi(const EquiArgs& a, const Common& c, const Output& o, bool have_cut) {
  const int sources = !a.points.empty() + !a.fixture.empty() + !a.sequence.empty();
  if (sources != 1) throw Error("give exactly one of --points, --fixture, --sequence");
  std::vector<TorusPoint> pts;
  if (!a.points.empty()) pts = read_points(a.points);
  else if (!a.fixture.empty()) pts = make_fixture(a.fixture, a.n, c.seed);
  else {
    const auto seq = make_sequence(a.sequence, a.n, a.max_bits);
    if (a.alpha.empty()) pts = dilate(seq, a.n, draw_sample(c.seed, 0, seq.width() + 1).alpha);
    else pts = dilate(seq, a.n, std::stod(a.alpha));
  }
  if (pts.empty()) throw Error("empty sequence");
  if (a.rotate != 0.0) pts = rotate(pts, TorusPoint::from_double(a.rotate));
  const auto cps = checked_checkpoints(a.checkpoints, pts.size());
  if (a.check == "ppc" && !have_cut) throw Error("--check ppc needs --cut, --mass and --gamma");

  Json result = {{"n", pts.size()}};
  Json disc = Json::array();
  std::ostringstream csv;
  csv << "N,star_discrepancy\n";
  for (const auto n : cps) {
    const double d = star_discrepancy(std::span<const TorusPoint>(pts).first(n));
    disc.push_back({{"n", n}, {"star_discrepancy", real(d)}});
    csv << n << ',' << fmt12(d) << '\n';
  }
  result["discrepancy"] = std::move(disc);
  const auto over = overrep_search(pts, a.k_partition, cps);
  result["overrep"] = {{"index", over.index}, {"left", real(over.left)}, {"length", real(over.length)},
                       {"checkpoint", over.checkpoint}, {"excess", real(over.excess)}};
  csv << "\noverrep_left,overrep_length,checkpoint,excess\n"
      << fmt12(over.left) << ',' << fmt12(over.length) << ',' << over.checkpoint << ',' << fmt12(over.excess) << '\n';
  bool pass = true;
  if (have_cut) {
    NonequidistParams p;
    p.cut = a.cut;
    p.mass = a.mass;
    p.gamma = TorusPoint::from_double(a.gamma);
    const auto rep = verify_ppc_failure(pts, p, a.s, cps);
    result["ppc"] = to_json(rep);
    csv << "\n# " << rep.certificate() << "\nN,s,F,limit,within\n";
    for (const auto& cp : rep.checkpoints)
      for (std::size_t i = 0; i < cp.f.size(); ++i)
        csv << cp.n << ',' << rep.s_list[i] << ',' << fmt12(cp.f[i]) << ',' << fmt12(cp.limit[i]) << ','
            << (cp.within[i] ? "yes" : "no") << '\n';
    if (a.check == "ppc") {
      pass = rep.pass();
      result["pass"] = pass;
    }
  }
  o.emit(c, result, csv.str());
  return pass ? kExitOk : kExitCheckFailed;
}

struct BlocksArgs {
  std::string record;
  std::size_t samples = 0;
};

int run_blocks_verify(const BlocksArgs& a, const Common& c, const Output& o) {
  std::ifstream in(a.record);
  if (!in) throw Error("cannot read " + a.record);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(a.record + ": " + e.what());
  }
  const auto b = load_block_record(j.contains("result") ? j["result"] : j);
  bool pass = true;
  Json levels = Json::array();
  std::ostringstream csv;
  csv << "t,n,inverse_psi,delta_log2,size,pass\n";
  for (const auto& l : b.levels) {
    const auto rep = verify_block(b, l.t);
    pass = pass && rep.pass();
    levels.push_back(to_json(rep));
    csv << l.t << ',' << l.n << ',' << l.inverse_psi << ',' << l.delta_log2 << ',' << l.base.size() << ','
        << (rep.pass() ? "pass" : "fail") << '\n';
  }
  const auto band = block_energy_band(b);
  csv << "\nN,energy,ratio,within\n";
  for (const auto& p : band) {
    pass = pass && p.within;
    csv << p.n << ',' << to_string(p.energy) << ',' << fmt12(p.ratio) << ',' << (p.within ? "yes" : "no") << '\n';
  }
  Json result = {{"levels", std::move(levels)},
                 {"energy_band", {{"low", real(kEnergyBandLow)}, {"high", real(kEnergyBandHigh)}, {"points", to_json(band)}}}};
  if (a.samples > 0) {
    const auto probe = limsup_probe(b, a.samples, c.seed, c.workers);
    pass = pass && probe.implication_violations == 0;
    result["limsup"] = to_json(probe);
    csv << "\nt,checkpoint,frac_s,frac_t,frac_u,mean_f\n";
    for (const auto& l : probe.levels)
      csv << l.t << ',' << l.checkpoint << ',' << fmt12(l.frac_s) << ',' << fmt12(l.frac_t) << ',' << fmt12(l.frac_u)
          << ',' << fmt12(l.mean_f) << '\n';
  }
  result["pass"] = pass;
  o.emit(c, result, csv.str());
  return pass ? kExitOk : kExitCheckFailed;
}

struct FareyArgs {
  std::uint64_t m = 10;
  double sigma = 0.25;
  double tau = 0.25;
  std::size_t samples = 100000;
};

int run_farey(const FareyArgs& a, const Common& c, const Output& o) {
  const auto rep = farey_strip_mc(a.m, a.sigma, a.tau, a.samples, c.seed, c.workers);
  std::ostringstream csv;
  csv << "m,sigma,tau,samples,estimate,bound,tolerance,pass\n"
      << rep.m << ',' << fmt12(rep.sigma) << ',' << fmt12(rep.tau) << ',' << rep.samples << ',' << fmt12(rep.estimate)
      << ',' << fmt12(rep.bound.value) << ',' << fmt12(rep.tolerance) << ',' << (rep.pass ? "pass" : "fail") << '\n';
  o.emit(c, to_json(rep), csv.str());
  return rep.pass ? kExitOk : kExitCheckFailed;
}

void save_config(const std::string& path, const Output& o) {
  std::ostringstream out;
  out << "# pcw " << PCW_VERSION << ' ' << o.command << '\n';
  for (const auto& [k, v] : o.config) out << k << '=' << v << '\n';
  write_text(path, out.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcw: pair correlation statistics of sequences mod one"};
  app.set_version_flag("--version", std::string("pcw ") + PCW_VERSION);
  app.require_subcommand(1);

  Common common;

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Write a sequence as newline-delimited integers");
  g->add_option("family,--family", gen.family, "Sequence family")
      ->check(CLI::IsMember({"powers", "primes", "lacunary", "blocks", "file"}))
      ->capture_default_str();
  g->add_option("--k", gen.k, "Exponent for powers")->capture_default_str();
  g->add_option("--base", gen.base, "Base for lacunary")->capture_default_str();
  g->add_option("--count", gen.count, "Number of terms")->capture_default_str();
  g->add_option("--psi", gen.psi, "constant:c | powerlog:c,p[,shift] | iterlog:L | table:n=v,...")->capture_default_str();
  g->add_option("--epsilon", gen.epsilon, "Block construction epsilon")->capture_default_str();
  g->add_option("--tmax", gen.tmax, "Highest block level")->capture_default_str();
  g->add_option("--input", gen.input, "Sequence file for family file");
  g->add_option("--max-bits", gen.max_bits, "Largest allowed element width")->capture_default_str();
  add_common(g, common);

  StatsArgs stats;
  auto* st = app.add_subcommand("stats", "Additive energy and difference statistics at checkpoints");
  st->add_option("--input", stats.input, "Sequence file, - for stdin")->required();
  st->add_option("--checkpoints", stats.checkpoints, "Prefix sizes (default: whole file)")->delimiter(',');
  st->add_option("--profile", stats.profile, "Write d,r for the last checkpoint to this CSV");
  add_common(st, common);

  McArgs mc;
  auto* m = app.add_subcommand("mc", "Monte Carlo over random (alpha, gamma)");
  m->add_option("--mode", mc.mode, "dilated: points a_n alpha; iid: uniform points")->check(CLI::IsMember({"dilated", "iid"}))->capture_default_str();
  m->add_option("--sequence", mc.sequence, "naturals | powers:k | primes | lacunary:b | file:path")->capture_default_str();
  m->add_option("--samples", mc.samples, "Number of (alpha, gamma) draws")->check(kAtLeastOne)->capture_default_str();
  m->add_option("--s", mc.s, "Window parameters")->delimiter(',')->capture_default_str();
  m->add_option("--n", mc.n, "Checkpoints")->delimiter(',')->capture_default_str();
  m->add_option("--check", mc.check, "Closed-form checks to assert")
      ->check(CLI::IsMember({"none", "expectation", "variance", "all"}))
      ->capture_default_str();
  m->add_option("--max-bits", mc.max_bits, "Largest allowed element width")->capture_default_str();
  add_common(m, common);

  EquiArgs equi;
  auto* e = app.add_subcommand("equi", "Discrepancy, over-represented arcs, gamma-PPC failure certificate");
  e->add_option("--points", equi.points, "File of reals in [0, 1)");
  e->add_option("--fixture", equi.fixture, "uniform:a,b | equispaced | vdc");
  e->add_option("--sequence", equi.sequence, "Integer sequence to dilate");
  e->add_option("--alpha", equi.alpha, "Dilation for --sequence (default: drawn from --seed)");
  e->add_option("--n", equi.n, "Points for --fixture and --sequence")->check(kAtLeastOne)->capture_default_str();
  e->add_option("--rotate", equi.rotate, "Shift added to every point")->capture_default_str();
  auto* cut_opt = e->add_option("--cut", equi.cut, "Deficient arc [0, cut)");
  auto* mass_opt = e->add_option("--mass", equi.mass, "Largest share of points in [0, cut)");
  auto* gamma_opt = e->add_option("--gamma", equi.gamma, "Shift for F");
  e->add_option("--s", equi.s, "Integer windows for F")->delimiter(',')->capture_default_str();
  e->add_option("--checkpoints", equi.checkpoints, "Prefix sizes (default: all points)")->delimiter(',');
  e->add_option("--k-partition", equi.k_partition, "Arcs searched: K+1 equal arcs")->capture_default_str();
  e->add_option("--check", equi.check, "ppc: assert the failure certificate and bound")->check(CLI::IsMember({"none", "ppc"}))->capture_default_str();
  e->add_option("--max-bits", equi.max_bits, "Largest allowed element width")->capture_default_str();
  add_common(e, common);

  BlocksArgs blocks;
  auto* bv = app.add_subcommand("blocks-verify", "Check a block construction record");
  bv->add_option("--record", blocks.record, "JSON record written by gen blocks")->required();
  bv->add_option("--samples", blocks.samples, "Random (alpha, gamma) for the divergence probe, 0 to skip")
      ->capture_default_str();
  add_common(bv, common);

  FareyArgs farey;
  auto* f = app.add_subcommand("farey", "Farey strip measure against its lower bound");
  f->add_option("--m", farey.m, "Farey order")->check(kAtLeastOne)->capture_default_str();
  f->add_option("--sigma", farey.sigma, "Strip half-width sigma / m^2")->capture_default_str();
  f->add_option("--tau", farey.tau, "Winding half-width tau / m")->capture_default_str();
  f->add_option("--samples", farey.samples, "Monte Carlo draws")->check(kAtLeastOne)->capture_default_str();
  add_common(f, common);

  std::set<std::string> names;
  for (const auto* sub : app.get_subcommands({})) names.insert(sub->get_name());

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = apply_config(std::move(args), names);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    try {
      app.parse(rev);
    } catch (const CLI::ParseError& err) {
      const int code = app.exit(err);
      return code == 0 ? kExitOk : kExitUsage;
    }
    CLI::App* sub = app.get_subcommands().front();
    Output out{sub->get_name(), resolved_config(sub)};
    if (!common.save_config.empty()) save_config(common.save_config, out);
    if (sub == g) return run_gen(gen, common, out);
    if (sub == st) return run_stats(stats, common, out);
    if (sub == m) return run_mc_cmd(mc, common, out);
    if (sub == e) {
      const std::size_t given = cut_opt->count() + mass_opt->count() + gamma_opt->count();
      if (given != 0 && given != 3) throw Error("--cut, --mass and --gamma go together");
      return run_equi(equi, common, out, given == 3);
    }
    if (sub == bv) return run_blocks_verify(blocks, common, out);
    return run_farey(farey, common, out);
  } catch (const std::exception& ex) {
    std::cerr << "pcw: error: " << ex.what() << '\n';
    return kExitUsage;
  }
}
