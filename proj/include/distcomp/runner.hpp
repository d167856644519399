#pragma once

// Experiment runner: resolves a configuration, dispatches to the library,
// and collects tables, bound comparisons and structured outputs.
//
// Determinism: every random stream derives from the config seed; tables hold
// preformatted cells (shortest round-trip decimals), and timings never enter
// a table, so identical configs give byte-identical CSV files.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "distcomp/applications.hpp"
#include "distcomp/covering.hpp"
#include "distcomp/error.hpp"
#include "distcomp/fidelity.hpp"
#include "distcomp/parallel.hpp"
#include "distcomp/prob.hpp"
#include "distcomp/serialize.hpp"
#include "distcomp/simulate.hpp"
#include "distcomp/types.hpp"
#include "distcomp/zero_error.hpp"

namespace distcomp::cli {

using io::Json;

enum class Command { info, typical, cover, simulate, derandomize, zero_error, rd, dilute, sweep };

inline constexpr std::array<std::pair<Command, std::string_view>, 9> kCommandNames{{
    {Command::info, "info"},
    {Command::typical, "typical"},
    {Command::cover, "cover"},
    {Command::simulate, "simulate"},
    {Command::derandomize, "derandomize"},
    {Command::zero_error, "zero-error"},
    {Command::rd, "rd"},
    {Command::dilute, "dilute"},
    {Command::sweep, "sweep"},
}};

inline std::string_view to_string(Command c) {
  for (const auto& [k, name] : kCommandNames)
    if (k == c) return name;
  return "unknown";
}

inline Command parse_command(std::string_view name) {
  for (const auto& [k, n] : kCommandNames)
    if (n == name) return k;
  fail(ErrorKind::invalid_input, "unknown command '" + std::string(name) + "'");
}

// Parameter defaults per command. Resolved configs always carry every key.
inline Json default_params(Command c) {
  const Json sim{{"n", 4}, {"delta", 2.0}, {"epsilon", kDefaultCoveringEpsilon}, {"max_retries", 20}};
  Json p = Json::object();
  switch (c) {
    case Command::info:
      break;
    case Command::typical:
      p = {{"n_values", {4, 8, 16, 32}}, {"delta_values", {1.0, 2.0, 3.0}}};
      break;
    case Command::cover:
      p = sim;
      p.update({{"m", 0}, {"nu", 0}});  // both positive: sized mode
      break;
    case Command::simulate:
      p = sim;
      p.update({{"fidelity", true}, {"strong", true}, {"samples", 2000}, {"transcripts", 8}});
      break;
    case Command::derandomize:
      p = sim;
      p.update({{"check", "automatic"}, {"fidelity", true}, {"samples", 2000}});
      break;
    case Command::zero_error:
      p = {{"restarts", 20}, {"max_iters", 50}, {"c", 0}, {"oracle_resolution", 0}, {"product", false}};
      break;
    case Command::rd:
      p = sim;
      p["n"] = 6;
      p.update({{"targets", Json::array()}, {"grid_resolution", 200}, {"code", false}});
      break;
    case Command::dilute:
      p = {{"epsilon", kDefaultCoveringEpsilon}, {"draws", 10000}, {"pair", false}};
      break;
    case Command::sweep:
      p = {{"command", "simulate"}, {"param", "n"}, {"values", {4, 5, 6, 7, 8, 9, 10, 11, 12}}};
      break;
  }
  return p;
}

inline Json resolve_params(Command c, const Json& given) {
  require(given.is_object(), "params must be an object");
  Json p = default_params(c);
  if (c == Command::sweep) {
    // Keys other than the sweep's own pass through to the swept command.
    const Command target = parse_command(given.value("command", p["command"].get<std::string>()));
    require(target != Command::sweep, "sweep cannot nest another sweep");
    const Json inner = default_params(target);
    for (const auto& [key, value] : given.items()) {
      require(p.contains(key) || inner.contains(key),
              "unknown parameter '" + key + "' for sweep over " + std::string(to_string(target)));
      p[key] = value;
    }
    require(inner.contains(p["param"].get<std::string>()),
            "sweep parameter '" + p["param"].get<std::string>() + "' is not a parameter of " +
                std::string(to_string(target)));
    return p;
  }
  for (const auto& [key, value] : given.items()) {
    require(p.contains(key), "unknown parameter '" + key + "' for " + std::string(to_string(c)));
    p[key] = value;
  }
  return p;
}

// Instance document: any of "source", "channel", "distortion", "target".
struct Instance {
  std::optional<Distribution> source;
  std::optional<Channel> channel;
  std::optional<DistortionSpec> distortion;
  std::optional<Distribution> target;

  static Instance from_json(const Json& j) {
    require(j.is_object(), "instance must be an object");
    Instance in;
    for (const auto& [key, value] : j.items()) {
      if (key == "source")
        in.source = io::distribution_from_json(value);
      else if (key == "channel")
        in.channel = io::channel_from_json(value);
      else if (key == "distortion")
        in.distortion = io::distortion_from_json(value);
      else if (key == "target")
        in.target = io::distribution_from_json(value);
      else if (key != "name" && key != "note")
        fail(ErrorKind::invalid_input, "unknown instance key '" + key + "'");
    }
    if (in.source && in.channel)
      require(in.source->size() == in.channel->input_size(), "instance: source and channel disagree on |X|");
    return in;
  }

  Json to_json() const {
    Json j = Json::object();
    if (source) j["source"] = io::to_json(*source);
    if (channel) j["channel"] = io::to_json(*channel);
    if (distortion) j["distortion"] = io::to_json(*distortion);
    if (target) j["target"] = io::to_json(*target);
    return j;
  }

  const Distribution& need_source() const {
    if (!source) fail(ErrorKind::invalid_input, "instance has no source");
    return *source;
  }
  const Channel& need_channel() const {
    if (!channel) fail(ErrorKind::invalid_input, "instance has no channel");
    return *channel;
  }
  const DistortionSpec& need_distortion() const {
    if (!distortion) fail(ErrorKind::invalid_input, "instance has no distortion");
    return *distortion;
  }
};

struct ExperimentConfig {
  Command command = Command::info;
  Instance instance;
  Json params = Json::object();  // as given; resolved on use
  EnumerationCaps caps{};
  std::uint64_t seed = 0;
  FidelityMode fidelity = FidelityMode::exact;
  int workers = 1;                // excluded from the hash: results do not depend on it
  std::filesystem::path out;      // excluded from the hash

  // Relative instance paths resolve against `base_dir`.
  static ExperimentConfig from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
    require(j.is_object(), "config must be an object");
    static constexpr std::array<std::string_view, 8> keys{"command", "instance", "params", "caps",
                                                          "seed",    "fidelity", "workers", "out"};
    for (const auto& [key, value] : j.items())
      require(std::find(keys.begin(), keys.end(), key) != keys.end(), "unknown config key '" + key + "'");
    return io::guarded("config", [&] {
      ExperimentConfig c;
      c.command = parse_command(j.at("command").get<std::string>());
      if (j.contains("instance")) {
        const Json& inst = j["instance"];
        if (inst.is_string()) {
          std::filesystem::path p = inst.get<std::string>();
          if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
          c.instance = Instance::from_json(io::read_json_file(p));
        } else {
          c.instance = Instance::from_json(inst);
        }
      }
      if (j.contains("params")) c.params = j["params"];
      if (j.contains("caps")) c.set_caps(j["caps"]);
      c.seed = j.value("seed", std::uint64_t{0});
      if (j.contains("fidelity")) c.fidelity = parse_fidelity(j["fidelity"].get<std::string>());
      c.workers = j.value("workers", 1);
      if (j.contains("out")) c.out = j["out"].get<std::string>();
      return c;
    });
  }

  static FidelityMode parse_fidelity(const std::string& s) {
    if (s == "exact") return FidelityMode::exact;
    if (s == "monte-carlo") return FidelityMode::monte_carlo;
    fail(ErrorKind::invalid_input, "fidelity must be 'exact' or 'monte-carlo'");
  }

  void set_caps(const Json& j) {
    require(j.is_object(), "caps must be an object");
    const Json known = io::to_json(EnumerationCaps{});
    for (const auto& [key, value] : j.items())
      require(known.contains(key), "unknown cap '" + key + "'");
    Json merged = io::to_json(caps);
    merged.update(j);
    caps = io::caps_from_json(merged);
  }

  Json resolved() const {
    return Json{{"command", to_string(command)},
                {"instance", instance.to_json()},
                {"params", resolve_params(command, params)},
                {"caps", io::to_json(caps)},
                {"seed", seed},
                {"fidelity", fidelity == FidelityMode::exact ? "exact" : "monte-carlo"}};
  }

  // FNV-1a over the canonical (key-sorted, compact) resolved document.
  std::string hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(resolved().dump())));
    return buf;
  }
};

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

inline std::string cell(double v) { return io::format_double(v); }
inline std::string cell(bool v) { return v ? "true" : "false"; }
inline std::string cell(const std::string& v) { return v; }
inline std::string cell(const char* v) { return v; }
template <typename T>
  requires std::is_integral_v<T>
inline std::string cell(T v) {
  return std::to_string(v);
}

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  template <typename... Ts>
  void add(const Ts&... values) {
    require(sizeof...(Ts) == columns.size(), "Table::add: wrong number of cells for " + name);
    rows.push_back({cell(values)...});
  }
};

// One inequality. `relation` is "<=", ">=", "<", ">" or "=" (within 1e-9);
// slack is positive when the inequality holds with room to spare.
struct BoundRow {
  std::string name;
  std::string reference;
  double lhs = 0.0;
  std::string relation;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = false;
};

inline constexpr double kBoundTolerance = 1e-9;

inline BoundRow make_bound(std::string name, std::string reference, double lhs, std::string relation,
                           double rhs) {
  BoundRow b{std::move(name), std::move(reference), lhs, std::move(relation), rhs, 0.0, false};
  if (b.relation == "<=" || b.relation == "<")
    b.slack = rhs - lhs;
  else if (b.relation == ">=" || b.relation == ">")
    b.slack = lhs - rhs;
  else if (b.relation == "=")
    b.slack = -std::abs(lhs - rhs);
  else
    fail(ErrorKind::invalid_input, "make_bound: unknown relation " + b.relation);
  const bool strict = b.relation == "<" || b.relation == ">";
  b.pass = strict ? b.slack > 0.0 : b.slack >= -kBoundTolerance;
  return b;
}

struct RunRecord {
  Json config;
  std::string config_hash;
  Json outputs = Json::object();
  std::vector<BoundRow> bounds;
  std::vector<Table> tables;
  std::vector<std::pair<std::string, Json>> documents;  // relative path -> structured output
  std::vector<std::string> transcripts;                 // one JSON record per line
  std::vector<std::pair<std::string, double>> timings;  // seconds

  void bound(std::string name, std::string reference, double lhs, std::string relation, double rhs) {
    bounds.push_back(make_bound(std::move(name), std::move(reference), lhs, std::move(relation), rhs));
  }

  const Table& table(std::string_view name) const {
    for (const auto& t : tables)
      if (t.name == name) return t;
    fail(ErrorKind::invalid_input, "record has no table '" + std::string(name) + "'");
  }

  bool all_bounds_pass() const {
    return std::all_of(bounds.begin(), bounds.end(), [](const BoundRow& b) { return b.pass; });
  }
};

inline Table compare_bounds(const RunRecord& record) {
  if (record.bounds.empty()) fail(ErrorKind::invalid_input, "compare_bounds: record carries no measurements");
  Table t{"bounds", {"name", "reference", "lhs", "relation", "rhs", "slack", "pass"}, {}};
  for (const auto& b : record.bounds) t.add(b.name, b.reference, b.lhs, b.relation, b.rhs, b.slack, b.pass);
  return t;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string to_csv(const Table& t, const std::string& config_hash) {
  std::string s = "# distcomp-csv v1 " + t.name + "\n# config " + config_hash + "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += csv_escape(cells[i]);
    }
    s += '\n';
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
  return s;
}

inline Json bounds_json(const std::vector<BoundRow>& bounds) {
  Json arr = Json::array();
  for (const auto& b : bounds)
    arr.push_back({{"name", b.name},
                   {"reference", b.reference},
                   {"lhs", io::number(b.lhs)},
                   {"relation", b.relation},
                   {"rhs", io::number(b.rhs)},
                   {"slack", io::number(b.slack)},
                   {"pass", b.pass}});
  return arr;
}

// <dir>/<table>.csv, bounds.csv, record.json, any documents and transcripts,
// and timings.json (the only nondeterministic file).
inline void write_outputs(const RunRecord& r, const std::filesystem::path& dir) {
  for (const auto& t : r.tables) io::write_text_file(dir / (t.name + ".csv"), to_csv(t, r.config_hash));
  if (!r.bounds.empty()) io::write_text_file(dir / "bounds.csv", to_csv(compare_bounds(r), r.config_hash));
  io::write_json_file(dir / "record.json", Json{{"config", r.config},
                                                {"config_hash", r.config_hash},
                                                {"outputs", r.outputs},
                                                {"bounds", bounds_json(r.bounds)}});
  for (const auto& [name, doc] : r.documents) io::write_json_file(dir / name, doc);
  if (!r.transcripts.empty()) {
    std::string lines;
    for (const auto& l : r.transcripts) lines += l + "\n";
    io::write_text_file(dir / "transcripts.jsonl", lines);
  }
  Json t = Json::object();
  for (const auto& [k, v] : r.timings) t[k] = v;
  io::write_json_file(dir / "timings.json", t);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

class Stopwatch {
 public:
  explicit Stopwatch(RunRecord& r) : record_(r), last_(std::chrono::steady_clock::now()) {}
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    record_.timings.emplace_back(stage, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }

 private:
  RunRecord& record_;
  std::chrono::steady_clock::time_point last_;
};

inline SimParams sim_params(const ExperimentConfig& cfg, const Json& p) {
  SimParams s;
  s.n = p.at("n").get<int>();
  s.delta = p.at("delta").get<double>();
  s.epsilon = p.at("epsilon").get<double>();
  s.max_retries = p.at("max_retries").get<std::size_t>();
  s.seed = cfg.seed;
  s.workers = cfg.workers;
  s.caps = cfg.caps;
  require(s.n >= 1 && s.n <= cfg.caps.max_n, "n must lie in [1, max_n]");
  return s;
}

inline FidelityOptions fidelity_options(const ExperimentConfig& cfg, const Json& p) {
  FidelityOptions o;
  o.mode = cfg.fidelity;
  o.samples = p.at("samples").get<std::size_t>();
  o.seed = cfg.seed;
  o.workers = cfg.workers;
  o.caps = cfg.caps;
  return o;
}

inline void run_info(const ExperimentConfig& cfg, const Json&, RunRecord& r) {
  const Distribution& p = cfg.instance.need_source();
  Table t{"info", {"quantity", "value"}, {}};
  const double hp = entropy(p);
  t.add("H(P)", hp);
  r.outputs["source_entropy"] = hp;
  if (cfg.instance.channel) {
    const Channel& w = *cfg.instance.channel;
    const double i = mutual_information(p, w);
    const double hc = conditional_entropy(p, w);
    const double hq = entropy(output_distribution(p, w));
    t.add("I(P;W)", i);
    t.add("H(W|P)", hc);
    t.add("H(PW)", hq);
    r.outputs["mutual_information"] = i;
    r.outputs["conditional_entropy"] = hc;
    r.outputs["output_entropy"] = hq;
    r.bound("I(P;W) >= 0", "mutual information", i, ">=", 0.0);
    r.bound("I(P;W) <= H(P)", "mutual information", i, "<=", hp);
    r.bound("I(P;W) <= log|Y|", "mutual information", i, "<=", std::log2(static_cast<double>(w.output_size())));
    r.bound("H(PW) = I(P;W) + H(W|P)", "chain rule", hq, "=", i + hc);
  } else {
    r.bound("H(P) <= log|X|", "entropy", hp, "<=", std::log2(static_cast<double>(p.size())));
  }
  r.tables.push_back(std::move(t));
}

inline void run_typical(const ExperimentConfig& cfg, const Json& prm, RunRecord& r) {
  const Distribution& p = cfg.instance.need_source();
  Table t{"typical", {"n", "delta", "chebyshev", "chernoff", "exact"}, {}};
  Json out = Json::array();
  for (int n : prm.at("n_values").get<std::vector<int>>()) {
    require(n >= 1, "typical: n must be positive");
    for (double delta : prm.at("delta_values").get<std::vector<double>>()) {
      const TypicalProbability tp = typical_probability_bounds(TypicalSpec(p, n, delta));
      t.add(n, delta, tp.chebyshev, tp.chernoff, tp.exact);
      out.push_back({{"n", n}, {"delta", delta}, {"chebyshev", io::number(tp.chebyshev)},
                     {"chernoff", io::number(tp.chernoff)}, {"exact", tp.exact}});
      const std::string tag = " (n=" + std::to_string(n) + ", delta=" + cell(delta) + ")";
      r.bound("typical mass >= Chebyshev" + tag, "typical set, Chebyshev", tp.exact, ">=", tp.chebyshev);
      r.bound("typical mass >= Chernoff" + tag, "typical set, Chernoff", tp.exact, ">=", tp.chernoff);
    }
  }
  r.outputs["typical"] = std::move(out);
  r.tables.push_back(std::move(t));
}

inline void run_cover(const ExperimentConfig& cfg, const Json& prm, RunRecord& r) {
  const Distribution& p = cfg.instance.need_source();
  const Channel& w = cfg.instance.need_channel();
  const SimParams sp = sim_params(cfg, prm);
  const std::vector<JointType> types = jointly_typical_types(p, w, sp.n, sp.delta, sp.caps);
  if (types.empty()) fail(ErrorKind::infeasible, "cover: no jointly typical joint types");
  const auto sized_m = prm.at("m").get<std::uint64_t>();
  const auto sized_n = prm.at("nu").get<std::uint64_t>();
  require((sized_m == 0) == (sized_n == 0), "cover: give both m and nu for sized mode, or neither");
  const bool sized = sized_m > 0;

  struct Row {
    CoveringSizes minimal;
    std::optional<CoveringFamily> family;
    CoveringCheck check;
    double size_r = 0, size_s = 0, cond_x = 0;
  };
  std::vector<Row> rows(types.size());
  // Same sizes and streams as the simulation builder, so the families agree.
  parallel_for(types.size(), cfg.workers, [&](std::size_t i) {
    const CoveringGeometry geo(types[i], sp.caps);
    Row& row = rows[i];
    row.minimal = required_covering_sizes(types[i], sp.epsilon);
    CoveringRequest req;
    req.n = next_power_of_two(row.minimal.n_min);
    if (sized) {
      req.mode = CoveringMode::sized;
      req.m = sized_m;
      req.n = sized_n;
    }
    req.seed = derive_seed(sp.seed, "simulate/type", i);
    req.max_retries = sp.max_retries;
    row.family.emplace(build_covering(geo, sp.epsilon, req, sp.caps));
    row.check = verify_covering(*row.family, geo);
    row.size_r = static_cast<double>(geo.x_class().size());
    row.size_s = static_cast<double>(geo.y_class().size());
    row.cond_x = geo.conditional_x_size();
  });

  Table t{"cover",
          {"index", "joint_type", "size_r", "size_s", "cond_x", "m_min", "n_min", "M", "N", "m_threshold",
           "nm_threshold", "retries", "min_margin_I", "margin_II", "passed", "failure_bound"},
          {}};
  for (std::size_t i = 0; i < types.size(); ++i) {
    const Row& row = rows[i];
    const CoveringFamily& f = *row.family;
    const CoveringSizes at = required_covering_sizes(types[i], sp.epsilon, BigInt(f.nu_count()));
    const double m = static_cast<double>(f.words_per_nu());
    const double nn = static_cast<double>(f.nu_count());
    const double margin_i = *std::min_element(row.check.condition_I_margin.begin(), row.check.condition_I_margin.end());
    const double fb = covering_failure_bound(types[i], sp.epsilon, m, nn);
    const std::string jt = io::compact(types[i]);
    t.add(i, jt, row.size_r, row.size_s, row.cond_x, row.minimal.m_min.convert_to<std::uint64_t>(),
          row.minimal.n_min.convert_to<std::uint64_t>(), f.words_per_nu(), f.nu_count(), at.m_threshold,
          at.nm_threshold, f.retries, margin_i, row.check.condition_II_margin, row.check.passed, fb);
    const std::string tag = " [" + jt + "]";
    if (!sized) {
      r.bound("M above covering threshold" + tag, "covering sizes", m, ">", at.m_threshold);
      r.bound("NM above covering threshold" + tag, "covering sizes", nn * m, ">", at.nm_threshold);
    }
    r.bound("per-index condition margin" + tag, "covering verification", margin_i, ">=", 0.0);
    r.bound("joint condition margin" + tag, "covering verification", row.check.condition_II_margin, ">=", 0.0);
    r.bound("union failure bound < 1" + tag, "sampling estimate", fb, "<", 1.0);
    for (const auto& [label, s] : {std::pair{"R", type_class_sandwich(types[i].x_marginal())},
                                   std::pair{"S", type_class_sandwich(types[i].y_marginal())},
                                   std::pair{"T|R", conditional_class_sandwich(types[i])}}) {
      r.bound(std::string("log class size ") + label + " lower" + tag, "type class sandwich", s.lower, "<=", s.value);
      r.bound(std::string("log class size ") + label + " upper" + tag, "type class sandwich", s.value, "<=", s.upper);
    }
    char name[40];
    std::snprintf(name, sizeof name, "families/family_%04zu.json", i);
    r.documents.emplace_back(name, io::to_json(f));
  }
  r.outputs["types"] = types.size();
  r.tables.push_back(std::move(t));
}

inline Table simulate_table() {
  return Table{"simulate",
               {"n", "delta", "epsilon", "types", "nu_count", "max_m", "log2_max_m", "log2_n",
                "announcement_bits", "rate", "cr_rate", "mutual_information", "conditional_entropy",
                "output_entropy", "strong", "average", "atypical_mass", "global", "local", "letterwise",
                "empirical"},
               {}};
}

inline void run_simulate(const ExperimentConfig& cfg, const Json& prm, RunRecord& r) {
  const Distribution& p = cfg.instance.need_source();
  const Channel& w = cfg.instance.need_channel();
  const SimParams sp = sim_params(cfg, prm);
  Stopwatch sw(r);
  const SimCode code = build_sim_code(p, w, sp);
  sw.lap("build");
  const SimAccounting a = accounting(code);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::optional<FidelityReport> fid;
  if (prm.at("fidelity").get<bool>()) {
    fid = measure_fidelity(p, w, sp.n, sim_code_law(code), fidelity_options(cfg, prm));
    sw.lap("fidelity");
  }
  std::optional<SimFidelity> strong;
  if (prm.at("strong").get<bool>()) {
    strong = evaluate_sim_fidelity(code);
    sw.lap("strong");
  }

  std::uint64_t max_m = 1;
  for (const auto& f : code.families()) max_m = std::max(max_m, f.words_per_nu());
  Table t = simulate_table();
  t.add(sp.n, sp.delta, sp.epsilon, a.type_count, code.nu_count(), max_m, a.log2_max_m, a.log2_n,
        a.announcement_bits, a.rate, a.cr_rate, a.mutual_information, a.conditional_entropy, a.output_entropy,
        strong ? strong->strong : nan, strong ? strong->average : nan, strong ? strong->atypical_mass : nan,
        fid ? fid->global_err : nan, fid ? fid->local_err : nan, fid ? fid->letterwise_source_err : nan,
        fid ? fid->empirical_joint_err : nan);
  r.tables.push_back(std::move(t));

  Table fams{"families", {"index", "joint_type", "M", "N", "retries"}, {}};
  for (std::size_t i = 0; i < code.families().size(); ++i) {
    const auto& f = code.families()[i];
    fams.add(i, io::compact(f.type()), f.words_per_nu(), f.nu_count(), f.retries);
  }
  r.tables.push_back(std::move(fams));

  r.outputs["accounting"] = {{"rate", a.rate},
                             {"cr_rate", a.cr_rate},
                             {"log2_max_m", a.log2_max_m},
                             {"log2_n", a.log2_n},
                             {"announcement_bits", a.announcement_bits},
                             {"mutual_information", a.mutual_information},
                             {"conditional_entropy", a.conditional_entropy},
                             {"output_entropy", a.output_entropy},
                             {"rate_slack", a.rate_slack},
                             {"sum_slack", a.sum_slack},
                             {"types", a.type_count}};
  if (fid) r.outputs["fidelity"] = io::to_json(*fid);
  if (strong)
    r.outputs["strong"] = {{"strong", strong->strong},
                           {"average", strong->average},
                           {"atypical_mass", strong->atypical_mass},
                           {"typical_words", strong->typical_words},
                           {"worst_word", strong->worst_word}};

  r.bound("rate >= I(P;W)", "converse, rate", a.rate, ">=", a.mutual_information);
  r.bound("rate + cr_rate >= H(PW)", "converse, rate plus randomness", a.rate + a.cr_rate, ">=", a.output_entropy);
  if (fid && fid->global_err <= 0.5) {
    const double f = lower_bound_penalty(fid->global_err, w.input_size(), w.output_size());
    r.bound("rate >= I(P;W) - f(lambda)", "single-letter lower bound", a.rate, ">=", a.mutual_information - f);
  }
  if (strong) {
    r.bound("average <= strong + atypical", "fidelity decomposition", strong->average, "<=",
            strong->strong + strong->atypical_mass);
    const double xs = static_cast<double>(p.size());
    r.bound("atypical mass <= Chebyshev", "typical set, Chebyshev", strong->atypical_mass, "<=",
            xs / (sp.delta * sp.delta));
    r.bound("atypical mass <= Chernoff", "typical set, Chernoff", strong->atypical_mass, "<=",
            xs * std::exp2(-sp.delta * sp.delta));
  }

  const std::size_t count = prm.at("transcripts").get<std::size_t>();
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng(derive_seed(cfg.seed, "cli/transcript", k));
    Word x(static_cast<std::size_t>(sp.n));
    for (int& s : x) s = static_cast<int>(rng.categorical(p.probs()));
    const std::uint64_t nu = rng.uniform_index(code.nu_count());
    r.transcripts.push_back(io::to_json(run_protocol(code, x, nu, derive_seed(cfg.seed, "cli/encode", k))).dump());
  }
  for (auto& [name, doc] : io::sim_code_documents(code)) r.documents.emplace_back("code/" + name, std::move(doc));
}

inline void run_derandomize(const ExperimentConfig& cfg, const Json& prm, RunRecord& r) {
  const Distribution& p = cfg.instance.need_source();
  const Channel& w = cfg.instance.need_channel();
  const SimParams sp = sim_params(cfg, prm);
  Stopwatch sw(r);
  auto code = std::make_shared<const SimCode>(build_sim_code(p, w, sp));
  sw.lap("build");
  DerandomizeOptions opt;
  opt.epsilon = sp.epsilon;
  opt.seed = cfg.seed;
  opt.max_retries = sp.max_retries;
  opt.workers = cfg.workers;
  const std::string check = prm.at("check").get<std::string>();
  if (check == "exact")
    opt.check = DerandomizeCheck::exact;
  else if (check == "declared")
    opt.check = DerandomizeCheck::declared;
  else
    require(check == "automatic", "derandomize: check must be automatic, exact or declared");
  const DerandomizedCode d = derandomize(code, opt);
  sw.lap("derandomize");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::optional<FidelityReport> fid;
  if (prm.at("fidelity").get<bool>()) {
    fid = measure_fidelity(p, w, sp.n, derandomized_law(d), fidelity_options(cfg, prm));
    sw.lap("fidelity");
  }
  const std::uint64_t q_formula =
      derandomization_sample_count(sp.n, w.input_size(), w.output_size(), sp.epsilon, d.u);

  Table t{"derandomize",
          {"n", "nu_count", "q", "q_formula", "u", "index_bits", "index_overhead", "verified", "retries",
           "corridor_margin", "letterwise_error", "min_marginal_ratio", "failure_bound", "global", "local",
           "letterwise_source"},
          {}};
  t.add(sp.n, code->nu_count(), d.q, q_formula, d.u, d.index_bits(), d.index_overhead(), d.verified, d.retries,
        d.corridor_margin, d.letterwise_error, d.min_marginal_ratio, d.failure_bound, fid ? fid->global_err : nan,
        fid ? fid->local_err : nan, fid ? fid->letterwise_source_err : nan);
  r.tables.push_back(std::move(t));
  r.outputs["derandomize"] = {{"q", d.q},
                              {"selected", d.selected},
                              {"verified", d.verified},
                              {"letterwise_error", io::number(d.letterwise_error)},
                              {"corridor_margin", io::number(d.corridor_margin)},
                              {"failure_bound", io::number(d.failure_bound)}};
  if (fid) r.outputs["fidelity"] = io::to_json(*fid);

  if (d.verified) {
    r.bound("letterwise error <= 3 epsilon", "derandomized code", d.letterwise_error, "<=", 3.0 * sp.epsilon);
    r.bound("marginal corridor margin", "derandomized code", d.corridor_margin, ">=", 0.0);
  }
  if (code->nu_count() > 1) {
    r.bound("Q at the sample-count formula", "derandomized code", static_cast<double>(d.q), "=",
            static_cast<double>(q_formula));
    r.bound("union failure bound < 1", "derandomized code", d.failure_bound, "<", 1.0);
  }
  if (fid) r.bound("local error <= 3 epsilon", "derandomized code", fid->local_err, "<=", 3.0 * sp.epsilon);
}

inline void add_factorization_tables(const std::string& prefix, const Factorization& f, RunRecord& r) {
  Table e{prefix + "_e", {"x", "c", "value"}, {}};
  for (Eigen::Index x = 0; x < f.e.rows(); ++x)
    for (Eigen::Index c = 0; c < f.e.cols(); ++c) e.add(x, c, f.e(x, c));
  Table d{prefix + "_d", {"c", "y", "value"}, {}};
  for (Eigen::Index c = 0; c < f.d.rows(); ++c)
    for (Eigen::Index y = 0; y < f.d.cols(); ++y) d.add(c, y, f.d(c, y));
  Table mu{prefix + "_mu", {"c", "value"}, {}};
  for (std::size_t c = 0; c < f.mu.size(); ++c) mu.add(c, f.mu[c]);
  Table tr{prefix + "_trace", {"iteration", "objective"}, {}};
  for (std::size_t i = 0; i < f.trace.size(); ++i) tr.add(i, f.trace[i]);
  r.tables.push_back(std::move(e));
  r.tables.push_back(std::move(d));
  r.tables.push_back(std::move(mu));
  r.tables.push_back(std::move(tr));
}

inline void run_zero_error(const ExperimentConfig& cfg, const Json& prm, RunRecord& r) {
  const Distribution& p = cfg.instance.need_source();
  const Channel& w = cfg.instance.need_channel();
  const int xs = static_cast<int>(w.input_size());
  const int ys = static_cast<int>(w.output_size());
  const int c_bound = intermediate_size_bound(xs, ys, SizeBoundVariant::theorem9);
  const int c_given = prm.at("c").get<int>();
  const ZeroErrorInstance inst(p, w, c_given > 0 ? c_given : c_bound);
  AlternateOptions opt;
  opt.seed = cfg.seed;
  opt.restarts = prm.at("restarts").get<int>();
  opt.max_iters = prm.at("max_iters").get<int>();
  opt.workers = cfg.workers;
  Stopwatch sw(r);
  const Factorization f = alternate(inst, opt);
  sw.lap("alternate");
  const FeasibilityCheck fc = feasible_check(w, f.e, f.d);
  const SupportStats ss = support_stats(f.e);
  const double i = mutual_information(p, w);
  const double hp = entropy(p);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::optional<OracleResult> oracle;
  if (const int res = prm.at("oracle_resolution").get<int>(); res > 0) {
    oracle = brute_force_oracle(inst, res);
    sw.lap("oracle");
  }

  Table t{"zero_error",
          {"objective", "mutual_information", "source_entropy", "c", "restart", "d_step_converged", "residual",
           "max_row_support", "used_columns", "oracle_value", "oracle_accuracy", "oracle_points"},
          {}};
  t.add(f.objective, i, hp, inst.c_max, f.restart, f.d_step_converged, fc.residual, ss.max_row_support,
        ss.used_columns, oracle ? oracle->best.objective : nan, oracle ? oracle->accuracy : nan,
        oracle ? oracle->grid_points : std::uint64_t{0});
  r.tables.push_back(std::move(t));
  add_factorization_tables("zero_error", f, r);
  r.outputs["factorization"] = io::to_json(f);

  r.bound("I(P;W) <= objective", "entropy sandwich", i, "<=", f.objective);
  r.bound("objective <= H(P)", "entropy sandwich", f.objective, "<=", hp);
  r.bound("factorization residual", "exact factorization", fc.residual, "<=", kFactorizationTolerance);
  r.bound("row support <= |Y|", "extreme points", ss.max_row_support, "<=", ys);
  r.bound("used symbols <= |X||Y| - 1", "extreme points", ss.used_columns, "<=", c_bound);
  if (oracle) {
    r.outputs["oracle"] = {{"objective", oracle->best.objective},
                           {"accuracy", oracle->accuracy},
                           {"grid_points", oracle->grid_points},
                           {"feasible_points", oracle->feasible_points}};
    r.bound("objective <= oracle + accuracy + 1e-4", "grid certification", f.objective, "<=",
            oracle->best.objective + oracle->accuracy + 1e-4);
  }

  if (prm.at("product").get<bool>()) {
    auto [p2, w2] = product_instance(p, w);
    const int c2 = c_given > 0 ? c_given * c_given
                               : intermediate_size_bound(static_cast<int>(w2.input_size()),
                                                         static_cast<int>(w2.output_size()), SizeBoundVariant::theorem9);
    AlternateOptions opt2 = opt;
    opt2.seed = derive_seed(cfg.seed, "cli/product");
    const Factorization f2 = alternate(ZeroErrorInstance(p2, w2, c2), opt2);
    sw.lap("product");
    Table g{"gamma_bracket", {"lower", "s1", "s2_half", "upper"}, {}};
    const double half = f2.objective / 2.0;
    g.add(i, f.objective, half, std::min(f.objective, half));
    r.tables.push_back(std::move(g));
    r.outputs["product"] = {{"objective", f2.objective}, {"c", c2}};
    r.bound("I(P;W) <= S(2)/2", "entropy sandwich, pairs", i, "<=", half);
    r.bound("S(2)/2 <= S(1)", "subadditivity", half, "<=", f.objective + 1e-6);
  }
}

inline void run_rd(const ExperimentConfig& cfg, const Json& prm, RunRecord& r) {
  const Distribution& p = cfg.instance.need_source();
  const DistortionSpec& spec = cfg.instance.need_distortion();
  spec.validate(p.size(), spec.y_size());
  std::vector<double> targets = prm.at("targets").get<std::vector<double>>();
  if (targets.empty()) targets.push_back(spec.target);
  Stopwatch sw(r);
  const std::vector<RdResult> curve = rd_curve(p, spec, targets, cfg.workers);
  sw.lap("curve");

  const int res = prm.at("grid_resolution").get<int>();
  const bool certify = res > 0 && p.size() * spec.y_size() <= 6;
  std::vector<double> grid(targets.size(), std::numeric_limits<double>::quiet_NaN());
  if (certify) {
    parallel_for(targets.size(), cfg.workers, [&](std::size_t k) {
      DistortionSpec s = spec;
      s.target = targets[k];
      grid[k] = rd_grid_oracle(p, s, res).rate;
    });
    sw.lap("grid");
  }

  Table t{"rd", {"d", "R", "slack", "certified", "distortion", "slope", "grid_R"}, {}};
  Json out = Json::array();
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const RdResult& c = curve[k];
    const double slack = grid[k] - c.rate;
    const bool certified = certify && std::abs(slack) <= 1e-4;
    t.add(targets[k], c.rate, slack, certified, c.distortion, c.slope, grid[k]);
    out.push_back({{"d", targets[k]}, {"R", c.rate}, {"distortion", c.distortion}, {"channel", c.channel.rows()}});
    const std::string tag = " (d=" + cell(targets[k]) + ")";
    r.bound("distortion <= target" + tag, "rate-distortion", c.distortion, "<=", targets[k]);
    if (certify) r.bound("R within 1e-4 of grid" + tag, "grid certification", std::abs(slack), "<=", 1e-4);
  }
  r.tables.push_back(std::move(t));
  r.outputs["curve"] = std::move(out);

  // Shape checks along the sorted targets.
  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const std::size_t a = order[k - 1], b = order[k];
    if (targets[b] <= targets[a]) continue;
    r.bound("R nonincreasing (d=" + cell(targets[b]) + ")", "rate-distortion", curve[b].rate, "<=",
            curve[a].rate + 1e-9);
    if (k + 1 < order.size()) {
      const std::size_t c = order[k + 1];
      if (targets[c] <= targets[b]) continue;
      const double s1 = (curve[b].rate - curve[a].rate) / (targets[b] - targets[a]);
      const double s2 = (curve[c].rate - curve[b].rate) / (targets[c] - targets[b]);
      r.bound("R convex (d=" + cell(targets[b]) + ")", "rate-distortion", s1, "<=", s2 + 1e-6);
    }
  }

  if (prm.at("code").get<bool>()) {
    const SimParams sp = sim_params(cfg, prm);
    const RdCode code = rd_code_via_simulation(p, spec, sp);
    sw.lap("code");
    Table c{"rd_code",
            {"n", "target", "selected_nu", "selected_distortion", "mean_distortion", "deterministic_distortion",
             "slack", "rate", "single_letter_rate", "global_err"},
            {}};
    c.add(sp.n, spec.target, code.selected_nu, code.selected_distortion, code.mean_distortion,
          code.deterministic_distortion, code.slack, code.rate, code.single_letter.rate, code.global_err);
    r.tables.push_back(std::move(c));
    r.outputs["code"] = {{"selected_nu", code.selected_nu},
                         {"selected_distortion", code.selected_distortion},
                         {"deterministic_distortion", code.deterministic_distortion},
                         {"slack", code.slack},
                         {"rate", code.rate}};
    r.bound("selected distortion <= target + slack", "rate-distortion code", code.selected_distortion, "<=",
            spec.target + code.slack);
    r.bound("selected distortion <= mean over nu", "rate-distortion code", code.selected_distortion, "<=",
            code.mean_distortion + 1e-12);
    r.bound("deterministic <= selected", "rate-distortion code", code.deterministic_distortion, "<=",
            code.selected_distortion + 1e-12);
    r.bound("rate >= R(d)", "rate-distortion converse", code.rate, ">=", code.single_letter.rate - 1e-6);
  }
}

inline void run_dilute(const ExperimentConfig& cfg, const Json& prm, RunRecord& r) {
  const Distribution& target = cfg.instance.target ? *cfg.instance.target : cfg.instance.need_source();
  const double eps = prm.at("epsilon").get<double>();
  const DilutionPlan plan = build_dilution(target, eps);
  const std::size_t draws = prm.at("draws").get<std::size_t>();

  const std::vector<double> realized = plan.realized();
  std::vector<double> counts(target.size(), 0.0);
  if (draws > 0) {
    UniformStream stream(cfg.seed, plan.total_uniform_size, draws);
    for (std::size_t i = 0; i < draws; ++i) counts[realize_from_uniform(plan, stream)] += 1.0;
    for (double& c : counts) c /= static_cast<double>(draws);
  }
  double sigma = 0.0;
  for (double v : realized) sigma += 0.5 * std::sqrt(v * (1.0 - v) / static_cast<double>(std::max<std::size_t>(draws, 1)));
  const double empirical_tv = draws > 0 ? tv_distance(std::span<const double>(counts), realized) : 0.0;
  const double mixture_tv = tv_distance(target.probs(), std::span<const double>(plan.bucket_mixture()));

  Table t{"dilution",
          {"k", "epsilon", "buckets", "q_inf", "helper_size", "total_uniform_size", "mixture_tv", "realized_tv",
           "bound", "draws", "empirical_tv", "sigma"},
          {}};
  t.add(plan.k, eps, plan.buckets.size(), plan.infinity.mass, plan.helper_size, plan.total_uniform_size,
        mixture_tv, plan.realized_tv(), plan.error_bound(), draws, empirical_tv, sigma);
  r.tables.push_back(std::move(t));
  Table b{"dilution_buckets", {"index", "size", "mass", "weight", "slots"}, {}};
  for (const auto& bk : plan.buckets) b.add(bk.index, bk.members.size(), bk.mass, bk.weight, bk.slots);
  if (!plan.infinity.members.empty()) b.add(0, plan.infinity.members.size(), plan.infinity.mass, 0.0, 0);
  r.tables.push_back(std::move(b));
  r.documents.emplace_back("plan.json", io::to_json(plan));
  r.outputs["realized_tv"] = plan.realized_tv();
  r.outputs["empirical_tv"] = empirical_tv;

  r.bound("bucket mixture TV <= 2 epsilon", "dilution", mixture_tv, "<=", 2.0 * eps);
  r.bound("realized TV <= 2 epsilon + 1/k", "dilution", plan.realized_tv(), "<=", plan.error_bound());
  r.bound("q_inf <= epsilon", "dilution", plan.infinity.mass, "<=", eps);
  if (draws > 0) r.bound("empirical TV <= 3 sigma", "dilution sampling", empirical_tv, "<=", 3.0 * sigma);

  if (prm.at("pair").get<bool>()) {
    const Channel& w = cfg.instance.need_channel();
    AlternateOptions opt;
    opt.seed = cfg.seed;
    opt.workers = cfg.workers;
    const Factorization f = alternate(ZeroErrorInstance::with_default_size(target, w), opt);
    const PairSimulation ps = simulate_pair_from_shared(target, w, f, eps);
    Table pt{"pair", {"mixture_tv", "joint_tv", "shared_bits", "conjectured_rate", "conjectural"}, {}};
    pt.add(ps.mixture_tv, ps.joint_tv, ps.shared_bits, ps.conjectured_rate, ps.conjectural);
    r.tables.push_back(std::move(pt));
    r.bound("pair joint TV <= 2 epsilon + 1/k", "dilution", ps.joint_tv, "<=",
            2.0 * eps + 1.0 / dilution_k(f.mu.size(), eps));
  }
}

}  // namespace detail

inline RunRecord run(const ExperimentConfig& cfg);

namespace detail {

inline void run_sweep(const ExperimentConfig& cfg, const Json& prm, RunRecord& r) {
  const Command target = parse_command(prm.at("command").get<std::string>());
  const std::string param = prm.at("param").get<std::string>();
  const Json values = prm.at("values");
  require(values.is_array() && !values.empty(), "sweep: values must be a nonempty list");
  Json base = prm;
  base.erase("command");
  base.erase("param");
  base.erase("values");

  Table t;
  std::vector<std::pair<double, double>> rates;  // (value, rate) for simulate sweeps
  for (const Json& v : values) {
    ExperimentConfig sub = cfg;
    sub.command = target;
    sub.params = base;
    sub.params[param] = v;
    sub.out.clear();
    const RunRecord rec = run(sub);
    const Table& first = rec.tables.front();
    if (t.columns.empty()) {
      t.name = "sweep_" + first.name;
      t.columns.push_back("sweep_" + param);
      t.columns.insert(t.columns.end(), first.columns.begin(), first.columns.end());
    }
    const std::string vs = v.is_number_float() ? cell(v.get<double>()) : v.dump();
    for (const auto& row : first.rows) {
      std::vector<std::string> cells{vs};
      cells.insert(cells.end(), row.begin(), row.end());
      t.rows.push_back(std::move(cells));
    }
    for (BoundRow b : rec.bounds) {
      b.name = param + "=" + vs + ": " + b.name;
      r.bounds.push_back(std::move(b));
    }
    for (const auto& [stage, secs] : rec.timings) r.timings.emplace_back(param + "=" + vs + "/" + stage, secs);
    r.outputs["runs"].push_back({{"value", v}, {"config_hash", rec.config_hash}, {"outputs", rec.outputs}});
    if (target == Command::simulate && v.is_number())
      rates.emplace_back(v.get<double>(), rec.outputs.at("accounting").at("rate").get<double>());
  }
  r.tables.push_back(std::move(t));
  if (param == "n") {
    for (std::size_t k = 1; k < rates.size(); ++k)
      if (rates[k].first > rates[k - 1].first)
        r.bound("rate nonincreasing (n=" + cell(rates[k].first) + ")", "rate trend", rates[k].second, "<=",
                rates[k - 1].second + 1e-12);
  }
}

}  // namespace detail

inline RunRecord run(const ExperimentConfig& cfg) {
  require(cfg.workers >= 1, "workers must be positive");
  RunRecord r;
  r.config = cfg.resolved();
  r.config_hash = cfg.hash();
  const Json prm = r.config.at("params");
  const auto start = std::chrono::steady_clock::now();
  io::guarded("params", [&] {
    switch (cfg.command) {
      case Command::info: detail::run_info(cfg, prm, r); break;
      case Command::typical: detail::run_typical(cfg, prm, r); break;
      case Command::cover: detail::run_cover(cfg, prm, r); break;
      case Command::simulate: detail::run_simulate(cfg, prm, r); break;
      case Command::derandomize: detail::run_derandomize(cfg, prm, r); break;
      case Command::zero_error: detail::run_zero_error(cfg, prm, r); break;
      case Command::rd: detail::run_rd(cfg, prm, r); break;
      case Command::dilute: detail::run_dilute(cfg, prm, r); break;
      case Command::sweep: detail::run_sweep(cfg, prm, r); break;
    }
    return 0;
  });
  r.timings.emplace_back("total", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return r;
}

}  // namespace distcomp::cli
