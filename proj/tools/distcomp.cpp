// Command-line front end for the experiment runner.
//
//   distcomp <command> [key=value ...] [--instance PATH] [--config PATH] ...
//   distcomp sweep simulate n=4..12 --instance data/bsc_025.json
//
// Tables go to stdout as CSV; --out writes them, plus structured outputs,
// into a directory. Errors print one line "distcomp: error=<kind> reason=..."
// and exit with 2 (invalid input), 3 (cap exceeded), 4 (infeasible) or
// 5 (retries exhausted).

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "distcomp/runner.hpp"

namespace {

using distcomp::cli::Json;

// "4..12" -> [4, ..., 12].
std::optional<Json> parse_range(const std::string& v) {
  const auto dots = v.find("..");
  if (dots == std::string::npos) return std::nullopt;
  try {
    std::size_t used = 0;
    const long lo = std::stol(v.substr(0, dots), &used);
    if (used != dots) return std::nullopt;
    const std::string rest = v.substr(dots + 2);
    const long hi = std::stol(rest, &used);
    if (used != rest.size() || hi < lo || hi - lo > 100000) return std::nullopt;
    Json out = Json::array();
    for (long k = lo; k <= hi; ++k) out.push_back(k);
    return out;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// JSON literal when it parses, plain string otherwise.
Json parse_value(const std::string& v) {
  if (auto r = parse_range(v)) return *r;
  Json j = Json::parse(v, nullptr, false);
  if (j.is_discarded()) return v;
  return j;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Distributed compression toolkit: types, coverings, channel simulation, zero-error codes."};
  std::vector<std::string> positional;
  std::string config_path, instance_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool exact = false, monte_carlo = false, quiet = false;
  std::vector<std::string> cap_overrides;

  app.add_option("args", positional, "command, then key=value parameters (sweep: target command and key=lo..hi)");
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--instance", instance_path, "instance file (JSON), overrides the config's");
  app.add_option("--seed", seed, "master seed (default 0)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  auto* ex = app.add_flag("--exact", exact, "exact fidelity evaluation (default)");
  auto* mc = app.add_flag("--monte-carlo", monte_carlo, "Monte Carlo fidelity evaluation");
  ex->excludes(mc);
  app.add_option("--cap-override", cap_overrides, "enumeration cap, KEY=VALUE (repeatable)");
  app.add_flag("--quiet", quiet, "do not print tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "distcomp: error=invalid-input reason=" << e.what() << "\n";
    return distcomp::exit_code(distcomp::ErrorKind::invalid_input);
  }

  try {
    Json doc = Json::object();
    std::filesystem::path base_dir;
    if (!config_path.empty()) {
      doc = distcomp::io::read_json_file(config_path);
      distcomp::require(doc.is_object(), "config must be an object");
      base_dir = std::filesystem::path(config_path).parent_path();
    }
    if (!doc.contains("params")) doc["params"] = Json::object();

    std::size_t i = 0;
    if (i < positional.size() && positional[i].find('=') == std::string::npos) doc["command"] = positional[i++];
    distcomp::require(doc.contains("command"), "no command given");
    const bool sweep = doc["command"] == "sweep";
    if (sweep && i < positional.size() && positional[i].find('=') == std::string::npos)
      doc["params"]["command"] = positional[i++];
    for (; i < positional.size(); ++i) {
      const std::string& tok = positional[i];
      const auto eq = tok.find('=');
      distcomp::require(eq != std::string::npos && eq > 0, "expected key=value, got '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string value = tok.substr(eq + 1);
      if (sweep && parse_range(value)) {
        doc["params"]["param"] = key;
        doc["params"]["values"] = *parse_range(value);
      } else {
        doc["params"][key] = parse_value(value);
      }
    }
    if (!instance_path.empty()) {
      doc["instance"] = instance_path;
      base_dir.clear();
    }
    if (seed) doc["seed"] = *seed;
    if (workers) doc["workers"] = *workers;
    if (monte_carlo) doc["fidelity"] = "monte-carlo";
    if (exact) doc["fidelity"] = "exact";
    if (!out_dir.empty()) doc["out"] = out_dir;
    for (const auto& kv : cap_overrides) {
      const auto eq = kv.find('=');
      distcomp::require(eq != std::string::npos, "--cap-override expects KEY=VALUE, got '" + kv + "'");
      std::uint64_t v = 0;
      try {
        std::size_t used = 0;
        v = std::stoull(kv.substr(eq + 1), &used);
        distcomp::require(used == kv.size() - eq - 1, "bad cap value");
      } catch (const std::logic_error&) {
        distcomp::fail(distcomp::ErrorKind::invalid_input, "--cap-override: '" + kv + "' is not KEY=integer");
      }
      doc["caps"][kv.substr(0, eq)] = v;
    }

    const auto cfg = distcomp::cli::ExperimentConfig::from_json(doc, base_dir);
    const auto record = distcomp::cli::run(cfg);
    if (!cfg.out.empty()) distcomp::cli::write_outputs(record, cfg.out);
    if (!quiet) {
      for (const auto& t : record.tables) std::cout << distcomp::cli::to_csv(t, record.config_hash) << "\n";
      if (!record.bounds.empty())
        std::cout << distcomp::cli::to_csv(distcomp::cli::compare_bounds(record), record.config_hash);
    }
    std::size_t passed = 0;
    for (const auto& b : record.bounds) passed += b.pass;
    std::cerr << "distcomp: config=" << record.config_hash << " bounds_passed=" << passed << "/"
              << record.bounds.size() << "\n";
    return 0;
  } catch (const distcomp::Error& e) {
    std::cerr << "distcomp: error=" << distcomp::to_string(e.kind()) << " reason=" << e.what() << "\n";
    return distcomp::exit_code(e.kind());
  } catch (const Json::exception& e) {
    std::cerr << "distcomp: error=invalid-input reason=" << e.what() << "\n";
    return distcomp::exit_code(distcomp::ErrorKind::invalid_input);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "distcomp: error=invalid-input reason=" << e.what() << "\n";
    return distcomp::exit_code(distcomp::ErrorKind::invalid_input);
  }
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
