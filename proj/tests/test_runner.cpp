#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "distcomp/runner.hpp"

using namespace distcomp;
using namespace distcomp::cli;

namespace {

const std::filesystem::path kData = DISTCOMP_DATA_DIR;

ExperimentConfig config(const std::string& text) {
  return ExperimentConfig::from_json(Json::parse(text), kData);
}

Json bsc_instance() { return io::read_json_file(kData / "bsc_025.json"); }

std::string all_csv(const RunRecord& r) {
  std::string s;
  for (const auto& t : r.tables) s += to_csv(t, r.config_hash);
  if (!r.bounds.empty()) s += to_csv(compare_bounds(r), r.config_hash);
  return s;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::invalid_input;
}

int cli_exit(const std::string& args) {
  const std::string cmd = std::string(DISTCOMP_CLI_PATH) + " " + args + " --quiet > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, HashIgnoresWorkersOutAndKeyOrder) {
  const auto a = config(R"({"command":"info","instance":"bsc_025.json","seed":3})");
  const auto b = config(R"({"seed":3,"workers":4,"out":"/tmp/x","instance":"bsc_025.json","command":"info"})");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  const auto c = config(R"({"command":"info","instance":"bsc_025.json","seed":4})");
  EXPECT_NE(a.hash(), c.hash());
}

TEST(Config, DefaultsAreExplicitInHash) {
  const auto a = config(R"({"command":"simulate","instance":"bsc_025.json"})");
  const auto b = config(R"({"command":"simulate","instance":"bsc_025.json","params":{"n":4,"delta":2.0}})");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.resolved()["params"]["samples"], 2000);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_EQ(kind_of([] { config(R"({"command":"info","colour":1})"); }), ErrorKind::invalid_input);
  EXPECT_EQ(kind_of([] { config(R"({"command":"frobnicate"})"); }), ErrorKind::invalid_input);
  EXPECT_EQ(kind_of([] { config(R"({"command":"info","caps":{"bogus":3}})"); }), ErrorKind::invalid_input);
  const auto c = config(R"({"command":"simulate","instance":"bsc_025.json","params":{"nn":3}})");
  EXPECT_EQ(kind_of([&] { c.resolved(); }), ErrorKind::invalid_input);
  EXPECT_EQ(kind_of([] { Instance::from_json(Json{{"sorce", 1}}); }), ErrorKind::invalid_input);
}

TEST(Config, SourceChannelMismatchRejected) {
  Json inst = bsc_instance();
  inst["source"] = {{"probs", {0.2, 0.3, 0.5}}};
  EXPECT_EQ(kind_of([&] { Instance::from_json(inst); }), ErrorKind::invalid_input);
}

TEST(Config, DataConfigsLoad) {
  for (const char* name : {"rd_curve.json", "simulate_bsc.json"}) {
    const auto path = kData / "configs" / name;
    const auto cfg = ExperimentConfig::from_json(io::read_json_file(path), path.parent_path());
    EXPECT_TRUE(cfg.instance.source.has_value()) << name;
  }
}

TEST(Csv, HeaderAndEscaping) {
  Table t{"demo", {"a", "b"}, {}};
  t.add(1.5, std::string("x,y"));
  t.add(2, std::string("say \"hi\""));
  const std::string s = to_csv(t, "0123456789abcdef");
  EXPECT_EQ(s,
            "# distcomp-csv v1 demo\n# config 0123456789abcdef\na,b\n1.5,\"x,y\"\n2,\"say \"\"hi\"\"\"\n");
  EXPECT_THROW(t.add(1), Error);
}

TEST(Bounds, Relations) {
  EXPECT_TRUE(make_bound("a", "r", 1.0, "<=", 1.0 + 1e-12).pass);
  EXPECT_TRUE(make_bound("a", "r", 1.0 + 1e-10, "<=", 1.0).pass);
  EXPECT_FALSE(make_bound("a", "r", 1.0 + 1e-6, "<=", 1.0).pass);
  EXPECT_FALSE(make_bound("a", "r", 1.0, "<", 1.0).pass);
  EXPECT_TRUE(make_bound("a", "r", 2.0, ">=", 1.0).pass);
  EXPECT_DOUBLE_EQ(make_bound("a", "r", 2.0, ">=", 1.0).slack, 1.0);
  EXPECT_TRUE(make_bound("a", "r", 0.3, "=", 0.1 + 0.2).pass);
  EXPECT_THROW(make_bound("a", "r", 0.0, "~", 0.0), Error);
}

TEST(Bounds, CompareWithoutMeasurementsThrows) {
  RunRecord r;
  EXPECT_EQ(kind_of([&] { compare_bounds(r); }), ErrorKind::invalid_input);
}

TEST(Run, InfoIdentities) {
  const auto r = run(config(R"({"command":"info","instance":"bsc_025.json"})"));
  EXPECT_FALSE(r.bounds.empty());
  EXPECT_TRUE(r.all_bounds_pass());
  const Table b = compare_bounds(r);
  EXPECT_EQ(b.columns.size(), 7u);
  EXPECT_EQ(b.rows.size(), r.bounds.size());
}

TEST(Run, TypicalTableShape) {
  const auto r = run(config(R"({"command":"typical","instance":"bsc_025.json",
                                "params":{"n_values":[4,8],"delta_values":[1,2]}})"));
  EXPECT_EQ(r.table("typical").rows.size(), 4u);
  EXPECT_EQ(r.bounds.size(), 8u);
  EXPECT_THROW(r.table("nope"), Error);
}

TEST(Run, RerunIsByteIdentical) {
  for (const char* text : {
           R"({"command":"simulate","instance":"bsc_025.json","seed":5,
               "params":{"n":4,"samples":200,"transcripts":2}})",
           R"({"command":"dilute","instance":"dilution_target.json","seed":2,"params":{"draws":500}})",
           R"({"command":"zero-error","instance":"zero_error_skew.json","seed":1,"params":{"restarts":3}})",
       }) {
    const auto cfg = config(text);
    EXPECT_EQ(all_csv(run(cfg)), all_csv(run(cfg))) << text;
  }
}

TEST(Run, SeedChangesSimulation) {
  const auto a = run(config(R"({"command":"cover","instance":"bsc_025.json","seed":1})"));
  const auto b = run(config(R"({"command":"cover","instance":"bsc_025.json","seed":2})"));
  EXPECT_NE(a.config_hash, b.config_hash);
  EXPECT_NE(all_csv(a), all_csv(b));
}

TEST(Run, SweepPrefixesBounds) {
  const auto r = run(config(R"({"command":"sweep","instance":"bsc_025.json",
      "params":{"command":"simulate","param":"n","values":[3,4],"fidelity":false,"strong":false,"transcripts":0}})"));
  const Table& t = r.tables.front();
  EXPECT_EQ(t.name, "sweep_simulate");
  EXPECT_EQ(t.columns.front(), "sweep_n");
  ASSERT_FALSE(r.bounds.empty());
  bool saw3 = false, saw4 = false, trend = false;
  for (const auto& b : r.bounds) {
    saw3 |= b.name.rfind("n=3: ", 0) == 0;
    saw4 |= b.name.rfind("n=4: ", 0) == 0;
    trend |= b.name.rfind("rate nonincreasing", 0) == 0;
  }
  EXPECT_TRUE(saw3 && saw4 && trend);
  EXPECT_EQ(r.outputs["runs"].size(), 2u);
}

TEST(Run, SweepRejectsForeignParameter) {
  const auto c = config(R"({"command":"sweep","instance":"bsc_025.json",
      "params":{"command":"simulate","param":"draws","values":[1]}})");
  EXPECT_EQ(kind_of([&] { run(c); }), ErrorKind::invalid_input);
}

TEST(Run, MissingInstancePieces) {
  EXPECT_EQ(kind_of([] { run(config(R"({"command":"simulate"})")); }), ErrorKind::invalid_input);
  EXPECT_EQ(kind_of([] { run(config(R"({"command":"rd","instance":"identity_binary.json"})")); }),
            ErrorKind::invalid_input);
}

TEST(Run, WriteOutputs) {
  const auto dir = std::filesystem::temp_directory_path() / "distcomp_runner_test";
  std::filesystem::remove_all(dir);
  const auto r = run(config(R"({"command":"typical","instance":"bsc_025.json","params":{"n_values":[4]}})"));
  write_outputs(r, dir);
  for (const char* f : {"typical.csv", "bounds.csv", "record.json", "timings.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::ifstream in(dir / "typical.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), to_csv(r.table("typical"), r.config_hash));
  EXPECT_EQ(io::read_json_file(dir / "record.json")["config_hash"], r.config_hash);
  std::filesystem::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const std::string bsc = "--instance " + (kData / "bsc_025.json").string();
  EXPECT_EQ(cli_exit("info " + bsc), 0);
  EXPECT_EQ(cli_exit("info colour=1 " + bsc), 2);
  EXPECT_EQ(cli_exit("nonsense"), 2);
  EXPECT_EQ(cli_exit("--bogus-flag"), 2);
  EXPECT_EQ(cli_exit("simulate n=6 " + bsc + " --cap-override max_class_size=2"), 3);
  EXPECT_EQ(cli_exit("zero-error c=1 --instance " + (kData / "zero_error_skew.json").string()), 4);
  EXPECT_EQ(cli_exit("cover m=1 nu=1 " + bsc), 5);
}
