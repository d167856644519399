#pragma once

// Structured-text (JSON) forms of the value types, SimCode directories and
// number formatting shared by the CSV writer.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "distcomp/applications.hpp"
#include "distcomp/covering.hpp"
#include "distcomp/error.hpp"
#include "distcomp/fidelity.hpp"
#include "distcomp/prob.hpp"
#include "distcomp/simulate.hpp"
#include "distcomp/types.hpp"
#include "distcomp/zero_error.hpp"

namespace distcomp::io {

using Json = nlohmann::json;

// Shortest round-trip decimal form; "nan", "inf", "-inf" for the specials.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// JSON has no nonfinite numbers; they travel as strings.
inline Json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

inline double as_double(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  fail(ErrorKind::invalid_input, "expected a number, got " + j.dump());
}

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    fail(ErrorKind::invalid_input, std::string(what) + ": " + e.what());
  }
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::invalid_input, "cannot open " + path.string());
  return guarded("parse error", [&] { return Json::parse(in); });
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::invalid_input, "cannot write " + path.string());
  out << text;
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// --- probability objects ---------------------------------------------------

inline Json to_json(const Distribution& p) { return Json{{"probs", p.vector()}}; }

inline Distribution distribution_from_json(const Json& j) {
  return guarded("distribution", [&] { return Distribution(j.at("probs").get<std::vector<double>>()); });
}

inline Json to_json(const Channel& w) { return Json{{"rows", w.rows()}}; }

inline Channel channel_from_json(const Json& j) {
  return guarded("channel", [&] { return Channel(j.at("rows").get<std::vector<std::vector<double>>>()); });
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

// --- types -----------------------------------------------------------------

inline Json to_json(const ExactType& t) { return Json{{"counts", t.counts()}}; }

inline ExactType exact_type_from_json(const Json& j) {
  return guarded("exact type", [&] { return ExactType(j.at("counts").get<std::vector<int>>()); });
}

inline Json to_json(const JointType& t) {
  Json rows = Json::array();
  for (std::size_t x = 0; x < t.x_size(); ++x) {
    auto r = t.row(x);
    rows.push_back(std::vector<int>(r.begin(), r.end()));
  }
  return Json{{"counts", std::move(rows)}};
}

inline JointType joint_type_from_json(const Json& j) {
  return guarded("joint type", [&] {
    const auto rows = j.at("counts").get<std::vector<std::vector<int>>>();
    require(!rows.empty() && !rows.front().empty(), "joint type: empty count matrix");
    std::vector<int> flat;
    for (const auto& r : rows) {
      require(r.size() == rows.front().size(), "joint type: ragged count matrix");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return JointType(rows.size(), rows.front().size(), std::move(flat));
  });
}

// "a b|c d" rendering used in CSV cells.
inline std::string compact(const JointType& t) {
  std::string s;
  for (std::size_t x = 0; x < t.x_size(); ++x) {
    if (x) s += '|';
    for (std::size_t y = 0; y < t.y_size(); ++y) {
      if (y) s += ' ';
      s += std::to_string(t(x, y));
    }
  }
  return s;
}

inline std::string compact(const Word& w) {
  std::string s;
  for (int v : w) s += std::to_string(v);
  return s;
}

// --- coverings and codes ---------------------------------------------------

inline std::string_view to_string(CoveringMode m) {
  return m == CoveringMode::guaranteed ? "guaranteed" : "sized";
}

// Words are ranks in the lexicographic enumeration of T_S, stored as
// [rank, multiplicity] pairs per nu.
inline Json to_json(const CoveringFamily& f) {
  Json rows = Json::array();
  for (const auto& row : f.rows()) {
    Json r = Json::array();
    for (const auto& run : row) r.push_back(Json::array({run.rank, run.count}));
    rows.push_back(std::move(r));
  }
  return Json{{"joint_type", to_json(f.type())},
              {"epsilon", f.epsilon()},
              {"N", f.nu_count()},
              {"M", f.words_per_nu()},
              {"mode", to_string(f.mode)},
              {"retries", f.retries},
              {"rows", std::move(rows)}};
}

inline CoveringFamily covering_from_json(const Json& j) {
  return guarded("covering family", [&] {
    std::vector<std::vector<CoveringFamily::Run>> rows;
    for (const auto& r : j.at("rows")) {
      std::vector<CoveringFamily::Run> runs;
      for (const auto& run : r) runs.push_back({run.at(0).get<std::uint32_t>(), run.at(1).get<std::uint64_t>()});
      rows.push_back(std::move(runs));
    }
    CoveringFamily f(joint_type_from_json(j.at("joint_type")), j.at("epsilon").get<double>(),
                     j.at("M").get<std::uint64_t>(), std::move(rows));
    require(f.nu_count() == j.at("N").get<std::uint64_t>(), "covering family: N disagrees with rows");
    f.mode = j.value("mode", "sized") == "guaranteed" ? CoveringMode::guaranteed : CoveringMode::sized;
    f.retries = j.value("retries", std::size_t{0});
    return f;
  });
}

inline Json to_json(const EnumerationCaps& c) {
  return Json{{"max_n", c.max_n},
              {"max_cells", c.max_cells},
              {"max_class_size", c.max_class_size},
              {"max_block_words", c.max_block_words},
              {"max_family_words", c.max_family_words}};
}

inline EnumerationCaps caps_from_json(const Json& j) {
  return guarded("caps", [&] {
    EnumerationCaps c;
    c.max_n = j.value("max_n", c.max_n);
    c.max_cells = j.value("max_cells", c.max_cells);
    c.max_class_size = j.value("max_class_size", c.max_class_size);
    c.max_block_words = j.value("max_block_words", c.max_block_words);
    c.max_family_words = j.value("max_family_words", c.max_family_words);
    return c;
  });
}

// Directory layout: manifest.json plus family_NNNN.json per joint type.
// Returned as (relative file name, document) pairs.
inline std::vector<std::pair<std::string, Json>> sim_code_documents(const SimCode& code) {
  std::vector<std::pair<std::string, Json>> docs;
  const SimAccounting a = accounting(code);
  Json files = Json::array();
  for (std::size_t i = 0; i < code.families().size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "family_%04zu.json", i);
    docs.emplace_back(name, to_json(code.families()[i]));
    files.push_back(name);
  }
  const SimParams& p = code.params();
  Json manifest{{"n", p.n},
                {"delta", p.delta},
                {"epsilon", p.epsilon},
                {"seed", p.seed},
                {"max_retries", p.max_retries},
                {"caps", to_json(p.caps)},
                {"source", to_json(code.source())},
                {"channel", to_json(code.channel())},
                {"nu_count", code.nu_count()},
                {"announcement_bits", code.announcement_bits()},
                {"rate", a.rate},
                {"cr_rate", a.cr_rate},
                {"families", std::move(files)}};
  docs.emplace(docs.begin(), "manifest.json", std::move(manifest));
  return docs;
}

inline void save_sim_code(const SimCode& code, const std::filesystem::path& dir) {
  for (const auto& [name, doc] : sim_code_documents(code)) write_json_file(dir / name, doc);
}

inline SimCode load_sim_code(const std::filesystem::path& dir, int workers = 1) {
  const Json m = read_json_file(dir / "manifest.json");
  return guarded("sim code manifest", [&] {
    SimParams p;
    p.n = m.at("n").get<int>();
    p.delta = m.at("delta").get<double>();
    p.epsilon = m.at("epsilon").get<double>();
    p.seed = m.at("seed").get<std::uint64_t>();
    p.max_retries = m.at("max_retries").get<std::size_t>();
    p.caps = caps_from_json(m.at("caps"));
    p.workers = workers;
    std::vector<CoveringFamily> families;
    for (const auto& name : m.at("families"))
      families.push_back(covering_from_json(read_json_file(dir / name.get<std::string>())));
    return SimCode(distribution_from_json(m.at("source")), channel_from_json(m.at("channel")), p,
                   std::move(families));
  });
}

// One record per line.
inline Json to_json(const Transcript& t) {
  return Json{{"x", t.x},
              {"announced", t.announced ? to_json(*t.announced) : Json(nullptr)},
              {"nu", t.nu},
              {"mu", t.mu},
              {"y", t.y},
              {"encoder_view", t.encoder_view},
              {"bits_sent", t.bits_sent},
              {"randomness_used", t.randomness_used}};
}

// --- reports ---------------------------------------------------------------

inline Json to_json(const FidelityReport& r) {
  return Json{{"mode", r.mode == FidelityMode::exact ? "exact" : "monte-carlo"},
              {"samples", r.samples},
              {"global", number(r.global_err)},
              {"local", number(r.local_err)},
              {"letterwise_source", number(r.letterwise_source_err)},
              {"empirical_joint", number(r.empirical_joint_err)},
              {"global_se", number(r.global_se)},
              {"local_se", number(r.local_se)},
              {"letterwise_source_se", number(r.letterwise_source_se)},
              {"empirical_joint_se", number(r.empirical_joint_se)}};
}

inline Json to_json(const Factorization& f) {
  return Json{{"objective", f.objective},
              {"e", matrix_json(f.e)},
              {"d", matrix_json(f.d)},
              {"mu", f.mu},
              {"trace", f.trace},
              {"restart", f.restart},
              {"d_step_converged", f.d_step_converged}};
}

inline Json to_json(const DilutionBucket& b) {
  return Json{{"index", b.index}, {"members", b.members}, {"mass", b.mass}, {"weight", b.weight}, {"slots", b.slots}};
}

inline Json to_json(const DilutionPlan& plan) {
  Json buckets = Json::array();
  for (const auto& b : plan.buckets) buckets.push_back(to_json(b));
  return Json{{"target", to_json(plan.target)},
              {"epsilon", plan.epsilon},
              {"k", plan.k},
              {"buckets", std::move(buckets)},
              {"infinity", to_json(plan.infinity)},
              {"helper_size", plan.helper_size},
              {"total_uniform_size", plan.total_uniform_size},
              {"realized", plan.realized()},
              {"realized_tv", plan.realized_tv()}};
}

inline DistortionSpec distortion_from_json(const Json& j) {
  return guarded("distortion", [&] {
    DistortionSpec s;
    s.d = j.at("d").get<std::vector<std::vector<double>>>();
    s.target = j.value("target", 0.0);
    return s;
  });
}

inline Json to_json(const DistortionSpec& s) { return Json{{"d", s.d}, {"target", s.target}}; }

}  // namespace distcomp::io
