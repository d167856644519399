#pragma once

// Word-level oracles for coverings and simulation codes. They enumerate words
// and joint types directly and never touch the adjacency structures.

#include <cmath>
#include <optional>
#include <vector>

#include "distcomp/covering.hpp"
#include "distcomp/simulate.hpp"
#include "test_support.hpp"

namespace distcomp::testing {

// Condition (I_nu) and (II) recomputed from words, without the adjacency lists.
inline CoveringCheck direct_check(const CoveringFamily& f) {
  const JointType& t = f.type();
  const auto xw = words_with_counts(t.x_marginal().counts());
  const auto yw = words_with_counts(t.y_marginal().counts());
  std::vector<double> reverse_size(yw.size(), 0.0);
  for (std::size_t j = 0; j < yw.size(); ++j)
    for (const auto& x : xw) reverse_size[j] += joint_type_of(x, yw[j], t.x_size(), t.y_size()) == t;
  CoveringCheck c;
  const double m = static_cast<double>(f.words_per_nu());
  std::vector<double> hits(yw.size(), 0.0);
  for (std::size_t nu = 0; nu < f.nu_count(); ++nu) {
    double worst = 0.0;
    for (const auto& x : xw) {
      double avg = 0.0;
      for (std::uint64_t mu = 0; mu < f.words_per_nu(); ++mu) {
        const std::size_t j = f.rank_at(nu, mu);
        if (joint_type_of(x, yw[j], t.x_size(), t.y_size()) == t) avg += 1.0 / reverse_size[j] / m;
      }
      worst = std::max(worst, std::abs(avg * static_cast<double>(xw.size()) - 1.0));
    }
    c.condition_I_margin.push_back(f.epsilon() - worst);
    for (std::uint64_t mu = 0; mu < f.words_per_nu(); ++mu) hits[f.rank_at(nu, mu)] += 1.0;
  }
  double worst = 0.0;
  for (double h : hits)
    worst = std::max(worst, std::abs(h / (m * static_cast<double>(f.nu_count())) * static_cast<double>(yw.size()) - 1.0));
  c.condition_II_margin = f.epsilon() - worst;
  return c;
}

// Output law by brute force: draw y' ~ W^n(.|x) over all of Y^n, look up its
// joint type, then pick uniformly among the row entries compatible with x.
inline std::vector<double> brute_output(const SimCode& code, const Word& x) {
  const Channel& w = code.channel();
  const std::size_t ys = w.output_size();
  const std::uint64_t size = block_size(ys, code.n(), {});
  std::vector<double> out(size, 0.0);
  const bool typical = is_typical(x, code.typical_spec());
  for (std::uint64_t i = 0; i < size; ++i) {
    const Word yp = word_from_index(i, ys, code.n());
    double py = 1.0;
    for (std::size_t k = 0; k < x.size(); ++k) py *= w(static_cast<std::size_t>(x[k]), static_cast<std::size_t>(yp[k]));
    if (py == 0.0) continue;
    const JointType t = joint_type_of(x, yp, w.input_size(), ys);
    const auto ti = typical ? code.find(t) : std::nullopt;
    if (!ti) {
      out[word_index(code.fallback(), ys)] += py;
      continue;
    }
    for (std::uint64_t nu = 0; nu < code.nu_count(); ++nu) {
      const double pnu = py / static_cast<double>(code.nu_count());
      std::vector<Word> compatible;
      for (std::uint64_t mu = 0; mu < code.families()[*ti].words_per_nu(); ++mu) {
        const Word& y = code.word(*ti, nu, mu);
        if (joint_type_of(x, y, w.input_size(), ys) == t) compatible.push_back(y);
      }
      if (compatible.empty()) {
        out[word_index(code.fallback(), ys)] += pnu;
        continue;
      }
      for (const auto& y : compatible) out[word_index(y, ys)] += pnu / static_cast<double>(compatible.size());
    }
  }
  return out;
}

}  // namespace distcomp::testing
