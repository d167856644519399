#pragma once

// Grid oracle for binary-output zero-error instances, written against the
// definition only: rows of D range over D(c, 0) in {0, 1/r, ..., 1}; for each
// x the extreme points of {e >= 0, sum e = 1, e D = W_x} are singletons with
// D(c, 0) = W_x(0) and pairs (a, b) straddling W_x(0).

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "distcomp/prob.hpp"

namespace distcomp::testing {

inline double binary_output_grid_oracle(const Distribution& p, const Channel& w, int c, int resolution) {
  const std::size_t xs = p.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> rows(static_cast<std::size_t>(c), 0);
  std::vector<double> d(static_cast<std::size_t>(c));
  auto evaluate = [&] {
    for (int i = 0; i < c; ++i) d[static_cast<std::size_t>(i)] = static_cast<double>(rows[static_cast<std::size_t>(i)]) / resolution;
    std::vector<std::vector<std::vector<double>>> verts(xs);
    for (std::size_t x = 0; x < xs; ++x) {
      const double t = w(x, 0);
      for (int a = 0; a < c; ++a) {
        if (std::abs(d[static_cast<std::size_t>(a)] - t) < 1e-12) {
          std::vector<double> e(static_cast<std::size_t>(c), 0.0);
          e[static_cast<std::size_t>(a)] = 1.0;
          verts[x].push_back(e);
        }
        for (int b = a + 1; b < c; ++b) {
          const double da = d[static_cast<std::size_t>(a)], db = d[static_cast<std::size_t>(b)];
          if (!((da < t - 1e-12 && db > t + 1e-12) || (db < t - 1e-12 && da > t + 1e-12))) continue;
          std::vector<double> e(static_cast<std::size_t>(c), 0.0);
          e[static_cast<std::size_t>(a)] = (t - db) / (da - db);
          e[static_cast<std::size_t>(b)] = 1.0 - e[static_cast<std::size_t>(a)];
          verts[x].push_back(e);
        }
      }
      if (verts[x].empty() && p[x] > 0.0) return;
      if (verts[x].empty()) verts[x].push_back(std::vector<double>(static_cast<std::size_t>(c), 0.0));
    }
    std::vector<double> mu(static_cast<std::size_t>(c), 0.0);
    std::function<void(std::size_t)> rec = [&](std::size_t x) {
      if (x == xs) {
        double h = 0.0;
        for (double m : mu)
          if (m > 0.0) h -= m * std::log2(m);
        best = std::min(best, h);
        return;
      }
      for (const auto& e : verts[x]) {
        for (std::size_t k = 0; k < e.size(); ++k) mu[k] += p[x] * e[k];
        rec(x + 1);
        for (std::size_t k = 0; k < e.size(); ++k) mu[k] -= p[x] * e[k];
      }
    };
    rec(0);
  };
  std::function<void(int, int)> pick = [&](int i, int from) {
    if (i == c) {
      evaluate();
      return;
    }
    for (int v = from; v <= resolution; ++v) {
      rows[static_cast<std::size_t>(i)] = v;
      pick(i + 1, v);
    }
  };
  pick(0, 0);
  return std::max(0.0, best);
}

}  // namespace distcomp::testing
