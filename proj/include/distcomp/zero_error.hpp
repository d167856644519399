#pragma once

// Zero-error factorizations W = D o E through an intermediate alphabet C,
// minimizing H(mu) with mu = E(P).
//
// For fixed D the feasible E form a product of polytopes
//   B_x = { e >= 0 : sum_c e_c D_c = W_x }
// and H(mu) is concave in E, so the minimum sits at a product of vertices.
// A vertex of B_x is a basic solution: support S with the rows D_S linearly
// independent, hence |S| <= |Y|.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "distcomp/error.hpp"
#include "distcomp/parallel.hpp"
#include "distcomp/prob.hpp"
#include "distcomp/rng.hpp"

namespace distcomp {

inline constexpr double kFactorizationTolerance = 1e-7;

enum class SizeBoundVariant { theorem9, remark2 };

// |X||Y| - 1, or |X||Y| - |X| + 1.
inline int intermediate_size_bound(int x_size, int y_size, SizeBoundVariant v) {
  require(x_size >= 1 && y_size >= 1, "intermediate_size_bound: sizes must be positive");
  if (v == SizeBoundVariant::theorem9) return x_size * y_size - 1 > 0 ? x_size * y_size - 1 : 1;
  require(x_size >= 2 && y_size >= 2, "intermediate_size_bound: refined bound needs sizes >= 2");
  return x_size * y_size - x_size + 1;
}

struct ZeroErrorInstance {
  Distribution source;
  Channel channel;
  int c_max = 1;

  ZeroErrorInstance(Distribution p, Channel w, int c)
      : source(std::move(p)), channel(std::move(w)), c_max(c) {
    require(source.size() == channel.input_size(), "ZeroErrorInstance: dimension mismatch");
    require(c_max >= 1, "ZeroErrorInstance: c_max must be positive");
  }

  static ZeroErrorInstance with_default_size(Distribution p, Channel w) {
    const int c = intermediate_size_bound(static_cast<int>(w.input_size()),
                                          static_cast<int>(w.output_size()), SizeBoundVariant::theorem9);
    return ZeroErrorInstance(std::move(p), std::move(w), c);
  }
};

using Matrix = Eigen::MatrixXd;

struct Factorization {
  Matrix e;  // |X| x |C|
  Matrix d;  // |C| x |Y|
  std::vector<double> mu;
  double objective = 0.0;
  std::vector<double> trace;  // objective after each e_step
  int restart = -1;
  bool d_step_converged = true;
};

inline Matrix to_matrix(const Channel& w) {
  Matrix m(w.input_size(), w.output_size());
  for (std::size_t x = 0; x < w.input_size(); ++x)
    for (std::size_t y = 0; y < w.output_size(); ++y) m(x, y) = w(x, y);
  return m;
}

inline std::vector<double> induced_mu(const Distribution& p, const Matrix& e) {
  std::vector<double> mu(static_cast<std::size_t>(e.cols()), 0.0);
  for (Eigen::Index x = 0; x < e.rows(); ++x)
    for (Eigen::Index c = 0; c < e.cols(); ++c) mu[c] += p[x] * e(x, c);
  return mu;
}

struct FeasibilityCheck {
  bool feasible = false;
  double residual = 0.0;  // max |(ED - W)(x, y)|
};

inline FeasibilityCheck feasible_check(const Channel& w, const Matrix& e, const Matrix& d) {
  require(e.rows() == static_cast<Eigen::Index>(w.input_size()) &&
              d.cols() == static_cast<Eigen::Index>(w.output_size()) && e.cols() == d.rows(),
          "feasible_check: dimension mismatch");
  FeasibilityCheck f;
  f.residual = (e * d - to_matrix(w)).cwiseAbs().maxCoeff();
  f.feasible = f.residual <= kFactorizationTolerance && e.minCoeff() >= -kFactorizationTolerance &&
               d.minCoeff() >= -kFactorizationTolerance;
  return f;
}

inline Factorization make_factorization(const Distribution& p, Matrix e, Matrix d) {
  Factorization f;
  f.e = std::move(e);
  f.d = std::move(d);
  f.mu = induced_mu(p, f.e);
  f.objective = entropy_bits(f.mu);
  return f;
}

// E: x -> x, D = W, padded with unused copies of the last row.
inline Factorization trivial_factorization(const Distribution& p, const Channel& w, int c) {
  const auto xs = static_cast<Eigen::Index>(w.input_size());
  require(c >= xs, "trivial_factorization: needs |C| >= |X|");
  Matrix e = Matrix::Zero(xs, c);
  Matrix d(c, static_cast<Eigen::Index>(w.output_size()));
  const Matrix wm = to_matrix(w);
  for (Eigen::Index i = 0; i < c; ++i) d.row(i) = wm.row(std::min(i, xs - 1));
  for (Eigen::Index x = 0; x < xs; ++x) e(x, x) = 1.0;
  return make_factorization(p, std::move(e), std::move(d));
}

// ---------------------------------------------------------------------------
// E-step
// ---------------------------------------------------------------------------

struct Vertex {
  std::vector<double> e;       // length |C|
  std::uint64_t support = 0;   // bitmask over C
};

namespace detail {

// Support patterns compare as sorted index lists.
inline bool support_less(std::uint64_t a, std::uint64_t b) {
  auto bits = [](std::uint64_t m) {
    std::vector<int> v;
    for (int i = 0; i < 64; ++i)
      if ((m >> i) & 1U) v.push_back(i);
    return v;
  };
  const auto va = bits(a);
  const auto vb = bits(b);
  return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
}

template <typename Fn>
void for_each_subset(int universe, int max_size, Fn&& fn) {
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (!cur.empty()) fn(cur);
    if (static_cast<int>(cur.size()) == max_size) return;
    for (int i = start; i < universe; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
}

}  // namespace detail

// Vertices of B_x for target row w_x, ordered by support pattern.
inline std::vector<Vertex> polytope_vertices(const Matrix& d, const Eigen::VectorXd& w_x) {
  const int c = static_cast<int>(d.rows());
  const int ys = static_cast<int>(d.cols());
  require(c <= 64, "polytope_vertices: at most 64 intermediate symbols");
  std::vector<Vertex> out;
  detail::for_each_subset(c, std::min(c, ys), [&](const std::vector<int>& s) {
    Matrix a(ys, static_cast<Eigen::Index>(s.size()));
    for (std::size_t j = 0; j < s.size(); ++j) a.col(static_cast<Eigen::Index>(j)) = d.row(s[j]).transpose();
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() != static_cast<Eigen::Index>(s.size())) return;
    const Eigen::VectorXd sol = qr.solve(w_x);
    if ((a * sol - w_x).cwiseAbs().maxCoeff() > 1e-9) return;
    if (sol.minCoeff() <= 1e-12) return;  // smaller support: found under that subset
    Vertex v;
    v.e.assign(static_cast<std::size_t>(c), 0.0);
    for (std::size_t j = 0; j < s.size(); ++j) {
      v.e[static_cast<std::size_t>(s[j])] = sol(static_cast<Eigen::Index>(j));
      v.support |= std::uint64_t{1} << s[j];
    }
    out.push_back(std::move(v));
  });
  std::sort(out.begin(), out.end(),
            [](const Vertex& a, const Vertex& b) { return detail::support_less(a.support, b.support); });
  return out;
}

struct EStepOptions {
  double exhaustive_cap = 1e6;  // product of per-x vertex counts
};

struct EStepResult {
  Matrix e;
  double objective = 0.0;
  bool exhaustive = true;
};

// Minimizes H(mu) over vertex products. Exhaustive below the cap (first
// minimum in lexicographic vertex order wins), otherwise coordinate descent
// over x from the per-x lexicographically first vertices.
inline EStepResult e_step(const Distribution& p, const Channel& w, const Matrix& d,
                          const EStepOptions& opt = {}) {
  require(d.cols() == static_cast<Eigen::Index>(w.output_size()), "e_step: D has the wrong output size");
  const std::size_t xs = w.input_size();
  const auto c = static_cast<std::size_t>(d.rows());
  const Matrix wm = to_matrix(w);
  std::vector<std::vector<Vertex>> verts(xs);
  double combos = 1.0;
  for (std::size_t x = 0; x < xs; ++x) {
    verts[x] = polytope_vertices(d, wm.row(static_cast<Eigen::Index>(x)).transpose());
    if (verts[x].empty())
      fail(ErrorKind::infeasible, "e_step: W row " + std::to_string(x) + " is outside the hull of D");
    combos *= static_cast<double>(verts[x].size());
  }

  std::vector<std::size_t> choice(xs, 0);
  auto objective_of = [&](const std::vector<std::size_t>& ch) {
    std::vector<double> mu(c, 0.0);
    for (std::size_t x = 0; x < xs; ++x)
      for (std::size_t k = 0; k < c; ++k) mu[k] += p[x] * verts[x][ch[x]].e[k];
    return entropy_bits(mu);
  };

  EStepResult r;
  if (combos <= opt.exhaustive_cap) {
    std::vector<std::size_t> best = choice;
    double best_h = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> partial(xs + 1, std::vector<double>(c, 0.0));
    auto rec = [&](auto&& self, std::size_t x) -> void {
      if (x == xs) {
        const double h = entropy_bits(partial[xs]);
        if (h < best_h - 1e-12) {
          best_h = h;
          best = choice;
        }
        return;
      }
      // Symbols of zero probability do not affect mu; keep their first vertex.
      const std::size_t options = p[x] > 0.0 ? verts[x].size() : 1;
      for (std::size_t i = 0; i < options; ++i) {
        choice[x] = i;
        for (std::size_t k = 0; k < c; ++k) partial[x + 1][k] = partial[x][k] + p[x] * verts[x][i].e[k];
        self(self, x + 1);
      }
      choice[x] = 0;
    };
    rec(rec, 0);
    choice = best;
    r.objective = best_h;
  } else {
    r.exhaustive = false;
    double h = objective_of(choice);
    for (bool improved = true; improved;) {
      improved = false;
      for (std::size_t x = 0; x < xs; ++x) {
        if (p[x] <= 0.0) continue;
        for (std::size_t i = 0; i < verts[x].size(); ++i) {
          const std::size_t old = choice[x];
          choice[x] = i;
          const double hi = objective_of(choice);
          if (hi < h - 1e-12) {
            h = hi;
            improved = true;
          } else {
            choice[x] = old;
          }
        }
      }
    }
    r.objective = h;
  }
  r.e = Matrix::Zero(static_cast<Eigen::Index>(xs), static_cast<Eigen::Index>(c));
  for (std::size_t x = 0; x < xs; ++x)
    for (std::size_t k = 0; k < c; ++k)
      r.e(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k)) = verts[x][choice[x]].e[k];
  return r;
}

// ---------------------------------------------------------------------------
// D-step
// ---------------------------------------------------------------------------

// Projection onto { D >= 0 : E D = W, rows of D sum to 1 } by Dykstra's
// alternating scheme between the affine set and the orthant. D is vectorized
// row-major.
class DProjector {
 public:
  DProjector(const Matrix& e, const Matrix& w) : c_(e.cols()), ys_(w.cols()) {
    const Eigen::Index xs = e.rows();
    const Eigen::Index vars = c_ * ys_;
    Matrix a = Matrix::Zero(xs * ys_ + c_, vars);
    Eigen::VectorXd b(xs * ys_ + c_);
    for (Eigen::Index x = 0; x < xs; ++x)
      for (Eigen::Index y = 0; y < ys_; ++y) {
        for (Eigen::Index k = 0; k < c_; ++k) a(x * ys_ + y, k * ys_ + y) = e(x, k);
        b(x * ys_ + y) = w(x, y);
      }
    for (Eigen::Index k = 0; k < c_; ++k) {
      for (Eigen::Index y = 0; y < ys_; ++y) a(xs * ys_ + k, k * ys_ + y) = 1.0;
      b(xs * ys_ + k) = 1.0;
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    cod.setThreshold(1e-11);
    const Matrix pinv = cod.pseudoInverse();
    offset_ = pinv * b;
    null_proj_ = Matrix::Identity(vars, vars) - pinv * a;
    a_ = std::move(a);
    b_ = std::move(b);
  }

  Eigen::VectorXd affine(const Eigen::VectorXd& v) const { return null_proj_ * v + offset_; }

  double residual(const Eigen::VectorXd& v) const { return (a_ * v - b_).cwiseAbs().maxCoeff(); }

  Eigen::VectorXd project(const Eigen::VectorXd& v, int max_iters = 20000) const {
    Eigen::VectorXd x = v;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(v.size());
    Eigen::VectorXd q = Eigen::VectorXd::Zero(v.size());
    for (int it = 0; it < max_iters; ++it) {
      const Eigen::VectorXd y = affine(x + p);
      p = x + p - y;
      const Eigen::VectorXd next = (y + q).cwiseMax(0.0);
      q = y + q - next;
      const double moved = (next - x).cwiseAbs().maxCoeff();
      x = next;
      if (moved < 1e-15 && residual(x) < 1e-12) break;
    }
    return x;
  }

  Matrix to_d(const Eigen::VectorXd& v) const {
    Matrix d(c_, ys_);
    for (Eigen::Index k = 0; k < c_; ++k)
      for (Eigen::Index y = 0; y < ys_; ++y) d(k, y) = v(k * ys_ + y);
    return d;
  }

  Eigen::VectorXd from_d(const Matrix& d) const {
    Eigen::VectorXd v(c_ * ys_);
    for (Eigen::Index k = 0; k < c_; ++k)
      for (Eigen::Index y = 0; y < ys_; ++y) v(k * ys_ + y) = d(k, y);
    return v;
  }

 private:
  Eigen::Index c_;
  Eigen::Index ys_;
  Matrix a_;
  Eigen::VectorXd b_;
  Matrix null_proj_;
  Eigen::VectorXd offset_;
};

// sum_c mu_c H(D_c).
inline double conditional_output_entropy(const std::vector<double>& mu, const Matrix& d) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < d.rows(); ++k) {
    if (mu[static_cast<std::size_t>(k)] <= 0.0) continue;
    std::vector<double> row(static_cast<std::size_t>(d.cols()));
    for (Eigen::Index y = 0; y < d.cols(); ++y) row[static_cast<std::size_t>(y)] = std::max(0.0, d(k, y));
    h += mu[static_cast<std::size_t>(k)] * entropy_bits(row);
  }
  return h;
}

struct DStepOptions {
  int max_iters = 2000;
  double tolerance = 1e-8;  // stop once an accepted step gains less than this
};

struct DStepResult {
  Matrix d;
  double conditional_entropy = 0.0;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

// Projected gradient ascent of sum_c mu_c H(D_c) over feasible D, with
// backtracking. Starts from `start` if given, else from the projection of the
// uniform matrix.
inline DStepResult d_step(const Distribution& p, const Channel& w, const Matrix& e,
                          const std::optional<Matrix>& start = std::nullopt,
                          const DStepOptions& opt = {}) {
  require(e.rows() == static_cast<Eigen::Index>(w.input_size()), "d_step: E has the wrong input size");
  const Eigen::Index c = e.cols();
  const Eigen::Index ys = static_cast<Eigen::Index>(w.output_size());
  const DProjector proj(e, to_matrix(w));
  const std::vector<double> mu = induced_mu(p, e);

  Eigen::VectorXd v = start ? proj.from_d(*start)
                            : Eigen::VectorXd::Constant(c * ys, 1.0 / static_cast<double>(ys));
  v = proj.project(v);
  if (proj.residual(v) > kFactorizationTolerance)
    fail(ErrorKind::infeasible, "d_step: no stochastic D satisfies E D = W");

  auto value = [&](const Eigen::VectorXd& vec) { return conditional_output_entropy(mu, proj.to_d(vec)); };
  DStepResult r;
  double f = value(v);
  double step = 1.0;
  for (r.iterations = 0; r.iterations < opt.max_iters; ++r.iterations) {
    Eigen::VectorXd grad(c * ys);
    for (Eigen::Index k = 0; k < c; ++k)
      for (Eigen::Index y = 0; y < ys; ++y) {
        const double dv = std::max(v(k * ys + y), 1e-15);
        grad(k * ys + y) = -mu[static_cast<std::size_t>(k)] * (std::log2(dv) + 1.0 / std::log(2.0));
      }
    bool accepted = false;
    double gain = 0.0;
    while (step > 1e-14) {
      const Eigen::VectorXd cand = proj.project(v + step * grad);
      const double fc = value(cand);
      if (fc > f + 1e-15 && proj.residual(cand) <= kFactorizationTolerance) {
        gain = fc - f;
        v = cand;
        f = fc;
        accepted = true;
        step = std::min(step * 2.0, 1e3);
        break;
      }
      step *= 0.5;
    }
    if (!accepted || gain < opt.tolerance) {
      r.converged = true;
      break;
    }
  }
  r.d = proj.to_d(v);
  r.conditional_entropy = f;
  r.residual = proj.residual(v);
  return r;
}

// ---------------------------------------------------------------------------
// Alternating minimization
// ---------------------------------------------------------------------------

struct AlternateOptions {
  std::uint64_t seed = 0;
  int restarts = 20;
  int max_iters = 50;
  int init_attempts = 200;
  int workers = 1;
  EStepOptions e_step{};
  DStepOptions d_step{};
};

namespace detail {

// Restart 0 starts from the trivial code's D. Others draw D until every W
// row lies in the hull of its rows: in the first half of the attempts each
// row is a W row, a corner of the output simplex or a uniform simplex point
// with equal odds; in the second half uniform points are pulled toward
// copies of the W rows with growing weight.
inline std::optional<Matrix> initial_d(const ZeroErrorInstance& inst, int restart, std::uint64_t seed,
                                       int attempts) {
  const auto xs = static_cast<Eigen::Index>(inst.channel.input_size());
  const auto ys = static_cast<Eigen::Index>(inst.channel.output_size());
  const Eigen::Index c = inst.c_max;
  const Matrix wm = to_matrix(inst.channel);
  if (restart == 0) {
    if (c < xs) return std::nullopt;
    return trivial_factorization(inst.source, inst.channel, inst.c_max).d;
  }
  Rng rng(derive_seed(seed, "alternate/restart", static_cast<std::uint64_t>(restart)));
  const int anchored = attempts / 2;
  std::vector<double> row(static_cast<std::size_t>(ys));
  for (int a = 0; a < attempts; ++a) {
    Matrix d(c, ys);
    for (Eigen::Index k = 0; k < c; ++k) {
      rng.fill_simplex(row);
      if (a < anchored) {
        const std::uint64_t pick = rng.uniform_index(3);
        if (pick == 0) {
          d.row(k) = wm.row(static_cast<Eigen::Index>(rng.uniform_index(xs)));
        } else if (pick == 1) {
          d.row(k).setZero();
          d(k, static_cast<Eigen::Index>(rng.uniform_index(ys))) = 1.0;
        } else {
          for (Eigen::Index y = 0; y < ys; ++y) d(k, y) = row[static_cast<std::size_t>(y)];
        }
      } else {
        const double pull = static_cast<double>(a - anchored) / (attempts - anchored);
        const Eigen::Index anchor = k < xs ? k : static_cast<Eigen::Index>(rng.uniform_index(xs));
        for (Eigen::Index y = 0; y < ys; ++y)
          d(k, y) = (1.0 - pull) * row[static_cast<std::size_t>(y)] + pull * wm(anchor, y);
      }
    }
    bool ok = true;
    for (Eigen::Index x = 0; x < xs && ok; ++x)
      ok = !polytope_vertices(d, wm.row(x).transpose()).empty();
    if (ok) return d;
  }
  return std::nullopt;
}

inline std::optional<Factorization> run_restart(const ZeroErrorInstance& inst, int restart,
                                                const AlternateOptions& opt) {
  std::optional<Matrix> d0 = initial_d(inst, restart, opt.seed, opt.init_attempts);
  if (!d0) return std::nullopt;
  Matrix d = *d0;
  std::optional<Factorization> best;
  bool converged = true;
  for (int it = 0; it < opt.max_iters; ++it) {
    EStepResult es = e_step(inst.source, inst.channel, d, opt.e_step);
    if (best && es.objective > best->objective - 1e-9) {
      // No decrease: keep the incumbent (the e_step may be greedy).
      if (es.objective < best->objective) best->trace.push_back(es.objective);
      break;
    }
    std::vector<double> trace = best ? best->trace : std::vector<double>{};
    trace.push_back(es.objective);
    best = make_factorization(inst.source, es.e, d);
    best->trace = std::move(trace);
    DStepResult ds = d_step(inst.source, inst.channel, best->e, d, opt.d_step);
    converged = converged && ds.converged;
    d = ds.d;
  }
  best->restart = restart;
  best->d_step_converged = converged;
  return best;
}

}  // namespace detail

// Best factorization over restarts; ties go to the lower restart index.
inline Factorization alternate(const ZeroErrorInstance& inst, const AlternateOptions& opt = {}) {
  require(opt.restarts >= 1 && opt.max_iters >= 1, "alternate: restarts and max_iters must be positive");
  std::vector<std::optional<Factorization>> runs(static_cast<std::size_t>(opt.restarts));
  parallel_for(runs.size(), opt.workers, [&](std::size_t i) {
    runs[i] = detail::run_restart(inst, static_cast<int>(i), opt);
  });
  std::optional<Factorization> best;
  for (auto& r : runs)
    if (r && (!best || r->objective < best->objective - 1e-12)) best = std::move(r);
  if (!best) fail(ErrorKind::infeasible, "alternate: no feasible initialization found");
  return *best;
}

// ---------------------------------------------------------------------------
// Certification oracle
// ---------------------------------------------------------------------------

struct OracleResult {
  Factorization best;
  double accuracy = 0.0;  // value at resolution r/2 minus value at r
  std::uint64_t grid_points = 0;
  std::uint64_t feasible_points = 0;
};

namespace detail {

inline void simplex_grid(int parts, int resolution, std::vector<std::vector<double>>& out) {
  std::vector<int> cur(static_cast<std::size_t>(parts), 0);
  auto rec = [&](auto&& self, int i, int left) -> void {
    if (i == parts - 1) {
      cur[static_cast<std::size_t>(i)] = left;
      std::vector<double> v(cur.size());
      for (std::size_t k = 0; k < cur.size(); ++k) v[k] = static_cast<double>(cur[k]) / resolution;
      out.push_back(std::move(v));
      return;
    }
    for (int c = 0; c <= left; ++c) {
      cur[static_cast<std::size_t>(i)] = c;
      self(self, i + 1, left - c);
    }
  };
  rec(rec, 0, resolution);
}

inline std::optional<Factorization> grid_search(const ZeroErrorInstance& inst, int resolution,
                                                std::uint64_t& points, std::uint64_t& feasible) {
  const auto ys = static_cast<int>(inst.channel.output_size());
  std::vector<std::vector<double>> grid;
  simplex_grid(ys, resolution, grid);
  const int c = inst.c_max;
  // Rows of D as a nondecreasing index tuple: row order does not affect H(mu).
  std::vector<std::size_t> idx(static_cast<std::size_t>(c), 0);
  std::optional<Factorization> best;
  Matrix d(c, ys);
  auto rec = [&](auto&& self, int k, std::size_t from) -> void {
    if (k == c) {
      ++points;
      for (int r = 0; r < c; ++r)
        for (int y = 0; y < ys; ++y) d(r, y) = grid[idx[static_cast<std::size_t>(r)]][static_cast<std::size_t>(y)];
      try {
        EStepResult es = e_step(inst.source, inst.channel, d);
        ++feasible;
        if (!best || es.objective < best->objective - 1e-12) best = make_factorization(inst.source, es.e, d);
      } catch (const Error&) {
      }
      return;
    }
    for (std::size_t i = from; i < grid.size(); ++i) {
      idx[static_cast<std::size_t>(k)] = i;
      self(self, k + 1, i);
    }
  };
  rec(rec, 0, 0);
  return best;
}

}  // namespace detail

// Exhaustive search over D with rows on the simplex grid of the given
// resolution, each combined with an exact e_step. Accuracy is the gain over
// the nested grid at half the resolution.
inline OracleResult brute_force_oracle(const ZeroErrorInstance& inst, int resolution) {
  require(inst.channel.input_size() <= 3 && inst.channel.output_size() <= 3 && inst.c_max <= 4,
          "brute_force_oracle: instance exceeds |X|,|Y| <= 3, c <= 4");
  require(resolution >= 2 && resolution % 2 == 0, "brute_force_oracle: resolution must be even and >= 2");
  OracleResult r;
  std::uint64_t coarse_points = 0;
  std::uint64_t coarse_feasible = 0;
  auto fine = detail::grid_search(inst, resolution, r.grid_points, r.feasible_points);
  if (!fine) fail(ErrorKind::infeasible, "brute_force_oracle: no grid point admits a factorization");
  auto coarse = detail::grid_search(inst, resolution / 2, coarse_points, coarse_feasible);
  r.best = *fine;
  r.accuracy = coarse ? std::max(0.0, coarse->objective - fine->objective) : 0.0;
  return r;
}

// Support statistics for the extreme-point bound.
struct SupportStats {
  int max_row_support = 0;  // max_x #{c : E(c|x) > tol}
  int used_columns = 0;     // #{c : some E(c|x) > tol}
};

inline SupportStats support_stats(const Matrix& e, double tol = 1e-9) {
  SupportStats s;
  std::vector<bool> used(static_cast<std::size_t>(e.cols()), false);
  for (Eigen::Index x = 0; x < e.rows(); ++x) {
    int row = 0;
    for (Eigen::Index c = 0; c < e.cols(); ++c)
      if (e(x, c) > tol) {
        ++row;
        used[static_cast<std::size_t>(c)] = true;
      }
    s.max_row_support = std::max(s.max_row_support, row);
  }
  s.used_columns = static_cast<int>(std::count(used.begin(), used.end(), true));
  return s;
}

// (P (x) P, W (x) W) on pairs, x = x1 |X| + x2.
inline std::pair<Distribution, Channel> product_instance(const Distribution& p, const Channel& w) {
  const std::size_t xs = w.input_size();
  const std::size_t ys = w.output_size();
  std::vector<double> pp(xs * xs);
  std::vector<double> ww(xs * xs * ys * ys);
  for (std::size_t a = 0; a < xs; ++a)
    for (std::size_t b = 0; b < xs; ++b) {
      pp[a * xs + b] = p[a] * p[b];
      for (std::size_t y1 = 0; y1 < ys; ++y1)
        for (std::size_t y2 = 0; y2 < ys; ++y2)
          ww[(a * xs + b) * ys * ys + y1 * ys + y2] = w(a, y1) * w(b, y2);
    }
  return {Distribution(std::move(pp)), Channel(xs * xs, ys * ys, std::move(ww))};
}

}  // namespace distcomp
