#pragma once

// Dilution of uniform shared randomness into an arbitrary distribution, and
// rate-distortion: the single-letter function and a block code obtained from
// the simulation protocol by fixing the best shared index.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "distcomp/error.hpp"
#include "distcomp/fidelity.hpp"
#include "distcomp/parallel.hpp"
#include "distcomp/prob.hpp"
#include "distcomp/rng.hpp"
#include "distcomp/simulate.hpp"
#include "distcomp/types.hpp"
#include "distcomp/zero_error.hpp"

namespace distcomp {

// ---------------------------------------------------------------------------
// Dilution
// ---------------------------------------------------------------------------

struct DilutionBucket {
  int index = 0;                // a in 1..k; 0 for the infinity bucket
  std::vector<std::size_t> members;
  double mass = 0.0;            // q_a
  double weight = 0.0;          // q_a / (1 - q_inf)
  std::uint64_t slots = 0;      // k^2-type count for this bucket
};

struct DilutionPlan {
  Distribution target;
  double epsilon = 0.0;
  int k = 0;
  std::vector<DilutionBucket> buckets;  // finite buckets with members, by index a
  DilutionBucket infinity;              // probabilities below (1+eps)^-k
  std::uint64_t helper_size = 0;        // k^2
  std::uint64_t member_lcm = 1;         // lcm of finite bucket sizes
  std::uint64_t total_uniform_size = 0; // k^2 * lcm

  // sum_a (slots_a / k^2) U_a.
  std::vector<double> realized() const {
    std::vector<double> out(target.size(), 0.0);
    for (const auto& b : buckets)
      for (std::size_t c : b.members)
        out[c] += static_cast<double>(b.slots) / static_cast<double>(helper_size) /
                  static_cast<double>(b.members.size());
    return out;
  }

  // sum_a q_a / (1 - q_inf) U_a, before rounding to a k^2-type.
  std::vector<double> bucket_mixture() const {
    std::vector<double> out(target.size(), 0.0);
    for (const auto& b : buckets)
      for (std::size_t c : b.members) out[c] += b.weight / static_cast<double>(b.members.size());
    return out;
  }

  double realized_tv() const {
    const auto r = realized();
    return tv_distance(target.probs(), std::span<const double>(r));
  }

  double error_bound() const { return 2.0 * epsilon + 1.0 / k; }
};

// k = ceil((log|C| - log eps) / eps).
inline int dilution_k(std::size_t c_size, double epsilon) {
  require(epsilon > 0.0 && epsilon < 1.0, "dilution_k: epsilon must lie in (0, 1)");
  return static_cast<int>(std::ceil((std::log2(static_cast<double>(c_size)) - std::log2(epsilon)) / epsilon));
}

// Index a with q in [(1+eps)^-a, (1+eps)^-(a-1)); a value on a boundary goes
// to the lower index. Returns 0 for the infinity bucket.
inline int dilution_bucket_index(double q, double epsilon, int k) {
  if (q <= 0.0) return 0;
  const double raw = -std::log(q) / std::log1p(epsilon);
  const int a = std::max(1, static_cast<int>(std::ceil(raw - 1e-12)));
  return a > k ? 0 : a;
}

inline DilutionPlan build_dilution(const Distribution& target, double epsilon) {
  require(epsilon > 0.0 && epsilon < 1.0, "build_dilution: epsilon must lie in (0, 1)");
  DilutionPlan plan{target, epsilon, dilution_k(target.size(), epsilon), {}, {}, 0, 1, 0};
  const int k = plan.k;
  std::vector<DilutionBucket> by_index(static_cast<std::size_t>(k) + 1);
  for (std::size_t c = 0; c < target.size(); ++c) {
    const int a = dilution_bucket_index(target[c], epsilon, k);
    by_index[static_cast<std::size_t>(a)].index = a;
    by_index[static_cast<std::size_t>(a)].members.push_back(c);
    by_index[static_cast<std::size_t>(a)].mass += target[c];
  }
  plan.infinity = by_index[0];
  plan.infinity.index = 0;
  const double keep = 1.0 - plan.infinity.mass;
  for (int a = 1; a <= k; ++a)
    if (!by_index[static_cast<std::size_t>(a)].members.empty())
      plan.buckets.push_back(std::move(by_index[static_cast<std::size_t>(a)]));

  // Largest-remainder rounding of the weights to a k^2-type.
  plan.helper_size = static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(k);
  std::uint64_t assigned = 0;
  std::vector<std::pair<double, std::size_t>> remainders;
  for (std::size_t i = 0; i < plan.buckets.size(); ++i) {
    auto& b = plan.buckets[i];
    b.weight = b.mass / keep;
    const double exact = b.weight * static_cast<double>(plan.helper_size);
    b.slots = static_cast<std::uint64_t>(std::floor(exact));
    assigned += b.slots;
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; assigned < plan.helper_size; ++j, ++assigned)
    ++plan.buckets[remainders[j % remainders.size()].second].slots;

  for (const auto& b : plan.buckets) {
    plan.member_lcm = std::lcm(plan.member_lcm, static_cast<std::uint64_t>(b.members.size()));
    require(plan.member_lcm < (std::uint64_t{1} << 40), "build_dilution: bucket sizes overflow");
  }
  plan.total_uniform_size = plan.helper_size * plan.member_lcm;
  return plan;
}

// A budgeted stream of uniform indices on [size).
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint64_t size, std::uint64_t budget)
      : rng_(derive_seed(seed, "dilution/stream")), size_(size), budget_(budget) {
    require(size_ >= 1, "UniformStream: empty range");
  }
  std::uint64_t size() const noexcept { return size_; }
  std::uint64_t remaining() const noexcept { return budget_; }
  std::uint64_t next() {
    if (budget_ == 0) fail(ErrorKind::invalid_input, "UniformStream: stream exhausted");
    --budget_;
    return rng_.uniform_index(size_);
  }

 private:
  Rng rng_;
  std::uint64_t size_;
  std::uint64_t budget_;
};

// One uniform index i on [k^2 L]: slot i / L picks the bucket through the
// k^2-type, and (i mod L) mod |C_a| the member. L is a multiple of every
// bucket size, so both stages are exactly uniform.
inline std::size_t realize_from_uniform(const DilutionPlan& plan, UniformStream& stream) {
  require(stream.size() == plan.total_uniform_size, "realize_from_uniform: stream has the wrong range");
  const std::uint64_t i = stream.next();
  std::uint64_t slot = i / plan.member_lcm;
  const std::uint64_t inner = i % plan.member_lcm;
  for (const auto& b : plan.buckets) {
    if (slot < b.slots) return b.members[inner % b.members.size()];
    slot -= b.slots;
  }
  fail(ErrorKind::invalid_input, "realize_from_uniform: slot outside the helper range");
}

// Shared randomness -> (x, y) pairs: both sides draw c from the diluted law of
// mu = E(P); Alice samples x from the transpose of E, Bob applies D. Whether
// the rate log|C| can be pushed to I(P;W) depends on an open question, so the
// rate figure is reported as conjectural.
struct PairSimulation {
  double mixture_tv = 0.0;  // TV(diluted mu, mu)
  double joint_tv = 0.0;    // TV of the produced (x, y) law to P(x)W(y|x)
  double shared_bits = 0.0; // log2 of the uniform range
  double conjectured_rate = 0.0;  // I(P;W)
  bool conjectural = true;
};

inline PairSimulation simulate_pair_from_shared(const Distribution& p, const Channel& w,
                                                const Factorization& f, double epsilon) {
  require(feasible_check(w, f.e, f.d).feasible, "simulate_pair_from_shared: factorization is not exact");
  const auto xs = static_cast<std::size_t>(f.e.rows());
  const auto cs = static_cast<std::size_t>(f.e.cols());
  const auto ys = static_cast<std::size_t>(f.d.cols());
  std::vector<double> e_flat(xs * cs);
  for (std::size_t x = 0; x < xs; ++x)
    for (std::size_t c = 0; c < cs; ++c)
      e_flat[x * cs + c] = std::max(0.0, f.e(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(c)));
  const Channel e(xs, cs, std::move(e_flat));
  const TransposeResult tr = transpose_channel(p, e);
  const DilutionPlan plan = build_dilution(tr.output, epsilon);
  const std::vector<double> mu_tilde = plan.realized();

  std::vector<double> joint(xs * ys, 0.0);
  std::vector<double> g(xs * ys, 0.0);
  for (std::size_t c = 0; c < cs; ++c)
    for (std::size_t x = 0; x < xs; ++x)
      for (std::size_t y = 0; y < ys; ++y)
        joint[x * ys + y] += mu_tilde[c] * tr.reverse(c, x) *
                             std::max(0.0, f.d(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(y)));
  for (std::size_t x = 0; x < xs; ++x)
    for (std::size_t y = 0; y < ys; ++y) g[x * ys + y] = p[x] * w(x, y);

  PairSimulation s;
  s.mixture_tv = tv_distance(tr.output.probs(), std::span<const double>(mu_tilde));
  s.joint_tv = tv_distance(std::span<const double>(joint), std::span<const double>(g));
  s.shared_bits = std::log2(static_cast<double>(plan.total_uniform_size));
  s.conjectured_rate = mutual_information(p, w);
  return s;
}

// ---------------------------------------------------------------------------
// Rate-distortion
// ---------------------------------------------------------------------------

struct DistortionSpec {
  std::vector<std::vector<double>> d;  // |X| x |Y|
  double target = 0.0;

  std::size_t x_size() const { return d.size(); }
  std::size_t y_size() const { return d.empty() ? 0 : d.front().size(); }

  void validate(std::size_t xs, std::size_t ys) const {
    require(d.size() == xs, "DistortionSpec: row count differs from |X|");
    for (const auto& row : d) {
      require(row.size() == ys, "DistortionSpec: row length differs from |Y|");
      for (double v : row) require(v >= 0.0 && std::isfinite(v), "DistortionSpec: entries must be finite and >= 0");
    }
    require(target >= 0.0, "DistortionSpec: target must be nonnegative");
  }

  static DistortionSpec hamming(std::size_t size, double target) {
    DistortionSpec s;
    s.d.assign(size, std::vector<double>(size, 1.0));
    for (std::size_t i = 0; i < size; ++i) s.d[i][i] = 0.0;
    s.target = target;
    return s;
  }
};

inline double expected_distortion(const Distribution& p, const Channel& w, const DistortionSpec& spec) {
  double v = 0.0;
  for (std::size_t x = 0; x < w.input_size(); ++x)
    for (std::size_t y = 0; y < w.output_size(); ++y) v += p[x] * w(x, y) * spec.d[x][y];
  return v;
}

// sum_x P(x) min_y d(x, y).
inline double min_distortion(const Distribution& p, const DistortionSpec& spec) {
  double v = 0.0;
  for (std::size_t x = 0; x < spec.x_size(); ++x)
    v += p[x] * *std::min_element(spec.d[x].begin(), spec.d[x].end());
  return v;
}

struct RdResult {
  double rate = 0.0;        // R(target), bits
  double distortion = 0.0;  // achieved E d(X, Y) <= target
  double slope = 0.0;       // s; infinite at D_min, 0 at D_max
  Channel channel = Channel::identity(1);
  int iterations = 0;
};

namespace detail {

// Fixed point W_x(y) ~ q(y) 2^(-s d(x, y)) on the allowed cells, q = PW.
inline Channel blahut_arimoto(const Distribution& p, const DistortionSpec& spec, double s,
                              const std::vector<std::vector<bool>>& allowed, int& iterations) {
  const std::size_t xs = spec.x_size();
  const std::size_t ys = spec.y_size();
  std::vector<double> q(ys, 1.0 / static_cast<double>(ys));
  std::vector<double> w(xs * ys, 0.0);
  for (iterations = 0; iterations < 100000; ++iterations) {
    for (std::size_t x = 0; x < xs; ++x) {
      double z = 0.0;
      for (std::size_t y = 0; y < ys; ++y) {
        const double v = allowed[x][y] ? q[y] * std::exp2(-s * spec.d[x][y]) : 0.0;
        w[x * ys + y] = v;
        z += v;
      }
      if (z <= 0.0) {
        // q vanished on this row's cells: restart the row uniformly on them.
        std::size_t count = 0;
        for (std::size_t y = 0; y < ys; ++y) count += allowed[x][y];
        for (std::size_t y = 0; y < ys; ++y) w[x * ys + y] = allowed[x][y] ? 1.0 / count : 0.0;
      } else {
        for (std::size_t y = 0; y < ys; ++y) w[x * ys + y] /= z;
      }
    }
    std::vector<double> nq(ys, 0.0);
    for (std::size_t x = 0; x < xs; ++x)
      for (std::size_t y = 0; y < ys; ++y) nq[y] += p[x] * w[x * ys + y];
    double change = 0.0;
    for (std::size_t y = 0; y < ys; ++y) change = std::max(change, std::abs(nq[y] - q[y]));
    q = std::move(nq);
    if (change < 1e-14) break;
  }
  return Channel(xs, ys, std::move(w));
}

}  // namespace detail

// R(D) = min { I(P;W) : E d(X, Y) <= D }. Interior targets: Blahut-Arimoto at
// slope s, bisected until the distortion sits within 1e-9 below the target.
inline RdResult rd_function(const Distribution& p, const DistortionSpec& spec) {
  const std::size_t xs = p.size();
  require(xs == spec.x_size() && spec.y_size() >= 1, "rd_function: distortion matrix does not match the source");
  spec.validate(xs, spec.y_size());
  const std::size_t ys = spec.y_size();
  const double d_min = min_distortion(p, spec);
  if (spec.target < d_min - 1e-12)
    fail(ErrorKind::infeasible, "rd_function: target below the minimum achievable distortion");

  // D_max: best constant output.
  std::size_t best_y = 0;
  double d_max = std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < ys; ++y) {
    double v = 0.0;
    for (std::size_t x = 0; x < xs; ++x) v += p[x] * spec.d[x][y];
    if (v < d_max - 1e-15) {
      d_max = v;
      best_y = y;
    }
  }
  RdResult r{0.0, 0.0, 0.0, Channel::constant(xs, Distribution::point_mass(ys, best_y)), 0};
  if (spec.target >= d_max) {
    r.distortion = d_max;
    return r;
  }

  std::vector<std::vector<bool>> all(xs, std::vector<bool>(ys, true));
  if (spec.target <= d_min + 1e-12) {
    // Only cells attaining min_y d(x, y) may carry mass.
    std::vector<std::vector<bool>> argmin(xs, std::vector<bool>(ys, false));
    for (std::size_t x = 0; x < xs; ++x) {
      const double m = *std::min_element(spec.d[x].begin(), spec.d[x].end());
      for (std::size_t y = 0; y < ys; ++y) argmin[x][y] = spec.d[x][y] <= m + 1e-15;
    }
    r.channel = detail::blahut_arimoto(p, spec, 0.0, argmin, r.iterations);
    r.rate = mutual_information(p, r.channel);
    r.distortion = expected_distortion(p, r.channel, spec);
    r.slope = std::numeric_limits<double>::infinity();
    return r;
  }

  auto run = [&](double s, int& it) { return detail::blahut_arimoto(p, spec, s, all, it); };
  int it = 0;
  double lo = 0.0;
  double hi = 1.0;
  Channel w_hi = run(hi, it);
  while (expected_distortion(p, w_hi, spec) > spec.target) {
    lo = hi;
    hi *= 2.0;
    require(hi < 1e6, "rd_function: slope search diverged");
    w_hi = run(hi, it);
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double dist_hi = expected_distortion(p, w_hi, spec);
    if (spec.target - dist_hi < 1e-9 || hi - lo < 1e-13) break;
    const double mid = 0.5 * (lo + hi);
    Channel w_mid = run(mid, it);
    if (expected_distortion(p, w_mid, spec) > spec.target) {
      lo = mid;
    } else {
      hi = mid;
      w_hi = std::move(w_mid);
    }
  }
  r.channel = std::move(w_hi);
  r.slope = hi;
  r.rate = mutual_information(p, r.channel);
  r.distortion = expected_distortion(p, r.channel, spec);
  r.iterations = it;
  return r;
}

inline std::vector<RdResult> rd_curve(const Distribution& p, const DistortionSpec& spec,
                                      const std::vector<double>& targets, int workers = 1) {
  std::vector<std::optional<RdResult>> out(targets.size());
  parallel_for(targets.size(), workers, [&](std::size_t i) {
    DistortionSpec s = spec;
    s.target = targets[i];
    out[i] = rd_function(p, s);
  });
  std::vector<RdResult> res;
  for (auto& r : out) res.push_back(std::move(*r));
  return res;
}

// Certification route for R(D): exhaustive search over channels whose rows
// lie on the simplex grid of the given resolution. Feasible grid channels
// give an upper bound on R(D); it is tight when the optimum sits on the grid.
struct RdGridResult {
  double rate = std::numeric_limits<double>::infinity();
  std::uint64_t points = 0;
  std::uint64_t feasible = 0;
};

inline RdGridResult rd_grid_oracle(const Distribution& p, const DistortionSpec& spec, int resolution) {
  const std::size_t xs = p.size();
  const std::size_t ys = spec.y_size();
  spec.validate(xs, ys);
  require(xs * ys <= 6, "rd_grid_oracle: instance exceeds |X||Y| <= 6");
  require(resolution >= 1, "rd_grid_oracle: resolution must be positive");
  std::vector<std::vector<double>> rows;
  detail::simplex_grid(static_cast<int>(ys), resolution, rows);
  RdGridResult r;
  std::vector<std::size_t> pick(xs, 0);
  std::vector<double> flat(xs * ys);
  for (;;) {
    ++r.points;
    double dist = 0.0;
    for (std::size_t x = 0; x < xs; ++x)
      for (std::size_t y = 0; y < ys; ++y) dist += p[x] * rows[pick[x]][y] * spec.d[x][y];
    if (dist <= spec.target + 1e-12) {
      ++r.feasible;
      std::vector<double> q(ys, 0.0);
      for (std::size_t x = 0; x < xs; ++x)
        for (std::size_t y = 0; y < ys; ++y) q[y] += p[x] * rows[pick[x]][y];
      double info = 0.0;
      for (std::size_t x = 0; x < xs; ++x)
        for (std::size_t y = 0; y < ys; ++y) {
          const double v = rows[pick[x]][y];
          if (p[x] > 0.0 && v > 0.0) info += p[x] * v * std::log2(v / q[y]);
        }
      r.rate = std::min(r.rate, std::max(0.0, info));
    }
    std::size_t i = 0;
    while (i < xs && ++pick[i] == rows.size()) pick[i++] = 0;
    if (i == xs) break;
  }
  return r;
}

struct RdCode {
  std::shared_ptr<const SimCode> code;
  RdResult single_letter;
  std::uint64_t selected_nu = 0;
  double selected_distortion = 0.0;  // per letter, E_nu and D_nu with nu fixed
  double mean_distortion = 0.0;      // averaged over nu
  double deterministic_distortion = 0.0;
  std::vector<Word> deterministic_map;  // x index -> y word
  double slack = 0.0;                   // d_max * global fidelity error
  double rate = 0.0;
  double global_err = 0.0;
};

// Builds the simulation code for the optimal single-letter channel, evaluates
// the exact per-letter distortion for every shared index and keeps the best
// (ties: lowest nu). The deterministic map sends x to the lowest-distortion
// word in the support of the selected index's output law.
inline RdCode rd_code_via_simulation(const Distribution& p, const DistortionSpec& spec,
                                     const SimParams& params) {
  RdCode out;
  out.single_letter = rd_function(p, spec);
  out.code = std::make_shared<const SimCode>(build_sim_code(p, out.single_letter.channel, params));
  const SimCode& code = *out.code;
  const int n = code.n();
  const std::size_t xs = p.size();
  const std::uint64_t words = block_size(xs, n, params.caps);

  auto letter_distortion = [&](const Word& x, const Word& y) {
    double v = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
      v += spec.d[static_cast<std::size_t>(x[k])][static_cast<std::size_t>(y[k])];
    return v / static_cast<double>(x.size());
  };

  std::vector<double> per_nu(code.nu_count(), 0.0);
  parallel_for(per_nu.size(), params.workers, [&](std::size_t nu) {
    double v = 0.0;
    for (std::uint64_t i = 0; i < words; ++i) {
      const Word x = word_from_index(i, xs, n);
      const double px = word_probability(p, x);
      if (px == 0.0) continue;
      detail::for_each_output(code, x, nu, [&](const Word& y, double m) { v += px * m * letter_distortion(x, y); });
    }
    per_nu[nu] = v;
  });
  out.selected_nu = static_cast<std::uint64_t>(std::min_element(per_nu.begin(), per_nu.end()) - per_nu.begin());
  out.selected_distortion = per_nu[out.selected_nu];
  out.mean_distortion = std::accumulate(per_nu.begin(), per_nu.end(), 0.0) / static_cast<double>(per_nu.size());

  out.deterministic_map.resize(static_cast<std::size_t>(words));
  for (std::uint64_t i = 0; i < words; ++i) {
    const Word x = word_from_index(i, xs, n);
    std::optional<Word> best;
    double best_d = std::numeric_limits<double>::infinity();
    detail::for_each_output(code, x, out.selected_nu, [&](const Word& y, double m) {
      if (m <= 0.0) return;
      const double dv = letter_distortion(x, y);
      if (dv < best_d - 1e-15 || (std::abs(dv - best_d) <= 1e-15 && best && y < *best)) {
        best_d = dv;
        best = y;
      }
    });
    out.deterministic_map[i] = *best;
    out.deterministic_distortion += word_probability(p, x) * best_d;
  }

  double d_max = 0.0;
  for (const auto& row : spec.d) d_max = std::max(d_max, *std::max_element(row.begin(), row.end()));
  out.global_err = evaluate_sim_fidelity(code).average;
  out.slack = d_max * out.global_err;
  out.rate = accounting(code).rate;
  return out;
}

}  // namespace distcomp
