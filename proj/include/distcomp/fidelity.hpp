#pragma once

// Fidelity criteria for block codes of a source of distributions, with d = TV:
//   global       sum_x P^n(x) d(W^n_x, L_x)
//   local        sum_x P^n(x) (1/n) sum_k d(W_{x_k}, L_{x,k})
//   letterwise   sum_a P(a) (1/n) sum_k d(W_a, sum_{x: x_k = a} P^n(x)/P(a) L_{x,k})
//   empirical    sum_x P^n(x) d(G, (1/n) sum_k delta_{x_k} (x) L_{x,k}),  G(ab) = P(a)W_a(b)
// where L_x is the code's output law on Y^n and L_{x,k} its k-th marginal.
//
// Also the letterwise derandomization of a common-randomness code: replace
// uniform nu on [N] by a uniform choice among Q sampled indices, sent along.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <bit>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "distcomp/error.hpp"
#include "distcomp/parallel.hpp"
#include "distcomp/prob.hpp"
#include "distcomp/rng.hpp"
#include "distcomp/simulate.hpp"
#include "distcomp/types.hpp"

namespace distcomp {

// Output law of a block code on Y^n, indexed lexicographically.
using BlockLaw = std::function<std::vector<double>(const Word&)>;

enum class FidelityMode { exact, monte_carlo };

struct FidelityReport {
  double global_err = 0.0;
  double local_err = 0.0;
  double letterwise_source_err = 0.0;
  double empirical_joint_err = 0.0;
  // Standard errors; zero in exact mode.
  double global_se = 0.0;
  double local_se = 0.0;
  double letterwise_source_se = 0.0;
  double empirical_joint_se = 0.0;
  FidelityMode mode = FidelityMode::exact;
  std::size_t samples = 0;  // source words evaluated
};

struct FidelityOptions {
  FidelityMode mode = FidelityMode::exact;
  std::size_t samples = 2000;  // Monte Carlo only
  std::uint64_t seed = 0;
  int workers = 1;
  EnumerationCaps caps{};
};

namespace detail {

// Per-word quantities entering the four criteria.
struct WordTerms {
  double global = 0.0;
  double local = 0.0;
  double empirical = 0.0;
  std::vector<std::vector<double>> marginals;  // [k][y]
};

inline WordTerms word_terms(const Distribution& p, const Channel& w, const Word& x,
                            const std::vector<double>& law, const EnumerationCaps& caps) {
  const std::size_t n = x.size();
  const std::size_t ys = w.output_size();
  const std::vector<double> target = product_channel_row(w, x, caps);
  require(law.size() == target.size(), "measure_fidelity: code law has the wrong size");
  WordTerms t;
  t.global = tv_distance(std::span<const double>(law), std::span<const double>(target));
  t.marginals.assign(n, std::vector<double>(ys, 0.0));
  for (std::size_t i = 0; i < law.size(); ++i) {
    if (law[i] == 0.0) continue;
    std::uint64_t idx = i;
    for (std::size_t k = n; k-- > 0;) {
      t.marginals[k][idx % ys] += law[i];
      idx /= ys;
    }
  }
  std::vector<double> pair(w.input_size() * ys, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto a = static_cast<std::size_t>(x[k]);
    t.local += tv_distance(w.row(a), std::span<const double>(t.marginals[k]));
    for (std::size_t y = 0; y < ys; ++y) pair[a * ys + y] += t.marginals[k][y] / static_cast<double>(n);
  }
  t.local /= static_cast<double>(n);
  std::vector<double> g(w.input_size() * ys);
  for (std::size_t a = 0; a < w.input_size(); ++a)
    for (std::size_t y = 0; y < ys; ++y) g[a * ys + y] = p[a] * w(a, y);
  t.empirical = tv_distance(std::span<const double>(g), std::span<const double>(pair));
  return t;
}

}  // namespace detail

// Exact mode sums over all of X^n. Monte Carlo mode draws x ~ P^n and reports
// sample means with standard errors; for the letterwise criterion the mixture
// of marginals is estimated per (k, a) and its error bounded by the summed
// per-entry standard errors (TV is half the L1 norm).
inline FidelityReport measure_fidelity(const Distribution& p, const Channel& w, int n,
                                       const BlockLaw& law, const FidelityOptions& opt = {}) {
  require(p.size() == w.input_size(), "measure_fidelity: dimension mismatch");
  require(n >= 1, "measure_fidelity: n must be positive");
  const std::size_t xs = w.input_size();
  const std::size_t ys = w.output_size();
  block_size(ys, n, opt.caps);

  std::vector<Word> words;
  std::vector<double> weights;
  if (opt.mode == FidelityMode::exact) {
    const std::uint64_t total = block_size(xs, n, opt.caps);
    for (std::uint64_t i = 0; i < total; ++i) {
      Word x = word_from_index(i, xs, n);
      const double px = word_probability(p, x);
      if (px == 0.0) continue;
      words.push_back(std::move(x));
      weights.push_back(px);
    }
  } else {
    require(opt.samples >= 2, "measure_fidelity: Monte Carlo needs at least two samples");
    Rng rng(derive_seed(opt.seed, "fidelity/source"));
    for (std::size_t s = 0; s < opt.samples; ++s) {
      Word x(static_cast<std::size_t>(n));
      for (auto& v : x) v = static_cast<int>(rng.categorical(p.probs()));
      words.push_back(std::move(x));
      weights.push_back(1.0 / static_cast<double>(opt.samples));
    }
  }

  std::vector<detail::WordTerms> terms(words.size());
  parallel_for(words.size(), opt.workers, [&](std::size_t i) {
    terms[i] = detail::word_terms(p, w, words[i], law(words[i]), opt.caps);
  });

  FidelityReport r;
  r.mode = opt.mode;
  r.samples = words.size();
  // mix[k][a][y] = sum_{x: x_k = a} weight(x) L_{x,k}(y); mass[k][a] = sum of weights.
  std::vector<std::vector<std::vector<double>>> mix(
      static_cast<std::size_t>(n), std::vector<std::vector<double>>(xs, std::vector<double>(ys, 0.0)));
  std::vector<std::vector<std::vector<double>>> mix_sq = mix;
  std::vector<std::vector<double>> mass(static_cast<std::size_t>(n), std::vector<double>(xs, 0.0));
  for (std::size_t i = 0; i < words.size(); ++i) {
    const double wt = weights[i];
    r.global_err += wt * terms[i].global;
    r.local_err += wt * terms[i].local;
    r.empirical_joint_err += wt * terms[i].empirical;
    for (std::size_t k = 0; k < words[i].size(); ++k) {
      const auto a = static_cast<std::size_t>(words[i][k]);
      mass[k][a] += wt;
      for (std::size_t y = 0; y < ys; ++y) {
        mix[k][a][y] += wt * terms[i].marginals[k][y];
        mix_sq[k][a][y] += wt * terms[i].marginals[k][y] * terms[i].marginals[k][y];
      }
    }
  }
  for (std::size_t a = 0; a < xs; ++a) {
    if (p[a] <= 0.0) continue;
    double sum_k = 0.0;
    double se_k = 0.0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
      if (mass[k][a] <= 0.0) {
        // Symbol never drawn at this position: its term is unobserved, charge the maximum.
        sum_k += 1.0;
        continue;
      }
      std::vector<double> est(ys);
      for (std::size_t y = 0; y < ys; ++y) est[y] = mix[k][a][y] / mass[k][a];
      sum_k += tv_distance(w.row(a), std::span<const double>(est));
      if (opt.mode == FidelityMode::monte_carlo) {
        const double count = mass[k][a] * static_cast<double>(opt.samples);
        double l1_se = 0.0;
        for (std::size_t y = 0; y < ys; ++y) {
          const double var = std::max(0.0, mix_sq[k][a][y] / mass[k][a] - est[y] * est[y]);
          l1_se += std::sqrt(var / std::max(1.0, count - 1.0));
        }
        se_k += 0.5 * l1_se;
      }
    }
    r.letterwise_source_err += p[a] * sum_k / n;
    r.letterwise_source_se += p[a] * se_k / n;
  }

  if (opt.mode == FidelityMode::monte_carlo) {
    auto se = [&](auto get, double mean) {
      double ss = 0.0;
      for (const auto& t : terms) ss += (get(t) - mean) * (get(t) - mean);
      const double m = static_cast<double>(terms.size());
      return std::sqrt(ss / (m - 1.0) / m);
    };
    r.global_se = se([](const detail::WordTerms& t) { return t.global; }, r.global_err);
    r.local_se = se([](const detail::WordTerms& t) { return t.local; }, r.local_err);
    r.empirical_joint_se = se([](const detail::WordTerms& t) { return t.empirical; }, r.empirical_joint_err);
  }
  return r;
}

// A code given as members with mixing weights xi over nu.
inline FidelityReport measure_fidelity(const Distribution& p, const Channel& w, int n,
                                       const std::function<std::vector<double>(const Word&, std::size_t)>& member,
                                       const std::vector<double>& xi, const FidelityOptions& opt = {}) {
  const Distribution weights(xi);
  BlockLaw mixed = [&](const Word& x) {
    std::vector<double> out;
    for (std::size_t nu = 0; nu < weights.size(); ++nu) {
      if (weights[nu] == 0.0) continue;
      std::vector<double> l = member(x, nu);
      if (out.empty()) out.assign(l.size(), 0.0);
      for (std::size_t i = 0; i < l.size(); ++i) out[i] += weights[nu] * l[i];
    }
    return out;
  };
  return measure_fidelity(p, w, n, mixed, opt);
}

inline BlockLaw sim_code_law(const SimCode& code) {
  return [&code](const Word& x) { return output_distribution(code, x); };
}

// ---------------------------------------------------------------------------
// Derandomization
// ---------------------------------------------------------------------------

// Smallest integer Q > (4 ln2 / (eps^2 u)) (n log|X| + log(2|Y|)).
inline std::uint64_t derandomization_sample_count(int n, std::size_t x_size, std::size_t y_size,
                                                  double epsilon, double u) {
  require(n >= 1 && x_size >= 1 && y_size >= 1, "derandomization_sample_count: invalid sizes");
  require(epsilon > 0.0 && u > 0.0 && u <= 1.0, "derandomization_sample_count: parameter out of range");
  const double bound = 4.0 * std::log(2.0) / (epsilon * epsilon * u) *
                       (n * std::log2(static_cast<double>(x_size)) +
                        std::log2(2.0 * static_cast<double>(y_size)));
  return static_cast<std::uint64_t>(std::floor(bound)) + 1;
}

// 2|Y||X|^n 2^(-Q eps^2 u / (4 ln 2)).
inline double derandomization_failure_bound(int n, std::size_t x_size, std::size_t y_size,
                                            double epsilon, double u, double q) {
  const double log2_bound = 1.0 + std::log2(static_cast<double>(y_size)) +
                            n * std::log2(static_cast<double>(x_size)) -
                            q * epsilon * epsilon * u / (4.0 * std::log(2.0));
  return std::exp2(log2_bound);
}

enum class DerandomizeCheck { automatic, exact, declared };

struct DerandomizeOptions {
  double epsilon = kDefaultCoveringEpsilon;
  std::uint64_t seed = 0;
  std::size_t max_retries = 20;
  DerandomizeCheck check = DerandomizeCheck::automatic;  // exact for n <= 6
  int workers = 1;
};

struct DerandomizedCode {
  std::shared_ptr<const SimCode> base;
  std::vector<std::uint64_t> selected;  // T_1..T_Q
  std::uint64_t q = 1;
  double u = 0.0;  // minimal nonzero channel entry
  double epsilon = 0.0;
  bool verified = false;  // exact check ran and passed
  std::size_t retries = 0;
  // Over typical x and positions k, from the exact check (NaN if not run).
  double corridor_margin = std::numeric_limits<double>::quiet_NaN();
  double letterwise_error = std::numeric_limits<double>::quiet_NaN();
  // min over typical x, k, y in supp W_{x_k} of X_{x|k}(y) / u.
  double min_marginal_ratio = std::numeric_limits<double>::quiet_NaN();
  double failure_bound = 0.0;

  int index_bits() const { return q <= 1 ? 0 : static_cast<int>(std::bit_width(q - 1)); }
  double index_overhead() const { return static_cast<double>(index_bits()) / base->n(); }
};

namespace detail {

struct DerandomizeStats {
  double corridor_margin = std::numeric_limits<double>::infinity();
  double letterwise_error = 0.0;
  double min_marginal_ratio = std::numeric_limits<double>::infinity();
};

// For every typical x and position k, the Q-average marginal must lie within
// (1 +- eps) of the nu-average marginal X_{x|k} on supp W_{x_k}.
inline DerandomizeStats check_selection(const SimCode& code, const std::vector<std::uint64_t>& sel,
                                        double epsilon, double u, int workers) {
  const Channel& w = code.channel();
  const std::size_t xs = w.input_size();
  const std::size_t ys = w.output_size();
  const int n = code.n();
  std::vector<double> mult(code.nu_count(), 0.0);
  for (std::uint64_t nu : sel) mult[nu] += 1.0 / static_cast<double>(sel.size());
  const TypicalSpec spec = code.typical_spec();
  const std::uint64_t total = block_size(xs, n, code.params().caps);
  std::vector<DerandomizeStats> per(static_cast<std::size_t>(total));
  parallel_for(static_cast<std::size_t>(total), workers, [&](std::size_t i) {
    const Word x = word_from_index(i, xs, n);
    DerandomizeStats& st = per[i];
    if (!is_typical(x, spec)) return;
    const auto full = output_letter_marginals(code, x);
    std::vector<std::vector<double>> picked(static_cast<std::size_t>(n), std::vector<double>(ys, 0.0));
    for (std::uint64_t nu = 0; nu < code.nu_count(); ++nu) {
      if (mult[nu] == 0.0) continue;
      const auto m = output_letter_marginals(code, x, nu);
      for (std::size_t k = 0; k < m.size(); ++k)
        for (std::size_t y = 0; y < ys; ++y) picked[k][y] += mult[nu] * m[k][y];
    }
    for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
      const auto a = static_cast<std::size_t>(x[k]);
      for (std::size_t y = 0; y < ys; ++y) {
        if (w(a, y) <= 0.0) continue;
        st.min_marginal_ratio = std::min(st.min_marginal_ratio, full[k][y] / u);
        const double rel = full[k][y] > 0.0 ? std::abs(picked[k][y] / full[k][y] - 1.0)
                                            : std::numeric_limits<double>::infinity();
        st.corridor_margin = std::min(st.corridor_margin, epsilon - rel);
      }
      st.letterwise_error =
          std::max(st.letterwise_error, tv_distance(w.row(a), std::span<const double>(picked[k])));
    }
  });
  DerandomizeStats out;
  for (const auto& st : per) {
    out.corridor_margin = std::min(out.corridor_margin, st.corridor_margin);
    out.letterwise_error = std::max(out.letterwise_error, st.letterwise_error);
    out.min_marginal_ratio = std::min(out.min_marginal_ratio, st.min_marginal_ratio);
  }
  return out;
}

}  // namespace detail

// Draws Q i.i.d. uniform indices T_q from [N]. Exact check: retry (stream
// "derandomize/attempt") until the corridor condition holds for every typical
// word and position. Declared check: accept the first draw and report the
// union-bound failure probability instead.
inline DerandomizedCode derandomize(std::shared_ptr<const SimCode> code, const DerandomizeOptions& opt = {}) {
  require(code != nullptr, "derandomize: no base code");
  require(opt.epsilon > 0.0 && opt.epsilon < 0.5, "derandomize: epsilon must lie in (0, 1/2)");
  require(opt.max_retries >= 1, "derandomize: max_retries must be positive");
  DerandomizedCode d;
  d.base = code;
  d.epsilon = opt.epsilon;
  d.u = min_nonzero_entry(code->channel());
  const int n = code->n();
  const bool exact = opt.check == DerandomizeCheck::exact ||
                     (opt.check == DerandomizeCheck::automatic && n <= 6);

  if (code->nu_count() == 1) {
    d.q = 1;
    d.selected = {0};
  } else {
    d.q = derandomization_sample_count(n, code->channel().input_size(), code->channel().output_size(),
                                       opt.epsilon, d.u);
  }
  d.failure_bound = derandomization_failure_bound(n, code->channel().input_size(),
                                                  code->channel().output_size(), opt.epsilon, d.u,
                                                  static_cast<double>(d.q));

  for (std::size_t attempt = 0; attempt < opt.max_retries; ++attempt) {
    if (code->nu_count() > 1) {
      Rng rng(derive_seed(opt.seed, "derandomize/attempt", attempt));
      d.selected.resize(d.q);
      for (auto& v : d.selected) v = rng.uniform_index(code->nu_count());
    }
    d.retries = attempt;
    if (!exact) return d;
    const auto st = detail::check_selection(*code, d.selected, opt.epsilon, d.u, opt.workers);
    d.corridor_margin = st.corridor_margin;
    d.letterwise_error = st.letterwise_error;
    d.min_marginal_ratio = st.min_marginal_ratio;
    if (st.corridor_margin >= 0.0) {
      d.verified = true;
      return d;
    }
  }
  fail(ErrorKind::retries_exhausted, "derandomize: no selection passed the letterwise check");
}

// Sender picks q uniformly, sends it (ceil(log2 Q) bits), then runs the base
// protocol with nu = T_q.
inline Transcript run_fixed_code(const DerandomizedCode& d, const Word& x, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "derandomize/pick"));
  const std::uint64_t nu = d.selected[rng.uniform_index(d.selected.size())];
  Transcript tr = run_protocol(*d.base, x, nu, derive_seed(seed, "derandomize/run"));
  tr.bits_sent += d.index_bits();
  tr.randomness_used = 0.0;
  return tr;
}

// Output law of the derandomized code: uniform mixture over the Q selections.
inline BlockLaw derandomized_law(const DerandomizedCode& d) {
  return [&d](const Word& x) {
    std::vector<double> mult(d.base->nu_count(), 0.0);
    for (std::uint64_t nu : d.selected) mult[nu] += 1.0 / static_cast<double>(d.selected.size());
    std::vector<double> out;
    for (std::uint64_t nu = 0; nu < mult.size(); ++nu) {
      if (mult[nu] == 0.0) continue;
      const auto l = output_distribution_given_nu(*d.base, x, nu);
      if (out.empty()) out.assign(l.size(), 0.0);
      for (std::size_t i = 0; i < l.size(); ++i) out[i] += mult[nu] * l[i];
    }
    return out;
  };
}

}  // namespace distcomp
