#pragma once

// Common-randomness simulation of W^n on typical inputs.
//
// Encoder: draw a joint type T with probability W^n(T_T(x) | x); terminate if
// the type of x is not delta-typical or T is not conditionally typical.
// Otherwise announce T, and send mu drawn from row nu of T's covering family
// with Pr{mu} proportional to W^n(Y(nu, mu) | x). Decoder: Y(nu, mu).
//
// The shared index nu is uniform on [N] with N a power of two. Each family has
// N_T rows, N_T a power of two dividing N, and uses row nu mod N_T, which is
// again uniform.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "distcomp/covering.hpp"
#include "distcomp/error.hpp"
#include "distcomp/parallel.hpp"
#include "distcomp/prob.hpp"
#include "distcomp/rng.hpp"
#include "distcomp/types.hpp"

namespace distcomp {

struct SimParams {
  int n = 4;
  double delta = 2.0;
  double epsilon = kDefaultCoveringEpsilon;
  std::uint64_t seed = 0;
  std::size_t max_retries = 20;
  int workers = 1;
  EnumerationCaps caps{};
};

inline std::uint64_t next_power_of_two(const BigInt& v) {
  require(v >= 1 && v <= (BigInt(1) << 62), "next_power_of_two: value out of range");
  return std::bit_ceil(v.convert_to<std::uint64_t>());
}

class SimCode {
 public:
  SimCode(Distribution source, Channel channel, SimParams params,
          std::vector<CoveringFamily> families)
      : source_(std::move(source)),
        channel_(std::move(channel)),
        params_(std::move(params)),
        families_(std::move(families)) {
    require(source_.size() == channel_.input_size(), "SimCode: source and channel disagree on |X|");
    require(!families_.empty(), "SimCode: no families");
    for (std::size_t i = 0; i < families_.size(); ++i) {
      const JointType& t = families_[i].type();
      require(t.n() == params_.n && t.x_size() == channel_.input_size() &&
                  t.y_size() == channel_.output_size(),
              "SimCode: family type does not match n or alphabets");
      require(i == 0 || families_[i - 1].type() < t, "SimCode: families must be sorted by type");
      require(std::has_single_bit(families_[i].nu_count()),
              "SimCode: family row counts must be powers of two");
      nu_count_ = std::max(nu_count_, families_[i].nu_count());
      index_.emplace(t, i);
      const ExactType s = t.y_marginal();
      if (!y_classes_.count(s))
        y_classes_.emplace(s, std::make_shared<const TypeClass>(s, params_.caps));
    }
    const std::size_t k = families_.size();
    announcement_bits_ = k <= 1 ? 0 : static_cast<int>(std::bit_width(k - 1));
  }

  const Distribution& source() const noexcept { return source_; }
  const Channel& channel() const noexcept { return channel_; }
  const SimParams& params() const noexcept { return params_; }
  int n() const noexcept { return params_.n; }
  const std::vector<CoveringFamily>& families() const noexcept { return families_; }
  std::uint64_t nu_count() const noexcept { return nu_count_; }
  // ceil(log2(number of jointly typical types)).
  int announcement_bits() const noexcept { return announcement_bits_; }

  std::optional<std::size_t> find(const JointType& t) const {
    auto it = index_.find(t);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const TypeClass& y_class(const ExactType& s) const { return *y_classes_.at(s); }

  std::uint64_t row_of(std::size_t type_index, std::uint64_t nu) const {
    return nu % families_.at(type_index).nu_count();
  }

  const Word& word(std::size_t type_index, std::uint64_t nu, std::uint64_t mu) const {
    require(type_index < families_.size(), "SimCode::word: type index out of range");
    require(nu < nu_count_, "SimCode::word: nu out of range");
    const CoveringFamily& f = families_[type_index];
    return y_class(f.type().y_marginal())[f.rank_at(row_of(type_index, nu), mu)];
  }

  // Decoder output for terminated runs: the first word of Y^n.
  Word fallback() const { return Word(static_cast<std::size_t>(params_.n), 0); }

  TypicalSpec typical_spec() const { return TypicalSpec(source_, params_.n, params_.delta); }

 private:
  Distribution source_;
  Channel channel_;
  SimParams params_;
  std::vector<CoveringFamily> families_;
  std::map<JointType, std::size_t> index_;
  std::map<ExactType, std::shared_ptr<const TypeClass>> y_classes_;
  std::uint64_t nu_count_ = 1;
  int announcement_bits_ = 0;
};

// Joint types whose X-marginal is delta-typical for P and whose rows lie in
// the conditional typicality window of W, in lexicographic order.
inline std::vector<JointType> jointly_typical_types(const Distribution& p, const Channel& w, int n,
                                                    double delta,
                                                    const EnumerationCaps& caps = {}) {
  require(p.size() == w.input_size(), "jointly_typical_types: dimension mismatch");
  const TypicalSpec spec(p, n, delta);
  std::vector<JointType> out;
  for (const ExactType& r : enumerate_types(n, p.size())) {
    if (!is_typical_type(r, spec)) continue;
    for (JointType& t : enumerate_joint_types(n, w.input_size(), w.output_size(), r, caps))
      if (is_conditionally_typical(t, w, delta)) out.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline SimCode build_sim_code(const Distribution& p, const Channel& w, const SimParams& params) {
  require(params.n >= 1, "build_sim_code: n must be positive");
  require(params.delta >= 0.0, "build_sim_code: delta must be nonnegative");
  std::vector<JointType> types = jointly_typical_types(p, w, params.n, params.delta, params.caps);
  if (types.empty()) fail(ErrorKind::infeasible, "build_sim_code: no jointly typical joint types");

  std::vector<std::optional<CoveringFamily>> built(types.size());
  parallel_for(types.size(), params.workers, [&](std::size_t i) {
    const CoveringSizes sizes = required_covering_sizes(types[i], params.epsilon);
    CoveringRequest req;
    req.mode = CoveringMode::guaranteed;
    req.n = next_power_of_two(sizes.n_min);
    req.seed = derive_seed(params.seed, "simulate/type", i);
    req.max_retries = params.max_retries;
    built[i].emplace(build_covering(types[i], params.epsilon, req, params.caps));
  });
  std::vector<CoveringFamily> families;
  families.reserve(built.size());
  for (auto& f : built) families.push_back(std::move(*f));
  return SimCode(p, w, params, std::move(families));
}

// Pr{mu | x, T, nu} = W^n_T(Y(nu, mu) | x) / sum_mu' W^n_T(Y(nu, mu') | x), where
// W^n_T(y | x) = 1/|T_T(x)| if (x, y) has joint type T and 0 otherwise.
// Evaluated per mu index. Empty if no word of the row is reachable.
inline std::vector<double> mu_probabilities(const SimCode& code, std::size_t type_index,
                                            std::uint64_t nu, const Word& x) {
  const CoveringFamily& f = code.families().at(type_index);
  const double v_t = 1.0 / conditional_type_class_size(f.type(), x).convert_to<double>();
  std::vector<double> probs(f.words_per_nu());
  std::vector<int> scratch;
  double total = 0.0;
  for (std::uint64_t mu = 0; mu < f.words_per_nu(); ++mu) {
    probs[mu] = has_joint_type(x, code.word(type_index, nu, mu), f.type(), scratch) ? v_t : 0.0;
    total += probs[mu];
  }
  if (total <= 0.0) return {};
  for (double& v : probs) v /= total;
  return probs;
}

struct EncodeResult {
  std::optional<std::size_t> type_index;  // empty: terminated
  std::uint64_t mu = 0;
  Word reconstruction;  // what the encoder knows the decoder will output
};

// Within a family row, W^n(. | x) is constant on T_T(x), so mu is uniform over
// the row entries that form joint type T with x.
inline EncodeResult encode(const SimCode& code, const Word& x, std::uint64_t nu, std::uint64_t seed) {
  check_word(x, code.channel().input_size());
  require(static_cast<int>(x.size()) == code.n(), "encode: word length differs from n");
  require(nu < code.nu_count(), "encode: nu out of range");
  Rng rng(derive_seed(seed, "simulate/encode"));

  Word y_prime(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    y_prime[k] = static_cast<int>(rng.categorical(code.channel().row(static_cast<std::size_t>(x[k]))));
  const JointType t = joint_type_of(x, y_prime, code.channel().input_size(), code.channel().output_size());

  EncodeResult out;
  out.reconstruction = code.fallback();
  const auto ti = code.find(t);
  if (!ti) return out;

  const CoveringFamily& f = code.families()[*ti];
  const TypeClass& ys = code.y_class(t.y_marginal());
  const auto& row = f.row(code.row_of(*ti, nu));
  std::vector<double> weights(row.size(), 0.0);
  std::vector<int> scratch;
  for (std::size_t i = 0; i < row.size(); ++i)
    if (has_joint_type(x, ys[row[i].rank], t, scratch)) weights[i] = static_cast<double>(row[i].count);
  if (std::none_of(weights.begin(), weights.end(), [](double v) { return v > 0.0; })) return out;

  const std::size_t run = rng.categorical(weights);
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < run; ++i) offset += row[i].count;
  out.type_index = ti;
  out.mu = offset + rng.uniform_index(row[run].count);
  out.reconstruction = ys[row[run].rank];
  return out;
}

inline Word decode(const SimCode& code, std::optional<std::size_t> type_index, std::uint64_t nu,
                   std::uint64_t mu) {
  if (!type_index) return code.fallback();
  return code.word(*type_index, nu, mu);
}

struct Transcript {
  Word x;
  std::optional<JointType> announced;  // empty: terminated
  std::uint64_t nu = 0;
  std::uint64_t mu = 0;
  Word y;                // decoder output
  Word encoder_view;     // encoder's reconstruction of y
  double bits_sent = 0.0;
  double randomness_used = 0.0;
  bool terminated() const { return !announced.has_value(); }
};

inline Transcript run_protocol(const SimCode& code, const Word& x, std::uint64_t nu,
                               std::uint64_t seed) {
  const EncodeResult e = encode(code, x, nu, seed);
  Transcript tr;
  tr.x = x;
  tr.nu = nu;
  tr.mu = e.mu;
  tr.y = decode(code, e.type_index, nu, e.mu);
  tr.encoder_view = e.reconstruction;
  tr.randomness_used = std::log2(static_cast<double>(code.nu_count()));
  if (e.type_index) {
    tr.announced = code.families()[*e.type_index].type();
    tr.bits_sent = std::log2(static_cast<double>(code.families()[*e.type_index].words_per_nu())) +
                   code.announcement_bits();
  }
  return tr;
}

namespace detail {

// Feeds sink(y, mass) the output law given (x, T, row) scaled by `mass`;
// returns the mass that found no compatible word.
template <typename Sink>
double add_row_output(const SimCode& code, std::size_t ti, std::uint64_t row_index, const Word& x,
                      double mass, Sink& sink) {
  const CoveringFamily& f = code.families()[ti];
  const JointType& t = f.type();
  const TypeClass& ys = code.y_class(t.y_marginal());
  const auto& row = f.row(row_index);
  std::vector<int> scratch;
  std::vector<std::size_t> hits;
  double compatible = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (has_joint_type(x, ys[row[i].rank], t, scratch)) {
      hits.push_back(i);
      compatible += static_cast<double>(row[i].count);
    }
  }
  if (compatible == 0.0) return mass;
  for (std::size_t i : hits)
    sink(ys[row[i].rank], mass * static_cast<double>(row[i].count) / compatible);
  return 0.0;
}

// Enumerates the output law of decode(encode(x)) as (word, mass) pairs. With
// fixed_nu the shared index is held fixed, otherwise averaged uniformly.
template <typename Sink>
void for_each_output(const SimCode& code, const Word& x, std::optional<std::uint64_t> fixed_nu,
                     Sink&& sink) {
  check_word(x, code.channel().input_size());
  require(static_cast<int>(x.size()) == code.n(), "output_distribution: word length differs from n");
  require(!fixed_nu || *fixed_nu < code.nu_count(), "output_distribution: nu out of range");
  const Channel& w = code.channel();
  double to_fallback = 0.0;
  const ExactType r = count_occurrences(x, w.input_size());
  for (const JointType& t :
       enumerate_joint_types(code.n(), w.input_size(), w.output_size(), r, code.params().caps)) {
    const double lp = log2_conditional_class_probability(t, w);
    if (!std::isfinite(lp)) continue;
    const double pt = std::exp2(lp);
    const auto ti = code.find(t);
    if (!ti) {
      to_fallback += pt;
      continue;
    }
    if (fixed_nu) {
      to_fallback += add_row_output(code, *ti, code.row_of(*ti, *fixed_nu), x, pt, sink);
    } else {
      const std::uint64_t rows = code.families()[*ti].nu_count();
      for (std::uint64_t nu = 0; nu < rows; ++nu)
        to_fallback += add_row_output(code, *ti, nu, x, pt / static_cast<double>(rows), sink);
    }
  }
  if (to_fallback > 0.0) sink(code.fallback(), to_fallback);
}

inline std::vector<double> output_law(const SimCode& code, const Word& x,
                                      std::optional<std::uint64_t> fixed_nu) {
  const std::size_t ysz = code.channel().output_size();
  const std::uint64_t size = block_size(ysz, code.n(), code.params().caps);
  std::vector<double> out(static_cast<std::size_t>(size), 0.0);
  for_each_output(code, x, fixed_nu,
                  [&](const Word& y, double m) { out[word_index(y, ysz)] += m; });
  return out;
}

}  // namespace detail

// Exact law of decode(encode(x)) over Y^n (lexicographic index), averaged over
// uniform nu and the encoder's randomness.
inline std::vector<double> output_distribution(const SimCode& code, const Word& x) {
  return detail::output_law(code, x, std::nullopt);
}

// Same with nu held fixed.
inline std::vector<double> output_distribution_given_nu(const SimCode& code, const Word& x,
                                                        std::uint64_t nu) {
  return detail::output_law(code, x, nu);
}

// Per-position marginals of the output law, row k over Y. Does not enumerate Y^n.
inline std::vector<std::vector<double>> output_letter_marginals(
    const SimCode& code, const Word& x, std::optional<std::uint64_t> fixed_nu = std::nullopt) {
  std::vector<std::vector<double>> out(x.size(),
                                       std::vector<double>(code.channel().output_size(), 0.0));
  detail::for_each_output(code, x, fixed_nu, [&](const Word& y, double m) {
    for (std::size_t k = 0; k < y.size(); ++k) out[k][static_cast<std::size_t>(y[k])] += m;
  });
  return out;
}

struct SimFidelity {
  double strong = 0.0;         // max over delta-typical x of TV(out_x, W^n_x)
  double average = 0.0;        // sum_x P^n(x) TV(out_x, W^n_x)
  double atypical_mass = 0.0;  // P^n of non-typical words
  std::size_t typical_words = 0;
  Word worst_word;
};

// Exhaustive over X^n.
inline SimFidelity evaluate_sim_fidelity(const SimCode& code) {
  const Channel& w = code.channel();
  const int n = code.n();
  const std::uint64_t words = block_size(w.input_size(), n, code.params().caps);
  block_size(w.output_size(), n, code.params().caps);
  const TypicalSpec spec = code.typical_spec();
  std::vector<double> tv(static_cast<std::size_t>(words));
  parallel_for(static_cast<std::size_t>(words), code.params().workers, [&](std::size_t i) {
    const Word x = word_from_index(i, w.input_size(), n);
    tv[i] = tv_distance(std::span<const double>(output_distribution(code, x)),
                        std::span<const double>(product_channel_row(w, x, code.params().caps)));
  });
  SimFidelity f;
  for (std::uint64_t i = 0; i < words; ++i) {
    const Word x = word_from_index(i, w.input_size(), n);
    const double px = word_probability(code.source(), x);
    f.average += px * tv[i];
    if (is_typical(x, spec)) {
      ++f.typical_words;
      if (tv[i] > f.strong || f.worst_word.empty()) {
        f.strong = std::max(f.strong, tv[i]);
        f.worst_word = x;
      }
    } else {
      f.atypical_mass += px;
    }
  }
  return f;
}

struct SimAccounting {
  double log2_max_m = 0.0;
  double log2_n = 0.0;
  int announcement_bits = 0;
  double rate = 0.0;     // (log2 max M + announcement bits) / n
  double cr_rate = 0.0;  // log2 N / n
  double announcement_rate = 0.0;
  double mutual_information = 0.0;
  double conditional_entropy = 0.0;
  double output_entropy = 0.0;  // H(PW)
  // rate - I(P;W) and rate + cr_rate - H(PW).
  double rate_slack = 0.0;
  double sum_slack = 0.0;
  std::size_t type_count = 0;
};

inline SimAccounting accounting(const SimCode& code) {
  SimAccounting a;
  const double n = code.n();
  std::uint64_t max_m = 1;
  for (const auto& f : code.families()) max_m = std::max(max_m, f.words_per_nu());
  a.log2_max_m = std::log2(static_cast<double>(max_m));
  a.log2_n = std::log2(static_cast<double>(code.nu_count()));
  a.announcement_bits = code.announcement_bits();
  a.rate = (a.log2_max_m + a.announcement_bits) / n;
  a.cr_rate = a.log2_n / n;
  a.announcement_rate = a.announcement_bits / n;
  a.mutual_information = mutual_information(code.source(), code.channel());
  a.conditional_entropy = conditional_entropy(code.source(), code.channel());
  a.output_entropy = entropy(output_distribution(code.source(), code.channel()));
  a.rate_slack = a.rate - a.mutual_information;
  a.sum_slack = a.rate + a.cr_rate - a.output_entropy;
  a.type_count = code.families().size();
  return a;
}

}  // namespace distcomp
