#pragma once

// Exact n-types, joint types, type classes and typical sets.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "distcomp/error.hpp"
#include "distcomp/prob.hpp"
#include "distcomp/rng.hpp"

namespace distcomp {

using BigInt = boost::multiprecision::cpp_int;
using Word = std::vector<int>;

// Enumeration limits. Exceeding any of them is an ErrorKind::cap_exceeded
// error, never a silent truncation.
struct EnumerationCaps {
  int max_n = 16;                             // block length for type enumeration
  std::size_t max_cells = 9;                  // |X||Y| for joint-type enumeration
  std::uint64_t max_class_size = 1u << 20;    // words materialized per type class
  std::uint64_t max_block_words = 1u << 16;   // |X|^n or |Y|^n for block distributions
  std::uint64_t max_family_words = 50000000;  // N*M draws per covering family
};

inline double log2_big(const BigInt& v) {
  if (v <= 0) return -std::numeric_limits<double>::infinity();
  // Shift large values down to keep the conversion in range.
  const auto bits = static_cast<long>(boost::multiprecision::msb(v));
  if (bits < 1000) return std::log2(v.convert_to<double>());
  BigInt shifted = v >> (bits - 60);
  return std::log2(shifted.convert_to<double>()) + static_cast<double>(bits - 60);
}

// n! / prod counts!
inline BigInt multinomial(std::span<const int> counts) {
  BigInt result = 1;
  long running = 0;
  for (int c : counts) {
    require(c >= 0, "multinomial: negative count");
    for (int i = 1; i <= c; ++i) {
      ++running;
      result *= running;
      result /= i;
    }
  }
  return result;
}

inline double log2_multinomial(std::span<const int> counts) {
  double n = 0.0;
  double acc = 0.0;
  for (int c : counts) {
    n += c;
    acc -= std::lgamma(static_cast<double>(c) + 1.0);
  }
  return (acc + std::lgamma(n + 1.0)) / std::log(2.0);
}

class ExactType {
 public:
  explicit ExactType(std::vector<int> counts) : counts_(std::move(counts)) {
    require(!counts_.empty(), "ExactType: empty alphabet");
    for (int c : counts_) {
      require(c >= 0, "ExactType: negative count");
      n_ += c;
    }
    require(n_ >= 1, "ExactType: block length must be positive");
  }

  int n() const noexcept { return n_; }
  std::size_t alphabet_size() const noexcept { return counts_.size(); }
  int operator[](std::size_t i) const { return counts_[i]; }
  const std::vector<int>& counts() const noexcept { return counts_; }

  Distribution distribution() const {
    std::vector<double> p(counts_.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = static_cast<double>(counts_[i]) / static_cast<double>(n_);
    return Distribution(std::move(p));
  }

  friend auto operator<=>(const ExactType& a, const ExactType& b) {
    return a.counts_ <=> b.counts_;
  }
  friend bool operator==(const ExactType&, const ExactType&) = default;

 private:
  std::vector<int> counts_;
  int n_ = 0;
};

// Count matrix over X x Y, row-major.
class JointType {
 public:
  JointType(std::size_t x_size, std::size_t y_size, std::vector<int> counts)
      : x_size_(x_size), y_size_(y_size), counts_(std::move(counts)) {
    require(x_size > 0 && y_size > 0, "JointType: sizes must be positive");
    require(counts_.size() == x_size * y_size, "JointType: count matrix size mismatch");
    for (int c : counts_) {
      require(c >= 0, "JointType: negative count");
      n_ += c;
    }
    require(n_ >= 1, "JointType: block length must be positive");
  }

  int n() const noexcept { return n_; }
  std::size_t x_size() const noexcept { return x_size_; }
  std::size_t y_size() const noexcept { return y_size_; }
  int operator()(std::size_t x, std::size_t y) const { return counts_[x * y_size_ + y]; }
  const std::vector<int>& counts() const noexcept { return counts_; }

  std::span<const int> row(std::size_t x) const {
    return {counts_.data() + x * y_size_, y_size_};
  }

  int row_sum(std::size_t x) const {
    int s = 0;
    for (int c : row(x)) s += c;
    return s;
  }

  ExactType x_marginal() const {
    std::vector<int> m(x_size_, 0);
    for (std::size_t x = 0; x < x_size_; ++x) m[x] = row_sum(x);
    return ExactType(std::move(m));
  }

  ExactType y_marginal() const {
    std::vector<int> m(y_size_, 0);
    for (std::size_t x = 0; x < x_size_; ++x)
      for (std::size_t y = 0; y < y_size_; ++y) m[y] += (*this)(x, y);
    return ExactType(std::move(m));
  }

  // Z with T(xy) = R(x) Z(y|x); rows with R(x) = 0 are uniform.
  Channel conditional_channel() const {
    std::vector<double> flat(counts_.size());
    for (std::size_t x = 0; x < x_size_; ++x) {
      const int r = row_sum(x);
      for (std::size_t y = 0; y < y_size_; ++y)
        flat[x * y_size_ + y] = r > 0 ? static_cast<double>((*this)(x, y)) / r
                                      : 1.0 / static_cast<double>(y_size_);
    }
    return Channel(x_size_, y_size_, std::move(flat));
  }

  // H(Z|R) in bits.
  double conditional_entropy() const {
    double h = 0.0;
    for (std::size_t x = 0; x < x_size_; ++x) {
      const int r = row_sum(x);
      if (r == 0) continue;
      double hx = 0.0;
      for (int c : row(x))
        if (c > 0) hx -= (static_cast<double>(c) / r) * std::log2(static_cast<double>(c) / r);
      h += static_cast<double>(r) / n_ * hx;
    }
    return h;
  }

  friend auto operator<=>(const JointType& a, const JointType& b) {
    if (auto c = a.x_size_ <=> b.x_size_; c != 0) return c;
    if (auto c = a.y_size_ <=> b.y_size_; c != 0) return c;
    return a.counts_ <=> b.counts_;
  }
  friend bool operator==(const JointType&, const JointType&) = default;

 private:
  std::size_t x_size_;
  std::size_t y_size_;
  std::vector<int> counts_;
  int n_ = 0;
};

inline void check_word(const Word& word, std::size_t alphabet_size) {
  require(!word.empty(), "word must be nonempty");
  for (int s : word)
    require(s >= 0 && static_cast<std::size_t>(s) < alphabet_size,
            "symbol " + std::to_string(s) + " out of range for alphabet of size " +
                std::to_string(alphabet_size));
}

// N(x|word) for every x.
inline ExactType count_occurrences(const Word& word, std::size_t alphabet_size) {
  check_word(word, alphabet_size);
  std::vector<int> counts(alphabet_size, 0);
  for (int s : word) ++counts[static_cast<std::size_t>(s)];
  return ExactType(std::move(counts));
}

inline JointType joint_type_of(const Word& x, const Word& y, std::size_t x_size,
                               std::size_t y_size) {
  require(x.size() == y.size(), "joint_type_of: word lengths differ");
  check_word(x, x_size);
  check_word(y, y_size);
  std::vector<int> counts(x_size * y_size, 0);
  for (std::size_t k = 0; k < x.size(); ++k)
    ++counts[static_cast<std::size_t>(x[k]) * y_size + static_cast<std::size_t>(y[k])];
  return JointType(x_size, y_size, std::move(counts));
}

// True when (x, y) has joint type t; no allocation.
inline bool has_joint_type(const Word& x, const Word& y, const JointType& t,
                           std::vector<int>& scratch) {
  scratch.assign(t.counts().size(), 0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const std::size_t cell =
        static_cast<std::size_t>(x[k]) * t.y_size() + static_cast<std::size_t>(y[k]);
    if (++scratch[cell] > t.counts()[cell]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Typical sets: |N(x|word) - nP(x)| <= delta sqrt(n) sigma_x,
// sigma_x = sqrt(P(x)(1 - P(x))).
// ---------------------------------------------------------------------------

struct TypicalSpec {
  Distribution p;
  int n = 1;
  double delta = 0.0;

  TypicalSpec(Distribution dist, int block_length, double d)
      : p(std::move(dist)), n(block_length), delta(d) {
    require(n >= 1, "TypicalSpec: n must be positive");
    require(delta >= 0.0, "TypicalSpec: delta must be nonnegative");
  }

  double sigma(std::size_t x) const { return std::sqrt(p[x] * (1.0 - p[x])); }

  // Half-width of the admissible count window for symbol x.
  double window(std::size_t x) const {
    return delta * std::sqrt(static_cast<double>(n)) * sigma(x);
  }
};

namespace detail {
// Absorbs rounding in delta * sqrt(n) * sigma so that exact boundary counts pass.
inline constexpr double kWindowSlack = 1e-9;

inline bool count_in_window(int count, double mean, double half_width) {
  return std::abs(static_cast<double>(count) - mean) <= half_width + kWindowSlack;
}
}  // namespace detail

inline bool is_typical_type(const ExactType& t, const TypicalSpec& spec) {
  require(t.alphabet_size() == spec.p.size(), "is_typical_type: alphabet mismatch");
  require(t.n() == spec.n, "is_typical_type: block length mismatch");
  for (std::size_t x = 0; x < t.alphabet_size(); ++x)
    if (!detail::count_in_window(t[x], spec.n * spec.p[x], spec.window(x))) return false;
  return true;
}

inline bool is_typical(const Word& word, const TypicalSpec& spec) {
  require(static_cast<int>(word.size()) == spec.n, "is_typical: word length differs from n");
  return is_typical_type(count_occurrences(word, spec.p.size()), spec);
}

// Conditional typicality of a joint type: each row x with R(x) = r > 0 has
// |T(xy) - r W(y|x)| <= delta sqrt(r) sigma_xy.
inline bool is_conditionally_typical(const JointType& t, const Channel& w, double delta) {
  require(t.x_size() == w.input_size() && t.y_size() == w.output_size(),
          "is_conditionally_typical: dimension mismatch");
  for (std::size_t x = 0; x < t.x_size(); ++x) {
    const int r = t.row_sum(x);
    if (r == 0) continue;
    for (std::size_t y = 0; y < t.y_size(); ++y) {
      const double p = w(x, y);
      const double half = delta * std::sqrt(static_cast<double>(r)) * std::sqrt(p * (1.0 - p));
      if (!detail::count_in_window(t(x, y), r * p, half)) return false;
    }
  }
  return true;
}

struct TypicalProbability {
  double chebyshev;  // 1 - |X| / delta^2
  double chernoff;   // 1 - |X| 2^(-delta^2)
  double exact;      // P^n(typical set)
};

namespace detail {
inline double binomial_pmf(int m, int c, double p) {
  if (c < 0 || c > m) return 0.0;
  if (p <= 0.0) return c == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return c == m ? 1.0 : 0.0;
  const double lg = std::lgamma(m + 1.0) - std::lgamma(c + 1.0) - std::lgamma(m - c + 1.0);
  return std::exp(lg + c * std::log(p) + (m - c) * std::log1p(-p));
}
}  // namespace detail

// Exact P^n of the typical set by dynamic programming over counts: the count
// of symbol i given the earlier counts is binomial on the remaining positions,
// and the window constraint is per symbol, so the state is the number of
// positions still unassigned. O(|X| n^2).
inline double typical_set_probability(const TypicalSpec& spec) {
  const int n = spec.n;
  const std::size_t a = spec.p.size();
  std::vector<double> mass(static_cast<std::size_t>(n) + 1, 0.0);
  mass[static_cast<std::size_t>(n)] = 1.0;
  double used = 0.0;
  for (std::size_t i = 0; i + 1 < a; ++i) {
    const double rest = 1.0 - used;
    const double cond = rest > 0.0 ? std::clamp(spec.p[i] / rest, 0.0, 1.0) : 0.0;
    std::vector<double> next(mass.size(), 0.0);
    for (int m = 0; m <= n; ++m) {
      const double w = mass[static_cast<std::size_t>(m)];
      if (w == 0.0) continue;
      for (int c = 0; c <= m; ++c) {
        if (!detail::count_in_window(c, n * spec.p[i], spec.window(i))) continue;
        next[static_cast<std::size_t>(m - c)] += w * detail::binomial_pmf(m, c, cond);
      }
    }
    mass = std::move(next);
    used += spec.p[i];
  }
  double total = 0.0;
  for (int m = 0; m <= n; ++m)
    if (detail::count_in_window(m, n * spec.p[a - 1], spec.window(a - 1)))
      total += mass[static_cast<std::size_t>(m)];
  return std::min(total, 1.0);
}

inline TypicalProbability typical_probability_bounds(const TypicalSpec& spec) {
  const double a = static_cast<double>(spec.p.size());
  const double d2 = spec.delta * spec.delta;
  TypicalProbability out{};
  out.chebyshev = d2 > 0.0 ? 1.0 - a / d2 : -std::numeric_limits<double>::infinity();
  out.chernoff = 1.0 - a * std::exp2(-d2);
  out.exact = typical_set_probability(spec);
  return out;
}

// ---------------------------------------------------------------------------
// Cardinalities.
// ---------------------------------------------------------------------------

inline BigInt type_class_size(const ExactType& t) { return multinomial(t.counts()); }

inline double log2_type_class_size(const ExactType& t) { return log2_multinomial(t.counts()); }

// |T_T(x)| = prod_x multinomial(row x); independent of the particular x word.
inline BigInt conditional_type_class_size(const JointType& t) {
  BigInt s = 1;
  for (std::size_t x = 0; x < t.x_size(); ++x) s *= multinomial(t.row(x));
  return s;
}

inline BigInt conditional_type_class_size(const JointType& t, const Word& x_word) {
  require(count_occurrences(x_word, t.x_size()) == t.x_marginal(),
          "conditional_type_class_size: word type differs from the joint type's X-marginal");
  return conditional_type_class_size(t);
}

// |T_T| = |T_R| |T_T(x)|.
inline BigInt joint_type_class_size(const JointType& t) {
  return type_class_size(t.x_marginal()) * conditional_type_class_size(t);
}

// log2 W^n(T_T(x) | x), the probability that a word drawn from W^n_x lands in
// the conditional class.
inline double log2_conditional_class_probability(const JointType& t, const Channel& w) {
  double lp = log2_big(conditional_type_class_size(t));
  for (std::size_t x = 0; x < t.x_size(); ++x)
    for (std::size_t y = 0; y < t.y_size(); ++y) {
      const int c = t(x, y);
      if (c == 0) continue;
      if (w(x, y) <= 0.0) return -std::numeric_limits<double>::infinity();
      lp += c * std::log2(w(x, y));
    }
  return lp;
}

// Two-sided size bounds at delta = 0, all in log2:
//   |T_R|     in [ nH(R) - |X| log(n+1),     nH(R) ]
//   |T_T(x)|  in [ nH(Z|R) - |X||Y| log(n+1), nH(Z|R) ]
struct Log2Sandwich {
  double lower;
  double value;
  double upper;

  bool holds(double tol = 1e-9) const { return lower <= value + tol && value <= upper + tol; }
};

inline Log2Sandwich type_class_sandwich(const ExactType& r) {
  const double n = r.n();
  const double nh = n * entropy(r.distribution());
  return {nh - static_cast<double>(r.alphabet_size()) * std::log2(n + 1.0),
          log2_big(type_class_size(r)), nh};
}

inline Log2Sandwich conditional_class_sandwich(const JointType& t) {
  const double n = t.n();
  const double nh = n * t.conditional_entropy();
  return {nh - static_cast<double>(t.x_size() * t.y_size()) * std::log2(n + 1.0),
          log2_big(conditional_type_class_size(t)), nh};
}

// ---------------------------------------------------------------------------
// Enumeration.
// ---------------------------------------------------------------------------

// Calls fn for every weak composition of total into parts, in ascending
// lexicographic order.
inline void for_each_composition(int total, std::size_t parts,
                                 const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> cur(parts, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int remaining) {
    if (i + 1 == parts) {
      cur[i] = remaining;
      fn(cur);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      cur[i] = c;
      rec(i + 1, remaining - c);
    }
  };
  if (parts == 0) return;
  rec(0, total);
}

inline std::vector<ExactType> enumerate_types(int n, std::size_t alphabet_size,
                                              const EnumerationCaps& caps = {}) {
  require(n >= 1 && alphabet_size >= 1, "enumerate_types: invalid sizes");
  if (n > caps.max_n) fail(ErrorKind::cap_exceeded, "enumerate_types: n exceeds cap");
  std::vector<ExactType> out;
  for_each_composition(n, alphabet_size, [&](const std::vector<int>& c) { out.emplace_back(c); });
  return out;
}

// All joint n-types on X x Y, optionally restricted to a given X-marginal,
// in lexicographic order of the row-major count matrix.
inline std::vector<JointType> enumerate_joint_types(int n, std::size_t x_size, std::size_t y_size,
                                                    const std::optional<ExactType>& base = {},
                                                    const EnumerationCaps& caps = {}) {
  require(n >= 1 && x_size >= 1 && y_size >= 1, "enumerate_joint_types: invalid sizes");
  if (n > caps.max_n || x_size * y_size > caps.max_cells)
    fail(ErrorKind::cap_exceeded,
         "enumerate_joint_types: n=" + std::to_string(n) + " cells=" +
             std::to_string(x_size * y_size) + " exceeds cap");
  std::vector<JointType> out;
  if (!base) {
    for_each_composition(n, x_size * y_size, [&](const std::vector<int>& c) {
      out.emplace_back(x_size, y_size, c);
    });
    return out;
  }
  require(base->alphabet_size() == x_size && base->n() == n,
          "enumerate_joint_types: base type does not match n or |X|");
  std::vector<std::vector<std::vector<int>>> row_options(x_size);
  for (std::size_t x = 0; x < x_size; ++x)
    for_each_composition((*base)[x], y_size,
                         [&](const std::vector<int>& c) { row_options[x].push_back(c); });
  std::vector<int> cur(x_size * y_size, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t x) {
    if (x == x_size) {
      out.emplace_back(x_size, y_size, cur);
      return;
    }
    for (const auto& r : row_options[x]) {
      std::copy(r.begin(), r.end(), cur.begin() + static_cast<std::ptrdiff_t>(x * y_size));
      rec(x + 1);
    }
  };
  rec(0);
  return out;
}

// Words of a type class in lexicographic order.
class TypeClass {
 public:
  explicit TypeClass(ExactType type, const EnumerationCaps& caps = {}) : type_(std::move(type)) {
    const BigInt size = type_class_size(type_);
    if (size > caps.max_class_size)
      fail(ErrorKind::cap_exceeded, "TypeClass: class size exceeds cap");
    words_.reserve(size.convert_to<std::size_t>());
    Word w;
    for (std::size_t s = 0; s < type_.alphabet_size(); ++s)
      w.insert(w.end(), static_cast<std::size_t>(type_[s]), static_cast<int>(s));
    do {
      words_.push_back(w);
    } while (std::next_permutation(w.begin(), w.end()));
  }

  const ExactType& type() const noexcept { return type_; }
  std::size_t size() const noexcept { return words_.size(); }
  const Word& operator[](std::size_t rank) const { return words_[rank]; }
  const std::vector<Word>& words() const noexcept { return words_; }

  std::size_t rank(const Word& w) const {
    auto it = std::lower_bound(words_.begin(), words_.end(), w);
    require(it != words_.end() && *it == w, "TypeClass::rank: word is not in the class");
    return static_cast<std::size_t>(it - words_.begin());
  }

 private:
  ExactType type_;
  std::vector<Word> words_;
};

// Every y with joint type t against the fixed x, in lexicographic order.
inline std::vector<Word> enumerate_conditional_class(const JointType& t, const Word& x_word,
                                                     const EnumerationCaps& caps = {}) {
  require(count_occurrences(x_word, t.x_size()) == t.x_marginal(),
          "enumerate_conditional_class: word type differs from the X-marginal");
  if (conditional_type_class_size(t) > caps.max_class_size)
    fail(ErrorKind::cap_exceeded, "enumerate_conditional_class: class size exceeds cap");
  // Per input symbol: its positions and the multiset of outputs to place there.
  std::vector<std::vector<std::size_t>> positions(t.x_size());
  for (std::size_t k = 0; k < x_word.size(); ++k)
    positions[static_cast<std::size_t>(x_word[k])].push_back(k);
  std::vector<std::vector<Word>> row_words(t.x_size());
  for (std::size_t x = 0; x < t.x_size(); ++x) {
    Word w;
    for (std::size_t y = 0; y < t.y_size(); ++y)
      w.insert(w.end(), static_cast<std::size_t>(t(x, y)), static_cast<int>(y));
    do {
      row_words[x].push_back(w);
    } while (std::next_permutation(w.begin(), w.end()));
  }
  std::vector<Word> out;
  Word y(x_word.size(), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t x) {
    if (x == t.x_size()) {
      out.push_back(y);
      return;
    }
    for (const auto& rw : row_words[x]) {
      for (std::size_t i = 0; i < rw.size(); ++i) y[positions[x][i]] = rw[i];
      rec(x + 1);
    }
  };
  rec(0);
  std::sort(out.begin(), out.end());
  return out;
}

// Uniform element of T_T(x_word), deterministic given the seed.
inline Word sample_conditional_type_word(const JointType& t, const Word& x_word,
                                         std::uint64_t seed) {
  require(count_occurrences(x_word, t.x_size()) == t.x_marginal(),
          "sample_conditional_type_word: word type differs from the X-marginal");
  Rng rng(derive_seed(seed, "types/conditional-word"));
  Word y(x_word.size(), 0);
  for (std::size_t x = 0; x < t.x_size(); ++x) {
    std::vector<std::size_t> pos;
    for (std::size_t k = 0; k < x_word.size(); ++k)
      if (static_cast<std::size_t>(x_word[k]) == x) pos.push_back(k);
    Word fill;
    for (std::size_t yy = 0; yy < t.y_size(); ++yy)
      fill.insert(fill.end(), static_cast<std::size_t>(t(x, yy)), static_cast<int>(yy));
    rng.shuffle(std::span<int>(fill));
    for (std::size_t i = 0; i < pos.size(); ++i) y[pos[i]] = fill[i];
  }
  return y;
}

// ---------------------------------------------------------------------------
// Block words over a full alphabet, indexed lexicographically (base |A|).
// ---------------------------------------------------------------------------

inline std::uint64_t block_size(std::size_t alphabet_size, int n, const EnumerationCaps& caps) {
  std::uint64_t s = 1;
  for (int k = 0; k < n; ++k) {
    s *= alphabet_size;
    if (s > caps.max_block_words)
      fail(ErrorKind::cap_exceeded, "block word space " + std::to_string(alphabet_size) + "^" +
                                        std::to_string(n) + " exceeds cap");
  }
  return s;
}

inline std::uint64_t word_index(const Word& w, std::size_t alphabet_size) {
  std::uint64_t idx = 0;
  for (int s : w) idx = idx * alphabet_size + static_cast<std::uint64_t>(s);
  return idx;
}

inline Word word_from_index(std::uint64_t idx, std::size_t alphabet_size, int n) {
  Word w(static_cast<std::size_t>(n), 0);
  for (int k = n - 1; k >= 0; --k) {
    w[static_cast<std::size_t>(k)] = static_cast<int>(idx % alphabet_size);
    idx /= alphabet_size;
  }
  return w;
}

// P^n(word).
inline double word_probability(const Distribution& p, const Word& w) {
  double v = 1.0;
  for (int s : w) v *= p[static_cast<std::size_t>(s)];
  return v;
}

// W^n(. | x) as a dense vector over Y^n.
inline std::vector<double> product_channel_row(const Channel& w, const Word& x,
                                               const EnumerationCaps& caps = {}) {
  const std::size_t ys = w.output_size();
  const std::uint64_t total = block_size(ys, static_cast<int>(x.size()), caps);
  std::vector<double> row(static_cast<std::size_t>(total), 0.0);
  row[0] = 1.0;
  std::size_t filled = 1;
  // Build by extending one letter at a time: index = prefix * |Y| + y.
  std::vector<double> next;
  for (int s : x) {
    next.assign(filled * ys, 0.0);
    for (std::size_t i = 0; i < filled; ++i)
      for (std::size_t y = 0; y < ys; ++y)
        next[i * ys + y] = row[i] * w(static_cast<std::size_t>(s), y);
    filled *= ys;
    std::copy(next.begin(), next.end(), row.begin());
  }
  return row;
}

}  // namespace distcomp
