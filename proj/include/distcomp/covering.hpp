#pragma once

// Randomized covering families over a joint type class and their exact
// verification.
//
// For a joint type T with marginals R (on X) and S (on Y), a family is an
// N x M array of words Y(nu, mu) in T_S such that
//   (I_nu) for every nu, (1/M) sum_mu V_T(. | Y(nu, mu)) lies within (1 +- eps)
//          of the uniform distribution on T_R, pointwise;
//   (II)   the empirical distribution of all N M words lies within (1 +- eps)
//          of the uniform distribution on T_S, pointwise.
// V_T(x | y) = 1 / |T_T(y)| when (x, y) has joint type T.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "distcomp/error.hpp"
#include "distcomp/rng.hpp"
#include "distcomp/types.hpp"

namespace distcomp {

inline constexpr double kDefaultCoveringEpsilon = 0.1;

// Probability bound for an average of M i.i.d. [0, 1]-valued functions on a
// set of size K, with mean >= s pointwise, leaving the (1 +- eta) corridor:
//   2 K 2^(-M eta^2 s / (2 ln 2)).
inline double lemma2_failure_bound(double class_size, double samples, double eta, double s) {
  require(class_size >= 1.0, "lemma2_failure_bound: K must be at least 1");
  require(samples >= 0.0, "lemma2_failure_bound: M must be nonnegative");
  require(eta > 0.0 && eta < 0.5, "lemma2_failure_bound: eta must lie in (0, 1/2)");
  require(s > 0.0, "lemma2_failure_bound: s must be positive");
  return 2.0 * class_size * std::exp2(-samples * eta * eta * s / (2.0 * std::log(2.0)));
}

// The M at which lemma2_failure_bound equals `target`.
inline double lemma2_samples_for(double class_size, double eta, double s, double target = 1.0) {
  require(target > 0.0, "lemma2_samples_for: target must be positive");
  require(eta > 0.0 && eta < 0.5 && s > 0.0, "lemma2_samples_for: parameter out of range");
  return 2.0 * std::log(2.0) / (eta * eta * s) * std::log2(2.0 * class_size / target);
}

struct CoveringSizes {
  BigInt m_min;
  BigInt n_min;
  // Right-hand sides at the returned N.
  double m_threshold = 0.0;   // (2 ln2/eps^2)(|T_R||T_S|/|T_T|) log(4 N |T_R|)
  double nm_threshold = 0.0;  // (2 ln2/eps^2) |T_S| log(4 |T_S|)
  int iterations = 0;
};

// Smallest (M, N) meeting both covering-size inequalities. M is taken minimal
// for the current N, then N is raised until N M clears the second bound.
// Raising N only raises M, so the loop ends after at most two rounds.
// `n_floor` starts the iteration at a larger N; the result then has N = n_floor
// whenever n_floor already clears the second bound.
inline CoveringSizes required_covering_sizes(const JointType& t, double epsilon,
                                             const BigInt& n_floor = 1) {
  require(epsilon > 0.0 && epsilon < 0.5, "required_covering_sizes: epsilon must lie in (0, 1/2)");
  const double log2_r = log2_type_class_size(t.x_marginal());
  const double log2_s = log2_type_class_size(t.y_marginal());
  const double log2_cond = log2_big(conditional_type_class_size(t));
  const double scale = 2.0 * std::log(2.0) / (epsilon * epsilon);
  // |T_R||T_S|/|T_T| = |T_S| / |T_T(x)|.
  const double ratio = std::exp2(log2_s - log2_cond);
  const double nm_bound = scale * std::exp2(log2_s) * (2.0 + log2_s);

  auto m_bound = [&](const BigInt& n) {
    return scale * ratio * (2.0 + log2_big(n) + log2_r);
  };
  auto floor_plus_one = [](double v) { return BigInt(std::floor(v)) + 1; };

  require(n_floor >= 1, "required_covering_sizes: n_floor must be positive");
  CoveringSizes out;
  BigInt n = n_floor;
  for (;;) {
    ++out.iterations;
    const BigInt m = floor_plus_one(m_bound(n));
    const BigInt needed = floor_plus_one(nm_bound / m.convert_to<double>());
    if (n >= needed) {
      out.m_min = m;
      out.n_min = n;
      out.m_threshold = m_bound(n);
      out.nm_threshold = nm_bound;
      return out;
    }
    n = needed;
  }
}

// Type classes T_R, T_S and the bipartite relation "has joint type T".
class CoveringGeometry {
 public:
  CoveringGeometry(const JointType& t, const EnumerationCaps& caps = {})
      : type_(t), x_class_(t.x_marginal(), caps), y_class_(t.y_marginal(), caps) {
    // T_T(y) is the conditional class of the transposed joint type.
    std::vector<int> transposed(t.counts().size());
    for (std::size_t x = 0; x < t.x_size(); ++x)
      for (std::size_t y = 0; y < t.y_size(); ++y)
        transposed[y * t.x_size() + x] = t(x, y);
    const JointType tt(t.y_size(), t.x_size(), std::move(transposed));
    adjacency_.resize(y_class_.size());
    for (std::size_t yr = 0; yr < y_class_.size(); ++yr) {
      for (const Word& xw : enumerate_conditional_class(tt, y_class_[yr], caps))
        adjacency_[yr].push_back(static_cast<std::uint32_t>(x_class_.rank(xw)));
    }
    cond_x_size_ = conditional_type_class_size(t).convert_to<double>();
    cond_y_size_ = static_cast<double>(adjacency_.empty() ? 0 : adjacency_.front().size());
  }

  const JointType& type() const noexcept { return type_; }
  const TypeClass& x_class() const noexcept { return x_class_; }
  const TypeClass& y_class() const noexcept { return y_class_; }
  // x ranks forming joint type T with the y word of rank yr.
  const std::vector<std::uint32_t>& adjacent(std::size_t yr) const { return adjacency_[yr]; }
  double conditional_x_size() const noexcept { return cond_x_size_; }  // |T_T(x)|
  double conditional_y_size() const noexcept { return cond_y_size_; }  // |T_T(y)|

 private:
  JointType type_;
  TypeClass x_class_;
  TypeClass y_class_;
  std::vector<std::vector<std::uint32_t>> adjacency_;
  double cond_x_size_ = 0.0;
  double cond_y_size_ = 0.0;
};

enum class CoveringMode { guaranteed, sized };

// A covering family. Each nu-row is kept as a multiset of T_S ranks: runs of
// (rank, multiplicity) sorted by rank, and mu indexes the sorted order. The
// covering conditions are invariant under reordering within a row.
class CoveringFamily {
 public:
  struct Run {
    std::uint32_t rank;
    std::uint64_t count;
    friend bool operator==(const Run&, const Run&) = default;
  };

  CoveringFamily(JointType t, double epsilon, std::uint64_t words_per_nu,
                 std::vector<std::vector<Run>> rows)
      : type_(std::move(t)), epsilon_(epsilon), words_per_nu_(words_per_nu), rows_(std::move(rows)) {
    require(epsilon_ > 0.0 && epsilon_ < 0.5, "CoveringFamily: epsilon must lie in (0, 1/2)");
    require(!rows_.empty() && words_per_nu_ >= 1, "CoveringFamily: N and M must be positive");
    for (const auto& row : rows_) {
      std::uint64_t total = 0;
      for (std::size_t i = 0; i < row.size(); ++i) {
        total += row[i].count;
        require(row[i].count > 0, "CoveringFamily: empty run");
        require(i == 0 || row[i - 1].rank < row[i].rank, "CoveringFamily: runs must be sorted");
      }
      require(total == words_per_nu_, "CoveringFamily: row does not hold M words");
    }
  }

  // From an explicit N x M array of T_S ranks.
  static CoveringFamily from_ranks(JointType t, double epsilon,
                                   const std::vector<std::vector<std::uint32_t>>& words) {
    require(!words.empty(), "CoveringFamily::from_ranks: no rows");
    const std::uint64_t m = words.front().size();
    std::vector<std::vector<Run>> rows;
    rows.reserve(words.size());
    for (const auto& w : words) {
      require(w.size() == m, "CoveringFamily::from_ranks: ragged rows");
      std::vector<std::uint32_t> sorted = w;
      std::sort(sorted.begin(), sorted.end());
      std::vector<Run> runs;
      for (std::uint32_t r : sorted) {
        if (!runs.empty() && runs.back().rank == r)
          ++runs.back().count;
        else
          runs.push_back({r, 1});
      }
      rows.push_back(std::move(runs));
    }
    return CoveringFamily(std::move(t), epsilon, m, std::move(rows));
  }

  const JointType& type() const noexcept { return type_; }
  double epsilon() const noexcept { return epsilon_; }
  std::uint64_t nu_count() const noexcept { return rows_.size(); }
  std::uint64_t words_per_nu() const noexcept { return words_per_nu_; }
  const std::vector<Run>& row(std::size_t nu) const { return rows_.at(nu); }
  const std::vector<std::vector<Run>>& rows() const noexcept { return rows_; }

  std::uint32_t rank_at(std::size_t nu, std::uint64_t mu) const {
    require(nu < rows_.size(), "CoveringFamily: nu out of range");
    require(mu < words_per_nu_, "CoveringFamily: mu out of range");
    for (const Run& r : rows_[nu]) {
      if (mu < r.count) return r.rank;
      mu -= r.count;
    }
    return rows_[nu].back().rank;
  }

  std::size_t retries = 0;  // draws rejected before acceptance
  CoveringMode mode = CoveringMode::sized;

 private:
  JointType type_;
  double epsilon_;
  std::uint64_t words_per_nu_;
  std::vector<std::vector<Run>> rows_;
};

struct CoveringCheck {
  // Relative slack eps - max |value / target - 1|, per nu for (I_nu).
  std::vector<double> condition_I_margin;
  double condition_II_margin = 0.0;
  bool passed = false;
};

inline CoveringCheck verify_covering(const CoveringFamily& family, const CoveringGeometry& geo) {
  require(family.type() == geo.type(), "verify_covering: geometry built for another joint type");
  const double eps = family.epsilon();
  const double m = static_cast<double>(family.words_per_nu());
  const double size_r = static_cast<double>(geo.x_class().size());
  const double size_s = static_cast<double>(geo.y_class().size());
  const double v_weight = 1.0 / geo.conditional_y_size();

  CoveringCheck check;
  check.condition_I_margin.reserve(family.nu_count());
  std::vector<double> avg(geo.x_class().size());
  std::vector<double> empirical(geo.y_class().size(), 0.0);
  for (std::size_t nu = 0; nu < family.nu_count(); ++nu) {
    std::fill(avg.begin(), avg.end(), 0.0);
    for (const auto& run : family.row(nu)) {
      require(run.rank < geo.y_class().size(), "verify_covering: rank outside T_S");
      empirical[run.rank] += static_cast<double>(run.count);
      const double w = static_cast<double>(run.count) / m * v_weight;
      for (std::uint32_t xr : geo.adjacent(run.rank)) avg[xr] += w;
    }
    double worst = 0.0;
    for (double a : avg) worst = std::max(worst, std::abs(a * size_r - 1.0));
    check.condition_I_margin.push_back(eps - worst);
  }
  const double total = m * static_cast<double>(family.nu_count());
  double worst = 0.0;
  for (double e : empirical) worst = std::max(worst, std::abs(e / total * size_s - 1.0));
  check.condition_II_margin = eps - worst;
  check.passed = check.condition_II_margin >= 0.0 &&
                 std::all_of(check.condition_I_margin.begin(), check.condition_I_margin.end(),
                             [](double v) { return v >= 0.0; });
  return check;
}

inline CoveringCheck verify_covering(const CoveringFamily& family, const EnumerationCaps& caps = {}) {
  return verify_covering(family, CoveringGeometry(family.type(), caps));
}

struct CoveringRequest {
  CoveringMode mode = CoveringMode::guaranteed;
  std::uint64_t m = 0;  // sized mode only
  std::uint64_t n = 0;  // sized mode: N; guaranteed mode: lower bound on N
  std::uint64_t seed = 0;
  std::size_t max_retries = 20;
};

// Draws N M i.i.d. uniform words of T_S, retrying until verification passes.
// Row nu of attempt a uses the stream
//   derive_seed(derive_seed(seed, "covering/attempt", a), "covering/nu", nu).
inline CoveringFamily build_covering(const CoveringGeometry& geo, double epsilon,
                                     const CoveringRequest& req, const EnumerationCaps& caps = {}) {
  std::uint64_t m = req.m;
  std::uint64_t n = req.n;
  if (req.mode == CoveringMode::guaranteed) {
    const CoveringSizes sizes =
        required_covering_sizes(geo.type(), epsilon, BigInt(std::max<std::uint64_t>(req.n, 1)));
    if (sizes.m_min * sizes.n_min > caps.max_family_words)
      fail(ErrorKind::cap_exceeded, "build_covering: required N*M exceeds the family cap");
    m = sizes.m_min.convert_to<std::uint64_t>();
    n = sizes.n_min.convert_to<std::uint64_t>();
  } else {
    require(m >= 1 && n >= 1, "build_covering: sized mode needs M, N >= 1");
    if (BigInt(m) * n > caps.max_family_words)
      fail(ErrorKind::cap_exceeded, "build_covering: N*M exceeds the family cap");
  }
  require(req.max_retries >= 1, "build_covering: max_retries must be positive");

  const std::size_t size_s = geo.y_class().size();
  std::vector<std::uint64_t> counts(size_s);
  for (std::size_t attempt = 0; attempt < req.max_retries; ++attempt) {
    const std::uint64_t attempt_seed = derive_seed(req.seed, "covering/attempt", attempt);
    std::vector<std::vector<CoveringFamily::Run>> rows;
    rows.reserve(n);
    for (std::uint64_t nu = 0; nu < n; ++nu) {
      Rng rng(derive_seed(attempt_seed, "covering/nu", nu));
      std::fill(counts.begin(), counts.end(), 0);
      for (std::uint64_t mu = 0; mu < m; ++mu) ++counts[rng.uniform_index(size_s)];
      std::vector<CoveringFamily::Run> runs;
      for (std::size_t r = 0; r < size_s; ++r)
        if (counts[r] > 0) runs.push_back({static_cast<std::uint32_t>(r), counts[r]});
      rows.push_back(std::move(runs));
    }
    CoveringFamily family(geo.type(), epsilon, m, std::move(rows));
    family.mode = req.mode;
    family.retries = attempt;
    if (verify_covering(family, geo).passed) return family;
  }
  fail(ErrorKind::retries_exhausted,
       "build_covering: no draw passed verification after " + std::to_string(req.max_retries) +
           " attempts (M=" + std::to_string(m) + ", N=" + std::to_string(n) + ")");
}

inline CoveringFamily build_covering(const JointType& t, double epsilon, const CoveringRequest& req,
                                     const EnumerationCaps& caps = {}) {
  return build_covering(CoveringGeometry(t, caps), epsilon, req, caps);
}

// Union-bound failure probability of one random draw at (M, N):
//   sum_nu 2|T_R| 2^(-M eps^2 |T_T(y)| / (2 ln2 |T_R|)) + 2|T_S| 2^(-N M eps^2 / (2 ln2 |T_S|)).
inline double covering_failure_bound(const JointType& t, double epsilon, double m, double n) {
  const double size_r = std::exp2(log2_type_class_size(t.x_marginal()));
  const double size_s = std::exp2(log2_type_class_size(t.y_marginal()));
  // |T_T(y)| = |T_T| / |T_S|.
  const double cond_y = std::exp2(log2_big(joint_type_class_size(t)) - std::log2(size_s));
  const double per_nu = lemma2_failure_bound(size_r, m, epsilon, cond_y / size_r);
  const double joint = lemma2_failure_bound(size_s, n * m, epsilon, 1.0 / size_s);
  return n * per_nu + joint;
}

}  // namespace distcomp
