#pragma once

// Finite distributions, channels and the information quantities built on
// them. All logarithms are base 2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "distcomp/error.hpp"

namespace distcomp {

inline constexpr double kStochasticTolerance = 1e-9;
// Masses below this are treated as exact zeros inside entropy sums.
inline constexpr double kNegligibleMass = 1e-12;

namespace detail {

// Checks a probability vector and renormalizes drift below tolerance.
inline void normalize_or_throw(std::vector<double>& probs, const char* what) {
  require(!probs.empty(), std::string(what) + ": empty probability vector");
  double total = 0.0;
  for (double& v : probs) {
    require(std::isfinite(v), std::string(what) + ": non-finite entry");
    if (v < 0.0 && v >= -kStochasticTolerance) v = 0.0;
    require(v >= 0.0, std::string(what) + ": negative entry");
    total += v;
  }
  require(std::abs(total - 1.0) <= kStochasticTolerance,
          std::string(what) + ": entries sum to " + std::to_string(total));
  for (double& v : probs) v /= total;
}

inline double plogp(double p) {
  return p > kNegligibleMass ? -p * std::log2(p) : 0.0;
}

}  // namespace detail

// Entropy in bits of a nonnegative vector, 0 log 0 = 0.
inline double entropy_bits(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) h += detail::plogp(p);
  return h;
}

inline double binary_entropy(double p) {
  return detail::plogp(p) + detail::plogp(1.0 - p);
}

class Distribution {
 public:
  explicit Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    detail::normalize_or_throw(probs_, "Distribution");
  }

  static Distribution uniform(std::size_t size) {
    require(size > 0, "Distribution::uniform: size must be positive");
    return Distribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
  }

  static Distribution point_mass(std::size_t size, std::size_t at) {
    require(at < size, "Distribution::point_mass: index out of range");
    std::vector<double> p(size, 0.0);
    p[at] = 1.0;
    return Distribution(std::move(p));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::vector<double>& vector() const noexcept { return probs_; }

  std::size_t support_size() const {
    return static_cast<std::size_t>(std::count_if(
        probs_.begin(), probs_.end(), [](double v) { return v > kNegligibleMass; }));
  }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<double> probs_;
};

// Row-stochastic matrix, row x is the output distribution W_x.
class Channel {
 public:
  explicit Channel(const std::vector<std::vector<double>>& rows) {
    require(!rows.empty(), "Channel: no rows");
    inputs_ = rows.size();
    outputs_ = rows.front().size();
    require(outputs_ > 0, "Channel: empty rows");
    data_.reserve(inputs_ * outputs_);
    for (const auto& row : rows) {
      require(row.size() == outputs_, "Channel: ragged rows");
      std::vector<double> r = row;
      detail::normalize_or_throw(r, "Channel row");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  // Row-major flat storage.
  Channel(std::size_t inputs, std::size_t outputs, std::vector<double> flat)
      : inputs_(inputs), outputs_(outputs), data_(std::move(flat)) {
    require(inputs > 0 && outputs > 0, "Channel: sizes must be positive");
    require(data_.size() == inputs * outputs, "Channel: flat size mismatch");
    for (std::size_t x = 0; x < inputs_; ++x) {
      std::vector<double> r(data_.begin() + x * outputs_,
                            data_.begin() + (x + 1) * outputs_);
      detail::normalize_or_throw(r, "Channel row");
      std::copy(r.begin(), r.end(), data_.begin() + x * outputs_);
    }
  }

  static Channel identity(std::size_t size) {
    std::vector<double> flat(size * size, 0.0);
    for (std::size_t i = 0; i < size; ++i) flat[i * size + i] = 1.0;
    return Channel(size, size, std::move(flat));
  }

  static Channel constant(std::size_t inputs, const Distribution& row) {
    std::vector<double> flat;
    flat.reserve(inputs * row.size());
    for (std::size_t x = 0; x < inputs; ++x)
      flat.insert(flat.end(), row.probs().begin(), row.probs().end());
    return Channel(inputs, row.size(), std::move(flat));
  }

  static Channel binary_symmetric(double flip) {
    return Channel({{1.0 - flip, flip}, {flip, 1.0 - flip}});
  }

  std::size_t input_size() const noexcept { return inputs_; }
  std::size_t output_size() const noexcept { return outputs_; }

  double operator()(std::size_t x, std::size_t y) const {
    return data_[x * outputs_ + y];
  }

  std::span<const double> row(std::size_t x) const {
    return {data_.data() + x * outputs_, outputs_};
  }

  Distribution row_distribution(std::size_t x) const {
    auto r = row(x);
    return Distribution(std::vector<double>(r.begin(), r.end()));
  }

  const std::vector<double>& flat() const noexcept { return data_; }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> out(inputs_);
    for (std::size_t x = 0; x < inputs_; ++x) {
      auto r = row(x);
      out[x].assign(r.begin(), r.end());
    }
    return out;
  }

  friend bool operator==(const Channel&, const Channel&) = default;

 private:
  std::size_t inputs_ = 0;
  std::size_t outputs_ = 0;
  std::vector<double> data_;
};

// G(x, y) = P(x) W(y|x), or any joint pmf on X x Y.
class JointDistribution {
 public:
  JointDistribution(std::size_t x_size, std::size_t y_size, std::vector<double> flat)
      : x_size_(x_size), y_size_(y_size), probs_(std::move(flat)) {
    require(x_size > 0 && y_size > 0, "JointDistribution: sizes must be positive");
    require(probs_.size() == x_size * y_size, "JointDistribution: size mismatch");
    detail::normalize_or_throw(probs_, "JointDistribution");
  }

  static JointDistribution from(const Distribution& p, const Channel& w) {
    require(p.size() == w.input_size(), "JointDistribution::from: dimension mismatch");
    std::vector<double> flat(w.input_size() * w.output_size());
    for (std::size_t x = 0; x < w.input_size(); ++x)
      for (std::size_t y = 0; y < w.output_size(); ++y)
        flat[x * w.output_size() + y] = p[x] * w(x, y);
    return JointDistribution(w.input_size(), w.output_size(), std::move(flat));
  }

  std::size_t x_size() const noexcept { return x_size_; }
  std::size_t y_size() const noexcept { return y_size_; }
  double operator()(std::size_t x, std::size_t y) const { return probs_[x * y_size_ + y]; }
  std::span<const double> probs() const noexcept { return probs_; }

  Distribution marginal_x() const {
    std::vector<double> m(x_size_, 0.0);
    for (std::size_t x = 0; x < x_size_; ++x)
      for (std::size_t y = 0; y < y_size_; ++y) m[x] += (*this)(x, y);
    return Distribution(std::move(m));
  }

  Distribution marginal_y() const {
    std::vector<double> m(y_size_, 0.0);
    for (std::size_t x = 0; x < x_size_; ++x)
      for (std::size_t y = 0; y < y_size_; ++y) m[y] += (*this)(x, y);
    return Distribution(std::move(m));
  }

 private:
  std::size_t x_size_;
  std::size_t y_size_;
  std::vector<double> probs_;
};

inline double entropy(const Distribution& p) { return entropy_bits(p.probs()); }

inline double entropy(const JointDistribution& g) { return entropy_bits(g.probs()); }

// The output distribution PW.
inline Distribution output_distribution(const Distribution& p, const Channel& w) {
  require(p.size() == w.input_size(), "output_distribution: dimension mismatch");
  std::vector<double> q(w.output_size(), 0.0);
  for (std::size_t x = 0; x < p.size(); ++x)
    for (std::size_t y = 0; y < w.output_size(); ++y) q[y] += p[x] * w(x, y);
  return Distribution(std::move(q));
}

// H(W|P) = sum_x P(x) H(W_x).
inline double conditional_entropy(const Distribution& p, const Channel& w) {
  require(p.size() == w.input_size(), "conditional_entropy: dimension mismatch");
  double h = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) h += p[x] * entropy_bits(w.row(x));
  return h;
}

// I(P;W) = H(PW) - H(W|P). Clamped at zero against rounding.
inline double mutual_information(const Distribution& p, const Channel& w) {
  require(p.size() == w.input_size(), "mutual_information: dimension mismatch");
  return std::max(0.0, entropy(output_distribution(p, w)) - conditional_entropy(p, w));
}

inline double l1_distance(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), "l1_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return s;
}

inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  return 0.5 * l1_distance(p, q);
}

inline double tv_distance(const Distribution& p, const Distribution& q) {
  require(p.size() == q.size(), "tv_distance: dimension mismatch");
  return tv_distance(p.probs(), q.probs());
}

struct TransposeResult {
  Distribution output;  // Q = PW
  Channel reverse;      // V with P(x)W(y|x) = Q(y)V(x|y)
  // unreachable[y] is set when Q(y) = 0; that row of V is uniform.
  std::vector<bool> unreachable;
};

inline TransposeResult transpose_channel(const Distribution& p, const Channel& w) {
  require(p.size() == w.input_size(), "transpose_channel: dimension mismatch");
  Distribution q = output_distribution(p, w);
  const std::size_t xs = w.input_size();
  const std::size_t ys = w.output_size();
  std::vector<double> flat(ys * xs, 0.0);
  std::vector<bool> unreachable(ys, false);
  for (std::size_t y = 0; y < ys; ++y) {
    if (q[y] <= kNegligibleMass) {
      unreachable[y] = true;
      std::fill_n(flat.begin() + y * xs, xs, 1.0 / static_cast<double>(xs));
      continue;
    }
    double total = 0.0;
    for (std::size_t x = 0; x < xs; ++x) total += p[x] * w(x, y);
    for (std::size_t x = 0; x < xs; ++x) flat[y * xs + x] = p[x] * w(x, y) / total;
  }
  return {std::move(q), Channel(ys, xs, std::move(flat)), std::move(unreachable)};
}

// Continuity bound for entropy: with lambda = ||p - q||_1 <= 1/2 over an
// alphabet of size a, |H(p) - H(q)| <= -lambda log(lambda / a).
inline double entropy_continuity_bound(const Distribution& p, const Distribution& q) {
  require(p.size() == q.size(), "entropy_continuity_bound: dimension mismatch");
  const double lambda = l1_distance(p.probs(), q.probs());
  require(lambda <= 0.5 + 1e-12, "entropy_continuity_bound: l1 distance exceeds 1/2");
  if (lambda <= 0.0) return 0.0;
  return -lambda * std::log2(lambda / static_cast<double>(p.size()));
}

// Rate penalty in the single-letter lower bound log|C|/n >= I(P;W) - f(lambda),
// valid for lambda <= 1/2:
//   f(lambda) = lambda (log|X| + 2 log|Y|) + 2 h(lambda).
// Reported as a reference quantity; nothing depends on its tightness.
inline double lower_bound_penalty(double lambda, std::size_t x_size, std::size_t y_size) {
  require(lambda >= 0.0 && lambda <= 0.5, "lower_bound_penalty: lambda must lie in [0, 1/2]");
  return lambda * (std::log2(static_cast<double>(x_size)) +
                   2.0 * std::log2(static_cast<double>(y_size))) +
         2.0 * binary_entropy(lambda);
}

// (DE)(y|x) = sum_c D(y|c) E(c|x).
inline Channel channel_compose(const Channel& e, const Channel& d) {
  require(e.output_size() == d.input_size(), "channel_compose: dimension mismatch");
  std::vector<double> flat(e.input_size() * d.output_size(), 0.0);
  for (std::size_t x = 0; x < e.input_size(); ++x)
    for (std::size_t c = 0; c < e.output_size(); ++c) {
      const double ec = e(x, c);
      if (ec == 0.0) continue;
      for (std::size_t y = 0; y < d.output_size(); ++y)
        flat[x * d.output_size() + y] += ec * d(c, y);
    }
  return Channel(e.input_size(), d.output_size(), std::move(flat));
}

inline double max_abs_difference(const Channel& a, const Channel& b) {
  require(a.input_size() == b.input_size() && a.output_size() == b.output_size(),
          "max_abs_difference: dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.flat().size(); ++i)
    m = std::max(m, std::abs(a.flat()[i] - b.flat()[i]));
  return m;
}

// Smallest strictly positive entry of W.
inline double min_nonzero_entry(const Channel& w) {
  double u = 1.0;
  for (double v : w.flat())
    if (v > kNegligibleMass) u = std::min(u, v);
  return u;
}

}  // namespace distcomp
