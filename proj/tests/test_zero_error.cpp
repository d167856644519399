#include <gtest/gtest.h>

#include <cmath>

#include "distcomp/zero_error.hpp"
#include "test_support.hpp"
#include "zero_error_oracle.hpp"

using namespace distcomp;
using distcomp::testing::binary_output_grid_oracle;

namespace {

struct Case {
  const char* name;
  Distribution p;
  Channel w;
};

std::vector<Case> certified_cases() {
  return {
      {"bsc", Distribution::uniform(2), Channel({{0.75, 0.25}, {0.25, 0.75}})},
      {"skew", Distribution::uniform(2), Channel({{0.9, 0.1}, {0.2, 0.8}})},
      {"tilted", Distribution({0.3, 0.7}), Channel({{0.6, 0.4}, {0.1, 0.9}})},
  };
}

void expect_valid(const Factorization& f, const Distribution& p, const Channel& w) {
  EXPECT_TRUE(feasible_check(w, f.e, f.d).feasible);
  const auto mu = induced_mu(p, f.e);
  ASSERT_EQ(mu.size(), f.mu.size());
  for (std::size_t c = 0; c < mu.size(); ++c) EXPECT_EQ(mu[c], f.mu[c]);
  EXPECT_NEAR(f.objective, entropy_bits(f.mu), 1e-12);
  for (Eigen::Index x = 0; x < f.e.rows(); ++x) EXPECT_NEAR(f.e.row(x).sum(), 1.0, 1e-9);
  for (Eigen::Index c = 0; c < f.d.rows(); ++c) EXPECT_NEAR(f.d.row(c).sum(), 1.0, 1e-9);
  EXPECT_GE(f.objective, mutual_information(p, w) - 1e-9);
  EXPECT_LE(f.objective, entropy(p) + 1e-9);
  const auto s = support_stats(f.e);
  EXPECT_LE(s.max_row_support, static_cast<int>(w.output_size()));
  EXPECT_LE(s.used_columns, intermediate_size_bound(static_cast<int>(w.input_size()), static_cast<int>(w.output_size()),
                                                    SizeBoundVariant::theorem9));
}

}  // namespace

TEST(SizeBound, Examples) {
  EXPECT_EQ(intermediate_size_bound(2, 2, SizeBoundVariant::theorem9), 3);
  EXPECT_EQ(intermediate_size_bound(2, 2, SizeBoundVariant::remark2), 3);
  // C = |X|, D = |Y|: CD - C + 1.
  EXPECT_EQ(intermediate_size_bound(3, 2, SizeBoundVariant::remark2), 4);
  EXPECT_EQ(intermediate_size_bound(2, 3, SizeBoundVariant::remark2), 5);
  EXPECT_THROW(intermediate_size_bound(1, 2, SizeBoundVariant::remark2), Error);
}

TEST(FeasibleCheck, Examples) {
  const Channel w({{0.75, 0.25}, {0.25, 0.75}});
  EXPECT_TRUE(feasible_check(w, Matrix::Identity(2, 2), to_matrix(w)).feasible);
  EXPECT_EQ(feasible_check(w, Matrix::Identity(2, 2), to_matrix(w)).residual, 0.0);

  Matrix e1 = Matrix::Ones(2, 1);
  Matrix d1(1, 2);
  d1 << 0.5, 0.5;
  const auto one = feasible_check(w, e1, d1);
  EXPECT_FALSE(one.feasible);
  EXPECT_NEAR(one.residual, 0.25, 1e-15);

  // E rows (1/2, 1/2, 0), (0, 1/2, 1/2); D rows (1, 0), (1/2, 1/2), (0, 1):
  // ED = (3/4, 1/4), (1/4, 3/4). Perturbing D(0, 0) by 0.01 moves ED(0, 0)
  // by 0.005.
  Matrix e(2, 3), d(3, 2);
  e << 0.5, 0.5, 0, 0, 0.5, 0.5;
  d << 1, 0, 0.5, 0.5, 0, 1;
  EXPECT_LT(feasible_check(w, e, d).residual, 1e-15);
  d(0, 0) = 0.99;
  d(0, 1) = 0.01;
  EXPECT_NEAR(feasible_check(w, e, d).residual, 0.005, 1e-15);
  EXPECT_THROW(feasible_check(w, e, Matrix::Ones(2, 2)), Error);
}

TEST(Vertices, CountAndSupport) {
  Matrix d(3, 2);
  d << 1, 0, 0.5, 0.5, 0, 1;
  Eigen::VectorXd wx(2);
  wx << 0.75, 0.25;
  const auto v = polytope_vertices(d, wx);
  // Pairs {0,1}, {0,2}; {1,2} has no point with D(., 0) = 0.75.
  ASSERT_EQ(v.size(), 2u);
  for (const auto& vert : v) {
    EXPECT_LE(std::popcount(vert.support), 2);
    double s = 0.0, y0 = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_GE(vert.e[c], -1e-12);
      s += vert.e[c];
      y0 += vert.e[c] * d(static_cast<Eigen::Index>(c), 0);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_NEAR(y0, 0.75, 1e-12);
  }
}

TEST(EStep, IdentityDForcesEqualW) {
  const Channel w({{0.6, 0.3, 0.1}, {0.2, 0.2, 0.6}});
  const auto r = e_step(Distribution({0.4, 0.6}), w, Matrix::Identity(3, 3));
  EXPECT_LT((r.e - to_matrix(w)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EStep, ConstantRowsReachZero) {
  const Channel w = Channel::constant(3, Distribution({0.2, 0.8}));
  Matrix d(2, 2);
  d << 0.2, 0.8, 0.5, 0.5;
  const auto r = e_step(Distribution({0.2, 0.3, 0.5}), w, d);
  EXPECT_NEAR(r.objective, 0.0, 1e-12);
}

TEST(EStep, ReproducesOracleE) {
  const auto c = certified_cases()[0];
  const auto oracle = brute_force_oracle(ZeroErrorInstance(c.p, c.w, 3), 20);
  const auto r = e_step(c.p, c.w, oracle.best.d);
  EXPECT_NEAR(r.objective, oracle.best.objective, 1e-12);
  EXPECT_LT((r.e - oracle.best.e).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(e_step(c.p, c.w, Matrix::Constant(3, 2, 0.5)), Error);
}

TEST(DStep, IdentityEForcesW) {
  const Channel w({{0.7, 0.3}, {0.1, 0.9}});
  const auto r = d_step(Distribution::uniform(2), w, Matrix::Identity(2, 2));
  EXPECT_LT((r.d - to_matrix(w)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(DStep, OneParameterFamilyMatchesGridScan) {
  // E rows (1/2, 1/2, 0), (0, 1/2, 1/2); W rows (0.6, 0.4), (0.4, 0.6).
  // With t = D(1, 0): D(0, 0) = 1.2 - t, D(2, 0) = 0.8 - t, t in [0.2, 0.8].
  const Channel w({{0.6, 0.4}, {0.4, 0.6}});
  Matrix e(2, 3);
  e << 0.5, 0.5, 0, 0, 0.5, 0.5;
  const auto r = d_step(Distribution::uniform(2), w, e);
  using distcomp::testing::h2;
  double best = -1, best_t = 0;
  for (int i = 0; i <= 600000; ++i) {
    const double t = 0.2 + 0.6 * i / 600000.0;
    const double v = 0.25 * h2(1.2 - t) + 0.5 * h2(t) + 0.25 * h2(0.8 - t);
    if (v > best) best = v, best_t = t;
  }
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.conditional_entropy, best, 1e-7);
  EXPECT_NEAR(r.d(1, 0), best_t, 1e-3);
  EXPECT_TRUE(feasible_check(w, e, r.d).feasible);
}

TEST(DStep, UniqueFeasibleDUnchanged) {
  // Row 2 of D is pinned by the second x alone; rows 0, 1 by t = 0.5 edge.
  const Channel w({{0.75, 0.25}, {0.25, 0.75}});
  Matrix e(2, 3), d(3, 2);
  e << 0.5, 0.5, 0, 0, 0.5, 0.5;
  d << 1, 0, 0.5, 0.5, 0, 1;
  const auto r = d_step(Distribution::uniform(2), w, e, d);
  EXPECT_LT((r.d - d).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Alternate, IdenticalRowsGiveZero) {
  const Channel w = Channel::constant(2, Distribution({0.35, 0.65}));
  const auto f = alternate(ZeroErrorInstance::with_default_size(Distribution({0.4, 0.6}), w), {.restarts = 5});
  EXPECT_NEAR(f.objective, 0.0, 1e-9);
  expect_valid(f, Distribution({0.4, 0.6}), w);
}

TEST(Alternate, DistinctPointMassesGiveSourceEntropy) {
  const Distribution p({0.2, 0.3, 0.5});
  const auto f = alternate(ZeroErrorInstance::with_default_size(p, Channel::identity(3)), {.restarts = 5});
  EXPECT_NEAR(f.objective, entropy(p), 1e-9);
  EXPECT_NEAR(f.objective, 1.4854752972273344, 1e-9);
  expect_valid(f, p, Channel::identity(3));
}

TEST(Alternate, TraceNeverIncreases) {
  for (const auto& c : certified_cases()) {
    const auto f = alternate(ZeroErrorInstance::with_default_size(c.p, c.w), {.seed = 4});
    ASSERT_FALSE(f.trace.empty());
    for (std::size_t i = 1; i < f.trace.size(); ++i) EXPECT_LE(f.trace[i], f.trace[i - 1] + 1e-9) << c.name;
    EXPECT_NEAR(f.trace.back(), f.objective, 1e-12);
  }
}

TEST(Alternate, InfeasibleWhenIntermediateAlphabetTooSmall) {
  try {
    alternate(ZeroErrorInstance(Distribution::uniform(2), Channel({{0.75, 0.25}, {0.25, 0.75}}), 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::infeasible);
  }
}

TEST(Oracle, LibraryGridMatchesIndependentGrid) {
  for (const auto& c : certified_cases()) {
    const ZeroErrorInstance inst(c.p, c.w, 3);
    const auto lib = brute_force_oracle(inst, 20);
    EXPECT_NEAR(lib.best.objective, binary_output_grid_oracle(c.p, c.w, 3, 20), 1e-9) << c.name;
    expect_valid(lib.best, c.p, c.w);
    EXPECT_GE(lib.accuracy, 0.0);
    // Nested grid: halving the resolution never helps.
    EXPECT_LE(lib.best.objective, brute_force_oracle(inst, 10).best.objective + 1e-12);
  }
}

TEST(Oracle, TrivialInstances) {
  const auto zero = brute_force_oracle(ZeroErrorInstance(Distribution::uniform(2), Channel::constant(2, Distribution({0.5, 0.5})), 3), 4);
  EXPECT_NEAR(zero.best.objective, 0.0, 1e-12);
  const Distribution p({0.3, 0.7});
  const auto id = brute_force_oracle(ZeroErrorInstance(p, Channel::identity(2), 3), 4);
  EXPECT_NEAR(id.best.objective, entropy(p), 1e-12);
  EXPECT_THROW(brute_force_oracle(ZeroErrorInstance(p, Channel::identity(2), 3), 5), Error);
}

TEST(Alternate, MatchesOracleOnCertifiedInstances) {
  for (const auto& c : certified_cases()) {
    const ZeroErrorInstance inst(c.p, c.w, 3);
    const auto oracle = brute_force_oracle(inst, 40);
    const auto f = alternate(inst, {.seed = 0, .restarts = 20});
    expect_valid(f, c.p, c.w);
    EXPECT_LE(f.objective, oracle.best.objective + 1e-4) << c.name;
    EXPECT_GE(f.objective, oracle.best.objective - oracle.accuracy - 1e-4) << c.name;
  }
}

TEST(Alternate, DeterministicForFixedSeed) {
  const auto c = certified_cases()[1];
  const auto inst = ZeroErrorInstance::with_default_size(c.p, c.w);
  const auto a = alternate(inst, {.seed = 7, .restarts = 6});
  const auto b = alternate(inst, {.seed = 7, .restarts = 6, .workers = 1});
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.restart, b.restart);
  EXPECT_TRUE(a.e == b.e);
}

TEST(ProductInstance, Entries) {
  const Distribution p({0.3, 0.7});
  const Channel w({{0.6, 0.4}, {0.1, 0.9}});
  const auto [pp, ww] = product_instance(p, w);
  EXPECT_NEAR(pp[1], 0.21, 1e-15);
  EXPECT_NEAR(ww(1, 2), 0.4 * 0.1, 1e-15);  // x = (0, 1), y = (1, 0)
  EXPECT_NEAR(mutual_information(pp, ww), 2 * mutual_information(p, w), 1e-12);
  EXPECT_NEAR(entropy(pp), 2 * entropy(p), 1e-12);
}
