#include <gtest/gtest.h>

#include <cmath>

#include "distcomp/prob.hpp"
#include "test_support.hpp"

using namespace distcomp;
using distcomp::testing::h2;
using distcomp::testing::random_channel;
using distcomp::testing::random_distribution;

TEST(Entropy, Examples) {
  EXPECT_DOUBLE_EQ(entropy(Distribution::uniform(2)), 1.0);
  EXPECT_DOUBLE_EQ(entropy(Distribution::point_mass(3, 0)), 0.0);
  EXPECT_NEAR(entropy(Distribution({0.25, 0.75})), 0.8112781244591328, 1e-15);
}

TEST(Entropy, BoundedByLogAlphabet) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const std::size_t a = 1 + rng.uniform_index(8);
    const double h = entropy(random_distribution(rng, a));
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log2(static_cast<double>(a)) + 1e-12);
  }
}

TEST(Distribution, RejectsInvalidAndAbsorbsDrift) {
  EXPECT_THROW(Distribution({0.5, 0.4}), Error);
  EXPECT_THROW(Distribution({1.5, -0.5}), Error);
  EXPECT_THROW(Distribution(std::vector<double>{}), Error);
  const Distribution d({0.5 + 4e-10, 0.5});
  EXPECT_NEAR(d[0] + d[1], 1.0, 1e-15);
  EXPECT_THROW(Channel({{0.5, 0.5}, {0.3}}), Error);
}

TEST(MutualInformation, Examples) {
  const Distribution p({0.3, 0.7});
  EXPECT_NEAR(mutual_information(p, Channel::constant(2, Distribution({0.2, 0.8}))), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(mutual_information(Distribution::uniform(2), Channel::identity(2)), 1.0);
  EXPECT_NEAR(mutual_information(Distribution::uniform(2), Channel::binary_symmetric(0.1)), 0.5310044064107188,
              1e-12);
  EXPECT_NEAR(1.0 - h2(0.1), 0.5310044064107188, 1e-12);
  EXPECT_THROW(mutual_information(Distribution::uniform(3), Channel::identity(2)), Error);
}

TEST(ConditionalEntropy, Examples) {
  const Distribution q({0.1, 0.6, 0.3});
  EXPECT_DOUBLE_EQ(conditional_entropy(Distribution({0.2, 0.8}), Channel::identity(2)), 0.0);
  EXPECT_NEAR(conditional_entropy(Distribution({0.2, 0.8}), Channel::constant(2, q)), entropy(q), 1e-12);
  EXPECT_NEAR(conditional_entropy(Distribution::uniform(2), Channel::binary_symmetric(0.1)), 0.4689955935892812,
              1e-12);
}

TEST(TvDistance, Examples) {
  const Distribution a({0.5, 0.5});
  EXPECT_DOUBLE_EQ(tv_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(tv_distance(Distribution({1, 0, 0}), Distribution({0, 0.5, 0.5})), 1.0);
  EXPECT_DOUBLE_EQ(tv_distance(a, Distribution({0.75, 0.25})), 0.25);
  EXPECT_THROW(tv_distance(a, Distribution::uniform(3)), Error);
}

TEST(Transpose, Examples) {
  const auto id = transpose_channel(Distribution({0.2, 0.8}), Channel::identity(2));
  EXPECT_EQ(id.reverse, Channel::identity(2));

  const Distribution p = Distribution::uniform(2);
  const auto indep = transpose_channel(p, Channel::constant(2, Distribution({0.4, 0.6})));
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 2; ++x) EXPECT_NEAR(indep.reverse(y, x), p[x], 1e-15);

  const auto bsc = transpose_channel(p, Channel::binary_symmetric(0.1));
  EXPECT_LT(max_abs_difference(bsc.reverse, Channel::binary_symmetric(0.1)), 1e-15);
}

TEST(Transpose, UnreachableOutputsAreUniformAndFlagged) {
  const auto t = transpose_channel(Distribution({0.5, 0.5}), Channel({{1, 0, 0}, {0, 1, 0}}));
  EXPECT_FALSE(t.unreachable[0]);
  EXPECT_TRUE(t.unreachable[2]);
  EXPECT_DOUBLE_EQ(t.reverse(2, 0), 0.5);
}

TEST(ContinuityBound, Examples) {
  const Distribution p({0.5, 0.5});
  EXPECT_DOUBLE_EQ(entropy_continuity_bound(p, p), 0.0);
  // lambda = ||p - q||_1 = 0.25 on a = 2: -0.25 log2(0.125) = 0.75.
  EXPECT_NEAR(entropy_continuity_bound(p, Distribution({0.625, 0.375})), 0.75, 1e-12);
  // lambda = 0.5 on a = 4: -0.5 log2(0.125) = 1.5.
  EXPECT_NEAR(entropy_continuity_bound(Distribution::uniform(4), Distribution({0.5, 0.25, 0.25, 0.0})), 1.5,
              1e-12);
  EXPECT_THROW(entropy_continuity_bound(p, Distribution({1.0, 0.0})), Error);
}

TEST(ChannelCompose, Examples) {
  const Channel e({{0.9, 0.1}, {0.4, 0.6}});
  const Channel d({{0.7, 0.3}, {0.2, 0.8}});
  EXPECT_EQ(channel_compose(Channel::identity(2), d), d);
  EXPECT_EQ(channel_compose(e, Channel::identity(2)), e);
  // Hand product: row 0 = 0.9(0.7, 0.3) + 0.1(0.2, 0.8) = (0.65, 0.35);
  //               row 1 = 0.4(0.7, 0.3) + 0.6(0.2, 0.8) = (0.40, 0.60).
  const Channel de = channel_compose(e, d);
  EXPECT_NEAR(de(0, 0), 0.65, 1e-15);
  EXPECT_NEAR(de(0, 1), 0.35, 1e-15);
  EXPECT_NEAR(de(1, 0), 0.40, 1e-15);
  EXPECT_NEAR(de(1, 1), 0.60, 1e-15);
  EXPECT_THROW(channel_compose(e, Channel::identity(3)), Error);
}

TEST(LowerBoundPenalty, Formula) {
  // f(lambda) = lambda (log|X| + 2 log|Y|) + 2 h(lambda).
  EXPECT_NEAR(lower_bound_penalty(0.1, 2, 4), 0.1 * (1 + 4) + 2 * h2(0.1), 1e-12);
  EXPECT_DOUBLE_EQ(lower_bound_penalty(0.0, 3, 3), 0.0);
  EXPECT_THROW(lower_bound_penalty(0.6, 2, 2), Error);
}

TEST(Properties, InformationIdentities) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t xs = 1 + rng.uniform_index(6);
    const std::size_t ys = 1 + rng.uniform_index(6);
    const Distribution p = random_distribution(rng, xs);
    const Channel w = random_channel(rng, xs, ys);
    const double info = mutual_information(p, w);
    EXPECT_NEAR(entropy(output_distribution(p, w)), info + conditional_entropy(p, w), 1e-9);
    EXPECT_GE(info, 0.0);
    EXPECT_LE(info, std::min(entropy(p), std::log2(static_cast<double>(ys))) + 1e-9);
  }
}

TEST(Properties, MutualInformationEqualsSourceEntropyForDisjointRows) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const std::size_t xs = 2 + rng.uniform_index(3);
    const std::size_t per = 1 + rng.uniform_index(3);
    std::vector<std::vector<double>> rows(xs, std::vector<double>(xs * per, 0.0));
    for (std::size_t x = 0; x < xs; ++x) {
      std::vector<double> block(per);
      rng.fill_simplex(block);
      for (std::size_t k = 0; k < per; ++k) rows[x][x * per + k] = block[k];
    }
    const Distribution p = random_distribution(rng, xs);
    EXPECT_NEAR(mutual_information(p, Channel(rows)), entropy(p), 1e-9);
  }
  // Overlapping supports on a full-support source give strictly less.
  EXPECT_LT(mutual_information(Distribution::uniform(2), Channel({{0.5, 0.5, 0}, {0, 0.5, 0.5}})), 1.0 - 1e-3);
}

TEST(Properties, TransposeOfTransposeRecoversChannel) {
  Rng rng(9);
  for (int i = 0; i < 300; ++i) {
    const std::size_t xs = 1 + rng.uniform_index(5);
    const std::size_t ys = 1 + rng.uniform_index(5);
    const Distribution p = random_distribution(rng, xs);
    const Channel w = random_channel(rng, xs, ys);
    const auto t = transpose_channel(p, w);
    for (std::size_t x = 0; x < xs; ++x)
      for (std::size_t y = 0; y < ys; ++y) EXPECT_NEAR(p[x] * w(x, y), t.output[y] * t.reverse(y, x), 1e-12);
    const auto back = transpose_channel(t.output, t.reverse);
    for (std::size_t x = 0; x < xs; ++x) {
      if (p[x] <= 1e-9) continue;
      for (std::size_t y = 0; y < ys; ++y) {
        if (t.output[y] > 1e-9) EXPECT_NEAR(back.reverse(x, y), w(x, y), 1e-9);
      }
    }
  }
}

TEST(Properties, ContinuityBoundDominatesEntropyGap) {
  Rng rng(77);
  int checked = 0;
  while (checked < 10000) {
    const std::size_t a = 2 + rng.uniform_index(7);
    const Distribution p = random_distribution(rng, a);
    // Mix toward a random point; the mixing weight sets the distance.
    const Distribution r = random_distribution(rng, a);
    const double t = rng.uniform_real();
    std::vector<double> q(a);
    for (std::size_t i = 0; i < a; ++i) q[i] = (1 - t) * p[i] + t * r[i];
    const Distribution qd(q);
    if (l1_distance(p.probs(), qd.probs()) > 0.5) continue;
    ++checked;
    EXPECT_LE(std::abs(entropy(p) - entropy(qd)), entropy_continuity_bound(p, qd) + 1e-12);
  }
}

TEST(Properties, TriangleInequality) {
  Rng rng(31);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t a = 1 + rng.uniform_index(8);
    const Distribution p = random_distribution(rng, a), q = random_distribution(rng, a),
                       r = random_distribution(rng, a);
    EXPECT_LE(tv_distance(p, r), tv_distance(p, q) + tv_distance(q, r) + 1e-15);
    EXPECT_DOUBLE_EQ(tv_distance(p, q), tv_distance(q, p));
  }
}

TEST(JointDistribution, MarginalsOfProduct) {
  const Distribution p({0.2, 0.8});
  const Channel w({{0.5, 0.5}, {0.1, 0.9}});
  const auto g = JointDistribution::from(p, w);
  EXPECT_NEAR(g.marginal_x()[0], 0.2, 1e-15);
  EXPECT_NEAR(g.marginal_y()[0], 0.2 * 0.5 + 0.8 * 0.1, 1e-15);
  EXPECT_NEAR(entropy(g), entropy(p) + conditional_entropy(p, w), 1e-12);
}
