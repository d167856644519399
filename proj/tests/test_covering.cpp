#include <gtest/gtest.h>

#include <cmath>

#include "distcomp/covering.hpp"
#include "distcomp/serialize.hpp"
#include "distcomp/simulate.hpp"
#include "sim_oracles.hpp"
#include "test_support.hpp"

using namespace distcomp;
using distcomp::testing::direct_check;

namespace {

const double kEps = 0.1;

std::vector<JointType> bsc_types() {
  return jointly_typical_types(Distribution::uniform(2), Channel::binary_symmetric(0.25), 4, 2.0);
}

}  // namespace

TEST(Lemma2Bound, Examples) {
  EXPECT_NEAR(lemma2_failure_bound(2, 1000, 0.1, 0.5), 4 * std::exp2(-1000 * 0.005 / (2 * std::log(2.0))), 1e-15);
  EXPECT_LT(lemma2_failure_bound(2, 1e7, 0.1, 0.5), 1e-300);
  const double m = lemma2_samples_for(1, 0.49, 1.0);
  EXPECT_NEAR(lemma2_failure_bound(1, m, 0.49, 1.0), 1.0, 1e-12);
  EXPECT_THROW(lemma2_failure_bound(2, 10, 0.5, 1.0), Error);
  EXPECT_THROW(lemma2_failure_bound(2, 10, 0.1, 0.0), Error);
}

TEST(RequiredSizes, DiagonalTypeAtFour) {
  // |T_R| = |T_S| = |T_T| = 6.
  const JointType t(2, 2, {2, 0, 0, 2});
  const auto s = required_covering_sizes(t, kEps);
  const double scale = 2 * std::log(2.0) / (kEps * kEps);
  const double nm_bound = scale * 6 * std::log2(24.0);
  auto m_bound = [&](double n) { return scale * 6 * std::log2(4 * n * 6); };
  double n = 1, m = 0;
  for (;;) {
    m = std::floor(m_bound(n)) + 1;
    if (n * m > nm_bound) break;
    n = std::floor(nm_bound / m) + 1;
  }
  EXPECT_EQ(s.m_min, BigInt(static_cast<long long>(m)));
  EXPECT_EQ(s.n_min, BigInt(static_cast<long long>(n)));
  EXPECT_GT(s.m_min.convert_to<double>(), s.m_threshold);
  EXPECT_LE(s.m_min.convert_to<double>() - 1, s.m_threshold);
  EXPECT_GT((s.m_min * s.n_min).convert_to<double>(), s.nm_threshold);
}

TEST(RequiredSizes, HalvingEpsilonQuadruplesM) {
  for (const auto& t : bsc_types()) {
    const auto a = required_covering_sizes(t, 0.2);
    const auto b = required_covering_sizes(t, 0.1);
    EXPECT_GE(b.m_min.convert_to<double>(), 4 * a.m_min.convert_to<double>() - 4) << io::compact(t);
  }
}

TEST(RequiredSizes, FloorRaisesN) {
  const JointType t(2, 2, {1, 1, 1, 1});
  const auto s = required_covering_sizes(t, kEps, BigInt(64));
  EXPECT_EQ(s.n_min, 64);
}

TEST(VerifyCovering, FullEnumerationHasMarginEpsilon) {
  for (const auto& t : bsc_types()) {
    const CoveringGeometry geo(t);
    std::vector<std::uint32_t> all(geo.y_class().size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
    const auto f = CoveringFamily::from_ranks(t, kEps, {all, all});
    const auto c = verify_covering(f, geo);
    EXPECT_TRUE(c.passed);
    EXPECT_NEAR(c.condition_II_margin, kEps, 1e-12);
    for (double m : c.condition_I_margin) EXPECT_NEAR(m, kEps, 1e-12);
  }
}

TEST(VerifyCovering, AllEqualWordsFailConditionII) {
  const JointType t(2, 2, {1, 1, 1, 1});
  const auto f = CoveringFamily::from_ranks(t, kEps, {{2, 2, 2, 2}, {2, 2, 2, 2}});
  const auto c = verify_covering(f);
  EXPECT_FALSE(c.passed);
  EXPECT_LT(c.condition_II_margin, 0.0);
}

TEST(VerifyCovering, MatchesDirectComputation) {
  Rng rng(17);
  for (const auto& t : bsc_types()) {
    const CoveringGeometry geo(t);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<std::vector<std::uint32_t>> words(3, std::vector<std::uint32_t>(7));
      for (auto& row : words)
        for (auto& w : row) w = static_cast<std::uint32_t>(rng.uniform_index(geo.y_class().size()));
      const auto f = CoveringFamily::from_ranks(t, kEps, words);
      const auto lib = verify_covering(f, geo);
      const auto ref = direct_check(f);
      EXPECT_NEAR(lib.condition_II_margin, ref.condition_II_margin, 1e-12);
      for (std::size_t nu = 0; nu < 3; ++nu) EXPECT_NEAR(lib.condition_I_margin[nu], ref.condition_I_margin[nu], 1e-12);
    }
  }
}

TEST(VerifyCovering, PermutationInvariant) {
  const JointType t(2, 2, {1, 1, 1, 1});
  Rng rng(4);
  std::vector<std::vector<std::uint32_t>> words(4, std::vector<std::uint32_t>(9));
  for (auto& row : words)
    for (auto& w : row) w = static_cast<std::uint32_t>(rng.uniform_index(6));
  const auto base = verify_covering(CoveringFamily::from_ranks(t, kEps, words));
  for (auto& row : words) rng.shuffle(std::span<std::uint32_t>(row));
  const auto shuffled = verify_covering(CoveringFamily::from_ranks(t, kEps, words));
  EXPECT_EQ(base.condition_I_margin, shuffled.condition_I_margin);
  EXPECT_EQ(base.condition_II_margin, shuffled.condition_II_margin);
}

TEST(BuildCovering, GuaranteedModePassesOnEveryTypicalType) {
  const auto types = bsc_types();
  ASSERT_FALSE(types.empty());
  for (const auto& t : types) {
    const auto sizes = required_covering_sizes(t, kEps);
    const auto f = build_covering(t, kEps, {.seed = 3});
    EXPECT_EQ(f.words_per_nu(), sizes.m_min.convert_to<std::uint64_t>());
    EXPECT_EQ(f.nu_count(), sizes.n_min.convert_to<std::uint64_t>());
    const auto ref = direct_check(f);
    EXPECT_GE(ref.condition_II_margin, 0.0);
    for (double m : ref.condition_I_margin) EXPECT_GE(m, 0.0);
    EXPECT_LT(covering_failure_bound(t, kEps, static_cast<double>(f.words_per_nu()), static_cast<double>(f.nu_count())), 1.0);
  }
}

TEST(BuildCovering, Deterministic) {
  const JointType t(2, 2, {1, 1, 1, 1});
  const auto a = build_covering(t, kEps, {.seed = 9});
  const auto b = build_covering(t, kEps, {.seed = 9});
  EXPECT_EQ(a.rows(), b.rows());
  EXPECT_EQ(a.retries, b.retries);
}

TEST(BuildCovering, SizedTooSmallExhaustsRetries) {
  const JointType t(2, 2, {1, 1, 1, 1});
  try {
    build_covering(t, kEps, {.mode = CoveringMode::sized, .m = 1, .n = 1, .max_retries = 5});
    FAIL() << "expected retries_exhausted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::retries_exhausted);
  }
  EXPECT_THROW(build_covering(t, kEps, {.mode = CoveringMode::sized, .m = 0, .n = 1}), Error);
}

TEST(BuildCovering, FamilyCapIsEnforced) {
  const JointType t(2, 2, {1, 1, 1, 1});
  EnumerationCaps caps;
  caps.max_family_words = 10;
  try {
    build_covering(t, kEps, {}, caps);
    FAIL() << "expected cap_exceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::cap_exceeded);
  }
}

TEST(CoveringFamily, RejectsMalformedRows) {
  const JointType t(2, 2, {1, 1, 1, 1});
  using Run = CoveringFamily::Run;
  EXPECT_THROW(CoveringFamily(t, kEps, 2, {{Run{0, 1}}}), Error);
  EXPECT_THROW(CoveringFamily(t, kEps, 2, {{Run{1, 1}, Run{0, 1}}}), Error);
  EXPECT_THROW(CoveringFamily(t, 0.6, 1, {{Run{0, 1}}}), Error);
}

TEST(CoveringFamily, JsonRoundTrip) {
  const JointType t(2, 2, {1, 1, 1, 1});
  const auto f = build_covering(t, kEps, {.seed = 1});
  const auto j = io::to_json(f);
  const auto back = io::covering_from_json(io::Json::parse(j.dump()));
  EXPECT_EQ(back.type(), f.type());
  EXPECT_EQ(back.rows(), f.rows());
  EXPECT_EQ(back.words_per_nu(), f.words_per_nu());
  EXPECT_EQ(back.epsilon(), f.epsilon());
  EXPECT_EQ(io::to_json(back).dump(), j.dump());
}
