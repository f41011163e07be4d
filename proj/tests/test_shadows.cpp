#include <gtest/gtest.h>

#include <cmath>

#include "qsl/hamiltonians.hpp"
#include "qsl/shadows.hpp"

namespace qsl {
namespace {

StateVector singlet() {
  const double r = 1.0 / std::sqrt(2.0);
  return StateVector(2, {0.0, -r, r, 0.0});
}

StateVector double_singlet() {
  const double r = 1.0 / std::sqrt(2.0);
  const cplx s[4] = {0.0, -r, r, 0.0};
  std::vector<cplx> amps(16);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) amps[static_cast<std::size_t>(a + 4 * b)] = s[a] * s[b];
  return StateVector(4, amps);
}

TEST(Encoding, Bytes) {
  EXPECT_EQ(encode_outcome(Basis::X, 0), 0);
  EXPECT_EQ(encode_outcome(Basis::Y, 1), 3);
  EXPECT_EQ(encode_outcome(Basis::Z, 1), 5);
  EXPECT_EQ(outcome_basis(4), Basis::Z);
  EXPECT_EQ(outcome_bit(3), 1);
  EXPECT_EQ(outcome_sign(2), 1);
  EXPECT_EQ(outcome_sign(5), -1);
}

TEST(Snapshot, ZeroInZBasis) {
  Rng rng = make_rng(1);
  const Basis z[] = {Basis::Z};
  std::uint8_t out = 0;
  for (int t = 0; t < 200; ++t) {
    sample_snapshot(StateVector::basis(1, 0), z, rng, {&out, 1});
    EXPECT_EQ(out, encode_outcome(Basis::Z, 0));
  }
}

TEST(Snapshot, ZeroInXBasisIsFair) {
  Rng rng = make_rng(2);
  const Basis x[] = {Basis::X};
  const int m = 10000;
  int zeros = 0;
  std::uint8_t out = 0;
  for (int t = 0; t < m; ++t) {
    sample_snapshot(StateVector::basis(1, 0), x, rng, {&out, 1});
    zeros += outcome_bit(out) == 0;
  }
  EXPECT_NEAR(zeros / double(m), 0.5, 5 * 0.5 / std::sqrt(m));
}

TEST(Snapshot, SingletAntiCorrelated) {
  Rng rng = make_rng(3);
  const Basis zz[] = {Basis::Z, Basis::Z};
  std::uint8_t out[2];
  for (int t = 0; t < 500; ++t) {
    sample_snapshot(singlet(), zz, rng, out);
    EXPECT_NE(outcome_bit(out[0]), outcome_bit(out[1]));
  }
}

TEST(ZBasis, AllZero) {
  Rng rng = make_rng(4);
  const auto b = sample_zbasis(StateVector::basis(4, 0), 100, rng);
  EXPECT_EQ(b.size(), 100u);
  for (auto v : b.bits()) EXPECT_EQ(v, 0);
}

TEST(ZBasis, PlusPlusUniform) {
  Rng rng = make_rng(5);
  const int m = 10000;
  const auto b = sample_zbasis(StateVector(2, {0.5, 0.5, 0.5, 0.5}), m, rng);
  int counts[4] = {0, 0, 0, 0};
  for (std::size_t t = 0; t < b.size(); ++t) ++counts[b.shot(t)[0] + 2 * b.shot(t)[1]];
  const double sd = std::sqrt(0.25 * 0.75 / m);
  for (int c : counts) EXPECT_NEAR(c / double(m), 0.25, 5 * sd);
}

TEST(ZBasis, GhzOnlyAligned) {
  Rng rng = make_rng(6);
  const double r = 1.0 / std::sqrt(2.0);
  const auto b = sample_zbasis(StateVector(2, {r, 0.0, 0.0, r}), 2000, rng);
  int zeros = 0;
  for (std::size_t t = 0; t < b.size(); ++t) {
    EXPECT_EQ(b.shot(t)[0], b.shot(t)[1]);
    zeros += b.shot(t)[0] == 0;
  }
  EXPECT_GT(zeros, 0);
  EXPECT_LT(zeros, 2000);
}

TEST(ZBasis, PackRoundTrip) {
  Rng rng = make_rng(7);
  const auto b = sample_zbasis(StateVector::random(11, rng), 37, rng, 99);
  const auto packed = b.packed();
  EXPECT_EQ(packed.size(), 37u * 2u);
  const auto back = BitstringSet::from_packed(11, 37, packed, 99);
  EXPECT_TRUE(std::equal(back.bits().begin(), back.bits().end(), b.bits().begin(), b.bits().end()));
  EXPECT_EQ(back.seed(), 99u);
}

TEST(ShadowExpectation, SingleFactor) {
  const ShadowSet z0(1, {encode_outcome(Basis::Z, 0)});
  EXPECT_EQ(shadow_expectation(z0, PauliString::parse("Z")), 3.0);
  EXPECT_EQ(shadow_expectation(z0, PauliString::parse("X")), 0.0);
  EXPECT_EQ(shadow_expectation(z0, PauliString::parse("I")), 1.0);
  const ShadowSet y1(1, {encode_outcome(Basis::Y, 1)});
  EXPECT_EQ(shadow_expectation(y1, PauliString::parse("Y")), -3.0);
  EXPECT_EQ(shadow_expectation(y1, PauliString::parse("I")), 1.0);
}

TEST(ShadowExpectation, ExhaustiveAverageIsExact) {
  // |0>: X and Y outcomes are fair coins, Z always gives 0.
  const double born[6] = {0.5, 0.5, 0.5, 0.5, 1.0, 0.0};
  double total = 0.0;
  for (std::uint8_t v = 0; v < 6; ++v) {
    const ShadowSet s(1, {v});
    total += born[v] / 3.0 * shadow_expectation(s, PauliString::parse("Z"));
  }
  EXPECT_DOUBLE_EQ(total, 1.0);
}

TEST(ShadowExpectation, Unbiased) {
  Rng rng = make_rng(8);
  const StateVector psi = StateVector::random(3, rng);
  const auto ps = PauliString::parse("XIY");
  const int m = 40000;
  const auto s = sample_shadow(psi, m, rng);
  EXPECT_NEAR(shadow_expectation(s, ps), expectation(psi, ps), 5 * 3.0 / std::sqrt(m));
}

TEST(ShadowCorrelation, SingletConverges) {
  Rng rng = make_rng(9);
  const int m = 10000;
  const auto c = shadow_correlation(sample_shadow(singlet(), m, rng));
  EXPECT_NEAR(c.at(1, 2), -1.0, 5 * 3.0 / std::sqrt(m));
  EXPECT_EQ(c.at(1, 1), 1.0);
  EXPECT_EQ(c.at(2, 2), 1.0);
}

TEST(ShadowCorrelation, SingleSnapshotValues) {
  const ShadowSet mixed(2, {encode_outcome(Basis::X, 0), encode_outcome(Basis::Y, 1)});
  EXPECT_EQ(shadow_correlation(mixed).at(1, 2), 0.0);
  const ShadowSet same(2, {encode_outcome(Basis::X, 0), encode_outcome(Basis::X, 1)});
  EXPECT_EQ(shadow_correlation(same).at(1, 2), -3.0);
  Rng rng = make_rng(10);
  const auto s = sample_shadow(StateVector::random(4, rng), 1, rng);
  const auto c = shadow_correlation(s);
  for (int i = 1; i <= 4; ++i) {
    EXPECT_EQ(c.at(i, i), 1.0);
    for (int j = i + 1; j <= 4; ++j) {
      const double v = c.at(i, j);
      EXPECT_TRUE(v == 0.0 || std::abs(v) == 3.0) << v;
    }
  }
}

TEST(ShadowRenyi, PureProductPair) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng = make_rng(11, {seed});
    const auto s = sample_shadow(StateVector::basis(2, 0), 10000, rng);
    EXPECT_LE(std::abs(shadow_renyi2(s, 1)), 0.1);
  }
}

TEST(ShadowRenyi, MaximallyMixedPair) {
  Rng rng = make_rng(12);
  const auto s = sample_shadow(double_singlet(), 10000, rng);
  EXPECT_NEAR(shadow_renyi2(s, 2), 2.0, 0.1);
  const auto all = shadow_renyi2_adjacent(s);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[1], shadow_renyi2(s, 2));
}

TEST(ShadowRenyi, ClampsLowPurity) {
  // tr(rho_a rho_b) per site: -4 for Z0 vs Z1, 1/2 for Z0 vs X0.
  const ShadowSet s(2, {encode_outcome(Basis::Z, 0), encode_outcome(Basis::Z, 0),
                        encode_outcome(Basis::Z, 1), encode_outcome(Basis::X, 0)});
  EXPECT_DOUBLE_EQ(shadow_purity_pair(s, 1), -2.0);
  EXPECT_EQ(shadow_renyi2(s, 1), 2.0);
}

TEST(PhaseScores, AllZeroBits) {
  const BitstringSet b(4, std::vector<std::uint8_t>(4 * 10, 0));
  const auto p = estimate_phase_scores(b);
  EXPECT_DOUBLE_EQ(p.s2, 1.0);
  EXPECT_DOUBLE_EQ(p.s3, 1.0);
  EXPECT_EQ(p.phase, Phase::Disordered);
}

TEST(PhaseScores, AlternatingString) {
  // Bit 0 (occupied) at sites 1, 3, 5.
  const std::vector<std::uint8_t> one = {0, 1, 0, 1, 0, 1};
  std::vector<std::uint8_t> bits;
  for (int t = 0; t < 8; ++t) bits.insert(bits.end(), one.begin(), one.end());
  const auto p = estimate_phase_scores(BitstringSet(6, bits));
  EXPECT_DOUBLE_EQ(p.s2, 1.0);
  EXPECT_DOUBLE_EQ(p.s3, 0.5);
  EXPECT_EQ(p.phase, Phase::Z2);
}

TEST(PhaseScores, ConvergeToExact) {
  Rng rng = make_rng(13);
  const StateVector psi = StateVector::random(6, rng);
  const auto exact = exact_phase_label(psi);
  const auto est = estimate_phase_scores(sample_zbasis(psi, 100000, rng));
  EXPECT_NEAR(est.s2, exact.s2, 0.02);
  EXPECT_NEAR(est.s3, exact.s3, 0.02);
}

TEST(ShadowSet, Validation) {
  EXPECT_THROW(ShadowSet(2, {0, 1, 2}), std::invalid_argument);
  EXPECT_THROW(ShadowSet(1, {6}), std::invalid_argument);
  EXPECT_THROW(BitstringSet(1, {2}), std::invalid_argument);
}

}  // namespace
}  // namespace qsl
