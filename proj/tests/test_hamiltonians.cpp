#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qsl/groundstate.hpp"
#include "qsl/hamiltonians.hpp"

namespace qsl {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Heisenberg, SinglePair) {
  const SparseOperator h = build_heisenberg(HeisenbergParams{2, std::nullopt, {1.0}});
  EXPECT_EQ(h.size(), 3u);
  EXPECT_DOUBLE_EQ(h.coeff(PauliString::parse("XX")), 1.0);
  EXPECT_DOUBLE_EQ(h.coeff(PauliString::parse("YY")), 1.0);
  EXPECT_DOUBLE_EQ(h.coeff(PauliString::parse("ZZ")), 1.0);
}

TEST(Heisenberg, PowerLawCouplings) {
  const auto p = HeisenbergParams::power_law(3, 1.0);
  EXPECT_DOUBLE_EQ(p.coupling(1, 2), 369.0);
  EXPECT_DOUBLE_EQ(p.coupling(2, 3), 369.0);
  EXPECT_DOUBLE_EQ(p.coupling(1, 3), 184.5);
  EXPECT_DOUBLE_EQ(p.coupling(3, 1), 184.5);
}

TEST(Heisenberg, PairGroundState) {
  const auto spec = dense_diagonalize(build_heisenberg(HeisenbergParams{2, std::nullopt, {1.0}}));
  EXPECT_NEAR(spec.eigenvalues[0], -3.0, 1e-12);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(spec.ground[1]), r, 1e-12);
  EXPECT_NEAR(std::abs(spec.ground[2]), r, 1e-12);
  EXPECT_NEAR(std::abs(spec.ground[1] + spec.ground[2]), 0.0, 1e-12);
}

TEST(Tfim, DecoupledFields) {
  const auto spec = dense_diagonalize(build_tfim(TfimParams{2, {0.0}, {1.0, 1.0}}));
  EXPECT_NEAR(spec.eigenvalues[0], -2.0, 1e-12);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(spec.ground[i]), 0.5, 1e-12);
}

TEST(Tfim, ClassicalIsingDegenerate) {
  const auto spec = dense_diagonalize(build_tfim(TfimParams{2, {1.0}, {0.0, 0.0}}));
  EXPECT_NEAR(spec.eigenvalues[0], -1.0, 1e-12);
  EXPECT_NEAR(spec.eigenvalues[1], -1.0, 1e-12);
  EXPECT_NEAR(spec.eigenvalues[2], 1.0, 1e-12);
  const double p = std::norm(spec.ground[0]) + std::norm(spec.ground[3]);
  EXPECT_NEAR(p, 1.0, 1e-12);
}

TEST(Tfim, ThreeSitesAgainstDense) {
  const SparseOperator h = build_tfim(TfimParams{3, {1.0, 1.0}, {1.0, 1.0, 1.0}});
  Rng rng = make_rng(1);
  const auto gs = ground_state(h, {}, rng);
  EXPECT_NEAR(gs.energy, dense_diagonalize(h).eigenvalues[0], 1e-9);
}

TEST(Rydberg, DetuningOnly) {
  // H = -(N1 + N2); N = (I + Z)/2 is 1 on bit 0, so |00> is lowest.
  const auto spec = dense_diagonalize(build_rydberg(RydbergParams{2, 0.0, 0.0, 1.0}));
  EXPECT_NEAR(spec.eigenvalues[0], -2.0, 1e-12);
  EXPECT_NEAR(spec.eigenvalues[1], -1.0, 1e-12);
  EXPECT_NEAR(std::abs(spec.ground[0]), 1.0, 1e-12);
}

TEST(Rydberg, DecoupledDrive) {
  const double omega = 10 * kPi;
  const auto spec = dense_diagonalize(build_rydberg(RydbergParams{2, omega, 0.0, 0.0}));
  EXPECT_NEAR(spec.eigenvalues[0], -omega, 1e-10);
  // |-->: amplitudes (1, -1, -1, 1)/2.
  const cplx phase = spec.ground[0] / std::abs(spec.ground[0]);
  const double want[] = {0.5, -0.5, -0.5, 0.5};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(spec.ground[i] / phase - want[i]), 0.0, 1e-10);
}

TEST(Rydberg, ThreeSitesAgainstDense) {
  const SparseOperator h = build_rydberg(RydbergParams{3, 10 * kPi, 2.0, 10 * kPi});
  Rng rng = make_rng(2);
  const auto gs = ground_state(h, {}, rng);
  EXPECT_NEAR(gs.energy, dense_diagonalize(h).eigenvalues[0], 1e-9);
}

TEST(Rydberg, BlockadeEnergy) {
  const RydbergParams p{5, 10 * kPi, 2.0, 0.0};
  EXPECT_DOUBLE_EQ(p.blockade_energy(), 10 * kPi * 64.0);
}

TEST(Sampling, Deterministic) {
  Rng a = make_rng(9), b = make_rng(9);
  const auto pa = std::get<HeisenbergParams>(sample_params(Family::Heisenberg, 4, a));
  const auto pb = std::get<HeisenbergParams>(sample_params(Family::Heisenberg, 4, b));
  EXPECT_EQ(pa.couplings, pb.couplings);
  ASSERT_TRUE(pa.exponent.has_value());
  EXPECT_GE(*pa.exponent, 1.0);
  EXPECT_LE(*pa.exponent, 2.0);
}

TEST(Sampling, TfimRanges) {
  Rng rng = make_rng(10);
  for (int t = 0; t < 20; ++t) {
    const auto p = std::get<TfimParams>(sample_params(Family::Tfim, 8, rng));
    ASSERT_EQ(p.couplings.size(), 7u);
    for (double j : p.couplings) {
      EXPECT_GE(j, 0.0);
      EXPECT_LE(j, 2.0);
    }
    for (double h : p.fields) EXPECT_EQ(h, 1.0);
  }
}

TEST(Sampling, RydbergRanges) {
  Rng rng = make_rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto p = std::get<RydbergParams>(sample_params(Family::Rydberg, 9, rng));
    EXPECT_EQ(p.rabi, 10 * kPi);
    EXPECT_GE(p.blockade_ratio, 1.0);
    EXPECT_LE(p.blockade_ratio, 2.95);
    EXPECT_GE(p.detuning, -20 * kPi);
    EXPECT_LE(p.detuning, 30 * kPi);
  }
}

TEST(Features, Dimensions) {
  Rng rng = make_rng(12);
  EXPECT_EQ(feature_vector(sample_params(Family::Tfim, 127, rng)).size(), 126u);
  EXPECT_EQ(feature_dim(Family::Tfim, 127), 126u);
  EXPECT_EQ(feature_vector(sample_params(Family::Rydberg, 13, rng)).size(), 4u);
  const auto hb = feature_vector(HeisenbergParams{2, std::nullopt, {0.25}});
  ASSERT_EQ(hb.size(), 1u);
  EXPECT_EQ(hb[0], 0.25);
  EXPECT_EQ(feature_dim(Family::Heisenberg, 8), 28u);
}

TEST(Params, JsonRoundTrip) {
  Rng rng = make_rng(13);
  for (Family f : {Family::Heisenberg, Family::Tfim, Family::Rydberg}) {
    const auto p = sample_params(f, 6, rng);
    std::optional<std::uint64_t> seed;
    const auto back = params_from_json(params_to_json(p, 42), &seed);
    EXPECT_EQ(seed, std::optional<std::uint64_t>(42));
    EXPECT_EQ(feature_vector(back), feature_vector(p));
    EXPECT_EQ(family_of(back), f);
  }
}

TEST(Params, FamilyNames) {
  for (Family f : {Family::Heisenberg, Family::Tfim, Family::Rydberg}) EXPECT_EQ(parse_family(to_string(f)), f);
  EXPECT_THROW(parse_family("ising3d"), std::invalid_argument);
}

}  // namespace
}  // namespace qsl
