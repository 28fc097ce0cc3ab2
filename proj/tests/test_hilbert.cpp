#include <gtest/gtest.h>

#include "catgates/hilbert.hpp"

using namespace catgates;

namespace {

const KerrCatSpectrum& spectrum8() {
  static const KerrCatSpectrum s = diagonalize_kerr_cat(ModeSpace::for_alpha2(8.0), 1.0);
  return s;
}

}  // namespace

TEST(Operators, AnnihilationEntries) {
  const Mat a = annihilation_operator(3);
  EXPECT_DOUBLE_EQ(a(0, 1).real(), 1.0);
  EXPECT_DOUBLE_EQ(a(1, 2).real(), std::sqrt(2.0));
  EXPECT_EQ(a.col(0).norm(), 0.0);
  EXPECT_THROW(annihilation_operator(1), std::invalid_argument);
}

TEST(Operators, KerrHamiltonianHermitianAndScales) {
  const ModeSpace s = ModeSpace::for_alpha2(8.0);
  EXPECT_LT(hermiticity_defect(kerr_hamiltonian(s, 1.0)), 1e-12);
  EXPECT_EQ(kerr_hamiltonian(s, 0.0).norm(), 0.0);
}

TEST(Operators, CoherentStatesAreDark) {
  const ModeSpace s = ModeSpace::for_alpha2(8.0);
  const Mat h = kerr_hamiltonian(s, 1.0);
  for (double sign : {1.0, -1.0}) {
    const Vec v = coherent_state(s, sign * s.alpha);
    EXPECT_LT((h * v).norm(), 1e-6 * 64.0);
  }
}

TEST(Spectrum, FrozenEnergiesAndCouplings) {
  const auto& s = spectrum8();
  EXPECT_LT(std::abs(s.splitting(0)), 1e-6);
  EXPECT_NEAR(s.gap(1), -29.8423, 1e-3);
  EXPECT_NEAR(s.gap(2), -54.3255, 1e-3);
  const ReducedCouplings rc = reduced_couplings(s);
  EXPECT_NEAR(rc.lambda1, 0.398955, 1e-5);
  EXPECT_NEAR(rc.lambda2, 1.08053, 1e-4);
  EXPECT_NEAR(rc.eta_me, 0.255562, 1e-5);
}

TEST(Spectrum, GapNearFourKAlphaSquared) {
  const auto& s = spectrum8();
  EXPECT_LT(std::abs(s.gap(1) + 32.0) / 32.0, 0.15);
  EXPECT_LT(std::abs(s.gap(2) - 2.0 * s.gap(1)) / std::abs(2.0 * s.gap(1)), 0.20);
}

TEST(Spectrum, ParityPurity) {
  const auto& s = spectrum8();
  for (int n = 0; n < 3; ++n) {
    EXPECT_GT(parity_expectation(s.pairs[n].plus), 1.0 - 1e-8);
    EXPECT_LT(parity_expectation(s.pairs[n].minus), -1.0 + 1e-8);
  }
}

TEST(Spectrum, Orthonormal) {
  const auto& s = spectrum8();
  Mat v(s.space.fock_dim, 6);
  for (int n = 0; n < 3; ++n) {
    v.col(2 * n) = s.pairs[n].plus;
    v.col(2 * n + 1) = s.pairs[n].minus;
  }
  EXPECT_LT((v.adjoint() * v - identity(6)).norm(), 1e-10);
}

TEST(Spectrum, TruncationDoublingStable) {
  const auto& s = spectrum8();
  const KerrCatSpectrum big = diagonalize_kerr_cat(ModeSpace::for_alpha2(8.0, 2 * s.space.fock_dim), 1.0);
  for (int n = 0; n < 3; ++n) {
    EXPECT_NEAR(s.pairs[n].e_plus, big.pairs[n].e_plus, 8e-8);
    EXPECT_NEAR(s.pairs[n].e_minus, big.pairs[n].e_minus, 8e-8);
  }
}

TEST(Spectrum, SplittingsShrinkWithAlpha) {
  std::vector<KerrCatSpectrum> specs;
  for (double a2 : {4.0, 6.0, 8.0}) specs.push_back(diagonalize_kerr_cat(ModeSpace::for_alpha2(a2), 1.0));
  // The ground pair is exactly degenerate; excited pairs split less as alpha grows.
  for (const auto& s : specs) EXPECT_LT(std::abs(s.splitting(0)), 1e-10);
  for (int n = 1; n <= 2; ++n) {
    EXPECT_GT(std::abs(specs[0].splitting(n)), std::abs(specs[1].splitting(n)));
    EXPECT_GT(std::abs(specs[1].splitting(n)), std::abs(specs[2].splitting(n)));
  }
}

TEST(Spectrum, InsufficientTruncationDetected) {
  EXPECT_THROW(diagonalize_kerr_cat(ModeSpace::for_alpha2(8.0, 16), 1.0), std::runtime_error);
}

TEST(LogicalStates, OrthogonalAndCatLike) {
  const auto& s = spectrum8();
  const LogicalStates l = logical_states(s);
  EXPECT_LT(std::abs(l.ket0.dot(l.ket1)), 1e-12);
  EXPECT_NEAR(parity_expectation(l.plus), 1.0, 1e-8);
  const Vec coh = coherent_state(s.space, s.space.alpha);
  EXPECT_GE(std::norm(coh.dot(l.ket0)), 1.0 - 2.0 * std::exp(-16.0));
}

TEST(ShiftedFock, GroundMatchesEvenCat) {
  const auto& s = spectrum8();
  const Vec phi = shifted_fock_state(s.space, 0, 1);
  EXPECT_GE(std::norm(phi.dot(s.pairs[0].plus)), 1.0 - 1e-8);
  EXPECT_NEAR(parity_expectation(phi), 1.0, 1e-8);
  EXPECT_NEAR(parity_expectation(shifted_fock_state(s.space, 1, -1)), -1.0, 1e-8);
}

TEST(ShiftedFock, NearlyOrthogonalLowLevels) {
  const auto& s = spectrum8();
  for (int p : {1, -1}) {
    const Vec a = shifted_fock_state(s.space, 0, p);
    const Vec b = shifted_fock_state(s.space, 1, p);
    EXPECT_LT(std::abs(a.dot(b)), 1e-3);
  }
  EXPECT_THROW(shifted_fock_state(s.space, s.space.fock_dim, 1), std::invalid_argument);
}

TEST(ReducedCouplings, FirstOrderClosedForm) {
  const ReducedCouplings c = reduced_couplings_first_order(std::sqrt(8.0));
  EXPECT_NEAR(c.lambda1, 2.0 * std::sqrt(8.0) / 17.0, 1e-12);
  EXPECT_NEAR(c.lambda1, 0.333, 1e-3);
  const ReducedCouplings big = reduced_couplings_first_order(1e4);
  EXPECT_LT(big.lambda1, 1e-3);
  EXPECT_LT(big.lambda2, 1e-3);
  EXPECT_LT(big.eta_me, 1e-3);
}

TEST(ReducedCouplings, AnnihilationStructureInEigenbasis) {
  const auto& s = spectrum8();
  const CatBasis b(s, 5);
  // a flips photon-number parity, so same-parity elements vanish.
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      if (i % 2 == j % 2) {
        EXPECT_LT(std::abs(b.a()(i, j)), 1e-10) << i << ' ' << j;
      }
    }
  // Within the code pair a acts as alpha times X.
  EXPECT_NEAR(std::abs(b.a()(0, 1)), std::sqrt(8.0), 1e-3);
  EXPECT_THROW(reduced_couplings(KerrCatSpectrum{}), std::invalid_argument);
}

TEST(CatBasis, MonomialsAndRotation) {
  const auto& s = spectrum8();
  const CatBasis b(s, 4);
  EXPECT_LT(hermiticity_defect(b.monomial(1, 1)), 1e-12);
  // Projected rotations are contractions, and unitary at phi = pi.
  EXPECT_LE(b.rotation(0.3).operatorNorm(), 1.0 + 1e-9);
  const Mat u = b.rotation(std::numbers::pi);
  EXPECT_LT((u.adjoint() * u - identity(b.dim())).norm(), 1e-6);
  EXPECT_NEAR((b.well_projector(1) + b.well_projector(-1) - identity(b.dim())).norm(), 0.0, 1e-12);
}

TEST(Serialization, SpectrumRoundTrip) {
  const auto& s = spectrum8();
  const KerrCatSpectrum r = spectrum_from_json(spectrum_to_json(s, true));
  ASSERT_EQ(r.size(), s.size());
  EXPECT_DOUBLE_EQ(r.gap(1), s.gap(1));
  EXPECT_LT((r.pairs[1].minus - s.pairs[1].minus).norm(), 1e-15);
}
