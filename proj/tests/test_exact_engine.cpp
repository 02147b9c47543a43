#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace snqs;

TEST(BuildInitialState, SmallCases) {
  StateVector v1 = build_initial_state(1);
  ASSERT_EQ(v1.size(), 2);
  EXPECT_NEAR(std::abs(v1[0] - Complex(1.0 / std::sqrt(2.0))), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(v1[1] - Complex(1.0 / std::sqrt(2.0))), 0.0, 1e-15);

  StateVector v2 = build_initial_state(2);
  ASSERT_EQ(v2.size(), 4);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(v2[i] - Complex(0.5)), 0.0, 1e-15);
  EXPECT_NEAR(v2.norm(), 1.0, 1e-14);
}

TEST(BuildInitialState, TransverseMagnetizationIsOneEverywhere) {
  for (int L : {2, 5, 8}) {
    StateVector v = build_initial_state(L);
    for (int site = 0; site < L; ++site) {
      EXPECT_NEAR(sigma_x_expectation(v, site, L), 1.0, 1e-13);
    }
  }
}

TEST(BuildInitialState, CapacityError) {
  EXPECT_THROW(build_initial_state(0), CapacityError);
  EXPECT_THROW(build_initial_state(15), CapacityError);
}

TEST(ExactPropagate, ZeroTimeIsIdentity) {
  HamiltonianSpec h{4, 1.0, 0.3, 0.3};
  StateVector v = build_initial_state(4);
  StateVector w = exact_propagate(v, h, 0.0);
  EXPECT_LT((w - v).norm(), 1e-13);
}

TEST(ExactPropagate, EnergyConservedAlongTrajectory) {
  HamiltonianSpec h{6, 1.0, 0.3, 0.3};
  Eigen::MatrixXd H = dense_hamiltonian(h);
  StateVector v = build_initial_state(6);
  const double e0 = v.dot(H.cast<Complex>() * v).real();
  for (int step = 0; step < 50; ++step) v = exact_propagate(v, h, 0.02);
  const double e1 = v.dot(H.cast<Complex>() * v).real() / v.squaredNorm();
  EXPECT_NEAR(e1, e0, 1e-10 * std::max(1.0, std::abs(e0)));
}

TEST(ExactPropagate, UnitaryOverManySteps) {
  HamiltonianSpec h{5, 1.0, 0.3, 0.3};
  StateVector v = build_initial_state(5);
  for (int step = 0; step < 250; ++step) {
    v = exact_propagate(v, h, 0.01);
  }
  EXPECT_NEAR(v.norm(), 1.0, 1e-10);
}

TEST(ExactPropagate, GroupProperty) {
  HamiltonianSpec h{4, 1.0, 0.25, 0.4};
  StateVector v = densify_rbm(oracles::random_rbm(4, 1, 11));
  StateVector one = exact_propagate(v, h, 0.07);
  StateVector two = exact_propagate(exact_propagate(v, h, 0.03), h, 0.04);
  EXPECT_LT((one - two).norm(), 1e-12);
}

TEST(ExactPropagate, DimensionMismatchThrows) {
  HamiltonianSpec h{4, 1.0, 0.3, 0.3};
  EXPECT_THROW(exact_propagate(build_initial_state(3), h, 0.1), DimensionError);
}

TEST(ExactPropagate, MagnetizationStartsAtOneAndOscillatesBelow) {
  HamiltonianSpec h{10, 1.0, 0.3, 0.3};
  const int mid = middle_site(10);
  StateVector v = build_initial_state(10);
  EXPECT_NEAR(sigma_x_expectation(v, mid, 10), 1.0, 1e-12);
  double min_seen = 1.0;
  for (int step = 1; step <= 220; ++step) {
    v = exact_propagate(v, h, 0.01);
    const double sx = sigma_x_expectation(v, mid, 10);
    EXPECT_LE(sx, 1.0 + 1e-9);
    min_seen = std::min(min_seen, sx);
  }
  EXPECT_LT(min_seen, 0.95);  // the quench visibly departs from 1
}

TEST(Infidelity, IdenticalUpToScaleIsZero) {
  StateVector v = build_initial_state(3);
  StateVector w = Complex(0.3, -1.7) * v;
  EXPECT_NEAR(infidelity(v, w), 0.0, 1e-14);
  EXPECT_NEAR(infidelity(w, v), 0.0, 1e-14);
}

TEST(Infidelity, OrthogonalBasisStatesGiveOne) {
  StateVector a = StateVector::Zero(8), b = StateVector::Zero(8);
  a[1] = 1.0;
  b[5] = 1.0;
  EXPECT_NEAR(infidelity(a, b), 1.0, 1e-15);
}

TEST(Infidelity, UniformVersusBasisStateL2) {
  StateVector a = build_initial_state(2);
  StateVector b = StateVector::Zero(4);
  b[2] = Complex(0.0, 2.0);  // scaling must not matter
  EXPECT_NEAR(infidelity(a, b), 0.75, 1e-14);
}

TEST(Infidelity, ZeroNormThrows) {
  StateVector a = build_initial_state(2);
  StateVector z = StateVector::Zero(4);
  EXPECT_THROW(infidelity(a, z), NumericError);
}

TEST(DensifyRbm, ZeroParamsGiveUniformState) {
  RbmParams p = RbmParams::zero(4, 2);
  StateVector v = densify_rbm(p);
  StateVector u = build_initial_state(4);
  EXPECT_NEAR(infidelity(v, u), 0.0, 1e-14);
}

TEST(DensifyRbm, ImaginaryBiasProducesPhases) {
  // a_0 = i pi/2 makes the amplitude proportional to i^{x_0}.
  RbmParams p = RbmParams::zero(2, 1);
  p.a[0] = Complex(0.0, 1.5707963267948966);
  StateVector v = densify_rbm(p);
  // x_0 = -1 (bit 0 clear) -> phase exp(-i pi/2) = -i; x_0 = +1 -> +i.
  EXPECT_NEAR(std::abs(v[0] / v[1] - Complex(0, -1) / Complex(0, 1)), 0.0, 1e-12);
  Complex ratio = v[1] / v[0];  // flips x_0 from -1 to +1: factor exp(i pi)
  EXPECT_NEAR(std::abs(ratio - Complex(-1.0, 0.0)), 0.0, 1e-12);
}

TEST(DensifyRbm, StabilizesLargeLogAmplitudes) {
  RbmParams p = RbmParams::zero(3, 1);
  p.a.setConstant(Complex(400.0, 0.0));  // naive exp would overflow
  StateVector v = densify_rbm(p);
  EXPECT_TRUE(v.allFinite());
  EXPECT_GT(v.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SpectralDecomposition, ReproducesDenseMatrix) {
  HamiltonianSpec h{5, 1.0, 0.3, 0.3};
  const SpectralDecomposition& spec = spectral_decomposition(h);
  Eigen::MatrixXd rebuilt =
      spec.vectors * spec.values.asDiagonal() * spec.vectors.transpose();
  EXPECT_LT((rebuilt - dense_hamiltonian(h)).cwiseAbs().maxCoeff(), 1e-11);
}
