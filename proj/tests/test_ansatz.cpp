#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace snqs;

TEST(Materialize, ConstantBasisForQ1) {
  WindowSpec w{0.0, 2.0, 1};
  CoeffTensor c = oracles::random_coeffs(3, 1, w, 4);
  RbmParams early = materialize(c, 0.0);
  RbmParams late = materialize(c, 1.7);
  EXPECT_LT((flatten(early) - c.coeffs.col(0)).norm(), 1e-14);
  EXPECT_LT((flatten(late) - flatten(early)).norm(), 1e-14);
}

TEST(Materialize, MidpointKillsOddTerms) {
  WindowSpec w{0.0, 2.0, 5};
  CoeffTensor c = oracles::random_coeffs(2, 1, w, 9);
  Eigen::VectorXcd expect = c.coeffs.col(0) - c.coeffs.col(2) + c.coeffs.col(4);
  EXPECT_LT((flatten(materialize(c, 1.0)) - expect).norm(), 1e-13);
}

TEST(Materialize, ZeroTensorGivesExactInitialState) {
  WindowSpec w{0.0, 2.0, 3};
  CoeffTensor c;
  c.L = 4;
  c.alpha = 2;
  c.window = w;
  c.coeffs = Eigen::MatrixXcd::Zero(rbm_param_count(4, 2), 3);
  StateVector v = densify_rbm(materialize(c, 0.3));
  EXPECT_NEAR(infidelity(v, build_initial_state(4)), 0.0, 1e-14);
}

TEST(Materialize, LinearInCoefficients) {
  WindowSpec w{0.0, 1.0, 4};
  CoeffTensor c1 = oracles::random_coeffs(2, 2, w, 1);
  CoeffTensor c2 = oracles::random_coeffs(2, 2, w, 2);
  CoeffTensor sum = c1;
  sum.coeffs += c2.coeffs;
  const double t = 0.37;
  Eigen::VectorXcd lhs = flatten(materialize(sum, t));
  Eigen::VectorXcd rhs = flatten(materialize(c1, t)) + flatten(materialize(c2, t));
  EXPECT_LT((lhs - rhs).norm(), 1e-13);
}

TEST(Materialize, ShapeMismatchThrows) {
  WindowSpec w{0.0, 1.0, 2};
  CoeffTensor c = oracles::random_coeffs(3, 1, w, 5);
  c.window.Q = 3;  // now inconsistent with the stored columns
  EXPECT_THROW(materialize(c, 0.5), ConfigError);
}

TEST(InitialCoeffs, ReproducesInitialStateExactlyAtT0) {
  WindowSpec w{0.0, 2.0, 5};
  CoeffTensor c = initial_coeffs(4, 2, w, 0.0, 123, 1e-2);
  EXPECT_GT(c.coeffs.rightCols(4).norm(), 0.0);  // noise present
  Eigen::VectorXcd at_start = flatten(materialize(c, 0.0));
  EXPECT_LT(at_start.norm(), 1e-15);
  StateVector v = densify_rbm(materialize(c, 0.0));
  EXPECT_NEAR(infidelity(v, build_initial_state(4)), 0.0, 1e-13);
}

TEST(InitialCoeffs, DeterministicInSeed) {
  WindowSpec w{0.0, 2.0, 3};
  CoeffTensor a = initial_coeffs(3, 2, w, 0.0, 9, 1e-2);
  CoeffTensor b = initial_coeffs(3, 2, w, 0.0, 9, 1e-2);
  CoeffTensor c = initial_coeffs(3, 2, w, 0.0, 10, 1e-2);
  EXPECT_EQ((a.coeffs - b.coeffs).norm(), 0.0);
  EXPECT_GT((a.coeffs - c.coeffs).norm(), 0.0);
}

TEST(AssembleGradient, SingleTermIsBasisWeightedCopy) {
  WindowSpec w{0.0, 2.0, 3};
  const Eigen::Index np = rbm_param_count(2, 1);
  Eigen::VectorXcd g = Eigen::VectorXcd::Random(np);
  std::vector<GradTerm> terms{{0, 0.25, 0.8, g}};
  Eigen::MatrixXcd out = assemble_gradient(terms, w, np, LossForm::log_sum);
  Eigen::VectorXd basis = cheb_values(3, rescale(0.25, w));
  for (int q = 0; q < 3; ++q) {
    EXPECT_LT((out.col(q) - (basis[q] / 0.8) * g).norm(), 1e-13);
  }
}

TEST(AssembleGradient, Q1ReducesToPlainWeightedSum) {
  WindowSpec w{0.0, 1.0, 1};
  const Eigen::Index np = 4;
  Eigen::VectorXcd g0 = Eigen::VectorXcd::Random(np);
  Eigen::VectorXcd g1 = Eigen::VectorXcd::Random(np);
  std::vector<GradTerm> terms{{0, 0.0, 0.5, g0}, {1, 1.0, 0.25, g1}};
  Eigen::MatrixXcd out = assemble_gradient(terms, w, np, LossForm::log_sum);
  EXPECT_LT((out.col(0) - (g0 / 0.5 + g1 / 0.25)).norm(), 1e-13);
}

TEST(AssembleGradient, ProductFormUsesLeaveOneOutWeights) {
  WindowSpec w{0.0, 1.0, 1};
  const Eigen::Index np = 2;
  Eigen::VectorXcd g0 = Eigen::VectorXcd::Ones(np);
  Eigen::VectorXcd g1 = 2.0 * Eigen::VectorXcd::Ones(np);
  // step 1 contributes at both of its times with the same value
  std::vector<GradTerm> terms{{0, 0.0, 0.5, g0}, {1, 0.5, 0.25, g1}, {1, 1.0, 0.25, g1}};
  Eigen::MatrixXcd out = assemble_gradient(terms, w, np, LossForm::product);
  // weight(step 0) = 0.25, weight(step 1) = 0.5, applied to both its terms
  EXPECT_NEAR(std::abs(out(0, 0) - Complex(0.25 * 1.0 + 0.5 * 2.0 + 0.5 * 2.0)), 0.0,
              1e-13);
}

TEST(AssembleGradient, NonPositiveValueThrows) {
  WindowSpec w{0.0, 1.0, 2};
  std::vector<GradTerm> terms{{0, 0.0, -0.1, Eigen::VectorXcd::Zero(3)}};
  EXPECT_THROW(assemble_gradient(terms, w, 3, LossForm::log_sum), CollapsedStateError);
}

TEST(WindowHandoff, PaperQ3ClosedForm) {
  WindowSpec w1{0.0, 2.0, 3};
  WindowSpec w2{2.0, 4.0, 3};
  CoeffTensor c = oracles::random_coeffs(2, 1, w1, 21);
  CoeffTensor next = window_handoff(c, w2);
  for (Eigen::Index j = 0; j < c.coeffs.rows(); ++j) {
    const Complex t1 = c.coeffs(j, 0), t2 = c.coeffs(j, 1), t3 = c.coeffs(j, 2);
    EXPECT_LT(std::abs(next.coeffs(j, 0) - (t1 + 2.0 * t2 + 8.0 * t3)), 1e-12);
    EXPECT_LT(std::abs(next.coeffs(j, 1) - (t2 + 8.0 * t3)), 1e-12);
    EXPECT_LT(std::abs(next.coeffs(j, 2) - t3), 1e-12);
  }
}

TEST(WindowHandoff, Q1IsIdentity) {
  WindowSpec w1{0.0, 1.0, 1};
  WindowSpec w2{1.0, 2.0, 1};
  CoeffTensor c = oracles::random_coeffs(2, 1, w1, 3);
  CoeffTensor next = window_handoff(c, w2);
  EXPECT_LT((next.coeffs - c.coeffs).norm(), 1e-15);
}

TEST(WindowHandoff, MismatchedQThrows) {
  CoeffTensor c = oracles::random_coeffs(2, 1, {0.0, 1.0, 3}, 3);
  EXPECT_THROW(window_handoff(c, {1.0, 2.0, 4}), ConfigError);
}

TEST(WindowHandoff, SeamDerivativesMatchByFiniteDifferences) {
  for (int Q = 2; Q <= 7; ++Q) {
    WindowSpec w1{0.0, 2.0, Q};
    WindowSpec w2{2.0, 4.0, Q};
    CoeffTensor c = oracles::random_coeffs(2, 1, w1, static_cast<unsigned>(40 + Q), 0.5);
    CoeffTensor next = window_handoff(c, w2);
    const double h = 1e-3;
    // value and first derivative via central differences at the seam
    Eigen::VectorXcd v_prev = flatten(materialize(c, 2.0));
    Eigen::VectorXcd v_next = flatten(materialize(next, 2.0));
    EXPECT_LT((v_prev - v_next).norm(), 1e-10 * std::max(1.0, v_prev.norm())) << Q;
    if (Q >= 2) {
      Eigen::VectorXcd d_prev =
          (flatten(materialize(c, 2.0 + h)) - flatten(materialize(c, 2.0 - h))) / (2 * h);
      Eigen::VectorXcd d_next =
          (flatten(materialize(next, 2.0 + h)) - flatten(materialize(next, 2.0 - h))) /
          (2 * h);
      EXPECT_LT((d_prev - d_next).norm(), 1e-8 * std::max(1.0, d_prev.norm())) << Q;
    }
  }
}

// Matching all Q derivative orders of a degree Q-1 polynomial reproduces
// the polynomial: evaluating either tensor anywhere beyond the seam must
// agree before any retraining.
TEST(WindowHandoff, ExtrapolationIdentityForEqualWidths) {
  for (int Q : {2, 4, 7}) {
    WindowSpec w1{0.0, 2.0, Q};
    WindowSpec w2{2.0, 4.0, Q};
    CoeffTensor c = oracles::random_coeffs(2, 2, w1, static_cast<unsigned>(60 + Q), 0.4);
    CoeffTensor next = window_handoff(c, w2);
    for (double t : {2.0, 2.3, 3.1, 3.9}) {
      Eigen::VectorXcd a = flatten(materialize(c, t));
      Eigen::VectorXcd b = flatten(materialize(next, t));
      EXPECT_LT((a - b).norm(), 1e-9 * std::max(1.0, a.norm())) << "Q=" << Q << " t=" << t;
    }
  }
}

TEST(WindowHandoff, UnequalWidthsKeepValueAndSlopeContinuity) {
  WindowSpec w1{0.0, 2.0, 4};
  WindowSpec w2{2.0, 3.0, 4};  // half width
  CoeffTensor c = oracles::random_coeffs(2, 1, w1, 77, 0.5);
  CoeffTensor next = window_handoff(c, w2);
  const double h = 1e-4;
  Eigen::VectorXcd v_prev = flatten(materialize(c, 2.0));
  Eigen::VectorXcd v_next = flatten(materialize(next, 2.0));
  EXPECT_LT((v_prev - v_next).norm(), 1e-10);
  Eigen::VectorXcd d_prev =
      (flatten(materialize(c, 2.0 + h)) - flatten(materialize(c, 2.0 - h))) / (2 * h);
  Eigen::VectorXcd d_next =
      (flatten(materialize(next, 2.0 + h)) - flatten(materialize(next, 2.0 - h))) / (2 * h);
  EXPECT_LT((d_prev - d_next).norm(), 1e-6 * std::max(1.0, d_prev.norm()));
}
