#include <gtest/gtest.h>

#include <cmath>

#include "expect_error.hpp"
#include "rescert/seqspace.hpp"
#include "support.hpp"

using namespace rescert;
using rescert::testkit::Rng;
namespace tk = rescert::testkit;

TEST(DecayRatios, GeometricIsLambdaAndInverse) {
  for (double lambda : {0.1, 0.3, 0.5, 0.9}) {
    const auto r = decay_ratios(WeightingSequence::geometric(lambda));
    EXPECT_NEAR(r.decay, lambda, 1e-15);
    EXPECT_NEAR(r.inverse_decay, 1.0 / lambda, 1e-12);
    EXPECT_FALSE(r.lower_bound);
  }
}

TEST(DecayRatios, HarmonicIsOneAndOnePlusD) {
  const auto r = decay_ratios(WeightingSequence::harmonic(1.5));
  EXPECT_EQ(r.decay, 1.0);
  EXPECT_NEAR(r.inverse_decay, 2.5, 1e-15);
}

TEST(DecayRatios, GaussianHasInfiniteInverseRatio) {
  const auto r = decay_ratios(WeightingSequence::gaussian_exp());
  EXPECT_NEAR(r.decay, std::exp(-1.0), 1e-15);
  EXPECT_TRUE(std::isinf(r.inverse_decay));
}

TEST(DecayRatios, ClosedFormsMatchBruteForceSupremum) {
  // Brute-force sup over consecutive ratios; attained at t = 0 for these.
  for (const auto& w : {WeightingSequence::geometric(0.4), WeightingSequence::harmonic(0.7)}) {
    double L = 0.0, D = 0.0;
    for (std::size_t t = 0; t < 300; ++t) {
      L = std::max(L, w(t) / w(t + 1));
      D = std::max(D, w(t + 1) / w(t));
    }
    const auto r = decay_ratios(w);
    EXPECT_NEAR(r.inverse_decay, L, 1e-12);
    EXPECT_LE(D, r.decay + 1e-15);
    EXPECT_GE(r.decay * r.inverse_decay, 1.0 - 1e-12);
  }
}

TEST(DecayRatios, CustomTableIsFlaggedAndUsesObservedRatios) {
  const auto w = WeightingSequence::custom({1.0, 0.5, 0.4, 0.2});
  const auto r = decay_ratios(w);
  EXPECT_TRUE(r.lower_bound);
  EXPECT_NEAR(r.inverse_decay, 2.0, 1e-15);
  EXPECT_NEAR(r.decay, 0.8, 1e-15);
  // tail continues with the last ratio 0.5
  EXPECT_NEAR(w(4), 0.1, 1e-15);
  EXPECT_NEAR(w(6), 0.025, 1e-15);
}

TEST(DecayRatios, PVariantTakesRoots) {
  const auto r = decay_ratios_p(WeightingSequence::geometric(0.25), 2.0);
  EXPECT_NEAR(r.decay, 0.5, 1e-15);
  EXPECT_NEAR(r.inverse_decay, 2.0, 1e-15);
  EXPECT_TRUE(std::isinf(decay_ratios_p(WeightingSequence::gaussian_exp(), 3.0).inverse_decay));
  EXPECT_ERROR_CODE(decay_ratios_p(WeightingSequence::geometric(0.5), 0.5), ErrorCode::InvalidInput);
}

TEST(Weighting, InvalidParametersAreRejected) {
  EXPECT_ERROR_CODE(WeightingSequence::geometric(0.0), ErrorCode::InvalidWeighting);
  EXPECT_ERROR_CODE(WeightingSequence::geometric(1.0), ErrorCode::InvalidWeighting);
  EXPECT_ERROR_CODE(WeightingSequence::harmonic(-1.0), ErrorCode::InvalidWeighting);
  EXPECT_ERROR_CODE(WeightingSequence::custom({0.9, 0.5}), ErrorCode::InvalidWeighting);
  EXPECT_ERROR_CODE(WeightingSequence::custom({1.0, 0.5, 0.5}), ErrorCode::InvalidWeighting);
  EXPECT_ERROR_CODE(WeightingSequence::custom({1.0}), ErrorCode::InvalidWeighting);
}

TEST(Weighting, ValuesStartAtOneAndDecrease) {
  for (const auto& w : {WeightingSequence::geometric(0.7), WeightingSequence::harmonic(2.0),
                        WeightingSequence::gaussian_exp()}) {
    EXPECT_EQ(w(0), 1.0);
    for (std::size_t t = 0; t < 20; ++t) EXPECT_LT(w(t + 1), w(t));
  }
}

TEST(Weighting, PoweredGeometricStaysGeometric) {
  const auto w = powered(WeightingSequence::geometric(0.5), 2.0);
  EXPECT_FALSE(w.is_custom());
  EXPECT_NEAR(w(3), std::pow(0.25, 3), 1e-15);
  const auto h = powered(WeightingSequence::harmonic(1.0), 0.5, 64);
  EXPECT_TRUE(h.is_custom());
  EXPECT_NEAR(h(3), std::sqrt(0.25), 1e-15);
}

TEST(Window, TimeIndexingIsOldestFirst) {
  const Window z = Window::scalar({1.0, 2.0, 3.0});
  EXPECT_EQ(z.depth(), 3u);
  EXPECT_EQ(z.oldest(), -2);
  EXPECT_EQ(z.at(0)(0), 3.0);
  EXPECT_EQ(z.at(-2)(0), 1.0);
  EXPECT_EQ(z.at_or_zero(-5)(0), 0.0);
  EXPECT_ERROR_CODE(z.at(1), ErrorCode::DepthExceeded);
  EXPECT_ERROR_CODE(z.at(-3), ErrorCode::DepthExceeded);
}

TEST(Window, RejectsNonFiniteAndEmpty) {
  Window::Storage s(2, 1);
  s << 1.0, std::nan("");
  EXPECT_ERROR_CODE(Window{s}, ErrorCode::InvalidInput);
  EXPECT_ERROR_CODE(Window(0, 1), ErrorCode::InvalidInput);
  Window z(3, 1);
  EXPECT_ERROR_CODE(z.set(0, Vector::Constant(1, INFINITY)), ErrorCode::InvalidInput);
}

TEST(Norms, WeightedNormMatchesDefinition) {
  Rng rng(11);
  for (const auto& w : {WeightingSequence::geometric(0.6), WeightingSequence::harmonic(0.3),
                        WeightingSequence::gaussian_exp()}) {
    for (int k = 0; k < 20; ++k) {
      const Window z = tk::random_window(rng, 40, 3, 5.0);
      EXPECT_NEAR(weighted_norm(z, w), tk::ref_weighted_norm(z, [&](std::size_t t) { return w(t); }), 1e-14);
      EXPECT_LE(weighted_norm(z, w), norm(z, NormSpec::sup()) + 1e-15);
    }
  }
}

TEST(Norms, PWeightedNormMatchesDefinition) {
  Rng rng(12);
  const auto w = WeightingSequence::geometric(0.8);
  const Window z = tk::random_window(rng, 25, 2);
  double acc = 0.0;
  for (int t = z.oldest(); t <= 0; ++t) acc += std::pow(z.at(t).norm(), 3.0) * std::pow(0.8, -t);
  EXPECT_NEAR(norm(z, NormSpec::p_weighted(3.0, w)), std::cbrt(acc), 1e-13);
  EXPECT_ERROR_CODE(NormSpec::p_weighted(0.5, w), ErrorCode::InvalidInput);
}

TEST(Shift, DelayMovesEntriesTowardThePast) {
  const Window z = Window::scalar({1.0, 2.0, 3.0, 4.0});
  const Window d = shift(z, 1);  // y_t = z_{t+1}
  EXPECT_EQ(d, Window::scalar({2.0, 3.0, 4.0, 0.0}));
  const Window a = shift(z, -1);  // y_t = z_{t-1}
  EXPECT_EQ(a, Window::scalar({0.0, 1.0, 2.0, 3.0}));
}

TEST(Shift, CompositionsZeroOneEnd) {
  const Window z = Window::scalar({1.0, 2.0, 3.0, 4.0});
  EXPECT_EQ(shift(shift(z, 1), -1), Window::scalar({0.0, 2.0, 3.0, 4.0}));
  EXPECT_EQ(shift(shift(z, -1), 1), Window::scalar({1.0, 2.0, 3.0, 0.0}));
}

TEST(Shift, DepthExceeded) {
  const Window z = Window::scalar({1.0, 2.0});
  EXPECT_ERROR_CODE(shift(z, 2), ErrorCode::DepthExceeded);
  EXPECT_ERROR_CODE(shift(z, -2), ErrorCode::DepthExceeded);
}

TEST(Shift, NormBoundedByInverseDecayRatio) {
  Rng rng(5);
  for (const auto& w : {WeightingSequence::geometric(0.5), WeightingSequence::harmonic(1.5)}) {
    const double L = decay_ratios(w).inverse_decay;
    const double D = decay_ratios(w).decay;
    for (int k = 0; k < 100; ++k) {
      const Window z = tk::random_window(rng, 30, 2);
      EXPECT_LE(weighted_norm(shift(z, -1), w), L * weighted_norm(z, w) * (1 + 1e-14));
      EXPECT_LE(weighted_norm(shift(z, 1), w), D * weighted_norm(z, w) * (1 + 1e-14));
    }
  }
}

TEST(OperatorNorm, ProjectionEqualsInverseWeight) {
  const auto w = WeightingSequence::geometric(0.5);
  for (int t : {0, -1, -4}) {
    const auto est = operator_norm_estimate(Projection{t}, NormSpec::weighted(w), 50, 10, 2, 1);
    EXPECT_NEAR(est.estimate, std::pow(2.0, -t), 1e-12);
    EXPECT_NEAR(est.analytic, std::pow(2.0, -t), 1e-12);
  }
  EXPECT_ERROR_CODE(operator_norm_estimate(Projection{-10}, NormSpec::weighted(w), 5, 10, 1, 1),
                    ErrorCode::DepthExceeded);
}

TEST(OperatorNorm, ShiftsEqualDecayRatios) {
  const auto w = WeightingSequence::geometric(0.3);
  const auto back = operator_norm_estimate(Shift{-1}, NormSpec::weighted(w), 50, 12, 1, 3);
  EXPECT_NEAR(back.estimate / (1 / 0.3), 1.0, 1e-9);
  const auto fwd = operator_norm_estimate(Shift{1}, NormSpec::weighted(w), 50, 12, 1, 3);
  EXPECT_NEAR(fwd.estimate / 0.3, 1.0, 1e-9);
  const auto h = operator_norm_estimate(Shift{-1}, NormSpec::weighted(WeightingSequence::harmonic(1.5)), 50, 12, 2, 3);
  EXPECT_NEAR(h.estimate / 2.5, 1.0, 1e-9);
}

TEST(OperatorNorm, SupNormShiftsHaveUnitNorm) {
  const auto s = operator_norm_estimate(Shift{-1}, NormSpec::sup(), 20, 8, 1, 0);
  EXPECT_NEAR(s.estimate, 1.0, 1e-15);
}
