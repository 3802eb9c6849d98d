#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "expect_error.hpp"
#include "rescert/volterra.hpp"
#include "support.hpp"

using namespace rescert;
namespace tk = rescert::testkit;

namespace {

Matrix scalar(double a) { return Matrix::Constant(1, 1, a); }

Matrix shift_matrix() {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 1) = 1.0;
  return A;
}

Matrix e2() {
  Matrix c = Matrix::Zero(2, 1);
  c(1, 0) = 1.0;
  return c;
}

ReservoirSystem memoryless_tanh() {
  return ReservoirSystem::esn(scalar(0.0), scalar(1.0), Vector::Zero(1), Squashing::tanh());
}

double filter_at_zero(const ReservoirSystem& sys, const Window& z) {
  const Vector x = run_flow(sys, z, Vector::Zero(static_cast<Eigen::Index>(sys.state_dim()))).at(0);
  return sys.readout() ? sys.readout()->apply(x)(0) : x(0);
}

ReservoirSystem random_nilpotent_poly(tk::Rng& rng, std::size_t N, int deg) {
  const auto Ni = static_cast<Eigen::Index>(N);
  return ReservoirSystem::linear(tk::random_nilpotent(rng, Ni), tk::random_matrix(rng, Ni, 1))
      .with_readout(tk::random_polynomial(rng, N, 1, deg));
}

}  // namespace

TEST(ExtractExact, IdentityFilter) {
  const auto K = extract_exact(scalar(0.0), scalar(1.0), std::nullopt);
  EXPECT_EQ(K.order, 1);
  EXPECT_EQ(K.memory, 0);
  EXPECT_EQ(K.kernel({0})(0), 1.0);
  EXPECT_TRUE(K.exact());
}

TEST(ExtractExact, PureDelay) {
  const auto K = extract_exact(shift_matrix(), e2(), Readout::linear(Matrix{{1.0, 0.0}}));
  EXPECT_EQ(K.memory, 1);
  EXPECT_EQ(K.kernel({0})(0), 0.0);
  EXPECT_EQ(K.kernel({-1})(0), 1.0);
  Window z = Window::scalar({0.0, 7.0, 0.0});
  EXPECT_EQ(eval_series(K, z)(0), 7.0);
}

TEST(ExtractExact, SquareReadout) {
  const auto K = extract_exact(scalar(0.0), scalar(1.0), Readout::polynomial(1, 1, {{{2}, Vector::Ones(1)}}));
  EXPECT_EQ(K.order, 2);
  EXPECT_EQ(K.kernel({0})(0), 0.0);
  EXPECT_EQ(K.kernel({0, 0})(0), 1.0);
  EXPECT_NEAR(eval_series(K, Window::scalar({5.0, -3.0}))(0), 9.0, 1e-15);
}

TEST(ExtractExact, CrossProductSplitsSymmetrically) {
  // x_0 = (z_{-1}, z_0), y = x1 x2 = z_{-1} z_0
  const auto K = extract_exact(shift_matrix(), e2(), Readout::polynomial(2, 1, {{{1, 1}, Vector::Ones(1)}}));
  EXPECT_EQ(K.kernel({0, -1})(0), 0.5);
  EXPECT_EQ(K.kernel({-1, 0})(0), 0.5);
  EXPECT_EQ(K.kernel({0, 0})(0), 0.0);
  EXPECT_EQ(K.kernel({-1, -1})(0), 0.0);
  EXPECT_ERROR_CODE(K.kernel({-2, 0}), ErrorCode::DepthExceeded);
}

TEST(ExtractExact, ConstantTermIsBaseOutput) {
  const auto K = extract_exact(scalar(0.0), scalar(1.0),
                               Readout::polynomial(1, 1, {{{0}, Vector::Constant(1, 2.5)}, {{1}, Vector::Ones(1)}}));
  EXPECT_EQ(K.base_output(0), 2.5);
  EXPECT_EQ(eval_series(K, Window::scalar({0.0, 0.0}))(0), 2.5);
}

TEST(ExtractExact, RejectsNonNilpotentAndNonLinear) {
  EXPECT_ERROR_CODE(extract_exact(scalar(0.5), scalar(1.0), std::nullopt), ErrorCode::NotNilpotent);
  EXPECT_ERROR_CODE(extract_exact(memoryless_tanh()), ErrorCode::Unsupported);
  EXPECT_EQ(nilpotency_index(shift_matrix()), 2);
  tk::Rng rng(1);
  EXPECT_EQ(nilpotency_index(tk::random_nilpotent(rng, 4)), 4);
}

TEST(ExtractExact, KernelsAreSymmetric) {
  tk::Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto K = extract_exact(random_nilpotent_poly(rng, 3, 3));
    for (int j = 2; j <= K.order; ++j)
      for (std::size_t idx = 0; idx < K.rows(j); ++idx) {
        auto k = detail::unflatten(idx, j, K.memory);
        std::sort(k.begin(), k.end());
        do {
          EXPECT_EQ(K.g[static_cast<std::size_t>(j - 1)].row(static_cast<Eigen::Index>(idx)),
                    K.g[static_cast<std::size_t>(j - 1)].row(static_cast<Eigen::Index>(detail::flatten(k, K.memory))));
        } while (std::next_permutation(k.begin(), k.end()));
      }
  }
}

TEST(Universality, SeriesEqualsFilterOnNilpotentSystems) {
  tk::Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sys = random_nilpotent_poly(rng, 1 + static_cast<std::size_t>(trial % 4), 1 + trial % 3);
    const auto K = extract_exact(sys, 20);
    for (int k = 0; k < 30; ++k) {
      const Window z = tk::random_window(rng, 20, 1);
      EXPECT_NEAR(eval_series(K, z)(0), filter_at_zero(sys, z), 1e-10);
    }
  }
}

TEST(EvalSeries, BaseAndDepthChecks) {
  const auto K = extract_exact(shift_matrix(), e2(), std::nullopt, 5);
  EXPECT_EQ(eval_series(K, K.base_point), K.base_output);
  EXPECT_ERROR_CODE(eval_series(K, Window::scalar({1.0})), ErrorCode::DepthExceeded);
  EXPECT_ERROR_CODE(eval_series(K, Window::scalar({1.0, 2.0}), -1), ErrorCode::DepthExceeded);
  // shifted evaluation reads the window as seen one step earlier
  EXPECT_EQ(eval_series(K, Window::scalar({3.0, 4.0, 5.0}), -1), eval_series(K, Window::scalar({3.0, 4.0})));
}

TEST(ExtractFd, LinearKernelsArePowersTimesC) {
  tk::Rng rng(4);
  const Matrix A = tk::matrix_with_norm(rng, 3, 0.5);
  const Matrix c = tk::random_matrix(rng, 3, 1);
  const auto sys = ReservoirSystem::linear(A, c);
  const auto K = extract_fd(sys, Window(60, 1), 3, 5);
  Vector v = c.col(0);
  for (int m = 0; m <= 5; ++m) {
    EXPECT_LT((K.kernel({-m}) - v).cwiseAbs().maxCoeff(), 1e-7);
    v = A * v;
  }
  EXPECT_LT(K.g[1].cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_LT(K.g[2].cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_FALSE(K.exact());
}

TEST(ExtractFd, MemorylessTanhTaylorCoefficients) {
  const auto K = extract_fd(memoryless_tanh(), Window(30, 1), 3, 3);
  EXPECT_NEAR(K.kernel({0})(0), 1.0, 1e-8);
  EXPECT_LT(K.g[1].cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(K.kernel({0, 0, 0})(0), -1.0 / 3.0, 1e-4);
  for (std::size_t j = 0; j < 3; ++j)
    for (Eigen::Index r = 1; r < K.g[j].rows(); ++r)
      if (K.g[j].row(r).norm() != 0.0) {
        // rows with every lag at 0 are only row 0
        ADD_FAILURE() << "nonzero kernel at order " << j + 1 << " row " << r;
      }
}

TEST(ExtractFd, MatchesExactOnNilpotentSystems) {
  tk::Rng rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const auto sys = random_nilpotent_poly(rng, 3, 3);
    const auto exact = extract_exact(sys, 40);
    const auto fd = extract_fd(sys, Window(40, 1), exact.order, exact.memory, 4.0);
    ASSERT_EQ(fd.g.size(), exact.g.size());
    for (std::size_t j = 0; j < fd.g.size(); ++j)
      EXPECT_LT((fd.g[j] - exact.g[j]).cwiseAbs().maxCoeff(), 1e-6) << "order " << j + 1;
    EXPECT_NEAR(fd.base_output(0), exact.base_output(0), 1e-12);
  }
}

TEST(ExtractFd, FirstOrderMatchesImpulseDerivatives) {
  tk::Rng rng(6);
  const auto sys = tk::random_system(rng, tk::Family::EsnTanh, 3, 1, 0.5);
  const Window z0 = Window::constant(40, Vector::Constant(1, 0.2));
  const auto K = extract_fd(sys, z0, 1, 6);
  const auto r = eval_filter(sys, z0, WeightingSequence::geometric(0.5), ForwardWashout{Vector::Zero(3)});
  for (int m = 0; m <= 6; ++m) {
    Window e(40, 1);
    e.set(-m, Vector::Ones(1));
    EXPECT_LT((K.kernel({-m}) - directional_derivative(sys, z0, r, e).at(0)).norm(), 1e-7);
  }
}

TEST(ExtractFd, ArgumentErrors) {
  const auto sys = memoryless_tanh();
  EXPECT_ERROR_CODE(extract_fd(sys, Window(10, 1), 4, 1), ErrorCode::Unsupported);
  EXPECT_ERROR_CODE(extract_fd(sys, Window::scalar({0.0, 1.0}), 1, 0), ErrorCode::InvalidBasePoint);
  EXPECT_ERROR_CODE(extract_fd(sys, Window(3, 1), 1, 3), ErrorCode::DepthExceeded);
  EXPECT_ERROR_CODE(extract_fd(ReservoirSystem::linear(scalar(0.1), Matrix::Ones(1, 2)), Window(3, 2), 1, 0),
                    ErrorCode::Unsupported);
}

TEST(TruncationBound, FormulaValues) {
  const auto w = WeightingSequence::geometric(0.5);
  const auto b = truncation_bound(1.0, 2.0, w, Window::scalar({0.0, 1.0}), 1);
  EXPECT_DOUBLE_EQ(b.ratio, 0.5);
  EXPECT_DOUBLE_EQ(b.values[0], 0.5);
  EXPECT_DOUBLE_EQ(b.values[1], 1.0);
  EXPECT_EQ(truncation_bound(1.0, 2.0, w, Window(3, 1), 4).values[0], 0.0);
  EXPECT_ERROR_CODE(truncation_bound(1.0, 1.0, w, Window::scalar({1.0}), 1), ErrorCode::OutsideDomain);
}

TEST(TruncationBound, MonotoneInOrderAndNorm) {
  const auto w = WeightingSequence::harmonic(1.0);
  const Window z = Window::scalar({0.3, -0.2, 0.4});
  const double M = 1.5;
  const double ratio = weighted_norm(z, w) / M;
  for (int p = 1; p < 6; ++p) {
    const auto a = truncation_bound(2.0, M, w, z, p);
    const auto b = truncation_bound(2.0, M, w, z, p + 1);
    EXPECT_LT(b.norm_form, a.norm_form);
    EXPECT_NEAR(a.norm_form / b.norm_form, 1.0 / ratio, 1e-12);
    EXPECT_LT(a.norm_form, truncation_bound(2.0, M, w, 1.2 * z, p).norm_form);
  }
}

TEST(BoundCheck, ExactKernelsHaveNoViolations) {
  tk::Rng rng(7);
  const auto sys = random_nilpotent_poly(rng, 3, 2);
  const auto K = extract_exact(sys, 15);
  const auto rep = bound_check_experiment(sys, K, WeightingSequence::geometric(0.5), 10, 1.0, 1.0, 3);
  EXPECT_EQ(rep.slack, 1e-12);
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_EQ(rep.rows.size(), 9u);
  for (const auto& row : rep.rows) EXPECT_LT(row.max_error, 1e-10);
}

TEST(BoundCheck, MemorylessTanh) {
  const auto sys = memoryless_tanh();
  const auto K = extract_fd(sys, Window(20, 1), 3, 0);
  const auto rep = bound_check_experiment(sys, K, WeightingSequence::geometric(0.5), 50, 1.0, 1.0, 11);
  EXPECT_EQ(rep.slack, 1e-6);
  EXPECT_EQ(rep.violations, 0u);
}

TEST(BoundCheck, ScalarLinearSeriesExactAtFirstOrder) {
  const auto sys = ReservoirSystem::linear(scalar(0.5), scalar(1.0));
  const auto K = extract_fd(sys, Window(80, 1), 1, 60);
  const auto rep = bound_check_experiment(sys, K, WeightingSequence::geometric(0.8), 10, 1.0, 1.0, 5);
  EXPECT_EQ(rep.violations, 0u);
  for (const auto& row : rep.rows) {
    EXPECT_LT(row.max_error, 1e-6);
    EXPECT_GT(row.max_bound, 0.0);
  }
}

TEST(BoundCheck, DeterministicForSeed) {
  const auto sys = memoryless_tanh();
  const auto K = extract_fd(sys, Window(10, 1), 2, 0);
  const auto a = bound_check_experiment(sys, K, WeightingSequence::geometric(0.5), 5, 1.0, 1.0, 42);
  const auto b = bound_check_experiment(sys, K, WeightingSequence::geometric(0.5), 5, 1.0, 1.0, 42);
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].max_error, b.rows[i].max_error);
}
