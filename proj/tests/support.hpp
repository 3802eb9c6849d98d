#pragma once

// Random systems, windows and independent reference computations shared by
// the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rescert/certify.hpp"
#include "rescert/evaluate.hpp"
#include "rescert/reservoir.hpp"
#include "rescert/seqspace.hpp"

namespace rescert::testkit {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(rng, -1.0, 1.0);
  return m;
}

/// Random matrix rescaled to the given spectral norm.
inline Matrix matrix_with_norm(Rng& rng, Eigen::Index n, double target) {
  Matrix m = random_matrix(rng, n, n);
  Eigen::JacobiSVD<Matrix> svd(m);
  return m * (target / svd.singularValues()(0));
}

inline Vector random_vector(Rng& rng, Eigen::Index n, double r = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(rng, -r, r);
  return v;
}

inline Window random_window(Rng& rng, std::size_t depth, std::size_t dim, double r = 1.0) {
  Window::Storage s(static_cast<Eigen::Index>(depth), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j) s(i, j) = uniform(rng, -r, r);
  return Window(std::move(s));
}

enum class Family { Linear, EsnTanh, EsnAlgebraic, TrigSas, RegularSas };

inline const std::vector<Family>& certifiable_families() {
  static const std::vector<Family> f{Family::Linear, Family::EsnTanh, Family::EsnAlgebraic, Family::TrigSas};
  return f;
}

inline const char* family_label(Family f) {
  switch (f) {
    case Family::Linear: return "linear";
    case Family::EsnTanh: return "esn-tanh";
    case Family::EsnAlgebraic: return "esn-algebraic";
    case Family::TrigSas: return "trig-sas";
    case Family::RegularSas: return "regular-sas";
  }
  return "?";
}

/// Sampling settings under which the family's constants are analytic.
inline SamplingSpec analytic_sampling() {
  SamplingSpec s;
  s.mode = ConstantsMode::AnalyticUpperBound;
  return s;
}

/// A system whose state contraction constant (analytic upper bound) equals
/// `contraction`: ||A|| for linear, ||A|| L_sigma for ESN, the triangle sum
/// M_p for trigonometric SAS.
inline ReservoirSystem random_system(Rng& rng, Family f, std::size_t N, std::size_t n, double contraction) {
  const auto Ni = static_cast<Eigen::Index>(N);
  const auto ni = static_cast<Eigen::Index>(n);
  switch (f) {
    case Family::Linear:
      return ReservoirSystem::linear(matrix_with_norm(rng, Ni, contraction), random_matrix(rng, Ni, ni));
    case Family::EsnTanh:
      return ReservoirSystem::esn(matrix_with_norm(rng, Ni, contraction), random_matrix(rng, Ni, ni),
                                  random_vector(rng, Ni, 0.5), Squashing::tanh());
    case Family::EsnAlgebraic:
      return ReservoirSystem::esn(matrix_with_norm(rng, Ni, contraction), random_matrix(rng, Ni, ni),
                                  random_vector(rng, Ni, 0.5), Squashing::algebraic_sigmoid());
    case Family::TrigSas: {
      TrigSasFamily fam;
      // two p terms, each coefficient a quarter of the budget
      for (int k = 0; k < 2; ++k)
        fam.p_terms.push_back({matrix_with_norm(rng, Ni, contraction / 4), random_vector(rng, ni),
                               matrix_with_norm(rng, Ni, contraction / 4), random_vector(rng, ni)});
      fam.q_terms.push_back({random_matrix(rng, Ni, 1), random_vector(rng, ni), random_matrix(rng, Ni, 1),
                             random_vector(rng, ni)});
      return ReservoirSystem::trig_sas(N, n, std::move(fam));
    }
    case Family::RegularSas: {
      RegularSasFamily fam;
      std::vector<int> zero(n, 0), one(n, 0);
      one[0] = 1;
      fam.p_terms.push_back({zero, matrix_with_norm(rng, Ni, contraction / 2)});
      fam.p_terms.push_back({one, matrix_with_norm(rng, Ni, contraction / 2)});
      fam.q_terms.push_back({zero, random_matrix(rng, Ni, 1)});
      fam.q_terms.push_back({one, random_matrix(rng, Ni, 1)});
      fam.domain_bound = 1.0;
      return ReservoirSystem::regular_sas(N, n, std::move(fam));
    }
  }
  throw Error(ErrorCode::InvalidInput, "unknown family");
}

/// Strictly upper triangular matrix conjugated by a random permutation:
/// nilpotent with exact zero powers.
inline Matrix random_nilpotent(Rng& rng, Eigen::Index N, double scale = 1.0) {
  Matrix U = Matrix::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = i + 1; j < N; ++j) U(i, j) = uniform(rng, -scale, scale);
  std::vector<int> perm(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) perm[static_cast<std::size_t>(i)] = static_cast<int>(i);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix P = Matrix::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i) P(i, perm[static_cast<std::size_t>(i)]) = 1.0;
  return P * U * P.transpose();
}

/// Random polynomial readout R^N -> R^k with every monomial of degree <= deg
/// present with probability 1/2, plus one guaranteed term of degree deg.
inline Readout random_polynomial(Rng& rng, std::size_t N, std::size_t k, int deg) {
  std::vector<Monomial> terms;
  std::vector<int> e(N, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i == N) {
      if (uniform(rng, 0.0, 1.0) < 0.5) terms.push_back({e, random_vector(rng, static_cast<Eigen::Index>(k))});
      return;
    }
    for (int p = 0; p <= left; ++p) {
      e[i] = p;
      rec(i + 1, left - p);
    }
    e[i] = 0;
  };
  rec(0, deg);
  std::vector<int> top(N, 0);
  top[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, static_cast<int>(N) - 1)(rng))] = deg;
  terms.push_back({top, random_vector(rng, static_cast<Eigen::Index>(k))});
  return Readout::polynomial(N, k, std::move(terms));
}

/// Reference weighted norm written out directly from the definition.
inline double ref_weighted_norm(const Window& z, const std::function<double(std::size_t)>& w) {
  double best = 0.0;
  const auto& v = z.values();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const auto lag = static_cast<std::size_t>(v.rows() - 1 - r);
    double e = 0.0;
    for (Eigen::Index c = 0; c < v.cols(); ++c) e += v(r, c) * v(r, c);
    best = std::max(best, std::sqrt(e) * w(lag));
  }
  return best;
}

/// Reference flow with plain loops.
inline std::vector<Vector> ref_flow(const ReservoirSystem& sys, const Window& z, Vector x) {
  std::vector<Vector> out;
  for (Eigen::Index r = 0; r < z.values().rows(); ++r) {
    x = sys.apply(x, z.values().row(r).transpose());
    out.push_back(x);
  }
  return out;
}

}  // namespace rescert::testkit
