#pragma once

// Discrete-time Volterra series of scalar-input reservoir filters around a
// constant input: exact kernels of nilpotent linear systems with polynomial
// readouts, finite-difference kernels of general smooth systems, series
// evaluation and the truncation error bound.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <thread>
#include <variant>
#include <vector>

#include "rescert/errors.hpp"
#include "rescert/evaluate.hpp"
#include "rescert/reservoir.hpp"
#include "rescert/seqspace.hpp"

namespace rescert {

inline constexpr int kMaxFdOrder = 3;

struct ExactNilpotent {
  int nilpotency_index;
  friend bool operator==(const ExactNilpotent&, const ExactNilpotent&) = default;
};
struct FiniteDifference {
  int order;
  double step;
  friend bool operator==(const FiniteDifference&, const FiniteDifference&) = default;
};
using KernelProvenance = std::variant<ExactNilpotent, FiniteDifference>;

/// Kernels g_1..g_J over lags {-M_mem,..,0}^j. g[j-1] has (M_mem+1)^j rows
/// and output_dim columns; lag tuple (m_1,..,m_j) maps to the row
/// sum_i k_i (M_mem+1)^(j-1-i) with k_i = -m_i (row-major, most recent first).
struct VolterraKernelSet {
  int order = 1;
  int memory = 0;
  Window base_point;   ///< constant window z0
  Vector base_output;  ///< U(z0)_0
  std::vector<Matrix> g;
  KernelProvenance provenance = ExactNilpotent{1};

  std::size_t output_dim() const { return static_cast<std::size_t>(base_output.size()); }
  double base_value() const { return base_point.values()(0, 0); }

  std::size_t rows(int j) const {
    std::size_t r = 1;
    for (int i = 0; i < j; ++i) r *= static_cast<std::size_t>(memory + 1);
    return r;
  }

  /// Row of the lag tuple, lags given as m_i in {-memory..0}.
  std::size_t index(const std::vector<int>& lags) const {
    std::size_t idx = 0;
    for (int m : lags) {
      if (m > 0 || m < -memory) throw Error(ErrorCode::DepthExceeded, "kernel lag outside memory");
      idx = idx * static_cast<std::size_t>(memory + 1) + static_cast<std::size_t>(-m);
    }
    return idx;
  }

  Vector kernel(const std::vector<int>& lags) const {
    const auto j = lags.size();
    if (j == 0 || j > g.size()) throw Error(ErrorCode::InvalidInput, "kernel order out of range");
    return g[j - 1].row(static_cast<Eigen::Index>(index(lags))).transpose();
  }

  bool exact() const { return std::holds_alternative<ExactNilpotent>(provenance); }

  friend bool operator==(const VolterraKernelSet& a, const VolterraKernelSet& b) {
    if (a.order != b.order || a.memory != b.memory || !(a.base_point == b.base_point) ||
        a.base_output.size() != b.base_output.size() || a.base_output != b.base_output ||
        a.g.size() != b.g.size() || !(a.provenance == b.provenance))
      return false;
    for (std::size_t j = 0; j < a.g.size(); ++j)
      if (a.g[j].rows() != b.g[j].rows() || a.g[j].cols() != b.g[j].cols() || a.g[j] != b.g[j]) return false;
    return true;
  }
};

struct VolterraBound {
  double L;
  double M;
  int p;
  double ratio;                ///< ||z||_w / M
  double norm_form;            ///< L (1-ratio)^{-1} ratio^{p+1}
  std::vector<double> values;  ///< per time t = 0, -1, ..: norm_form / w_{-t}
};

namespace detail {

/// Lag tuples of order j as k-vectors (k_i = -m_i), enumerated row-major.
inline std::vector<int> unflatten(std::size_t idx, int j, int memory) {
  std::vector<int> k(static_cast<std::size_t>(j));
  for (int i = j - 1; i >= 0; --i) {
    k[static_cast<std::size_t>(i)] = static_cast<int>(idx % static_cast<std::size_t>(memory + 1));
    idx /= static_cast<std::size_t>(memory + 1);
  }
  return k;
}

inline std::size_t flatten(const std::vector<int>& k, int memory) {
  std::size_t idx = 0;
  for (int v : k) idx = idx * static_cast<std::size_t>(memory + 1) + static_cast<std::size_t>(v);
  return idx;
}

template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        if (failed) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Polynomial readout in monomial form; linear readouts and the identity
/// become degree-one polynomials.
inline PolynomialReadout as_polynomial(const std::optional<Readout>& h, std::size_t N) {
  if (!h) {
    PolynomialReadout id{N, N, {}};
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<int> e(N, 0);
      e[i] = 1;
      Vector c = Vector::Zero(static_cast<Eigen::Index>(N));
      c(static_cast<Eigen::Index>(i)) = 1.0;
      id.terms.push_back({e, c});
    }
    return id;
  }
  if (const auto* lin = std::get_if<LinearReadout>(&h->kind())) {
    if (static_cast<std::size_t>(lin->W.cols()) != N) throw Error(ErrorCode::InvalidInput, "readout dimension mismatch");
    PolynomialReadout p{N, static_cast<std::size_t>(lin->W.rows()), {}};
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<int> e(N, 0);
      e[i] = 1;
      p.terms.push_back({e, lin->W.col(static_cast<Eigen::Index>(i))});
    }
    return p;
  }
  if (const auto* poly = std::get_if<PolynomialReadout>(&h->kind())) {
    if (poly->state_dim != N) throw Error(ErrorCode::InvalidInput, "readout dimension mismatch");
    return *poly;
  }
  throw Error(ErrorCode::Unsupported, "exact kernels need a linear or polynomial readout");
}

/// (1/j!) D^j(x^alpha)(0)(u_1..u_j) for |alpha| = j: sum over orderings of
/// the variable multiset of prod_i u_i[var_i], divided by j!.
inline double monomial_polarization(const std::vector<int>& exps, const std::vector<const Vector*>& u) {
  std::vector<int> vars;
  for (std::size_t l = 0; l < exps.size(); ++l)
    for (int r = 0; r < exps[l]; ++r) vars.push_back(static_cast<int>(l));
  std::sort(vars.begin(), vars.end());
  double sum = 0.0;
  do {
    double prod = 1.0;
    for (std::size_t i = 0; i < vars.size(); ++i) prod *= (*u[i])(vars[i]);
    sum += prod;
  } while (std::next_permutation(vars.begin(), vars.end()));
  // distinct orderings times alpha! = j!; the j! cancels against the 1/j!
  double alpha_fact = 1.0;
  for (int e : exps)
    for (int r = 2; r <= e; ++r) alpha_fact *= r;
  double j_fact = 1.0;
  for (std::size_t r = 2; r <= vars.size(); ++r) j_fact *= static_cast<double>(r);
  return sum * alpha_fact / j_fact;
}

inline Vector filter_output(const ReservoirSystem& sys, const Vector& x) {
  return sys.readout() ? sys.readout()->apply(x) : x;
}

inline void require_scalar_input(std::size_t n) {
  if (n != 1) throw Error(ErrorCode::Unsupported, "Volterra kernels are implemented for scalar inputs only");
}

}  // namespace detail

/// Smallest p <= N with ||A^p|| < 1e-12; NotNilpotent otherwise.
inline int nilpotency_index(const Matrix& A) {
  if (A.rows() != A.cols()) throw Error(ErrorCode::InvalidInput, "A must be square");
  Matrix power = A;
  for (Eigen::Index p = 1; p <= std::max<Eigen::Index>(A.rows(), 1); ++p) {
    if (spectral_norm(power) < 1e-12) return static_cast<int>(p);
    power = power * A;
  }
  throw Error(ErrorCode::NotNilpotent, "A is not nilpotent within N powers");
}

/// Exact kernels of x_t = A x_{t-1} + c z_t, y = h(x) around z0 = 0:
/// g_j(m_1..m_j) = (1/j!) D^j h(0)(A^{-m_1} c, .., A^{-m_j} c).
inline VolterraKernelSet extract_exact(const Matrix& A, const Matrix& c, const std::optional<Readout>& h,
                                       std::size_t depth = kDefaultDepth) {
  detail::require_scalar_input(static_cast<std::size_t>(c.cols()));
  if (c.rows() != A.rows()) throw Error(ErrorCode::InvalidInput, "c must have N rows");
  const int p = nilpotency_index(A);
  const auto N = static_cast<std::size_t>(A.rows());
  const PolynomialReadout poly = detail::as_polynomial(h, N);

  VolterraKernelSet K;
  K.order = std::max(1, poly.degree());
  K.memory = p - 1;
  if (static_cast<std::size_t>(K.memory) >= depth) throw Error(ErrorCode::DepthExceeded, "depth below memory");
  K.base_point = Window(depth, 1);
  K.base_output = Vector::Zero(static_cast<Eigen::Index>(poly.output_dim));
  K.provenance = ExactNilpotent{p};

  std::vector<Vector> impulse;  // H(e_{-k}) = A^k c
  Vector v = c.col(0);
  for (int k = 0; k <= K.memory; ++k) {
    impulse.push_back(v);
    v = A * v;
  }
  for (const auto& m : poly.terms)
    if (detail::total_degree(m.exponents) == 0) K.base_output += m.coefficient;

  for (int j = 1; j <= K.order; ++j) {
    Matrix gj = Matrix::Zero(static_cast<Eigen::Index>(K.rows(j)), static_cast<Eigen::Index>(poly.output_dim));
    for (std::size_t idx = 0; idx < K.rows(j); ++idx) {
      auto k = detail::unflatten(idx, j, K.memory);
      if (!std::is_sorted(k.begin(), k.end())) {
        std::sort(k.begin(), k.end());
        gj.row(static_cast<Eigen::Index>(idx)) = gj.row(static_cast<Eigen::Index>(detail::flatten(k, K.memory)));
        continue;
      }
      std::vector<const Vector*> u;
      for (int ki : k) u.push_back(&impulse[static_cast<std::size_t>(ki)]);
      for (const auto& m : poly.terms) {
        if (detail::total_degree(m.exponents) != j) continue;
        const double coef = detail::monomial_polarization(m.exponents, u);
        if (coef != 0.0) gj.row(static_cast<Eigen::Index>(idx)) += coef * m.coefficient.transpose();
      }
    }
    K.g.push_back(std::move(gj));
  }
  return K;
}

/// Linear-family system with its readout (identity when absent).
inline VolterraKernelSet extract_exact(const ReservoirSystem& sys, std::size_t depth = kDefaultDepth) {
  const auto* lin = std::get_if<LinearFamily>(&sys.family());
  if (!lin) throw Error(ErrorCode::Unsupported, "exact kernels need a linear reservoir");
  return extract_exact(lin->A, lin->c, sys.readout(), depth);
}

/// Kernels from nested central differences of the time-0 output of the
/// filter, with per-order step h_j = step * eps^{1/(j+2)} * max(1, |z0|).
/// The filter is evaluated on windows of z0's depth by forward washout from
/// x_init (zero when empty). Canonical (sorted) lag tuples are computed and
/// copied to their permutations.
inline VolterraKernelSet extract_fd(const ReservoirSystem& sys, const Window& z0, int J, int memory,
                                    double step = 1.0, const Vector& x_init = Vector()) {
  detail::require_scalar_input(sys.input_dim());
  if (J < 1) throw Error(ErrorCode::InvalidInput, "order must be >= 1");
  if (J > kMaxFdOrder) throw Error(ErrorCode::Unsupported, "finite-difference kernels are limited to order 3");
  if (memory < 0) throw Error(ErrorCode::InvalidInput, "memory must be >= 0");
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorCode::InvalidInput, "step must be positive");
  if (z0.dim() != 1) throw Error(ErrorCode::InvalidInput, "base point must be a scalar window");
  const double base = z0.values()(0, 0);
  if ((z0.values().array() != base).any()) throw Error(ErrorCode::InvalidBasePoint, "base point is not constant");
  if (static_cast<std::size_t>(memory) >= z0.depth()) throw Error(ErrorCode::DepthExceeded, "memory exceeds depth");
  const Vector x0 = x_init.size() == 0 ? Vector::Zero(static_cast<Eigen::Index>(sys.state_dim())) : x_init;

  VolterraKernelSet K;
  K.order = J;
  K.memory = memory;
  K.base_point = z0;
  K.provenance = FiniteDifference{J, step};
  {
    Picard pc{x0, static_cast<int>(z0.depth()) + 2, kDefaultPicardTol};
    // no truncation bound needed: empty constants skip it
    const FilterResult r = eval_filter(sys, z0, WeightingSequence::geometric(0.5), pc, SystemConstants{});
    K.base_output = detail::filter_output(sys, r.states.at(0));
  }
  const auto out_dim = static_cast<Eigen::Index>(K.base_output.size());
  const double eps = std::numeric_limits<double>::epsilon();
  const double scale = std::max(1.0, std::abs(base));
  const int last = static_cast<int>(z0.depth()) - 1;

  auto output_at = [&](const Window& z) { return detail::filter_output(sys, run_flow(sys, z, x0).at(0)); };

  for (int j = 1; j <= J; ++j) {
    const double h = step * std::pow(eps, 1.0 / (j + 2)) * scale;
    const std::size_t rows = K.rows(j);
    Matrix gj = Matrix::Zero(static_cast<Eigen::Index>(rows), out_dim);
    std::vector<std::size_t> canonical;
    for (std::size_t idx = 0; idx < rows; ++idx) {
      const auto k = detail::unflatten(idx, j, memory);
      if (std::is_sorted(k.begin(), k.end())) canonical.push_back(idx);
    }
    double jfact = 1.0;
    for (int r = 2; r <= j; ++r) jfact *= r;
    detail::parallel_for(canonical.size(), [&](std::size_t c) {
      const auto k = detail::unflatten(canonical[c], j, memory);
      Vector acc = Vector::Zero(out_dim);
      for (unsigned signs = 0; signs < (1u << j); ++signs) {
        Window z = z0;
        double sign = 1.0;
        auto vals = z.values();
        for (int i = 0; i < j; ++i) {
          const double s = (signs >> i) & 1u ? -1.0 : 1.0;
          sign *= s;
          vals(last - k[static_cast<std::size_t>(i)], 0) += s * h;
        }
        acc += sign * output_at(Window(std::move(vals)));
      }
      gj.row(static_cast<Eigen::Index>(canonical[c])) = (acc / (std::pow(2.0 * h, j) * jfact)).transpose();
    });
    for (std::size_t idx = 0; idx < rows; ++idx) {
      auto k = detail::unflatten(idx, j, memory);
      std::sort(k.begin(), k.end());
      const std::size_t src = detail::flatten(k, memory);
      if (src != idx) gj.row(static_cast<Eigen::Index>(idx)) = gj.row(static_cast<Eigen::Index>(src));
    }
    K.g.push_back(std::move(gj));
  }
  return K;
}

/// U(z0)_t + sum_j sum_{m} g_j(m) prod_i (z_{m_i+t} - z0) for t <= 0.
inline Vector eval_series(const VolterraKernelSet& K, const Window& z, int t = 0) {
  if (z.dim() != 1) throw Error(ErrorCode::InvalidInput, "series input must be a scalar window");
  if (t > 0) throw Error(ErrorCode::InvalidInput, "series time must be <= 0");
  if (static_cast<long>(z.depth()) <= static_cast<long>(K.memory) - t)
    throw Error(ErrorCode::DepthExceeded, "window too short for kernel memory");
  const double base = K.base_value();
  std::vector<double> dev(static_cast<std::size_t>(K.memory + 1));
  for (int k = 0; k <= K.memory; ++k) dev[static_cast<std::size_t>(k)] = z.at(t - k)(0) - base;
  Vector y = K.base_output;
  for (int j = 1; j <= K.order; ++j) {
    const Matrix& gj = K.g[static_cast<std::size_t>(j - 1)];
    for (std::size_t idx = 0; idx < K.rows(j); ++idx) {
      std::size_t rest = idx;
      double prod = 1.0;
      for (int i = 0; i < j; ++i) {
        prod *= dev[rest % static_cast<std::size_t>(K.memory + 1)];
        rest /= static_cast<std::size_t>(K.memory + 1);
      }
      if (prod != 0.0) y += prod * gj.row(static_cast<Eigen::Index>(idx)).transpose();
    }
  }
  return y;
}

/// Bound on the order-p truncation error for deviations `dev` = z - z0 with
/// ||dev||_w < M, for an analytic filter bounded by L on the M-ball.
inline VolterraBound truncation_bound(double L, double M, const WeightingSequence& w, const Window& dev, int p) {
  if (!(L > 0.0) || !(M > 0.0) || !std::isfinite(L) || !std::isfinite(M))
    throw Error(ErrorCode::InvalidInput, "ball radii must be positive and finite");
  if (p < 1) throw Error(ErrorCode::InvalidInput, "truncation order must be >= 1");
  const double zn = weighted_norm(dev, w);
  if (!(zn < M)) throw Error(ErrorCode::OutsideDomain, "input outside the analyticity ball");
  VolterraBound b{L, M, p, zn / M, 0.0, {}};
  b.norm_form = L / (1.0 - b.ratio) * std::pow(b.ratio, p + 1);
  for (std::size_t t = 0; t < dev.depth(); ++t) b.values.push_back(b.norm_form / w(t));
  return b;
}

struct BoundCheckRow {
  double rho;
  std::size_t trials;
  double max_error;
  double max_bound;
  double max_error_over_bound;
  std::size_t violations;      ///< error > bound + slack
  std::size_t raw_violations;  ///< error > bound with no slack
};

struct BoundCheckReport {
  double slack;
  std::vector<BoundCheckRow> rows;
  std::size_t violations = 0;
  std::size_t raw_violations = 0;
};

inline const std::vector<double>& default_rho_grid() {
  static const std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  return grid;
}

/// Random bounded windows z = z0 + rho M (1 - 1e-12) u / ||u||_w with
/// u_t in [-1, 1] and |u_0| >= 1/2; compares |U(z)_0 - series(z)| with the
/// order-J truncation bound. Slack is 1e-6 for finite-difference kernels.
inline BoundCheckReport bound_check_experiment(const ReservoirSystem& sys, const VolterraKernelSet& K,
                                               const WeightingSequence& w, std::size_t trials, double M, double L,
                                               std::uint64_t seed = 0,
                                               const std::vector<double>& rhos = default_rho_grid(),
                                               const Vector& x_init = Vector()) {
  detail::require_scalar_input(sys.input_dim());
  const Vector x0 = x_init.size() == 0 ? Vector::Zero(static_cast<Eigen::Index>(sys.state_dim())) : x_init;
  BoundCheckReport rep;
  rep.slack = K.exact() ? 1e-12 : 1e-6;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_real_distribution<double> head(0.5, 1.0);
  const std::size_t depth = K.base_point.depth();
  const double base = K.base_value();
  for (double rho : rhos) {
    BoundCheckRow row{rho, trials, 0.0, 0.0, 0.0, 0, 0};
    for (std::size_t i = 0; i < trials; ++i) {
      Window u(depth, 1);
      auto vals = u.values();
      for (Eigen::Index r = 0; r < vals.rows(); ++r) vals(r, 0) = uni(rng);
      vals(vals.rows() - 1, 0) = (uni(rng) < 0.0 ? -1.0 : 1.0) * head(rng);
      Window dev(std::move(vals));
      dev = (rho * M * (1.0 - 1e-12) / weighted_norm(dev, w)) * dev;
      const Window z = dev + Window::constant(depth, Vector::Constant(1, base));
      const Vector exact = detail::filter_output(sys, run_flow(sys, z, x0).at(0));
      const double err = (exact - eval_series(K, z)).norm();
      const double bound = truncation_bound(L, M, w, dev, K.order).values[0];
      row.max_error = std::max(row.max_error, err);
      row.max_bound = std::max(row.max_bound, bound);
      if (bound > 0.0) row.max_error_over_bound = std::max(row.max_error_over_bound, err / bound);
      if (err > bound) ++row.raw_violations;
      if (err > bound + rep.slack) ++row.violations;
    }
    rep.violations += row.violations;
    rep.raw_violations += row.raw_violations;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace rescert
