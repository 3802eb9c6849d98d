#pragma once

// Weighting sequences, finite windows of left semi-infinite sequences, the
// sup / weighted / p-weighted norms on them, and the time-delay and projection
// operators together with their operator norms.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "rescert/errors.hpp"

namespace rescert {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Spectral norm (largest singular value); the operator norm used everywhere.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// Weighting sequences
// ---------------------------------------------------------------------------

struct Geometric {
  double lambda;
};
struct Harmonic {
  double d;
};
struct GaussianExp {};
/// Finite table w_0..w_{K-1}; continued geometrically with the last
/// observed ratio w_{K-1}/w_{K-2}.
struct CustomTable {
  std::vector<double> table;
};

using WeightingKind = std::variant<Geometric, Harmonic, GaussianExp, CustomTable>;

class WeightingSequence {
 public:
  static WeightingSequence geometric(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
      throw Error(ErrorCode::InvalidWeighting, "geometric weighting needs 0 < lambda < 1");
    return WeightingSequence(Geometric{lambda});
  }

  static WeightingSequence harmonic(double d) {
    if (!(d > 0.0 && std::isfinite(d)))
      throw Error(ErrorCode::InvalidWeighting, "harmonic weighting needs d > 0");
    return WeightingSequence(Harmonic{d});
  }

  static WeightingSequence gaussian_exp() { return WeightingSequence(GaussianExp{}); }

  static WeightingSequence custom(std::vector<double> table) {
    if (table.size() < 2)
      throw Error(ErrorCode::InvalidWeighting, "custom weighting table needs at least two entries");
    if (table[0] != 1.0) throw Error(ErrorCode::InvalidWeighting, "custom weighting must start at w_0 = 1");
    for (std::size_t t = 0; t + 1 < table.size(); ++t) {
      if (!(table[t + 1] > 0.0) || !(table[t + 1] < table[t]) || !std::isfinite(table[t + 1]))
        throw Error(ErrorCode::InvalidWeighting,
                    "custom weighting table is not strictly decreasing and positive at index " +
                        std::to_string(t + 1));
    }
    return WeightingSequence(CustomTable{std::move(table)});
  }

  const WeightingKind& kind() const noexcept { return kind_; }

  bool is_custom() const noexcept { return std::holds_alternative<CustomTable>(kind_); }

  /// w_t. GaussianExp underflows to 0 for t >= 28.
  double operator()(std::size_t t) const {
    return std::visit(
        [t](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          const double td = static_cast<double>(t);
          if constexpr (std::is_same_v<K, Geometric>) {
            return std::pow(k.lambda, td);
          } else if constexpr (std::is_same_v<K, Harmonic>) {
            return 1.0 / (1.0 + td * k.d);
          } else if constexpr (std::is_same_v<K, GaussianExp>) {
            return std::exp(-td * td);
          } else {
            const auto& tab = k.table;
            if (t < tab.size()) return tab[t];
            const double ratio = tab.back() / tab[tab.size() - 2];
            return tab.back() * std::pow(ratio, td - static_cast<double>(tab.size() - 1));
          }
        },
        kind_);
  }

  std::string name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Geometric>) return "geometric(" + std::to_string(k.lambda) + ")";
          else if constexpr (std::is_same_v<K, Harmonic>) return "harmonic(" + std::to_string(k.d) + ")";
          else if constexpr (std::is_same_v<K, GaussianExp>) return "gaussian_exp";
          else return "custom[" + std::to_string(k.table.size()) + "]";
        },
        kind_);
  }

  friend bool operator==(const WeightingSequence& a, const WeightingSequence& b) {
    if (a.kind_.index() != b.kind_.index()) return false;
    return std::visit(
        [&b](const auto& k) -> bool {
          using K = std::decay_t<decltype(k)>;
          const auto& o = std::get<K>(b.kind_);
          if constexpr (std::is_same_v<K, Geometric>) return k.lambda == o.lambda;
          else if constexpr (std::is_same_v<K, Harmonic>) return k.d == o.d;
          else if constexpr (std::is_same_v<K, GaussianExp>) return true;
          else return k.table == o.table;
        },
        a.kind_);
  }

 private:
  explicit WeightingSequence(WeightingKind kind) : kind_(std::move(kind)) {}

  WeightingKind kind_;
};

/// The sequence t -> w_t^r as a custom table over [0, horizon); geometric
/// sequences stay geometric.
inline WeightingSequence powered(const WeightingSequence& w, double r, std::size_t horizon = 512) {
  if (const auto* g = std::get_if<Geometric>(&w.kind())) return WeightingSequence::geometric(std::pow(g->lambda, r));
  std::vector<double> tab;
  tab.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    const double v = std::pow(w(t), r);
    if (!(v > 0.0) || (!tab.empty() && !(v < tab.back()))) break;
    tab.push_back(v);
  }
  return WeightingSequence::custom(std::move(tab));
}

struct DecayRatios {
  double decay;          ///< D_w = sup w_{t+1}/w_t
  double inverse_decay;  ///< L_w = sup w_t/w_{t+1}, may be +inf
  bool lower_bound;      ///< true when computed from a finite range (custom tables)
};

/// D_w and L_w. Closed forms for the named families; for custom tables the
/// sup over consecutive ratios in {0..horizon}, flagged as a lower bound.
inline DecayRatios decay_ratios(const WeightingSequence& w, std::size_t horizon = 1024) {
  if (horizon < 2) throw Error(ErrorCode::InvalidInput, "decay ratio horizon must be >= 2");
  DecayRatios out = std::visit(
      [&](const auto& k) -> DecayRatios {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Geometric>) {
          return {k.lambda, 1.0 / k.lambda, false};
        } else if constexpr (std::is_same_v<K, Harmonic>) {
          return {1.0, 1.0 + k.d, false};
        } else if constexpr (std::is_same_v<K, GaussianExp>) {
          return {std::exp(-1.0), kInfinity, false};
        } else {
          double d = 0.0;
          double l = 0.0;
          for (std::size_t t = 0; t < horizon; ++t) {
            const double a = w(t);
            const double b = w(t + 1);
            if (!(b > 0.0) || !(b < a))
              throw Error(ErrorCode::InvalidWeighting, "weighting not strictly decreasing at t=" + std::to_string(t));
            d = std::max(d, b / a);
            l = std::max(l, a / b);
          }
          return {d, l, true};
        }
      },
      w.kind());
  if (!(out.decay > 0.0 && out.decay <= 1.0) || !(out.inverse_decay > 1.0) ||
      out.decay * out.inverse_decay < 1.0 - 1e-12)
    throw Error(ErrorCode::InvalidWeighting, "decay ratios violate 0 < D_w <= 1 < L_w, L_w D_w >= 1");
  return out;
}

/// D_{w,p} = D_w^{1/p}, L_{w,p} = L_w^{1/p}.
inline DecayRatios decay_ratios_p(const WeightingSequence& w, double p, std::size_t horizon = 1024) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidInput, "p must be >= 1");
  DecayRatios r = decay_ratios(w, horizon);
  if (p == 1.0) return r;
  r.decay = std::pow(r.decay, 1.0 / p);
  r.inverse_decay = std::isinf(r.inverse_decay) ? kInfinity : std::pow(r.inverse_decay, 1.0 / p);
  return r;
}

// ---------------------------------------------------------------------------
// Windows
// ---------------------------------------------------------------------------

/// Finite truncation (z_{-T+1}, ..., z_0) of a left semi-infinite sequence in
/// R^n, stored oldest first; time t lives in row T-1+t. Entries older than
/// -T+1 are implicitly zero.
///
/// Forward-indexed inputs (z_1, z_2, ...) for flows reuse the same storage with
/// row k holding z_{k+1}.
class Window {
 public:
  using Storage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Window() = default;

  Window(std::size_t depth, std::size_t dim) : values_(Storage::Zero(static_cast<Eigen::Index>(depth),
                                                                     static_cast<Eigen::Index>(dim))) {
    if (depth == 0 || dim == 0) throw Error(ErrorCode::InvalidInput, "window depth and dim must be positive");
  }

  explicit Window(Storage values) : values_(std::move(values)) {
    if (values_.rows() == 0 || values_.cols() == 0)
      throw Error(ErrorCode::InvalidInput, "window depth and dim must be positive");
    if (!values_.allFinite()) throw Error(ErrorCode::InvalidInput, "window has non-finite entries");
  }

  static Window constant(std::size_t depth, const Vector& value) {
    Window out(depth, static_cast<std::size_t>(value.size()));
    out.values_.rowwise() = value.transpose();
    if (!out.values_.allFinite()) throw Error(ErrorCode::InvalidInput, "window has non-finite entries");
    return out;
  }

  /// Scalar window from values listed oldest first.
  static Window scalar(const std::vector<double>& oldest_first) {
    Storage s(static_cast<Eigen::Index>(oldest_first.size()), 1);
    for (std::size_t i = 0; i < oldest_first.size(); ++i) s(static_cast<Eigen::Index>(i), 0) = oldest_first[i];
    return Window(std::move(s));
  }

  std::size_t depth() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  bool empty() const noexcept { return values_.size() == 0; }

  /// Oldest representable time index, -T+1.
  int oldest() const noexcept { return 1 - static_cast<int>(depth()); }

  bool contains(int t) const noexcept { return t <= 0 && t >= oldest(); }

  Eigen::Index row_of(int t) const {
    if (!contains(t)) throw Error(ErrorCode::DepthExceeded, "time index " + std::to_string(t) + " outside window");
    return static_cast<Eigen::Index>(static_cast<int>(depth()) - 1 + t);
  }

  Vector at(int t) const { return values_.row(row_of(t)).transpose(); }

  /// Zero for indices older than the window (implicit zero tail).
  Vector at_or_zero(int t) const {
    if (t < oldest()) return Vector::Zero(static_cast<Eigen::Index>(dim()));
    return at(t);
  }

  void set(int t, const Vector& v) {
    if (static_cast<std::size_t>(v.size()) != dim()) throw Error(ErrorCode::InvalidInput, "window row dimension mismatch");
    if (!v.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite window entry");
    values_.row(row_of(t)) = v.transpose();
  }

  const Storage& values() const noexcept { return values_; }

  bool all_finite() const { return values_.allFinite(); }

  friend Window operator-(const Window& a, const Window& b) {
    a.require_same_shape(b);
    return Window(Storage(a.values_ - b.values_));
  }
  friend Window operator+(const Window& a, const Window& b) {
    a.require_same_shape(b);
    return Window(Storage(a.values_ + b.values_));
  }
  friend Window operator*(double s, const Window& a) { return Window(Storage(s * a.values_)); }

  friend bool operator==(const Window& a, const Window& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() && a.values_ == b.values_;
  }

 private:
  void require_same_shape(const Window& b) const {
    if (depth() != b.depth() || dim() != b.dim()) throw Error(ErrorCode::InvalidInput, "window shape mismatch");
  }

  Storage values_;
};

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

struct SupNorm {};
struct WeightedNorm {
  WeightingSequence w;
};
struct PWeightedNorm {
  double p;
  WeightingSequence w;
};

class NormSpec {
 public:
  using Kind = std::variant<SupNorm, WeightedNorm, PWeightedNorm>;

  static NormSpec sup() { return NormSpec(SupNorm{}); }
  static NormSpec weighted(WeightingSequence w) { return NormSpec(WeightedNorm{std::move(w)}); }
  static NormSpec p_weighted(double p, WeightingSequence w) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidInput, "p-weighted norm needs p >= 1");
    return NormSpec(PWeightedNorm{p, std::move(w)});
  }

  const Kind& kind() const noexcept { return kind_; }

  /// Scale s_t such that a single entry at lag t of Euclidean size 1/s_t has
  /// unit norm: w_{-t}, w_{-t}^{1/p} or 1.
  double unit_scale(int t) const {
    const auto lag = static_cast<std::size_t>(-t);
    return std::visit(
        [lag](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, SupNorm>) return 1.0;
          else if constexpr (std::is_same_v<K, WeightedNorm>) return k.w(lag);
          else return std::pow(k.w(lag), 1.0 / k.p);
        },
        kind_);
  }

  /// (D, L) adapted to this norm; (1, 1) for the sup norm.
  DecayRatios ratios() const {
    return std::visit(
        [](const auto& k) -> DecayRatios {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, SupNorm>) return {1.0, 1.0, false};
          else if constexpr (std::is_same_v<K, WeightedNorm>) return decay_ratios(k.w);
          else return decay_ratios_p(k.w, k.p);
        },
        kind_);
  }

 private:
  explicit NormSpec(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

/// Norm of a finite window (inner norm Euclidean).
inline double norm(const Window& z, const NormSpec& spec) {
  if (z.empty()) throw Error(ErrorCode::InvalidInput, "norm of empty window");
  if (!z.all_finite()) throw Error(ErrorCode::InvalidInput, "window has non-finite entries");
  const auto& v = z.values();
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        double acc = 0.0;
        for (int t = z.oldest(); t <= 0; ++t) {
          const double e = v.row(z.row_of(t)).norm();
          if constexpr (std::is_same_v<K, SupNorm>) {
            acc = std::max(acc, e);
          } else if constexpr (std::is_same_v<K, WeightedNorm>) {
            acc = std::max(acc, e * k.w(static_cast<std::size_t>(-t)));
          } else {
            if (e > 0.0) acc += std::pow(e, k.p) * k.w(static_cast<std::size_t>(-t));
          }
        }
        if constexpr (std::is_same_v<K, PWeightedNorm>) return std::pow(acc, 1.0 / k.p);
        else return acc;
      },
      spec.kind());
}

inline double weighted_norm(const Window& z, const WeightingSequence& w) { return norm(z, NormSpec::weighted(w)); }

// ---------------------------------------------------------------------------
// Time delays and projections
// ---------------------------------------------------------------------------

/// y_t = z_{t+tau} inside the window, zero elsewhere. tau > 0 is the delay
/// T_{-tau} (zeros enter at the recent end); tau < 0 is T_{|tau|} (recent rows
/// drop, zeros enter at the oldest end).
inline Window shift(const Window& z, int tau) {
  if (static_cast<std::size_t>(std::abs(tau)) >= z.depth())
    throw Error(ErrorCode::DepthExceeded, "|tau| must be smaller than the window depth");
  Window out(z.depth(), z.dim());
  for (int t = z.oldest(); t <= 0; ++t) {
    const int src = t + tau;
    if (z.contains(src)) out.set(t, z.at(src));
  }
  return out;
}

struct Projection {
  int t;
};
struct Shift {
  int tau;
};
using LinearOperator = std::variant<Projection, Shift>;

struct OperatorNormEstimate {
  double estimate;       ///< sup of ||op(z)|| / ||z|| over candidates
  double analytic;       ///< closed-form value, or upper bound when !analytic_exact
  bool analytic_exact;
};

namespace detail {

inline double apply_and_measure(const LinearOperator& op, const Window& z, const NormSpec& spec) {
  if (const auto* p = std::get_if<Projection>(&op)) return z.at(p->t).norm();
  return norm(shift(z, std::get<Shift>(op).tau), spec);
}

}  // namespace detail

/// Monte-Carlo estimate of an operator norm on depth x dim windows, with the
/// analytic value next to it. Candidates are the impulse witnesses at every
/// lag plus `trials` random windows z_t = u_t / s_t with u_t uniform on the
/// unit sphere scaled by U(0,1].
inline OperatorNormEstimate operator_norm_estimate(const LinearOperator& op, const NormSpec& spec, int trials,
                                                   std::size_t depth, std::size_t dim, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorCode::InvalidInput, "trials must be >= 1");
  if (depth < 2 || dim < 1) throw Error(ErrorCode::InvalidInput, "window too small for operator norm estimate");

  OperatorNormEstimate out{0.0, 0.0, true};
  if (const auto* p = std::get_if<Projection>(&op)) {
    if (p->t > 0 || static_cast<std::size_t>(-p->t) >= depth)
      throw Error(ErrorCode::DepthExceeded, "projection index outside window");
    out.analytic = 1.0 / spec.unit_scale(p->t);
  } else {
    const int tau = std::get<Shift>(op).tau;
    if (static_cast<std::size_t>(std::abs(tau)) >= depth)
      throw Error(ErrorCode::DepthExceeded, "|tau| must be smaller than the window depth");
    const DecayRatios r = spec.ratios();
    if (tau == 0) {
      out.analytic = 1.0;
    } else if (tau < 0) {
      out.analytic = std::pow(r.inverse_decay, -tau);
      out.analytic_exact = tau == -1;
    } else {
      out.analytic = std::pow(r.decay, tau);
      out.analytic_exact = tau == 1;
    }
  }

  // Scales below this are treated as zero weight; their reciprocal would not
  // be representable inside a Euclidean norm.
  constexpr double kMinScale = 1e-150;

  const auto consider = [&](const Window& z) {
    const double denom = norm(z, spec);
    if (!(denom > 0.0)) return;
    out.estimate = std::max(out.estimate, detail::apply_and_measure(op, z, spec) / denom);
  };

  for (int s = 0; s >= 1 - static_cast<int>(depth); --s) {
    const double scale = spec.unit_scale(s);
    if (scale < kMinScale) continue;
    Window z(depth, dim);
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
    v(0) = 1.0 / scale;
    z.set(s, v);
    consider(z);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < trials; ++k) {
    Window z(depth, dim);
    for (int t = z.oldest(); t <= 0; ++t) {
      const double scale = spec.unit_scale(t);
      if (scale < kMinScale) continue;
      Vector u(static_cast<Eigen::Index>(dim));
      for (auto& x : u) x = gauss(rng);
      const double un = u.norm();
      if (un == 0.0) continue;
      const double radius = 1.0 - unit(rng);  // (0, 1]
      z.set(t, (radius / (un * scale)) * u);
    }
    consider(z);
  }
  return out;
}

}  // namespace rescert
