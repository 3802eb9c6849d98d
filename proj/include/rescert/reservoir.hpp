#pragma once

// Reservoir maps F(x, z) with analytic Jacobians, readouts h(x), and the
// suprema L_F, L_Fx, L_Fz, M_p, M_q that feed the certificates.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rescert/errors.hpp"
#include "rescert/seqspace.hpp"

namespace rescert {

// ---------------------------------------------------------------------------
// Squashing functions
// ---------------------------------------------------------------------------

class Squashing {
 public:
  enum class Kind { Tanh, AlgebraicSigmoid, Custom };

  static Squashing tanh() {
    return Squashing(Kind::Tanh, [](double x) { return std::tanh(x); },
                     [](double x) {
                       const double t = std::tanh(x);
                       return 1.0 - t * t;
                     },
                     1.0, true);
  }

  /// x / sqrt(1 + x^2); derivative (1 + x^2)^{-3/2}.
  static Squashing algebraic_sigmoid() {
    return Squashing(Kind::AlgebraicSigmoid, [](double x) { return x / std::sqrt(1.0 + x * x); },
                     [](double x) { return std::pow(1.0 + x * x, -1.5); }, 1.0, true);
  }

  /// `lipschitz` must bound |sigma'|; `unit_image` declares sigma(R) in [-1, 1].
  static Squashing custom(std::function<double(double)> fn, std::function<double(double)> deriv, double lipschitz,
                          bool unit_image) {
    if (!(lipschitz >= 0.0) || !std::isfinite(lipschitz))
      throw Error(ErrorCode::InvalidInput, "squashing Lipschitz constant must be finite");
    return Squashing(Kind::Custom, std::move(fn), std::move(deriv), lipschitz, unit_image);
  }

  Kind kind() const noexcept { return kind_; }
  double operator()(double x) const { return fn_(x); }
  double derivative(double x) const { return deriv_(x); }
  double lipschitz() const noexcept { return lipschitz_; }
  bool unit_image() const noexcept { return unit_image_; }

  std::string name() const {
    switch (kind_) {
      case Kind::Tanh: return "tanh";
      case Kind::AlgebraicSigmoid: return "algebraic_sigmoid";
      case Kind::Custom: return "custom";
    }
    return "custom";
  }

 private:
  Squashing(Kind k, std::function<double(double)> fn, std::function<double(double)> deriv, double lip, bool unit)
      : kind_(k), fn_(std::move(fn)), deriv_(std::move(deriv)), lipschitz_(lip), unit_image_(unit) {}

  Kind kind_;
  std::function<double(double)> fn_;
  std::function<double(double)> deriv_;
  double lipschitz_;
  bool unit_image_;
};

// ---------------------------------------------------------------------------
// Monomials (shared by polynomial readouts and regular SAS)
// ---------------------------------------------------------------------------

namespace detail {

inline double monomial_value(const std::vector<int>& exps, const Vector& x) {
  double v = 1.0;
  for (std::size_t i = 0; i < exps.size(); ++i)
    if (exps[i] != 0) v *= std::pow(x(static_cast<Eigen::Index>(i)), exps[i]);
  return v;
}

/// d/dx_i of x^alpha.
inline double monomial_partial(const std::vector<int>& exps, const Vector& x, std::size_t i) {
  if (exps[i] == 0) return 0.0;
  double v = static_cast<double>(exps[i]);
  for (std::size_t k = 0; k < exps.size(); ++k) {
    const int e = k == i ? exps[k] - 1 : exps[k];
    if (e != 0) v *= std::pow(x(static_cast<Eigen::Index>(k)), e);
  }
  return v;
}

inline int total_degree(const std::vector<int>& exps) {
  int d = 0;
  for (int e : exps) d += e;
  return d;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Readouts
// ---------------------------------------------------------------------------

struct LinearReadout {
  Matrix W;  ///< d x N
};

struct Monomial {
  std::vector<int> exponents;  ///< one per state coordinate
  Vector coefficient;          ///< output-space coefficient (length d)
};

struct PolynomialReadout {
  std::size_t state_dim;
  std::size_t output_dim;
  std::vector<Monomial> terms;

  int degree() const {
    int d = 0;
    for (const auto& m : terms) d = std::max(d, detail::total_degree(m.exponents));
    return d;
  }
};

struct CustomReadout {
  std::function<Vector(const Vector&)> h;
  std::function<Matrix(const Vector&)> dh;
  double derivative_bound;  ///< c_h = sup |||Dh|||
  std::size_t output_dim;
};

class Readout {
 public:
  using Kind = std::variant<LinearReadout, PolynomialReadout, CustomReadout>;

  static Readout linear(Matrix W) { return Readout(LinearReadout{std::move(W)}); }

  static Readout polynomial(std::size_t state_dim, std::size_t output_dim, std::vector<Monomial> terms) {
    for (const auto& m : terms) {
      if (m.exponents.size() != state_dim || static_cast<std::size_t>(m.coefficient.size()) != output_dim)
        throw Error(ErrorCode::InvalidInput, "polynomial readout term has wrong dimensions");
      for (int e : m.exponents)
        if (e < 0) throw Error(ErrorCode::InvalidInput, "negative exponent in polynomial readout");
    }
    return Readout(PolynomialReadout{state_dim, output_dim, std::move(terms)});
  }

  static Readout custom(std::function<Vector(const Vector&)> h, std::function<Matrix(const Vector&)> dh,
                        double derivative_bound, std::size_t output_dim) {
    if (!(derivative_bound >= 0.0) || !std::isfinite(derivative_bound))
      throw Error(ErrorCode::InvalidInput, "custom readout needs a finite derivative bound");
    return Readout(CustomReadout{std::move(h), std::move(dh), derivative_bound, output_dim});
  }

  const Kind& kind() const noexcept { return kind_; }

  std::size_t output_dim() const {
    return std::visit(
        [](const auto& k) -> std::size_t {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, LinearReadout>) return static_cast<std::size_t>(k.W.rows());
          else return k.output_dim;
        },
        kind_);
  }

  Vector apply(const Vector& x) const {
    return std::visit(
        [&x](const auto& k) -> Vector {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, LinearReadout>) {
            if (k.W.cols() != x.size()) throw Error(ErrorCode::InvalidInput, "readout dimension mismatch");
            return k.W * x;
          } else if constexpr (std::is_same_v<K, PolynomialReadout>) {
            if (static_cast<std::size_t>(x.size()) != k.state_dim)
              throw Error(ErrorCode::InvalidInput, "readout dimension mismatch");
            Vector y = Vector::Zero(static_cast<Eigen::Index>(k.output_dim));
            for (const auto& m : k.terms) y += detail::monomial_value(m.exponents, x) * m.coefficient;
            return y;
          } else {
            return k.h(x);
          }
        },
        kind_);
  }

  Matrix jacobian(const Vector& x) const {
    return std::visit(
        [&x](const auto& k) -> Matrix {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, LinearReadout>) {
            if (k.W.cols() != x.size()) throw Error(ErrorCode::InvalidInput, "readout dimension mismatch");
            return k.W;
          } else if constexpr (std::is_same_v<K, PolynomialReadout>) {
            if (static_cast<std::size_t>(x.size()) != k.state_dim)
              throw Error(ErrorCode::InvalidInput, "readout dimension mismatch");
            Matrix J = Matrix::Zero(static_cast<Eigen::Index>(k.output_dim), x.size());
            for (const auto& m : k.terms)
              for (std::size_t i = 0; i < k.state_dim; ++i) {
                const double d = detail::monomial_partial(m.exponents, x, i);
                if (d != 0.0) J.col(static_cast<Eigen::Index>(i)) += d * m.coefficient;
              }
            return J;
          } else {
            return k.dh(x);
          }
        },
        kind_);
  }

 private:
  explicit Readout(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

// ---------------------------------------------------------------------------
// Constants
// ---------------------------------------------------------------------------

enum class Provenance { Analytic, SampledLowerBound };

inline const char* to_string(Provenance p) {
  return p == Provenance::Analytic ? "analytic" : "sampled_lower_bound";
}

struct Constant {
  double value = kInfinity;
  Provenance provenance = Provenance::Analytic;

  bool analytic() const noexcept { return provenance == Provenance::Analytic; }
};

struct SystemConstants {
  Constant lipschitz_joint;  ///< L_F  = sup |||DF|||
  Constant lipschitz_state;  ///< L_Fx = sup |||D_x F|||
  Constant lipschitz_input;  ///< L_Fz = sup |||D_z F|||
  std::optional<Constant> sup_p;  ///< M_p (SAS only)
  std::optional<Constant> sup_q;  ///< M_q (SAS only)
  std::vector<std::string> notes;

  bool all_analytic() const {
    return lipschitz_joint.analytic() && lipschitz_state.analytic() && lipschitz_input.analytic();
  }
};

enum class ConstantsMode {
  Sampled,             ///< sampled sup over the grid (lower bound) where no closed form exists
  AnalyticUpperBound,  ///< triangle-inequality upper bounds where available (trigonometric SAS)
};

/// Low-discrepancy (Halton) sampling of the box [-state_box, state_box]^N x
/// [-input_box, input_box]^n; for regular SAS the input part is the ball of
/// radius M_dom instead.
struct SamplingSpec {
  std::size_t points = 4096;
  double state_box = 1.0;
  double input_box = 1.0;
  ConstantsMode mode = ConstantsMode::Sampled;
};

namespace detail {

inline std::vector<int> first_primes(std::size_t count) {
  std::vector<int> primes;
  for (int c = 2; primes.size() < count; ++c) {
    bool is_prime = true;
    for (int p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        is_prime = false;
        break;
      }
    }
    if (is_prime) primes.push_back(c);
  }
  return primes;
}

/// Radical inverse of `index` in `base`, in [0, 1).
inline double radical_inverse(std::uint64_t index, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

struct LinearFamily {
  Matrix A;  ///< N x N
  Matrix c;  ///< N x n
};

struct EsnFamily {
  Matrix A;
  Matrix c;
  Vector zeta;
  Squashing sigma;
};

/// One trigonometric term  C cos(u . z) + S sin(v . z).
/// For p, C and S are N x N; for q they are N x 1.
struct TrigTerm {
  Matrix cos_coeff;
  Vector cos_dir;  ///< u in R^n
  Matrix sin_coeff;
  Vector sin_dir;  ///< v in R^n
};

struct TrigSasFamily {
  std::vector<TrigTerm> p_terms;
  std::vector<TrigTerm> q_terms;
};

/// z^alpha * coeff, coeff N x N for p and N x 1 for q.
struct SasMonomial {
  std::vector<int> exponents;  ///< one per input coordinate
  Matrix coeff;
};

struct RegularSasFamily {
  std::vector<SasMonomial> p_terms;
  std::vector<SasMonomial> q_terms;
  std::optional<double> domain_bound;  ///< M_dom: inputs restricted to ||z|| <= M_dom
};

struct CustomFamily {
  std::function<Vector(const Vector&, const Vector&)> map;
  std::function<Matrix(const Vector&, const Vector&)> jac_x;  ///< may be empty
  std::function<Matrix(const Vector&, const Vector&)> jac_z;  ///< may be empty
  std::optional<SystemConstants> declared;                    ///< user-certified constants
  bool unit_image = false;                                    ///< F maps into [-1, 1]^N
};

class ReservoirSystem {
 public:
  using Family = std::variant<LinearFamily, EsnFamily, TrigSasFamily, RegularSasFamily, CustomFamily>;

  static ReservoirSystem linear(Matrix A, Matrix c) {
    check_square_and_input(A, c);
    const auto N = static_cast<std::size_t>(A.rows());
    const auto n = static_cast<std::size_t>(c.cols());
    return ReservoirSystem(LinearFamily{std::move(A), std::move(c)}, N, n);
  }

  static ReservoirSystem esn(Matrix A, Matrix c, Vector zeta, Squashing sigma) {
    check_square_and_input(A, c);
    if (zeta.size() != A.rows()) throw Error(ErrorCode::InvalidInput, "ESN bias must have length N");
    const auto N = static_cast<std::size_t>(A.rows());
    const auto n = static_cast<std::size_t>(c.cols());
    return ReservoirSystem(EsnFamily{std::move(A), std::move(c), std::move(zeta), std::move(sigma)}, N, n);
  }

  static ReservoirSystem trig_sas(std::size_t N, std::size_t n, TrigSasFamily fam) {
    const auto check = [&](const TrigTerm& t, Eigen::Index cols) {
      if (t.cos_coeff.rows() != static_cast<Eigen::Index>(N) || t.cos_coeff.cols() != cols ||
          t.sin_coeff.rows() != static_cast<Eigen::Index>(N) || t.sin_coeff.cols() != cols ||
          t.cos_dir.size() != static_cast<Eigen::Index>(n) || t.sin_dir.size() != static_cast<Eigen::Index>(n))
        throw Error(ErrorCode::InvalidInput, "trigonometric SAS term has wrong dimensions");
    };
    for (const auto& t : fam.p_terms) check(t, static_cast<Eigen::Index>(N));
    for (const auto& t : fam.q_terms) check(t, 1);
    return ReservoirSystem(std::move(fam), N, n);
  }

  static ReservoirSystem regular_sas(std::size_t N, std::size_t n, RegularSasFamily fam) {
    const auto check = [&](const SasMonomial& m, Eigen::Index cols) {
      if (m.exponents.size() != n || m.coeff.rows() != static_cast<Eigen::Index>(N) || m.coeff.cols() != cols)
        throw Error(ErrorCode::InvalidInput, "regular SAS monomial has wrong dimensions");
      for (int e : m.exponents)
        if (e < 0) throw Error(ErrorCode::InvalidInput, "negative exponent in regular SAS");
    };
    for (const auto& m : fam.p_terms) check(m, static_cast<Eigen::Index>(N));
    for (const auto& m : fam.q_terms) check(m, 1);
    if (fam.domain_bound && !(*fam.domain_bound > 0.0 && std::isfinite(*fam.domain_bound)))
      throw Error(ErrorCode::InvalidInput, "regular SAS domain bound must be positive and finite");
    return ReservoirSystem(std::move(fam), N, n);
  }

  static ReservoirSystem custom(std::size_t N, std::size_t n, CustomFamily fam) {
    if (!fam.map) throw Error(ErrorCode::InvalidInput, "custom reservoir needs a map");
    return ReservoirSystem(std::move(fam), N, n);
  }

  std::size_t state_dim() const noexcept { return state_dim_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  const Family& family() const noexcept { return family_; }

  std::string family_name() const {
    switch (family_.index()) {
      case 0: return "linear";
      case 1: return "esn";
      case 2: return "trig_sas";
      case 3: return "regular_sas";
      default: return "custom";
    }
  }

  const std::optional<Readout>& readout() const noexcept { return readout_; }

  ReservoirSystem with_readout(Readout r) const {
    ReservoirSystem out = *this;
    out.readout_ = std::move(r);
    return out;
  }

  /// True when F(R^N x R^n) lies in [-1, 1]^N.
  bool unit_image() const {
    if (const auto* e = std::get_if<EsnFamily>(&family_)) return e->sigma.unit_image();
    if (const auto* c = std::get_if<CustomFamily>(&family_)) return c->unit_image;
    return false;
  }

  Vector apply(const Vector& x, const Vector& z) const {
    check_dims(x, z);
    return std::visit(
        [&](const auto& f) -> Vector {
          using K = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<K, LinearFamily>) {
            return f.A * x + f.c * z;
          } else if constexpr (std::is_same_v<K, EsnFamily>) {
            Vector pre = f.A * x + f.c * z + f.zeta;
            for (auto& v : pre) v = f.sigma(v);
            return pre;
          } else if constexpr (std::is_same_v<K, TrigSasFamily>) {
            return trig_eval(f.p_terms, z, N_()) * x + trig_eval(f.q_terms, z, 1);
          } else if constexpr (std::is_same_v<K, RegularSasFamily>) {
            return sas_eval(f.p_terms, z, N_()) * x + sas_eval(f.q_terms, z, 1);
          } else {
            Vector out = f.map(x, z);
            if (static_cast<std::size_t>(out.size()) != state_dim_)
              throw Error(ErrorCode::InvalidInput, "custom map returned wrong dimension");
            return out;
          }
        },
        family_);
  }

  /// D_x F(x, z), N x N.
  Matrix jacobian_x(const Vector& x, const Vector& z) const {
    check_dims(x, z);
    return std::visit(
        [&](const auto& f) -> Matrix {
          using K = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<K, LinearFamily>) {
            return f.A;
          } else if constexpr (std::is_same_v<K, EsnFamily>) {
            return esn_dsigma(f, x, z).asDiagonal() * f.A;
          } else if constexpr (std::is_same_v<K, TrigSasFamily>) {
            return trig_eval(f.p_terms, z, N_());
          } else if constexpr (std::is_same_v<K, RegularSasFamily>) {
            return sas_eval(f.p_terms, z, N_());
          } else {
            if (!f.jac_x) throw Error(ErrorCode::Unsupported, "custom reservoir has no state Jacobian");
            return f.jac_x(x, z);
          }
        },
        family_);
  }

  /// D_z F(x, z), N x n.
  Matrix jacobian_z(const Vector& x, const Vector& z) const {
    check_dims(x, z);
    return std::visit(
        [&](const auto& f) -> Matrix {
          using K = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<K, LinearFamily>) {
            return f.c;
          } else if constexpr (std::is_same_v<K, EsnFamily>) {
            return esn_dsigma(f, x, z).asDiagonal() * f.c;
          } else if constexpr (std::is_same_v<K, TrigSasFamily>) {
            Matrix J = Matrix::Zero(static_cast<Eigen::Index>(state_dim_), static_cast<Eigen::Index>(input_dim_));
            for (const auto& t : f.p_terms) {
              J -= (t.cos_coeff * x) * (std::sin(t.cos_dir.dot(z)) * t.cos_dir.transpose());
              J += (t.sin_coeff * x) * (std::cos(t.sin_dir.dot(z)) * t.sin_dir.transpose());
            }
            for (const auto& t : f.q_terms) {
              J -= t.cos_coeff.col(0) * (std::sin(t.cos_dir.dot(z)) * t.cos_dir.transpose());
              J += t.sin_coeff.col(0) * (std::cos(t.sin_dir.dot(z)) * t.sin_dir.transpose());
            }
            return J;
          } else if constexpr (std::is_same_v<K, RegularSasFamily>) {
            Matrix J = Matrix::Zero(static_cast<Eigen::Index>(state_dim_), static_cast<Eigen::Index>(input_dim_));
            for (std::size_t i = 0; i < input_dim_; ++i) {
              const auto col = static_cast<Eigen::Index>(i);
              for (const auto& m : f.p_terms) {
                const double d = detail::monomial_partial(m.exponents, z, i);
                if (d != 0.0) J.col(col) += d * (m.coeff * x);
              }
              for (const auto& m : f.q_terms) {
                const double d = detail::monomial_partial(m.exponents, z, i);
                if (d != 0.0) J.col(col) += d * m.coeff.col(0);
              }
            }
            return J;
          } else {
            if (!f.jac_z) throw Error(ErrorCode::Unsupported, "custom reservoir has no input Jacobian");
            return f.jac_z(x, z);
          }
        },
        family_);
  }

  /// p(z) for SAS families.
  Matrix sas_p(const Vector& z) const {
    if (const auto* t = std::get_if<TrigSasFamily>(&family_)) return trig_eval(t->p_terms, z, N_());
    if (const auto* r = std::get_if<RegularSasFamily>(&family_)) return sas_eval(r->p_terms, z, N_());
    throw Error(ErrorCode::Unsupported, "p(z) is only defined for SAS families");
  }

  Matrix sas_q(const Vector& z) const {
    if (const auto* t = std::get_if<TrigSasFamily>(&family_)) return trig_eval(t->q_terms, z, 1);
    if (const auto* r = std::get_if<RegularSasFamily>(&family_)) return sas_eval(r->q_terms, z, 1);
    throw Error(ErrorCode::Unsupported, "q(z) is only defined for SAS families");
  }

  /// L_F, L_Fx, L_Fz (and M_p, M_q for SAS).
  SystemConstants constants(const SamplingSpec& sampling = {}) const {
    return std::visit(
        [&](const auto& f) -> SystemConstants {
          using K = std::decay_t<decltype(f)>;
          SystemConstants out;
          out.notes.push_back("matrix norm: spectral");
          if constexpr (std::is_same_v<K, LinearFamily>) {
            Matrix Ac(f.A.rows(), f.A.cols() + f.c.cols());
            Ac << f.A, f.c;
            out.lipschitz_joint = {spectral_norm(Ac), Provenance::Analytic};
            out.lipschitz_state = {spectral_norm(f.A), Provenance::Analytic};
            out.lipschitz_input = {spectral_norm(f.c), Provenance::Analytic};
          } else if constexpr (std::is_same_v<K, EsnFamily>) {
            Matrix Ac(f.A.rows(), f.A.cols() + f.c.cols());
            Ac << f.A, f.c;
            const double ls = f.sigma.lipschitz();
            out.lipschitz_joint = {ls * spectral_norm(Ac), Provenance::Analytic};
            out.lipschitz_state = {ls * spectral_norm(f.A), Provenance::Analytic};
            out.lipschitz_input = {ls * spectral_norm(f.c), Provenance::Analytic};
            out.notes.push_back("ESN constants are the upper bounds L_sigma * |||.|||");
          } else if constexpr (std::is_same_v<K, TrigSasFamily>) {
            if (sampling.mode == ConstantsMode::AnalyticUpperBound) {
              if (auto bounded = trig_upper_bounds(f)) return *bounded;
              out.notes.push_back("triangle-inequality bound on M_p is >= 1; fell back to sampling");
            }
            sample_constants(out, sampling, std::nullopt);
          } else if constexpr (std::is_same_v<K, RegularSasFamily>) {
            if (!f.domain_bound)
              throw Error(ErrorCode::UnboundedDomain,
                          "regular SAS constants are infinite without an input domain bound M_dom");
            sample_constants(out, sampling, f.domain_bound);
          } else {
            if (f.declared) return *f.declared;
            if (!f.jac_x || !f.jac_z)
              throw Error(ErrorCode::Unsupported, "custom reservoir needs Jacobians or declared constants");
            sample_constants(out, sampling, std::nullopt);
          }
          return out;
        },
        family_);
  }

 private:
  ReservoirSystem(Family f, std::size_t N, std::size_t n) : family_(std::move(f)), state_dim_(N), input_dim_(n) {
    if (N == 0 || n == 0) throw Error(ErrorCode::InvalidInput, "state and input dimensions must be positive");
  }

  static void check_square_and_input(const Matrix& A, const Matrix& c) {
    if (A.rows() == 0 || A.rows() != A.cols()) throw Error(ErrorCode::InvalidInput, "A must be square N x N");
    if (c.rows() != A.rows() || c.cols() == 0) throw Error(ErrorCode::InvalidInput, "c must be N x n");
    if (!A.allFinite() || !c.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite system coefficients");
  }

  void check_dims(const Vector& x, const Vector& z) const {
    if (static_cast<std::size_t>(x.size()) != state_dim_ || static_cast<std::size_t>(z.size()) != input_dim_)
      throw Error(ErrorCode::InvalidInput, "state/input dimension mismatch: got (" + std::to_string(x.size()) + ", " +
                                               std::to_string(z.size()) + "), expected (" +
                                               std::to_string(state_dim_) + ", " + std::to_string(input_dim_) + ")");
  }

  static Vector esn_dsigma(const EsnFamily& f, const Vector& x, const Vector& z) {
    Vector pre = f.A * x + f.c * z + f.zeta;
    for (auto& v : pre) v = f.sigma.derivative(v);
    return pre;
  }

  Eigen::Index N_() const { return static_cast<Eigen::Index>(state_dim_); }

  Matrix trig_eval(const std::vector<TrigTerm>& terms, const Vector& z, Eigen::Index cols) const {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(state_dim_), cols);
    for (const auto& t : terms)
      out += std::cos(t.cos_dir.dot(z)) * t.cos_coeff + std::sin(t.sin_dir.dot(z)) * t.sin_coeff;
    return out;
  }

  Matrix sas_eval(const std::vector<SasMonomial>& terms, const Vector& z, Eigen::Index cols) const {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(state_dim_), cols);
    for (const auto& m : terms) out += detail::monomial_value(m.exponents, z) * m.coeff;
    return out;
  }

  std::optional<SystemConstants> trig_upper_bounds(const TrigSasFamily& f) const {
    double mp = 0.0;
    double dp = 0.0;
    for (const auto& t : f.p_terms) {
      const double a = spectral_norm(t.cos_coeff);
      const double b = spectral_norm(t.sin_coeff);
      mp += a + b;
      dp += a * t.cos_dir.norm() + b * t.sin_dir.norm();
    }
    double mq = 0.0;
    double dq = 0.0;
    for (const auto& t : f.q_terms) {
      const double a = t.cos_coeff.norm();
      const double b = t.sin_coeff.norm();
      mq += a + b;
      dq += a * t.cos_dir.norm() + b * t.sin_dir.norm();
    }
    if (!(mp < 1.0)) return std::nullopt;
    const double radius = mq / (1.0 - mp);
    SystemConstants out;
    out.notes.push_back("matrix norm: spectral");
    out.notes.push_back("trigonometric SAS triangle-inequality bounds; L_Fz, L_F valid on the invariant state ball "
                        "||x|| <= " + std::to_string(radius));
    const double lfz = radius * dp + dq;
    out.lipschitz_state = {mp, Provenance::Analytic};
    out.lipschitz_input = {lfz, Provenance::Analytic};
    out.lipschitz_joint = {std::sqrt(mp * mp + lfz * lfz), Provenance::Analytic};
    out.sup_p = Constant{mp, Provenance::Analytic};
    out.sup_q = Constant{mq, Provenance::Analytic};
    return out;
  }

  void sample_constants(SystemConstants& out, const SamplingSpec& s, std::optional<double> input_ball) const {
    const std::size_t dims = state_dim_ + input_dim_;
    const auto primes = detail::first_primes(dims);
    const bool is_sas = family_.index() == 2 || family_.index() == 3;
    double lf = 0.0, lfx = 0.0, lfz = 0.0, mp = 0.0, mq = 0.0;
    Vector x(static_cast<Eigen::Index>(state_dim_));
    Vector z(static_cast<Eigen::Index>(input_dim_));
    for (std::size_t k = 0; k < std::max<std::size_t>(s.points, 1); ++k) {
      for (std::size_t i = 0; i < state_dim_; ++i)
        x(static_cast<Eigen::Index>(i)) = s.state_box * (2.0 * detail::radical_inverse(k + 1, primes[i]) - 1.0);
      for (std::size_t i = 0; i < input_dim_; ++i)
        z(static_cast<Eigen::Index>(i)) = 2.0 * detail::radical_inverse(k + 1, primes[state_dim_ + i]) - 1.0;
      if (input_ball) {
        z *= *input_ball;
        const double zn = z.norm();
        if (zn > *input_ball) z *= *input_ball / zn;
      } else {
        z *= s.input_box;
      }
      const Matrix jx = jacobian_x(x, z);
      const Matrix jz = jacobian_z(x, z);
      Matrix joint(jx.rows(), jx.cols() + jz.cols());
      joint << jx, jz;
      lfx = std::max(lfx, spectral_norm(jx));
      lfz = std::max(lfz, spectral_norm(jz));
      lf = std::max(lf, spectral_norm(joint));
      if (is_sas) {
        mp = std::max(mp, spectral_norm(sas_p(z)));
        mq = std::max(mq, sas_q(z).norm());
      }
    }
    out.lipschitz_joint = {lf, Provenance::SampledLowerBound};
    out.lipschitz_state = {lfx, Provenance::SampledLowerBound};
    out.lipschitz_input = {lfz, Provenance::SampledLowerBound};
    if (is_sas) {
      out.sup_p = Constant{mp, Provenance::SampledLowerBound};
      out.sup_q = Constant{mq, Provenance::SampledLowerBound};
    }
    out.notes.push_back("sampled over " + std::to_string(s.points) + " Halton points; values are lower bounds");
  }

  Family family_;
  std::size_t state_dim_;
  std::size_t input_dim_;
  std::optional<Readout> readout_;
};

}  // namespace rescert
