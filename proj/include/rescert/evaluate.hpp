#pragma once

// Reservoir filters on truncated inputs: forward flows, Picard iteration of
// the filter map, derivative recursions, and input/state forgetting runs.

#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "rescert/certify.hpp"
#include "rescert/errors.hpp"
#include "rescert/reservoir.hpp"
#include "rescert/seqspace.hpp"

namespace rescert {

inline constexpr std::size_t kDefaultDepth = 200;
inline constexpr double kDefaultPicardTol = 1e-12;

struct ForwardWashout {
  Vector x_init;
};

struct Picard {
  Vector x_init;
  int max_iter = 1000;
  double tol = kDefaultPicardTol;
};

using EvalMode = std::variant<ForwardWashout, Picard>;

struct FilterResult {
  Window states;                ///< x_t, t = -T+1..0
  std::optional<Window> outputs;  ///< h(x_t) when the system has a readout
  std::optional<double> truncation_error_bound;  ///< bound on ||x_0 - U^F(z)_0||
  int iterations = 0;
  double residual = 0.0;        ///< max_t ||x_t - F(x_{t-1}, z_t)||, oldest against x_init
  Vector initial_state;         ///< predecessor of the oldest state
  std::vector<double> sweep_differences;  ///< Picard: ||x^{(k+1)} - x^{(k)}||_w per sweep
};

struct ForgettingReport {
  std::vector<double> gaps;                     ///< index k holds the gap at step k+1
  std::optional<std::vector<double>> envelope;  ///< certified bound per step
  std::size_t violations = 0;
};

namespace detail {

inline void check_input(const ReservoirSystem& sys, const Window& z, const Vector& x0) {
  if (z.dim() != sys.input_dim()) throw Error(ErrorCode::InvalidInput, "input window dimension mismatch");
  if (static_cast<std::size_t>(x0.size()) != sys.state_dim())
    throw Error(ErrorCode::InvalidInput, "initial state dimension mismatch");
}

inline std::optional<SystemConstants> try_constants(const ReservoirSystem& sys, const SamplingSpec& sampling) {
  try {
    return sys.constants(sampling);
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline Window apply_readout(const Readout& r, const Window& states) {
  Window out(states.depth(), r.output_dim());
  for (int t = states.oldest(); t <= 0; ++t) out.set(t, r.apply(states.at(t)));
  return out;
}

inline double filter_residual(const ReservoirSystem& sys, const Window& z, const Window& x, const Vector& x_init) {
  double res = (x.at(x.oldest()) - sys.apply(x_init, z.at(z.oldest()))).norm();
  return std::max(res, trajectory_residual(sys, x, z));
}

/// C * L_Fx^T: C bounds the distance between x_init and the true state at
/// time -T reached from the implicit zero tail.
inline std::optional<double> washout_bound(const ReservoirSystem& sys, const Vector& x_init, std::size_t depth,
                                           const std::optional<SystemConstants>& k) {
  if (!k || !k->lipschitz_state.analytic()) return std::nullopt;
  const double c = k->lipschitz_state.value;
  if (!(c < 1.0)) return std::nullopt;
  double diameter;
  if (sys.unit_image()) {
    diameter = x_init.norm() + std::sqrt(static_cast<double>(sys.state_dim()));
  } else {
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(sys.input_dim()));
    diameter = (x_init - sys.apply(x_init, zero)).norm() / (1.0 - c);
  }
  return diameter * std::pow(c, static_cast<double>(depth));
}

}  // namespace detail

/// Reservoir flow x_1 = F(x0, z_1), x_t = F(x_{t-1}, z_t). `z` is forward
/// indexed: row k holds z_{k+1}; the returned window has row k = x_{k+1}.
inline Window run_flow(const ReservoirSystem& sys, const Window& z, const Vector& x0) {
  detail::check_input(sys, z, x0);
  Window out(z.depth(), sys.state_dim());
  Vector x = x0;
  for (int t = z.oldest(); t <= 0; ++t) {
    x = sys.apply(x, z.at(t));
    out.set(t, x);
  }
  return out;
}

/// Evaluates U^F on a truncated input window.
///
/// ForwardWashout runs the flow from x_init through the whole window. Picard
/// iterates x^{(k+1)}_t = F(x^{(k)}_{t-1}, z_t) (oldest predecessor fixed at
/// x_init) until the sweep difference in ||.||_w and the residual both drop
/// below tol; on a depth-T window it reaches the flow exactly after at most
/// T+1 sweeps.
inline FilterResult eval_filter(const ReservoirSystem& sys, const Window& z, const WeightingSequence& w,
                                const EvalMode& mode, const std::optional<SystemConstants>& constants = std::nullopt,
                                const SamplingSpec& sampling = {}) {
  const std::optional<SystemConstants> k = constants ? constants : detail::try_constants(sys, sampling);
  FilterResult out;
  if (const auto* fw = std::get_if<ForwardWashout>(&mode)) {
    detail::check_input(sys, z, fw->x_init);
    out.initial_state = fw->x_init;
    out.states = run_flow(sys, z, fw->x_init);
    out.iterations = 1;
    out.truncation_error_bound = detail::washout_bound(sys, fw->x_init, z.depth(), k);
  } else {
    const auto& pc = std::get<Picard>(mode);
    detail::check_input(sys, z, pc.x_init);
    if (pc.max_iter < 1) throw Error(ErrorCode::InvalidInput, "max_iter must be >= 1");
    out.initial_state = pc.x_init;
    const NormSpec spec = NormSpec::weighted(w);
    Window current = Window::constant(z.depth(), pc.x_init);
    double last = kInfinity;
    bool converged = false;
    for (int it = 1; it <= pc.max_iter; ++it) {
      Window next(z.depth(), sys.state_dim());
      for (int t = z.oldest(); t <= 0; ++t) {
        const Vector prev = t == z.oldest() ? pc.x_init : current.at(t - 1);
        next.set(t, sys.apply(prev, z.at(t)));
      }
      last = norm(next - current, spec);
      out.sweep_differences.push_back(last);
      current = std::move(next);
      out.iterations = it;
      if (last < pc.tol && detail::filter_residual(sys, z, current, pc.x_init) <= pc.tol) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NoConvergence("Picard iteration did not reach tol in max_iter sweeps", last);
    out.states = std::move(current);
    auto bound = detail::washout_bound(sys, pc.x_init, z.depth(), k);
    if (bound) {
      const DecayRatios r = decay_ratios(w);
      const double q = k->lipschitz_state.value * r.inverse_decay;
      if (last == 0.0) {
        // exact flow reached
      } else if (q < 1.0) {
        *bound += q / (1.0 - q) * last;
      } else {
        bound.reset();
      }
    }
    out.truncation_error_bound = bound;
  }
  out.residual = detail::filter_residual(sys, z, out.states, out.initial_state);
  if (sys.readout()) out.outputs = detail::apply_readout(*sys.readout(), out.states);
  return out;
}

/// DU^F(z) u via v_t = D_xF(x_{t-1}, z_t) v_{t-1} + D_zF(x_{t-1}, z_t) u_t,
/// v_{-T} = 0, along the states of a previous evaluation on z.
inline Window directional_derivative(const ReservoirSystem& sys, const Window& z, const FilterResult& at,
                                     const Window& u) {
  if (at.states.empty() || at.states.depth() != z.depth() || at.states.dim() != sys.state_dim() ||
      static_cast<std::size_t>(at.initial_state.size()) != sys.state_dim())
    throw Error(ErrorCode::StaleState, "filter states do not belong to this input window");
  if (u.depth() != z.depth() || u.dim() != z.dim())
    throw Error(ErrorCode::InvalidInput, "direction window shape differs from input window");
  Window out(z.depth(), sys.state_dim());
  Vector v = Vector::Zero(static_cast<Eigen::Index>(sys.state_dim()));
  for (int t = z.oldest(); t <= 0; ++t) {
    const Vector prev = t == z.oldest() ? at.initial_state : at.states.at(t - 1);
    const Vector zt = z.at(t);
    v = sys.jacobian_x(prev, zt) * v + sys.jacobian_z(prev, zt) * u.at(t);
    out.set(t, v);
  }
  return out;
}

/// ||D_{z_t^i} H^F(z)|| for lags t = 0..-depth (row -t) and components i.
/// Equal to the time-0 value of directional_derivative along the unit
/// impulse at lag t, computed here by accumulating the Jacobian product.
inline Matrix functional_partials(const ReservoirSystem& sys, const Window& z, const FilterResult& at,
                                  std::size_t depth) {
  if (depth >= z.depth()) throw Error(ErrorCode::DepthExceeded, "partials depth must be smaller than window depth");
  if (at.states.empty() || at.states.depth() != z.depth() || at.states.dim() != sys.state_dim())
    throw Error(ErrorCode::StaleState, "filter states do not belong to this input window");
  const auto n = static_cast<Eigen::Index>(sys.input_dim());
  Matrix out(static_cast<Eigen::Index>(depth + 1), n);
  Matrix chain = Matrix::Identity(static_cast<Eigen::Index>(sys.state_dim()),
                                  static_cast<Eigen::Index>(sys.state_dim()));
  for (std::size_t lag = 0; lag <= depth; ++lag) {
    const int t = -static_cast<int>(lag);
    const Vector prev = t == z.oldest() ? at.initial_state : at.states.at(t - 1);
    const Vector zt = z.at(t);
    const Matrix sens = chain * sys.jacobian_z(prev, zt);
    for (Eigen::Index i = 0; i < n; ++i) out(static_cast<Eigen::Index>(lag), i) = sens.col(i).norm();
    chain = chain * sys.jacobian_x(prev, zt);
  }
  return out;
}

namespace detail {

inline bool exceeds(double value, double bound) { return value > bound * (1.0 + 1e-12) + 1e-14; }

inline Window concat_forward(const Window& past, const Window& future) {
  if (past.dim() != future.dim()) throw Error(ErrorCode::InvalidInput, "past/future dimension mismatch");
  Window::Storage s(static_cast<Eigen::Index>(past.depth() + future.depth()), static_cast<Eigen::Index>(past.dim()));
  s << past.values(), future.values();
  return Window(std::move(s));
}

}  // namespace detail

/// Runs (u, future) and (v, future) as single forward flows from x_init and
/// reports ||U(u, future)_t - U(v, future)_t|| for t = 1..len(future). With a
/// certified contraction the envelope is L_{U^F} D_w^t ||u - v||_w.
inline ForgettingReport input_forgetting_experiment(const ReservoirSystem& sys, const Window& u, const Window& v,
                                                    const Window& future, const WeightingSequence& w,
                                                    const Vector& x_init, bool require_envelope = true,
                                                    const SamplingSpec& sampling = {}) {
  if (u.depth() != v.depth() || u.dim() != v.dim()) throw Error(ErrorCode::InvalidInput, "u and v differ in shape");
  const Window xu = run_flow(sys, detail::concat_forward(u, future), x_init);
  const Window xv = run_flow(sys, detail::concat_forward(v, future), x_init);
  ForgettingReport rep;
  const auto past = static_cast<Eigen::Index>(u.depth());
  for (std::size_t k = 0; k < future.depth(); ++k) {
    const Eigen::Index row = past + static_cast<Eigen::Index>(k);
    rep.gaps.push_back((xu.values().row(row) - xv.values().row(row)).norm());
  }
  const Certificate cert = certify_contraction(sys, w, sampling);
  if (!cert.certified()) {
    if (require_envelope)
      throw Error(ErrorCode::CertificateRequired, "input forgetting envelope needs a certified contraction");
    return rep;
  }
  const double scale = *cert.implied.filter_lipschitz * weighted_norm(u - v, w);
  const double dw = decay_ratios(w).decay;
  std::vector<double> env;
  for (std::size_t k = 0; k < future.depth(); ++k) {
    env.push_back(scale * std::pow(dw, static_cast<double>(k + 1)));
    if (detail::exceeds(rep.gaps[k], env.back())) ++rep.violations;
  }
  rep.envelope = std::move(env);
  return rep;
}

/// Gaps between flows from x0 and xbar0 along a common forward input, with
/// envelope c^{t-1} ||F(x0, z_1) - F(xbar0, z_1)||, c = L_Fx, when L_Fx < 1.
inline ForgettingReport state_forgetting_experiment(const ReservoirSystem& sys, const Window& z, const Vector& x0,
                                                    const Vector& xbar0, const SamplingSpec& sampling = {}) {
  const Window a = run_flow(sys, z, x0);
  const Window b = run_flow(sys, z, xbar0);
  ForgettingReport rep;
  for (Eigen::Index k = 0; k < a.values().rows(); ++k) rep.gaps.push_back((a.values().row(k) - b.values().row(k)).norm());
  const auto k = detail::try_constants(sys, sampling);
  if (!k || !k->lipschitz_state.analytic() || !(k->lipschitz_state.value < 1.0)) return rep;
  const double c = k->lipschitz_state.value;
  std::vector<double> env;
  for (std::size_t t = 0; t < rep.gaps.size(); ++t) {
    env.push_back(std::pow(c, static_cast<double>(t)) * rep.gaps.front());
    if (detail::exceeds(rep.gaps[t], env.back())) ++rep.violations;
  }
  rep.envelope = std::move(env);
  return rep;
}

}  // namespace rescert
