#pragma once

// Echo-state / fading-memory certificates for (system, weighting) pairs.
//
// Every condition checked here is sufficient only. A NotCertified verdict means
// the condition failed, never that the echo state or fading memory property
// fails.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rescert/errors.hpp"
#include "rescert/reservoir.hpp"
#include "rescert/seqspace.hpp"

namespace rescert {

enum class Condition {
  ContractionTimesLw,   ///< L_Fx * L_w < 1
  ContractionTimesLwp,  ///< L_Fx * L_{w,p} < 1
  LinearSeries,         ///< sum_j |||A^j||| / w_j < inf
  EsnProduct,           ///< |||A||| L_sigma L_w < 1
  SasProduct,           ///< M_p L_w < 1
  LocalPersistence,     ///< L_Fx(x0, z0) L_w < 1
  CompactTargetESP,     ///< L_Fx < 1 with compact image
};

enum class Verdict { Certified, NotCertified, Inconclusive };

inline const char* to_string(Condition c) {
  switch (c) {
    case Condition::ContractionTimesLw: return "contraction_times_lw";
    case Condition::ContractionTimesLwp: return "contraction_times_lwp";
    case Condition::LinearSeries: return "linear_series";
    case Condition::EsnProduct: return "esn_product";
    case Condition::SasProduct: return "sas_product";
    case Condition::LocalPersistence: return "local_persistence";
    case Condition::CompactTargetESP: return "compact_target_esp";
  }
  return "unknown";
}

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "certified";
    case Verdict::NotCertified: return "not_certified";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct Implied {
  std::optional<double> filter_lipschitz;           ///< L_{U^F} = L_Fz / (1 - lhs)
  std::optional<double> forgetting_sequence_scale;  ///< w^F_t = scale * w_t

  friend bool operator==(const Implied&, const Implied&) = default;
};

struct Certificate {
  Condition condition = Condition::ContractionTimesLw;
  std::optional<double> p;
  double lhs_value = kInfinity;
  Verdict verdict = Verdict::NotCertified;
  Implied implied;
  std::map<std::string, double> details;  ///< constants and intermediate values
  std::map<std::string, std::string> provenance;
  std::vector<std::string> notes;

  bool certified() const noexcept { return verdict == Verdict::Certified; }

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

namespace detail {

inline const char* kNotMet = "condition not met; ESP/FMP may still hold";

inline Condition contraction_condition_for(const ReservoirSystem& sys) {
  switch (sys.family().index()) {
    case 1: return Condition::EsnProduct;
    case 2:
    case 3: return Condition::SasProduct;
    default: return Condition::ContractionTimesLw;
  }
}

/// lhs = L_Fx * ratio; fills verdict, implied Lipschitz and notes.
inline Certificate product_certificate(Condition cond, const SystemConstants& k, const DecayRatios& r,
                                       const WeightingSequence& w) {
  Certificate cert;
  cert.condition = cond;
  cert.notes = k.notes;
  const double lfx = k.lipschitz_state.value;
  const double lfz = k.lipschitz_input.value;
  cert.details["L_Fx"] = lfx;
  cert.details["L_Fz"] = lfz;
  cert.details["L_F"] = k.lipschitz_joint.value;
  cert.details["D_w"] = r.decay;
  cert.details["L_w"] = r.inverse_decay;
  if (k.sup_p) cert.details["M_p"] = k.sup_p->value;
  if (k.sup_q) cert.details["M_q"] = k.sup_q->value;
  cert.provenance["L_Fx"] = to_string(k.lipschitz_state.provenance);
  cert.provenance["L_Fz"] = to_string(k.lipschitz_input.provenance);
  cert.provenance["L_w"] = r.lower_bound ? "tail_rule" : "analytic";
  if (w.is_custom()) cert.notes.push_back("verdict depends on custom weighting tail rule");

  if (std::isinf(r.inverse_decay)) {
    cert.lhs_value = kInfinity;
    cert.verdict = Verdict::NotCertified;
    cert.notes.push_back("inverse decay ratio infinite");
    cert.notes.push_back(kNotMet);
    return cert;
  }
  cert.lhs_value = lfx * r.inverse_decay;
  if (!(cert.lhs_value < 1.0)) {
    cert.verdict = Verdict::NotCertified;
    cert.notes.push_back(kNotMet);
    return cert;
  }
  if (!k.lipschitz_state.analytic() || !k.lipschitz_input.analytic()) {
    cert.verdict = Verdict::Inconclusive;
    cert.notes.push_back("likely, unverified: constants are sampled lower bounds");
    return cert;
  }
  cert.verdict = Verdict::Certified;
  const double lip = lfz / (1.0 - cert.lhs_value);
  cert.implied.filter_lipschitz = lip;
  cert.implied.forgetting_sequence_scale = lip;
  return cert;
}

}  // namespace detail

/// Global contraction certificate L_Fx * L_w < 1 with implied filter
/// Lipschitz constant L_Fz / (1 - L_Fx L_w).
inline Certificate certify_contraction(const ReservoirSystem& sys, const WeightingSequence& w,
                                       const SamplingSpec& sampling = {}) {
  return detail::product_certificate(detail::contraction_condition_for(sys), sys.constants(sampling),
                                     decay_ratios(w), w);
}

/// Same for the p-weighted spaces: L_Fx * L_{w,p} < 1.
inline Certificate certify_contraction_p(const ReservoirSystem& sys, const WeightingSequence& w, double p,
                                         const SamplingSpec& sampling = {}) {
  Certificate cert =
      detail::product_certificate(Condition::ContractionTimesLwp, sys.constants(sampling), decay_ratios_p(w, p), w);
  cert.p = p;
  return cert;
}

/// Linear-family series condition sum_j |||A^j||| / w_j < inf.
///
/// Certified when A is nilpotent (|||A^k||| < 1e-12 for some k <= N, exact
/// finite sum) or when the term ratio stays below 1 for five consecutive
/// indices, in which case lhs is the partial sum plus a geometric tail
/// estimate.
inline Certificate certify_linear_series(const Matrix& A, const WeightingSequence& w, int terms = 200) {
  if (terms < 1) throw Error(ErrorCode::InvalidInput, "terms must be >= 1");
  if (A.rows() == 0 || A.rows() != A.cols()) throw Error(ErrorCode::InvalidInput, "A must be square");
  constexpr double kNilpotentTol = 1e-12;
  constexpr int kSustained = 5;

  Certificate cert;
  cert.condition = Condition::LinearSeries;
  cert.notes.push_back("matrix norm: spectral");
  cert.notes.push_back("weaker than |||A||| L_w < 1: implied by it, not conversely");
  if (w.is_custom()) cert.notes.push_back("verdict depends on custom weighting tail rule");

  const DecayRatios r = decay_ratios(w);
  const double normA = spectral_norm(A);
  cert.details["norm_A"] = normA;
  cert.details["L_w"] = r.inverse_decay;
  cert.details["product_condition"] = std::isinf(r.inverse_decay) ? kInfinity : normA * r.inverse_decay;

  const auto N = static_cast<int>(A.rows());
  Matrix power = Matrix::Identity(A.rows(), A.cols());
  double sum = 0.0;
  double prev_term = 0.0;
  int run = 0;
  double run_max_ratio = 0.0;
  for (int j = 0; j <= terms; ++j) {
    const double pn = spectral_norm(power);
    if (j >= 1 && j <= N && pn < kNilpotentTol) {
      cert.details["nilpotency_index"] = j;
      cert.details["partial_sum"] = sum;
      cert.lhs_value = sum;
      cert.verdict = Verdict::Certified;
      cert.notes.push_back("A nilpotent: exact finite sum");
      return cert;
    }
    const double wj = w(static_cast<std::size_t>(j));
    const double term = pn / wj;
    if (pn == 0.0) {
      cert.details["partial_sum"] = sum;
      cert.lhs_value = sum;
      cert.verdict = Verdict::Certified;
      cert.notes.push_back("powers of A vanish: exact finite sum");
      return cert;
    }
    if (!std::isfinite(term)) break;
    if (j >= 1) {
      const double ratio = term / prev_term;
      if (ratio < 1.0) {
        ++run;
        run_max_ratio = std::max(run_max_ratio, ratio);
      } else {
        run = 0;
        run_max_ratio = 0.0;
      }
    }
    sum += term;
    prev_term = term;
    power = power * A;
  }
  cert.details["partial_sum"] = sum;
  if (run >= kSustained) {
    const double tail = prev_term * run_max_ratio / (1.0 - run_max_ratio);
    cert.details["tail_estimate"] = tail;
    cert.details["tail_ratio"] = run_max_ratio;
    cert.lhs_value = sum + tail;
    cert.verdict = Verdict::Certified;
    cert.notes.push_back("geometric tail detected; tail estimated from sustained ratios");
    return cert;
  }
  cert.lhs_value = kInfinity;
  cert.verdict = Verdict::Inconclusive;
  cert.notes.push_back("no convergent tail detected within " + std::to_string(terms) + " terms");
  return cert;
}

/// max_t ||x_t - F(x_{t-1}, z_t)|| over t = -T+2..0 (the oldest state has no
/// predecessor inside the window).
inline double trajectory_residual(const ReservoirSystem& sys, const Window& x, const Window& z) {
  if (x.depth() != z.depth()) throw Error(ErrorCode::InvalidInput, "state and input windows differ in depth");
  if (x.dim() != sys.state_dim() || z.dim() != sys.input_dim())
    throw Error(ErrorCode::InvalidInput, "trajectory dimension mismatch");
  double res = 0.0;
  for (int t = x.oldest() + 1; t <= 0; ++t) res = std::max(res, (x.at(t) - sys.apply(x.at(t - 1), z.at(t))).norm());
  return res;
}

/// Persistence of the ESP/FMP around a known solution (x0, z0):
/// L_w * sup_t |||D_x F(x0_{t-1}, z0_t)||| < 1, sup over the window.
inline Certificate certify_local_persistence(const ReservoirSystem& sys, const WeightingSequence& w,
                                             const Window& x0, const Window& z0, double tol = 1e-9) {
  if (x0.depth() < 2) throw Error(ErrorCode::InvalidInput, "solution window needs depth >= 2");
  const double residual = trajectory_residual(sys, x0, z0);
  if (residual > tol) throw Error(ErrorCode::NotASolution, "solution residual " + std::to_string(residual));

  double lfx = 0.0;
  double lfz = 0.0;
  for (int t = x0.oldest() + 1; t <= 0; ++t) {
    const Vector prev = x0.at(t - 1);
    const Vector zt = z0.at(t);
    lfx = std::max(lfx, spectral_norm(sys.jacobian_x(prev, zt)));
    lfz = std::max(lfz, spectral_norm(sys.jacobian_z(prev, zt)));
  }
  const DecayRatios r = decay_ratios(w);

  Certificate cert;
  cert.condition = Condition::LocalPersistence;
  cert.details["L_Fx_local"] = lfx;
  cert.details["L_Fz_local"] = lfz;
  cert.details["L_w"] = r.inverse_decay;
  cert.details["residual"] = residual;
  cert.provenance["L_Fx_local"] = "analytic";
  cert.notes.push_back("matrix norm: spectral");
  cert.notes.push_back("local Jacobian sup restricted to the solution window");
  if (w.is_custom()) cert.notes.push_back("verdict depends on custom weighting tail rule");
  if (std::isinf(r.inverse_decay)) {
    cert.notes.push_back("inverse decay ratio infinite");
    cert.notes.push_back(detail::kNotMet);
    return cert;
  }
  cert.lhs_value = lfx * r.inverse_decay;
  if (cert.lhs_value < 1.0) {
    cert.verdict = Verdict::Certified;
    cert.implied.filter_lipschitz = lfz / (1.0 - cert.lhs_value);
  } else {
    cert.notes.push_back(detail::kNotMet);
  }
  return cert;
}

/// ESP for every input when F maps into a compact set and contracts in x.
/// FMP follows only for weightings with L_Fx L_w < 1; pass one to record it.
inline Certificate compact_target_esp(const ReservoirSystem& sys, const std::optional<WeightingSequence>& w = {},
                                      const SamplingSpec& sampling = {}) {
  if (!sys.unit_image())
    throw Error(ErrorCode::Unsupported, "family " + sys.family_name() + " does not have a compact image");
  const SystemConstants k = sys.constants(sampling);
  Certificate cert;
  cert.condition = Condition::CompactTargetESP;
  cert.notes = k.notes;
  cert.lhs_value = k.lipschitz_state.value;
  cert.details["L_Fx"] = k.lipschitz_state.value;
  cert.provenance["L_Fx"] = to_string(k.lipschitz_state.provenance);
  if (!(cert.lhs_value < 1.0)) {
    cert.notes.push_back(detail::kNotMet);
    return cert;
  }
  if (!k.lipschitz_state.analytic()) {
    cert.verdict = Verdict::Inconclusive;
    cert.notes.push_back("likely, unverified: constants are sampled lower bounds");
    return cert;
  }
  cert.verdict = Verdict::Certified;
  cert.notes.push_back("ESP holds for every input sequence, independent of any weighting");
  if (w) {
    const DecayRatios r = decay_ratios(*w);
    const double fmp = std::isinf(r.inverse_decay) ? kInfinity : cert.lhs_value * r.inverse_decay;
    cert.details["fmp_product"] = fmp;
    cert.notes.push_back(fmp < 1.0 ? "FMP holds for the supplied weighting"
                                   : "FMP not established for the supplied weighting");
  }
  return cert;
}

/// w^F_t = L_Fz / (1 - L_Fx L_w) * w_t for t = 0..horizon; bounds
/// ||D_{z_t^i} H^F(z)|| at lag -t.
inline std::vector<double> differential_forgetting_bound(const ReservoirSystem& sys, const WeightingSequence& w,
                                                         std::size_t horizon, const SamplingSpec& sampling = {}) {
  const Certificate cert = certify_contraction(sys, w, sampling);
  if (!cert.certified() || !cert.implied.forgetting_sequence_scale)
    throw Error(ErrorCode::CertificateRequired, "differential forgetting bound needs a certified contraction");
  const double scale = *cert.implied.forgetting_sequence_scale;
  std::vector<double> out(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t) out[t] = scale * w(t);
  return out;
}

/// d_k = |||D_xF(x_{-1}, z_0) ... D_xF(x_{-k}, z_{-k+1})||| / w_k, k = 1..k_max.
/// Differentiability of the filter at z forces d_k -> 0.
inline std::vector<double> derivative_decay_diagnostic(const ReservoirSystem& sys, const WeightingSequence& w,
                                                       const Window& x, const Window& z, std::size_t k_max,
                                                       double tol = 1e-9) {
  if (k_max >= x.depth()) throw Error(ErrorCode::DepthExceeded, "k_max must be smaller than the window depth");
  const double residual = trajectory_residual(sys, x, z);
  if (residual > tol) throw Error(ErrorCode::NotASolution, "trajectory residual " + std::to_string(residual));
  std::vector<double> out;
  out.reserve(k_max);
  Matrix product = Matrix::Identity(static_cast<Eigen::Index>(sys.state_dim()),
                                    static_cast<Eigen::Index>(sys.state_dim()));
  for (std::size_t k = 1; k <= k_max; ++k) {
    const int t = -static_cast<int>(k);
    product = product * sys.jacobian_x(x.at(t), z.at(t + 1));
    out.push_back(spectral_norm(product) / w(k));
  }
  return out;
}

}  // namespace rescert
