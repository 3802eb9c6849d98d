#pragma once

// Command-line front end. Exit codes: 0 success, 1 error, 2 NotCertified
// under --require-certified. Numeric results go to --out (stdout when
// absent); a short verdict table always goes to stdout.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rescert/certify.hpp"
#include "rescert/evaluate.hpp"
#include "rescert/io.hpp"
#include "rescert/reservoir.hpp"
#include "rescert/seqspace.hpp"
#include "rescert/volterra.hpp"

namespace rescert::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotCertified = 2;

inline const char* kCsvSchemas =
    "CSV schemas:\n"
    "  input windows    one row per time step, oldest first, one column per input component;\n"
    "                   an optional non-numeric header line is skipped\n"
    "  eval             t,x0..x{N-1}[,y0..y{k-1}] for t = -T+1..0\n"
    "  forgetting       t,gap,envelope for t = 1..len (envelope empty when uncertified)\n"
    "  volterra-eval    t,y0..y{k-1} for every t the kernel memory allows\n"
    "  sweep            index,param,value[,param2,value2],condition,lhs,verdict,filter_lipschitz\n";

namespace detail {

struct Table {
  std::vector<std::pair<std::string, std::string>> rows;

  void add(std::string k, std::string v) { rows.emplace_back(std::move(k), std::move(v)); }
  void add(std::string k, double v) { rows.emplace_back(std::move(k), io::format_double(v)); }

  void print(std::ostream& os, const std::string& title) const {
    std::size_t w = 0;
    for (const auto& r : rows) w = std::max(w, r.first.size());
    os << title << '\n';
    for (const auto& r : rows) os << "  " << std::left << std::setw(static_cast<int>(w)) << r.first << "  " << r.second << '\n';
  }
};

struct Common {
  std::string system_path;
  std::string weighting = R"({"kind":"geometric","lambda":0.5})";
  std::string out_path;
  std::uint64_t seed = 0;
  std::size_t samples = 4096;
  double state_box = 1.0;
  double input_box = 1.0;
  std::string constants_mode = "sampled";

  SamplingSpec sampling() const {
    SamplingSpec s;
    s.points = samples;
    s.state_box = state_box;
    s.input_box = input_box;
    if (constants_mode == "analytic") s.mode = ConstantsMode::AnalyticUpperBound;
    else if (constants_mode != "sampled")
      throw Error(ErrorCode::InvalidInput, "unknown constants mode '" + constants_mode + "'; supported: sampled, analytic");
    return s;
  }

  ReservoirSystem system() const {
    if (system_path.empty()) throw Error(ErrorCode::InvalidInput, "--system is required");
    return io::system_from_json(io::json_arg(system_path, "system"));
  }

  WeightingSequence weighting_sequence() const { return io::weighting_from_json(io::json_arg(weighting, "weighting")); }
};

inline void add_common(CLI::App* app, Common& c, bool needs_system = true) {
  if (needs_system) app->add_option("--system", c.system_path, "system description (JSON file or inline JSON)");
  app->add_option("--weighting", c.weighting, "weighting sequence (inline JSON or file)");
  app->add_option("--out", c.out_path, "numeric results sink (default stdout)");
  app->add_option("--seed", c.seed, "seed for all random sampling");
  app->add_option("--samples", c.samples, "Halton samples for sampled constants");
  app->add_option("--state-box", c.state_box, "state box radius for sampled constants");
  app->add_option("--input-box", c.input_box, "input box radius for sampled constants");
  app->add_option("--constants", c.constants_mode, "sampled | analytic (triangle-inequality bounds where available)");
}

inline void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.out_path.empty()) out << text;
  else io::write_file(c.out_path, text);
}

inline std::string dump(const io::json& j) { return j.dump(2) + "\n"; }

inline Window random_window(std::size_t depth, std::size_t dim, double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-radius, radius);
  Window::Storage s(static_cast<Eigen::Index>(depth), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < s.rows(); ++r)
    for (Eigen::Index k = 0; k < s.cols(); ++k) s(r, k) = u(rng);
  return Window(std::move(s));
}

/// Keeps the most recent `depth` rows, or pads the oldest end with zeros.
inline Window resize_window(const Window& z, std::size_t depth) {
  if (depth == z.depth()) return z;
  Window::Storage s = Window::Storage::Zero(static_cast<Eigen::Index>(depth), static_cast<Eigen::Index>(z.dim()));
  const auto keep = static_cast<Eigen::Index>(std::min(depth, z.depth()));
  s.bottomRows(keep) = z.values().bottomRows(keep);
  return Window(std::move(s));
}

inline Window read_window(const std::string& path) { return io::window_from_csv(io::read_file(path), path); }

inline void certificate_rows(Table& t, const Certificate& c) {
  t.add("condition", to_string(c.condition));
  t.add("verdict", to_string(c.verdict));
  t.add("lhs", c.lhs_value);
  for (const auto& [k, v] : c.details) t.add(k, v);
  if (c.implied.filter_lipschitz) t.add("filter Lipschitz", *c.implied.filter_lipschitz);
  for (const auto& n : c.notes) t.add("note", n);
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

struct CertifyArgs {
  Common c;
  double p = 1.0;
  bool series = false;
  bool compact = false;
  bool require = false;
};

inline int run_certify(const CertifyArgs& a, std::ostream& out) {
  const ReservoirSystem sys = a.c.system();
  const WeightingSequence w = a.c.weighting_sequence();
  std::vector<Certificate> certs;
  certs.push_back(a.p == 1.0 ? certify_contraction(sys, w, a.c.sampling())
                             : certify_contraction_p(sys, w, a.p, a.c.sampling()));
  if (a.series) {
    const auto* lin = std::get_if<LinearFamily>(&sys.family());
    if (!lin) throw Error(ErrorCode::Unsupported, "--series needs a linear system");
    certs.push_back(certify_linear_series(lin->A, w));
  }
  if (a.compact) certs.push_back(compact_target_esp(sys, w, a.c.sampling()));

  for (const auto& cert : certs) {
    Table t;
    certificate_rows(t, cert);
    t.print(out, "certificate (" + sys.family_name() + ", " + w.name() + ")");
  }
  io::json j = certs.size() == 1 ? io::to_json(certs.front()) : io::json::array();
  if (certs.size() > 1)
    for (const auto& cert : certs) j.push_back(io::to_json(cert));
  emit(a.c, dump(j), out);
  const bool any = std::any_of(certs.begin(), certs.end(), [](const Certificate& c) { return c.certified(); });
  return a.require && !any ? kExitNotCertified : kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  Common c;
  std::string input_path;
  std::string config;
  std::string mode;
  double tol = 0.0;
  int max_iter = 0;
  std::size_t depth = 0;
};

inline io::EvalConfig eval_config(const std::string& config, const std::string& mode, double tol, int max_iter,
                                  std::size_t depth) {
  io::EvalConfig cfg;
  if (!config.empty()) cfg = io::eval_config_from_json(io::json_arg(config, "config"));
  if (!mode.empty()) cfg.mode = mode;
  if (tol > 0.0) cfg.tol = tol;
  if (max_iter > 0) cfg.max_iter = max_iter;
  if (depth > 0) cfg.T = depth;
  return cfg;
}

inline int run_eval(const EvalArgs& a, std::ostream& out) {
  const ReservoirSystem sys = a.c.system();
  const WeightingSequence w = a.c.weighting_sequence();
  if (a.input_path.empty()) throw Error(ErrorCode::InvalidInput, "--input is required");
  Window z = read_window(a.input_path);
  const bool depth_given = a.depth > 0 || !a.config.empty();
  const io::EvalConfig cfg = eval_config(a.config, a.mode, a.tol, a.max_iter, a.depth);
  if (depth_given) z = resize_window(z, cfg.T);
  const FilterResult r = eval_filter(sys, z, w, cfg.to_mode(sys.state_dim()), std::nullopt, a.c.sampling());
  Table t;
  t.add("mode", cfg.mode);
  t.add("depth", std::to_string(z.depth()));
  t.add("iterations", std::to_string(r.iterations));
  t.add("residual", r.residual);
  t.add("truncation bound", r.truncation_error_bound ? io::format_double(*r.truncation_error_bound) : "unavailable");
  t.print(out, "eval (" + sys.family_name() + ")");
  emit(a.c, io::states_to_csv(r.states, r.outputs), out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// derivative-check
// ---------------------------------------------------------------------------

struct DerivativeArgs {
  Common c;
  std::string input_path;
  std::string direction_path;
  double step = 1e-6;
};

inline int run_derivative_check(const DerivativeArgs& a, std::ostream& out) {
  const ReservoirSystem sys = a.c.system();
  const WeightingSequence w = a.c.weighting_sequence();
  if (a.input_path.empty()) throw Error(ErrorCode::InvalidInput, "--input is required");
  const Window z = read_window(a.input_path);
  std::mt19937_64 rng(a.c.seed);
  const Window u = a.direction_path.empty() ? random_window(z.depth(), z.dim(), 1.0, rng) : read_window(a.direction_path);
  const Vector x0 = Vector::Zero(static_cast<Eigen::Index>(sys.state_dim()));
  const FilterResult r = eval_filter(sys, z, w, ForwardWashout{x0}, SystemConstants{});
  const Window dv = directional_derivative(sys, z, r, u);
  const Window plus = run_flow(sys, z + a.step * u, x0);
  const Window minus = run_flow(sys, z - a.step * u, x0);
  const Window fd = (0.5 / a.step) * (plus - minus);
  const double scale = std::max(weighted_norm(dv, w), 1e-300);
  const double rel = weighted_norm(dv - fd, w) / scale;
  Table t;
  t.add("fd step", a.step);
  t.add("||DU u||_w", weighted_norm(dv, w));
  t.add("relative error", rel);
  t.print(out, "derivative-check (" + sys.family_name() + ")");
  emit(a.c, dump({{"fd_step", a.step}, {"derivative_norm_w", io::number(weighted_norm(dv, w))},
                  {"relative_error", io::number(rel)}, {"derivative", io::to_json(dv)}}),
       out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// forgetting
// ---------------------------------------------------------------------------

struct ForgettingArgs {
  Common c;
  std::string kind = "input";
  std::string u_path, v_path, future_path, input_path;
  std::string x0, xbar0;
  std::size_t depth = 50;
  std::size_t length = 50;
  bool require_envelope = false;
};

inline Vector vector_arg(const std::string& s, std::size_t N, const std::string& what) {
  if (s.empty()) return Vector::Zero(static_cast<Eigen::Index>(N));
  const Vector v = io::to_vector(io::parse_json(s, what), what);
  if (static_cast<std::size_t>(v.size()) != N) throw Error(ErrorCode::InvalidInput, what + " must have length N");
  return v;
}

inline int run_forgetting(const ForgettingArgs& a, std::ostream& out) {
  const ReservoirSystem sys = a.c.system();
  const WeightingSequence w = a.c.weighting_sequence();
  std::mt19937_64 rng(a.c.seed);
  const std::size_t n = sys.input_dim();
  ForgettingReport rep;
  if (a.kind == "input") {
    const Window u = a.u_path.empty() ? random_window(a.depth, n, 1.0, rng) : read_window(a.u_path);
    const Window v = a.v_path.empty() ? random_window(u.depth(), n, 1.0, rng) : read_window(a.v_path);
    const Window f = a.future_path.empty() ? random_window(a.length, n, 1.0, rng) : read_window(a.future_path);
    rep = input_forgetting_experiment(sys, u, v, f, w, vector_arg(a.x0, sys.state_dim(), "--x0"), a.require_envelope,
                                      a.c.sampling());
  } else if (a.kind == "state") {
    std::normal_distribution<double> g(0.0, 1.0);
    const Window z = a.input_path.empty() ? random_window(a.length, n, 1.0, rng) : read_window(a.input_path);
    const Vector x0 = vector_arg(a.x0, sys.state_dim(), "--x0");
    Vector xb = vector_arg(a.xbar0, sys.state_dim(), "--xbar0");
    if (a.xbar0.empty())
      for (Eigen::Index i = 0; i < xb.size(); ++i) xb(i) = g(rng);
    rep = state_forgetting_experiment(sys, z, x0, xb, a.c.sampling());
  } else {
    throw Error(ErrorCode::InvalidInput, "unknown forgetting kind '" + a.kind + "'; supported: input, state");
  }
  Table t;
  t.add("steps", std::to_string(rep.gaps.size()));
  t.add("first gap", rep.gaps.empty() ? 0.0 : rep.gaps.front());
  t.add("last gap", rep.gaps.empty() ? 0.0 : rep.gaps.back());
  t.add("envelope", rep.envelope ? "certified" : "unavailable");
  t.add("violations", std::to_string(rep.violations));
  t.print(out, a.kind + " forgetting (" + sys.family_name() + ")");
  emit(a.c, io::forgetting_to_csv(rep), out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// volterra-extract / volterra-eval / bound-check
// ---------------------------------------------------------------------------

struct ExtractArgs {
  Common c;
  bool exact = false;
  int order = 2;
  int memory = 3;
  double base = 0.0;
  std::size_t depth = kDefaultDepth;
  double step = 1.0;
};

inline int run_volterra_extract(const ExtractArgs& a, std::ostream& out) {
  const ReservoirSystem sys = a.c.system();
  const VolterraKernelSet K = a.exact ? extract_exact(sys, a.depth)
                                      : extract_fd(sys, Window::constant(a.depth, Vector::Constant(1, a.base)),
                                                   a.order, a.memory, a.step);
  Table t;
  t.add("provenance", K.exact() ? "exact_nilpotent" : "finite_difference");
  t.add("J", std::to_string(K.order));
  t.add("M_mem", std::to_string(K.memory));
  t.add("base value", K.base_value());
  t.add("output dim", std::to_string(K.output_dim()));
  t.print(out, "volterra-extract (" + sys.family_name() + ")");
  emit(a.c, dump(io::to_json(K)), out);
  return kExitOk;
}

struct SeriesArgs {
  Common c;
  std::string kernels_path;
  std::string input_path;
};

inline VolterraKernelSet read_kernels(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::InvalidInput, "--kernels is required");
  return io::kernels_from_json(io::json_arg(path, "kernels"));
}

inline int run_volterra_eval(const SeriesArgs& a, std::ostream& out) {
  const VolterraKernelSet K = read_kernels(a.kernels_path);
  if (a.input_path.empty()) throw Error(ErrorCode::InvalidInput, "--input is required");
  const Window z = read_window(a.input_path);
  if (z.depth() <= static_cast<std::size_t>(K.memory))
    throw Error(ErrorCode::DepthExceeded, "input window shorter than kernel memory");
  std::string csv = "t";
  for (std::size_t i = 0; i < K.output_dim(); ++i) csv += ",y" + std::to_string(i);
  csv += '\n';
  const int first = K.memory - static_cast<int>(z.depth()) + 1;
  for (int t = first; t <= 0; ++t) {
    const Vector y = eval_series(K, z, t);
    csv += std::to_string(t);
    for (Eigen::Index i = 0; i < y.size(); ++i) csv += "," + io::format_double(y(i));
    csv += '\n';
  }
  Table tab;
  tab.add("J", std::to_string(K.order));
  tab.add("M_mem", std::to_string(K.memory));
  tab.add("times", std::to_string(1 - first));
  const Vector y0 = eval_series(K, z, 0);
  tab.add("y_0[0]", y0(0));
  tab.print(out, "volterra-eval");
  emit(a.c, csv, out);
  return kExitOk;
}

struct BoundArgs {
  Common c;
  std::string kernels_path;
  std::size_t trials = 50;
  double M = 1.0;
  double L = 1.0;
};

inline int run_bound_check(const BoundArgs& a, std::ostream& out) {
  const ReservoirSystem sys = a.c.system();
  const WeightingSequence w = a.c.weighting_sequence();
  const VolterraKernelSet K = read_kernels(a.kernels_path);
  const BoundCheckReport rep = bound_check_experiment(sys, K, w, a.trials, a.M, a.L, a.c.seed);
  Table t;
  io::json rows = io::json::array();
  for (const auto& r : rep.rows) {
    std::ostringstream line;
    line << "max error " << io::format_double(r.max_error) << ", max bound " << io::format_double(r.max_bound)
         << ", violations " << r.violations;
    t.add("rho " + io::format_double(r.rho), line.str());
    rows.push_back({{"rho", r.rho}, {"trials", r.trials}, {"max_error", io::number(r.max_error)},
                    {"max_bound", io::number(r.max_bound)}, {"max_error_over_bound", io::number(r.max_error_over_bound)},
                    {"violations", r.violations}, {"raw_violations", r.raw_violations}});
  }
  t.add("slack", rep.slack);
  t.add("violations", std::to_string(rep.violations));
  t.add("violations without slack", std::to_string(rep.raw_violations));
  t.print(out, "bound-check (M = " + io::format_double(a.M) + ", L = " + io::format_double(a.L) + ")");
  emit(a.c, dump({{"M", a.M}, {"L", a.L}, {"slack", rep.slack}, {"violations", rep.violations},
                  {"raw_violations", rep.raw_violations}, {"rows", rows}}),
       out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
  Common c;
  std::string param = "scale";
  std::string values;
  std::string param2;
  std::string values2;
  std::size_t threads = 0;
};

/// "a:b:n" (n evenly spaced points) or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& s, const std::string& what) {
  std::vector<double> out;
  if (s.empty()) throw Error(ErrorCode::InvalidInput, what + " needs grid values");
  auto to_d = [&](const std::string& x) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(x, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != x.size()) throw Error(ErrorCode::ParseError, what + ": '" + x + "' is not a number");
    return v;
  };
  if (std::count(s.begin(), s.end(), ':') == 2) {
    const auto p1 = s.find(':');
    const auto p2 = s.find(':', p1 + 1);
    const double a = to_d(s.substr(0, p1));
    const double b = to_d(s.substr(p1 + 1, p2 - p1 - 1));
    const double n = to_d(s.substr(p2 + 1));
    if (n < 1 || std::floor(n) != n) throw Error(ErrorCode::InvalidInput, what + ": point count must be a positive integer");
    for (int i = 0; i < static_cast<int>(n); ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_d(item));
  return out;
}

inline ReservoirSystem scaled_system(const ReservoirSystem& sys, double s) {
  return std::visit(
      [&](const auto& f) -> ReservoirSystem {
        using K = std::decay_t<decltype(f)>;
        std::optional<ReservoirSystem> out;
        if constexpr (std::is_same_v<K, LinearFamily>) {
          out = ReservoirSystem::linear(s * f.A, f.c);
        } else if constexpr (std::is_same_v<K, EsnFamily>) {
          out = ReservoirSystem::esn(s * f.A, f.c, f.zeta, f.sigma);
        } else if constexpr (std::is_same_v<K, TrigSasFamily>) {
          TrigSasFamily g = f;
          for (auto& t : g.p_terms) {
            t.cos_coeff *= s;
            t.sin_coeff *= s;
          }
          out = ReservoirSystem::trig_sas(sys.state_dim(), sys.input_dim(), g);
        } else if constexpr (std::is_same_v<K, RegularSasFamily>) {
          RegularSasFamily g = f;
          for (auto& m : g.p_terms) m.coeff *= s;
          out = ReservoirSystem::regular_sas(sys.state_dim(), sys.input_dim(), g);
        } else {
          throw Error(ErrorCode::Unsupported, "custom systems cannot be scaled");
        }
        if (sys.readout()) out = out->with_readout(*sys.readout());
        return *out;
      },
      sys.family());
}

inline void apply_param(const std::string& name, double v, ReservoirSystem& sys, WeightingSequence& w) {
  if (name == "scale") sys = scaled_system(sys, v);
  else if (name == "lambda") w = WeightingSequence::geometric(v);
  else if (name == "d") w = WeightingSequence::harmonic(v);
  else throw Error(ErrorCode::InvalidInput, "unknown sweep parameter '" + name + "'; supported: scale, lambda, d");
}

inline int run_sweep(const SweepArgs& a, std::ostream& out) {
  const ReservoirSystem base = a.c.system();
  const WeightingSequence w0 = a.c.weighting_sequence();
  const std::vector<double> g1 = parse_grid(a.values, "--values");
  const std::vector<double> g2 = a.param2.empty() ? std::vector<double>{0.0} : parse_grid(a.values2, "--values2");
  const std::size_t total = g1.size() * g2.size();
  const SamplingSpec sampling = a.c.sampling();
  std::vector<Certificate> results(total);
  std::vector<std::string> failures(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      try {
        ReservoirSystem sys = base;
        WeightingSequence w = w0;
        apply_param(a.param, g1[i / g2.size()], sys, w);
        if (!a.param2.empty()) apply_param(a.param2, g2[i % g2.size()], sys, w);
        results[i] = certify_contraction(sys, w, sampling);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const std::size_t nthreads =
      std::max<std::size_t>(1, std::min(total, a.threads ? a.threads : std::max(1u, std::thread::hardware_concurrency())));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < total; ++i)
    if (!failures[i].empty()) throw Error(ErrorCode::InvalidInput, "grid point " + std::to_string(i) + ": " + failures[i]);

  std::string csv = "index,param,value";
  if (!a.param2.empty()) csv += ",param2,value2";
  csv += ",condition,lhs,verdict,filter_lipschitz\n";
  std::size_t certified = 0;
  for (std::size_t i = 0; i < total; ++i) {
    const Certificate& c = results[i];
    csv += std::to_string(i) + "," + a.param + "," + io::format_double(g1[i / g2.size()]);
    if (!a.param2.empty()) csv += "," + a.param2 + "," + io::format_double(g2[i % g2.size()]);
    csv += std::string(",") + to_string(c.condition) + "," + io::format_double(c.lhs_value) + "," + to_string(c.verdict) + ",";
    if (c.implied.filter_lipschitz) csv += io::format_double(*c.implied.filter_lipschitz);
    csv += '\n';
    if (c.certified()) ++certified;
  }
  Table t;
  t.add("grid points", std::to_string(total));
  t.add("certified", std::to_string(certified));
  t.add("not certified or inconclusive", std::to_string(total - certified));
  t.print(out, "sweep (" + base.family_name() + ")");
  emit(a.c, csv, out);
  return kExitOk;
}

}  // namespace detail

/// Parses argv and runs one subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Echo-state / fading-memory certificates, reservoir filter evaluation and Volterra kernels"};
  app.footer(kCsvSchemas);
  app.require_subcommand(1);

  detail::CertifyArgs ca;
  auto* certify = app.add_subcommand("certify", "certify ESP/FMP of a system against a weighting");
  detail::add_common(certify, ca.c);
  certify->add_option("--p", ca.p, "use the p-weighted condition L_Fx L_{w,p} < 1");
  certify->add_flag("--series", ca.series, "also run the linear-series condition (linear systems)");
  certify->add_flag("--compact", ca.compact, "also run the compact-target ESP check");
  certify->add_flag("--require-certified", ca.require, "exit 2 unless some certificate is Certified");

  detail::EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "evaluate the reservoir filter on an input window");
  detail::add_common(eval, ea.c);
  eval->add_option("--input", ea.input_path, "input window CSV (oldest first)");
  eval->add_option("--config", ea.config, R"(run config JSON {"mode":"picard","tol":1e-12,"T":200})");
  eval->add_option("--mode", ea.mode, "picard | forward_washout");
  eval->add_option("--tol", ea.tol, "Picard tolerance");
  eval->add_option("--max-iter", ea.max_iter, "Picard sweep limit");
  eval->add_option("--depth", ea.depth, "window depth T (keeps the most recent rows)");

  detail::DerivativeArgs da;
  auto* deriv = app.add_subcommand("derivative-check", "compare DU^F(z)u with central differences");
  detail::add_common(deriv, da.c);
  deriv->add_option("--input", da.input_path, "input window CSV");
  deriv->add_option("--direction", da.direction_path, "direction window CSV (random when absent)");
  deriv->add_option("--step", da.step, "central difference step");

  detail::ForgettingArgs fa;
  auto* forget = app.add_subcommand("forgetting", "input or state forgetting experiment");
  detail::add_common(forget, fa.c);
  forget->add_option("--kind", fa.kind, "input | state");
  forget->add_option("--u", fa.u_path, "first past window CSV (input kind)");
  forget->add_option("--v", fa.v_path, "second past window CSV (input kind)");
  forget->add_option("--future", fa.future_path, "shared future CSV, forward order (input kind)");
  forget->add_option("--input", fa.input_path, "common input CSV, forward order (state kind)");
  forget->add_option("--x0", fa.x0, "initial state as JSON array");
  forget->add_option("--xbar0", fa.xbar0, "second initial state as JSON array (state kind)");
  forget->add_option("--depth", fa.depth, "random past depth");
  forget->add_option("--length", fa.length, "random future length");
  forget->add_flag("--require-envelope", fa.require_envelope, "fail unless the contraction is certified");

  detail::ExtractArgs xa;
  auto* extract = app.add_subcommand("volterra-extract", "extract Volterra kernels");
  detail::add_common(extract, xa.c);
  extract->add_flag("--exact", xa.exact, "exact kernels of a nilpotent linear system");
  extract->add_option("--order", xa.order, "kernel order J (finite differences, <= 3)");
  extract->add_option("--memory", xa.memory, "kernel memory M_mem (finite differences)");
  extract->add_option("--base", xa.base, "constant base input z0 (finite differences)");
  extract->add_option("--depth", xa.depth, "window depth");
  extract->add_option("--step", xa.step, "finite-difference step multiplier");

  detail::SeriesArgs sa;
  auto* veval = app.add_subcommand("volterra-eval", "evaluate a kernel set on an input window");
  detail::add_common(veval, sa.c, false);
  veval->add_option("--kernels", sa.kernels_path, "kernel set JSON");
  veval->add_option("--input", sa.input_path, "input window CSV");

  detail::BoundArgs ba;
  auto* bound = app.add_subcommand("bound-check", "truncation bound experiment over rho = 0.1..0.9");
  detail::add_common(bound, ba.c);
  bound->add_option("--kernels", ba.kernels_path, "kernel set JSON");
  bound->add_option("--trials", ba.trials, "windows per rho");
  bound->add_option("--M", ba.M, "domain ball radius");
  bound->add_option("--L", ba.L, "codomain ball radius");

  detail::SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "certificate grid over one or two parameters");
  detail::add_common(sweep, wa.c);
  sweep->add_option("--param", wa.param, "scale | lambda | d");
  sweep->add_option("--values", wa.values, "grid a:b:n or comma list");
  sweep->add_option("--param2", wa.param2, "second parameter");
  sweep->add_option("--values2", wa.values2, "second grid");
  sweep->add_option("--threads", wa.threads, "worker threads (default: hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*certify) return detail::run_certify(ca, out);
    if (*eval) return detail::run_eval(ea, out);
    if (*deriv) return detail::run_derivative_check(da, out);
    if (*forget) return detail::run_forgetting(fa, out);
    if (*extract) return detail::run_volterra_extract(xa, out);
    if (*veval) return detail::run_volterra_eval(sa, out);
    if (*bound) return detail::run_bound_check(ba, out);
    if (*sweep) return detail::run_sweep(wa, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace rescert::cli
