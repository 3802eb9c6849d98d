#pragma once

// JSON and CSV formats for weightings, windows, systems, certificates, kernel
// sets and evaluation configs. Errors carry the offending line or field.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rescert/certify.hpp"
#include "rescert/errors.hpp"
#include "rescert/evaluate.hpp"
#include "rescert/reservoir.hpp"
#include "rescert/seqspace.hpp"
#include "rescert/volterra.hpp"

namespace rescert::io {

using json = nlohmann::json;

inline const char* kSupportedFamilies = "linear, esn, trig_sas, regular_sas";

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path);
  out << text;
}

inline json parse_json(const std::string& text, const std::string& source = "json") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::ParseError,
                source + ": line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
}

/// Finite values as numbers, non-finite ones as "inf", "-inf", "nan".
inline json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Error field_error(const std::string& path, const std::string& msg) {
  return Error(ErrorCode::ParseError, "field '" + path + "': " + msg);
}

inline const json& need(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw field_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw field_error(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline double to_double(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return kInfinity;
    if (s == "-inf" || s == "-infinity") return -kInfinity;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw field_error(path, "expected a number");
}

inline long to_int(const json& j, const std::string& path) {
  if (j.is_number_integer()) return j.get<long>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::floor(v) == v) return static_cast<long>(v);
  }
  throw field_error(path, "expected an integer");
}

inline std::string to_str(const json& j, const std::string& path) {
  if (!j.is_string()) throw field_error(path, "expected a string");
  return j.get<std::string>();
}

inline Vector to_vector(const json& j, const std::string& path) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw field_error(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

/// Row-major nested arrays; a bare number is a 1 x 1 matrix.
inline Matrix to_matrix(const json& j, const std::string& path) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw field_error(path, "expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw field_error(path + "[0]", "expected a non-empty row");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) throw field_error(rp, "rows must have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = to_double(j[r][c], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

inline json from_vector(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

inline json from_matrix(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(from_vector(m.row(r).transpose()));
  return a;
}

inline std::vector<int> to_exponents(const json& j, const std::string& path) {
  if (!j.is_array()) throw field_error(path, "expected an array of exponents");
  std::vector<int> e;
  for (std::size_t i = 0; i < j.size(); ++i) e.push_back(static_cast<int>(to_int(j[i], path + "[" + std::to_string(i) + "]")));
  return e;
}

/// Wraps construction errors from the library with the field being parsed.
template <class Fn>
auto in_field(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    throw Error(e.code(), "field '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Weighting sequences
// ---------------------------------------------------------------------------

inline json to_json(const WeightingSequence& w) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Geometric>) return {{"kind", "geometric"}, {"lambda", k.lambda}};
        else if constexpr (std::is_same_v<K, Harmonic>) return {{"kind", "harmonic"}, {"d", k.d}};
        else if constexpr (std::is_same_v<K, GaussianExp>) return {{"kind", "gaussian_exp"}};
        else return {{"kind", "custom"}, {"table", k.table}};
      },
      w.kind());
}

inline WeightingSequence weighting_from_json(const json& j, const std::string& path = "weighting") {
  const std::string kind = to_str(need(j, "kind", path), join(path, "kind"));
  return in_field(path, [&] {
    if (kind == "geometric") return WeightingSequence::geometric(to_double(need(j, "lambda", path), join(path, "lambda")));
    if (kind == "harmonic") return WeightingSequence::harmonic(to_double(need(j, "d", path), join(path, "d")));
    if (kind == "gaussian_exp") return WeightingSequence::gaussian_exp();
    if (kind == "custom") {
      const Vector t = to_vector(need(j, "table", path), join(path, "table"));
      return WeightingSequence::custom(std::vector<double>(t.data(), t.data() + t.size()));
    }
    throw field_error(join(path, "kind"), "unknown weighting '" + kind + "'; supported: geometric, harmonic, gaussian_exp, custom");
  });
}

/// Inline JSON text when it starts with '{', otherwise a file path.
inline json json_arg(const std::string& arg, const std::string& what) {
  const auto first = arg.find_first_not_of(" \t\n");
  if (first != std::string::npos && arg[first] == '{') return parse_json(arg, what);
  return parse_json(read_file(arg), arg);
}

// ---------------------------------------------------------------------------
// Windows
// ---------------------------------------------------------------------------

inline json to_json(const Window& z) {
  return {{"depth", z.depth()}, {"dim", z.dim()}, {"values", from_matrix(Matrix(z.values()))}};
}

inline Window window_from_json(const json& j, const std::string& path = "window") {
  const Matrix m = to_matrix(need(j, "values", path), join(path, "values"));
  return in_field(path, [&] { return Window(Window::Storage(m)); });
}

/// One row per time index, oldest first. A first line with non-numeric
/// fields is a header; blank lines and lines starting with '#' are skipped.
inline Window window_from_csv(const std::string& text, const std::string& source = "csv") {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    std::vector<double> row;
    bool numeric = true;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string& s = fields[i];
      const char* b = s.c_str();
      char* e = nullptr;
      const double v = std::strtod(b, &e);
      while (e && (*e == ' ' || *e == '\t')) ++e;
      if (e == b || *e != '\0' || !std::isfinite(v)) {
        numeric = false;
        bad = i;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw Error(ErrorCode::ParseError, source + ": line " + std::to_string(lineno) + ", field " +
                                             std::to_string(bad + 1) + ": not a finite number");
    }
    header_allowed = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(ErrorCode::ParseError, source + ": line " + std::to_string(lineno) + ": expected " +
                                             std::to_string(rows.front().size()) + " fields, got " +
                                             std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::ParseError, source + ": no data rows");
  Window::Storage s(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return Window(std::move(s));
}

inline std::string window_to_csv(const Window& z) {
  std::string out;
  const auto& v = z.values();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      if (c) out += ',';
      out += format_double(v(r, c));
    }
    out += '\n';
  }
  return out;
}

/// Columns t, x0..x{N-1}, y0..y{k-1}; t runs -T+1..0.
inline std::string states_to_csv(const Window& states, const std::optional<Window>& outputs) {
  std::string out = "t";
  for (std::size_t i = 0; i < states.dim(); ++i) out += ",x" + std::to_string(i);
  if (outputs)
    for (std::size_t i = 0; i < outputs->dim(); ++i) out += ",y" + std::to_string(i);
  out += '\n';
  for (int t = states.oldest(); t <= 0; ++t) {
    out += std::to_string(t);
    const Vector x = states.at(t);
    for (Eigen::Index i = 0; i < x.size(); ++i) out += "," + format_double(x(i));
    if (outputs) {
      const Vector y = outputs->at(t);
      for (Eigen::Index i = 0; i < y.size(); ++i) out += "," + format_double(y(i));
    }
    out += '\n';
  }
  return out;
}

/// Columns t, gap, envelope (empty when no envelope), t = 1..len.
inline std::string forgetting_to_csv(const ForgettingReport& r) {
  std::string out = "t,gap,envelope\n";
  for (std::size_t k = 0; k < r.gaps.size(); ++k) {
    out += std::to_string(k + 1) + "," + format_double(r.gaps[k]) + ",";
    if (r.envelope) out += format_double((*r.envelope)[k]);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Systems
// ---------------------------------------------------------------------------

inline Readout readout_from_json(const json& j, std::size_t N, const std::string& path) {
  const std::string kind = to_str(need(j, "kind", path), join(path, "kind"));
  if (kind == "linear") {
    const Matrix W = to_matrix(need(j, "W", path), join(path, "W"));
    if (static_cast<std::size_t>(W.cols()) != N) throw field_error(join(path, "W"), "must have N columns");
    return Readout::linear(W);
  }
  if (kind == "polynomial") {
    const auto k = static_cast<std::size_t>(to_int(need(j, "output_dim", path), join(path, "output_dim")));
    const json& terms = need(j, "terms", path);
    if (!terms.is_array()) throw field_error(join(path, "terms"), "expected an array");
    std::vector<Monomial> ms;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string tp = join(path, "terms") + "[" + std::to_string(i) + "]";
      ms.push_back({to_exponents(need(terms[i], "exponents", tp), join(tp, "exponents")),
                    to_vector(need(terms[i], "coefficient", tp), join(tp, "coefficient"))});
    }
    return in_field(path, [&] { return Readout::polynomial(N, k, std::move(ms)); });
  }
  throw field_error(join(path, "kind"), "unknown readout '" + kind + "'; supported: linear, polynomial");
}

inline json to_json(const Readout& r) {
  if (const auto* l = std::get_if<LinearReadout>(&r.kind())) return {{"kind", "linear"}, {"W", from_matrix(l->W)}};
  if (const auto* p = std::get_if<PolynomialReadout>(&r.kind())) {
    json terms = json::array();
    for (const auto& m : p->terms) terms.push_back({{"exponents", m.exponents}, {"coefficient", from_vector(m.coefficient)}});
    return {{"kind", "polynomial"}, {"output_dim", p->output_dim}, {"terms", terms}};
  }
  throw Error(ErrorCode::Unsupported, "custom readouts are not serializable");
}

namespace detail {

inline TrigTerm trig_term_from_json(const json& j, const std::string& path) {
  return {to_matrix(need(j, "cos_coeff", path), join(path, "cos_coeff")),
          to_vector(need(j, "cos_dir", path), join(path, "cos_dir")),
          to_matrix(need(j, "sin_coeff", path), join(path, "sin_coeff")),
          to_vector(need(j, "sin_dir", path), join(path, "sin_dir"))};
}

inline json trig_term_to_json(const TrigTerm& t) {
  return {{"cos_coeff", from_matrix(t.cos_coeff)}, {"cos_dir", from_vector(t.cos_dir)},
          {"sin_coeff", from_matrix(t.sin_coeff)}, {"sin_dir", from_vector(t.sin_dir)}};
}

inline SasMonomial sas_term_from_json(const json& j, const std::string& path) {
  return {to_exponents(need(j, "exponents", path), join(path, "exponents")),
          to_matrix(need(j, "coeff", path), join(path, "coeff"))};
}

template <class T, class Fn>
std::vector<T> terms_from_json(const json& j, const std::string& key, const std::string& path, Fn&& one) {
  std::vector<T> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_array()) throw field_error(join(path, key), "expected an array");
  for (std::size_t i = 0; i < it->size(); ++i) out.push_back(one((*it)[i], join(path, key) + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

/// {"family": "linear" | "esn" | "trig_sas" | "regular_sas", ...,
///  "readout": {...}}; matrices row-major.
inline ReservoirSystem system_from_json(const json& j, const std::string& path = "") {
  if (!j.is_object()) throw field_error(path.empty() ? "system" : path, "expected an object");
  const std::string family = to_str(need(j, "family", path), join(path, "family"));
  std::optional<ReservoirSystem> sys;
  if (family == "linear") {
    const Matrix A = to_matrix(need(j, "A", path), join(path, "A"));
    const Matrix c = to_matrix(need(j, "c", path), join(path, "c"));
    sys = in_field(path.empty() ? "system" : path, [&] { return ReservoirSystem::linear(A, c); });
  } else if (family == "esn") {
    const Matrix A = to_matrix(need(j, "A", path), join(path, "A"));
    const Matrix c = to_matrix(need(j, "c", path), join(path, "c"));
    const Vector zeta = j.contains("zeta") ? to_vector(j["zeta"], join(path, "zeta")) : Vector::Zero(A.rows());
    const std::string sigma = j.contains("sigma") ? to_str(j["sigma"], join(path, "sigma")) : "tanh";
    Squashing s = Squashing::tanh();
    if (sigma == "algebraic_sigmoid") s = Squashing::algebraic_sigmoid();
    else if (sigma != "tanh")
      throw field_error(join(path, "sigma"), "unknown squashing '" + sigma + "'; supported: tanh, algebraic_sigmoid");
    sys = in_field(path.empty() ? "system" : path, [&] { return ReservoirSystem::esn(A, c, zeta, s); });
  } else if (family == "trig_sas" || family == "regular_sas") {
    const auto N = static_cast<std::size_t>(to_int(need(j, "N", path), join(path, "N")));
    const auto n = static_cast<std::size_t>(to_int(need(j, "n", path), join(path, "n")));
    if (family == "trig_sas") {
      TrigSasFamily f{detail::terms_from_json<TrigTerm>(j, "p_terms", path, detail::trig_term_from_json),
                      detail::terms_from_json<TrigTerm>(j, "q_terms", path, detail::trig_term_from_json)};
      sys = in_field(path.empty() ? "system" : path, [&] { return ReservoirSystem::trig_sas(N, n, f); });
    } else {
      RegularSasFamily f{detail::terms_from_json<SasMonomial>(j, "p_terms", path, detail::sas_term_from_json),
                         detail::terms_from_json<SasMonomial>(j, "q_terms", path, detail::sas_term_from_json),
                         std::nullopt};
      if (j.contains("domain_bound") && !j["domain_bound"].is_null())
        f.domain_bound = to_double(j["domain_bound"], join(path, "domain_bound"));
      sys = in_field(path.empty() ? "system" : path, [&] { return ReservoirSystem::regular_sas(N, n, f); });
    }
  } else {
    throw Error(ErrorCode::ParseError, "field '" + join(path, "family") + "': unknown family '" + family +
                                           "'; supported families: " + kSupportedFamilies);
  }
  if (j.contains("readout") && !j["readout"].is_null())
    sys = sys->with_readout(readout_from_json(j["readout"], sys->state_dim(), join(path, "readout")));
  return *sys;
}

inline json to_json(const ReservoirSystem& sys) {
  json j = std::visit(
      [&](const auto& f) -> json {
        using K = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<K, LinearFamily>) {
          return {{"family", "linear"}, {"A", from_matrix(f.A)}, {"c", from_matrix(f.c)}};
        } else if constexpr (std::is_same_v<K, EsnFamily>) {
          if (f.sigma.kind() == Squashing::Kind::Custom)
            throw Error(ErrorCode::Unsupported, "custom squashing functions are not serializable");
          return {{"family", "esn"}, {"A", from_matrix(f.A)}, {"c", from_matrix(f.c)}, {"zeta", from_vector(f.zeta)},
                  {"sigma", f.sigma.name()}};
        } else if constexpr (std::is_same_v<K, TrigSasFamily>) {
          json p = json::array(), q = json::array();
          for (const auto& t : f.p_terms) p.push_back(detail::trig_term_to_json(t));
          for (const auto& t : f.q_terms) q.push_back(detail::trig_term_to_json(t));
          return {{"family", "trig_sas"}, {"N", sys.state_dim()}, {"n", sys.input_dim()}, {"p_terms", p}, {"q_terms", q}};
        } else if constexpr (std::is_same_v<K, RegularSasFamily>) {
          json p = json::array(), q = json::array();
          for (const auto& m : f.p_terms) p.push_back({{"exponents", m.exponents}, {"coeff", from_matrix(m.coeff)}});
          for (const auto& m : f.q_terms) q.push_back({{"exponents", m.exponents}, {"coeff", from_matrix(m.coeff)}});
          json out{{"family", "regular_sas"}, {"N", sys.state_dim()}, {"n", sys.input_dim()}, {"p_terms", p}, {"q_terms", q}};
          if (f.domain_bound) out["domain_bound"] = *f.domain_bound;
          return out;
        } else {
          throw Error(ErrorCode::Unsupported, "custom systems are not serializable");
        }
      },
      sys.family());
  if (sys.readout()) j["readout"] = to_json(*sys.readout());
  return j;
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

inline json to_json(const Certificate& c) {
  json details = json::object(), prov = json::object();
  for (const auto& [k, v] : c.details) details[k] = number(v);
  for (const auto& [k, v] : c.provenance) prov[k] = v;
  auto opt = [](const std::optional<double>& v) -> json { return v ? number(*v) : json(nullptr); };
  return {{"condition", to_string(c.condition)},
          {"p", opt(c.p)},
          {"lhs_value", number(c.lhs_value)},
          {"verdict", to_string(c.verdict)},
          {"implied", {{"filter_lipschitz", opt(c.implied.filter_lipschitz)},
                       {"forgetting_sequence_scale", opt(c.implied.forgetting_sequence_scale)}}},
          {"details", details},
          {"provenance", prov},
          {"notes", c.notes}};
}

inline Certificate certificate_from_json(const json& j, const std::string& path = "certificate") {
  Certificate c;
  const std::string cond = to_str(need(j, "condition", path), join(path, "condition"));
  bool found = false;
  for (int i = 0; i <= static_cast<int>(Condition::CompactTargetESP); ++i)
    if (cond == to_string(static_cast<Condition>(i))) {
      c.condition = static_cast<Condition>(i);
      found = true;
    }
  if (!found) throw field_error(join(path, "condition"), "unknown condition '" + cond + "'");
  const std::string verdict = to_str(need(j, "verdict", path), join(path, "verdict"));
  if (verdict == "certified") c.verdict = Verdict::Certified;
  else if (verdict == "not_certified") c.verdict = Verdict::NotCertified;
  else if (verdict == "inconclusive") c.verdict = Verdict::Inconclusive;
  else throw field_error(join(path, "verdict"), "unknown verdict '" + verdict + "'");
  auto opt = [&](const json& v, const std::string& p) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return to_double(v, p);
  };
  if (j.contains("p")) c.p = opt(j["p"], join(path, "p"));
  c.lhs_value = to_double(need(j, "lhs_value", path), join(path, "lhs_value"));
  if (j.contains("implied")) {
    const json& im = j["implied"];
    const std::string ip = join(path, "implied");
    if (im.contains("filter_lipschitz")) c.implied.filter_lipschitz = opt(im["filter_lipschitz"], join(ip, "filter_lipschitz"));
    if (im.contains("forgetting_sequence_scale"))
      c.implied.forgetting_sequence_scale = opt(im["forgetting_sequence_scale"], join(ip, "forgetting_sequence_scale"));
  }
  if (j.contains("details"))
    for (const auto& [k, v] : j["details"].items()) c.details[k] = to_double(v, join(join(path, "details"), k));
  if (j.contains("provenance"))
    for (const auto& [k, v] : j["provenance"].items()) c.provenance[k] = to_str(v, join(join(path, "provenance"), k));
  if (j.contains("notes"))
    for (std::size_t i = 0; i < j["notes"].size(); ++i) c.notes.push_back(to_str(j["notes"][i], join(path, "notes")));
  return c;
}

// ---------------------------------------------------------------------------
// Kernel sets
// ---------------------------------------------------------------------------

inline const char* kKernelIndexMap =
    "g[j] lists lag tuples (m_1..m_j) row-major with k_i = -m_i: entry sum_i k_i (M_mem+1)^(j-1-i)";

/// {"J", "M_mem", "output_dim", "base": {"value", "depth", "output"},
///  "provenance", "index_map", "g": {"1": [...], ...}}. Entries of g[j] are
/// numbers when output_dim is 1, otherwise arrays of output_dim numbers.
inline json to_json(const VolterraKernelSet& K) {
  json prov = std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ExactNilpotent>) return {{"kind", "exact_nilpotent"}, {"nilpotency_index", p.nilpotency_index}};
        else return {{"kind", "finite_difference"}, {"order", p.order}, {"step", p.step}};
      },
      K.provenance);
  json g = json::object();
  for (std::size_t j = 0; j < K.g.size(); ++j) {
    json a = json::array();
    for (Eigen::Index r = 0; r < K.g[j].rows(); ++r) {
      if (K.g[j].cols() == 1) a.push_back(number(K.g[j](r, 0)));
      else a.push_back(from_vector(K.g[j].row(r).transpose()));
    }
    g[std::to_string(j + 1)] = a;
  }
  return {{"J", K.order},
          {"M_mem", K.memory},
          {"output_dim", K.output_dim()},
          {"base", {{"value", number(K.base_value())}, {"depth", K.base_point.depth()}, {"output", from_vector(K.base_output)}}},
          {"provenance", prov},
          {"index_map", kKernelIndexMap},
          {"g", g}};
}

inline VolterraKernelSet kernels_from_json(const json& j, const std::string& path = "kernels") {
  VolterraKernelSet K;
  K.order = static_cast<int>(to_int(need(j, "J", path), join(path, "J")));
  K.memory = static_cast<int>(to_int(need(j, "M_mem", path), join(path, "M_mem")));
  if (K.order < 1 || K.memory < 0) throw field_error(path, "J must be >= 1 and M_mem >= 0");
  const json& base = need(j, "base", path);
  const std::string bp = join(path, "base");
  const double bv = to_double(need(base, "value", bp), join(bp, "value"));
  const auto depth = static_cast<std::size_t>(to_int(need(base, "depth", bp), join(bp, "depth")));
  if (depth <= static_cast<std::size_t>(K.memory)) throw field_error(join(bp, "depth"), "must exceed M_mem");
  K.base_point = Window::constant(depth, Vector::Constant(1, bv));
  K.base_output = to_vector(need(base, "output", bp), join(bp, "output"));
  const json& prov = need(j, "provenance", path);
  const std::string pp = join(path, "provenance");
  const std::string kind = to_str(need(prov, "kind", pp), join(pp, "kind"));
  if (kind == "exact_nilpotent") {
    K.provenance = ExactNilpotent{static_cast<int>(to_int(need(prov, "nilpotency_index", pp), join(pp, "nilpotency_index")))};
  } else if (kind == "finite_difference") {
    K.provenance = FiniteDifference{static_cast<int>(to_int(need(prov, "order", pp), join(pp, "order"))),
                                    to_double(need(prov, "step", pp), join(pp, "step"))};
  } else {
    throw field_error(join(pp, "kind"), "unknown provenance '" + kind + "'");
  }
  const json& g = need(j, "g", path);
  const auto out = K.base_output.size();
  for (int order = 1; order <= K.order; ++order) {
    const std::string gp = join(join(path, "g"), std::to_string(order));
    const json& a = need(g, std::to_string(order), join(path, "g"));
    if (!a.is_array() || a.size() != K.rows(order))
      throw field_error(gp, "expected " + std::to_string(K.rows(order)) + " entries");
    Matrix m(static_cast<Eigen::Index>(a.size()), out);
    for (std::size_t r = 0; r < a.size(); ++r) {
      const std::string ep = gp + "[" + std::to_string(r) + "]";
      const Vector v = to_vector(a[r], ep);
      if (v.size() != out) throw field_error(ep, "expected " + std::to_string(out) + " output components");
      m.row(static_cast<Eigen::Index>(r)) = v.transpose();
    }
    K.g.push_back(std::move(m));
  }
  return K;
}

// ---------------------------------------------------------------------------
// Evaluation config
// ---------------------------------------------------------------------------

struct EvalConfig {
  std::string mode = "picard";  ///< "picard" or "forward_washout"
  double tol = kDefaultPicardTol;
  std::size_t T = kDefaultDepth;
  int max_iter = 1000;
  std::optional<Vector> x_init;

  EvalMode to_mode(std::size_t N) const {
    const Vector x0 = x_init ? *x_init : Vector::Zero(static_cast<Eigen::Index>(N));
    if (static_cast<std::size_t>(x0.size()) != N) throw Error(ErrorCode::InvalidInput, "x_init must have length N");
    if (mode == "picard") return Picard{x0, max_iter, tol};
    if (mode == "forward_washout" || mode == "forward") return ForwardWashout{x0};
    throw Error(ErrorCode::InvalidInput, "unknown mode '" + mode + "'; supported: picard, forward_washout");
  }
};

/// {"mode": "picard", "tol": 1e-12, "T": 200, "max_iter": 1000, "x_init": [...]}
inline EvalConfig eval_config_from_json(const json& j, const std::string& path = "config") {
  EvalConfig c;
  if (!j.is_object()) throw field_error(path, "expected an object");
  if (j.contains("mode")) c.mode = to_str(j["mode"], join(path, "mode"));
  if (c.mode != "picard" && c.mode != "forward_washout" && c.mode != "forward")
    throw field_error(join(path, "mode"), "unknown mode '" + c.mode + "'; supported: picard, forward_washout");
  if (j.contains("tol")) c.tol = to_double(j["tol"], join(path, "tol"));
  if (j.contains("T")) {
    const long t = to_int(j["T"], join(path, "T"));
    if (t < 1) throw field_error(join(path, "T"), "must be >= 1");
    c.T = static_cast<std::size_t>(t);
  }
  if (j.contains("max_iter")) c.max_iter = static_cast<int>(to_int(j["max_iter"], join(path, "max_iter")));
  if (j.contains("x_init")) c.x_init = to_vector(j["x_init"], join(path, "x_init"));
  return c;
}

inline json to_json(const EvalConfig& c) {
  json j{{"mode", c.mode}, {"tol", c.tol}, {"T", c.T}, {"max_iter", c.max_iter}};
  if (c.x_init) j["x_init"] = from_vector(*c.x_init);
  return j;
}

}  // namespace rescert::io
