#include <gtest/gtest.h>

#include <cmath>

#include "expect_error.hpp"
#include "rescert/io.hpp"
#include "rescert/volterra.hpp"
#include "support.hpp"

using namespace rescert;
namespace tk = rescert::testkit;
using io::json;

namespace {

// Serialize to text and back, as a file round trip would.
json through_text(const json& j) { return io::parse_json(j.dump()); }

std::string error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Json, ParseErrorsReportLineAndColumn) {
  const std::string msg = error_text([] { io::parse_json("{\n  \"a\": 1,\n  \"b\": ]\n}", "sys.json"); });
  EXPECT_NE(msg.find("sys.json: line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("ParseError"), std::string::npos);
}

TEST(Json, NonFiniteNumbersAsStrings) {
  EXPECT_EQ(io::number(kInfinity), "inf");
  EXPECT_EQ(io::number(-kInfinity), "-inf");
  EXPECT_TRUE(io::number(std::nan("")).is_string());
  EXPECT_TRUE(std::isinf(io::to_double("inf", "x")));
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
}

TEST(Weighting, RoundTripAllKinds) {
  for (const auto& w : {WeightingSequence::geometric(0.3), WeightingSequence::harmonic(1.5),
                        WeightingSequence::gaussian_exp(), WeightingSequence::custom({1.0, 0.5, 0.2})}) {
    const auto back = io::weighting_from_json(through_text(io::to_json(w)));
    for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(back(t), w(t));
  }
}

TEST(Weighting, ErrorsNameTheField) {
  const std::string msg = error_text([] { io::weighting_from_json(json{{"kind", "geometric"}}); });
  EXPECT_NE(msg.find("weighting.lambda"), std::string::npos) << msg;
  EXPECT_ERROR_CODE(io::weighting_from_json(json{{"kind", "geometric"}, {"lambda", 1.5}}), ErrorCode::InvalidWeighting);
  EXPECT_ERROR_CODE(io::weighting_from_json(json{{"kind", "cubic"}}), ErrorCode::ParseError);
}

TEST(Csv, WindowsWithHeaderCommentsAndBlankLines) {
  const Window z = io::window_from_csv("z0,z1\n# comment\n1,2\n\n3,4\r\n5.5,-6e-1\n");
  EXPECT_EQ(z.depth(), 3u);
  EXPECT_EQ(z.dim(), 2u);
  EXPECT_EQ(z.at(0)(1), -0.6);
  EXPECT_EQ(z.at(-2)(0), 1.0);
}

TEST(Csv, ErrorsReportLineAndField) {
  const std::string bad = error_text([] { io::window_from_csv("1,2\n3,x\n", "z.csv"); });
  EXPECT_NE(bad.find("z.csv: line 2, field 2"), std::string::npos) << bad;
  const std::string ragged = error_text([] { io::window_from_csv("1,2\n3\n", "z.csv"); });
  EXPECT_NE(ragged.find("line 2"), std::string::npos) << ragged;
  EXPECT_ERROR_CODE(io::window_from_csv("a,b\n"), ErrorCode::ParseError);
}

TEST(Csv, WindowRoundTripIsExact) {
  tk::Rng rng(1);
  const Window z = tk::random_window(rng, 30, 3, 10.0);
  EXPECT_EQ(io::window_from_csv(io::window_to_csv(z)), z);
  EXPECT_EQ(io::window_from_json(through_text(io::to_json(z))), z);
}

TEST(Csv, StatesAndForgettingSchemas) {
  const Window x = Window::scalar({1.0, 2.0});
  const std::string s = io::states_to_csv(x, Window::scalar({3.0, 4.0}));
  EXPECT_EQ(s, "t,x0,y0\n-1,1,3\n0,2,4\n");
  ForgettingReport r;
  r.gaps = {0.5, 0.25};
  EXPECT_EQ(io::forgetting_to_csv(r), "t,gap,envelope\n1,0.5,\n2,0.25,\n");
  r.envelope = std::vector<double>{1.0, 0.5};
  EXPECT_EQ(io::forgetting_to_csv(r), "t,gap,envelope\n1,0.5,1\n2,0.25,0.5\n");
}

TEST(System, RoundTripEveryFamily) {
  tk::Rng rng(2);
  for (auto f : {tk::Family::Linear, tk::Family::EsnTanh, tk::Family::EsnAlgebraic, tk::Family::TrigSas,
                 tk::Family::RegularSas}) {
    const auto sys = tk::random_system(rng, f, 3, 2, 0.5).with_readout(tk::random_polynomial(rng, 3, 2, 2));
    const json j = io::to_json(sys);
    const auto back = io::system_from_json(through_text(j));
    EXPECT_EQ(io::to_json(back), j) << tk::family_label(f);
    const Vector x = tk::random_vector(rng, 3), z = tk::random_vector(rng, 2);
    EXPECT_EQ(back.apply(x, z), sys.apply(x, z));
    EXPECT_EQ(back.readout()->apply(x), sys.readout()->apply(x));
  }
}

TEST(System, UnknownFamilyListsSupported) {
  const std::string msg = error_text([] { io::system_from_json(json{{"family", "lstm"}}); });
  EXPECT_NE(msg.find("linear, esn, trig_sas, regular_sas"), std::string::npos) << msg;
}

TEST(System, FieldErrors) {
  const std::string msg = error_text([] { io::system_from_json(json{{"family", "esn"}, {"A", {{0.1}}}}); });
  EXPECT_NE(msg.find("field 'c'"), std::string::npos) << msg;
  const std::string ragged = error_text(
      [] { io::system_from_json(json::parse(R"({"family":"linear","A":[[1,2],[3]],"c":[[1],[1]]})")); });
  EXPECT_NE(ragged.find("A[1]"), std::string::npos) << ragged;
  EXPECT_ERROR_CODE(io::system_from_json(json::parse(R"({"family":"linear","A":[[1,2]],"c":[[1]]})")),
                    ErrorCode::InvalidInput);
  EXPECT_ERROR_CODE(io::system_from_json(json::parse(R"({"family":"esn","A":[[0.1]],"c":[[1]],"sigma":"relu"})")),
                    ErrorCode::ParseError);
}

TEST(Certificate, RoundTripEqual) {
  tk::Rng rng(3);
  std::vector<Certificate> certs;
  for (auto f : tk::certifiable_families())
    certs.push_back(certify_contraction(tk::random_system(rng, f, 3, 1, 0.4), WeightingSequence::geometric(0.5)));
  certs.push_back(certify_contraction(tk::random_system(rng, tk::Family::Linear, 2, 1, 0.4),
                                      WeightingSequence::gaussian_exp()));
  certs.push_back(certify_contraction_p(tk::random_system(rng, tk::Family::Linear, 2, 1, 0.4),
                                        WeightingSequence::geometric(0.5), 2.0));
  certs.push_back(certify_linear_series(Matrix::Constant(1, 1, 0.5), WeightingSequence::harmonic(1.5)));
  for (const auto& c : certs) EXPECT_EQ(io::certificate_from_json(through_text(io::to_json(c))), c);
}

TEST(Kernels, RoundTripEqual) {
  tk::Rng rng(4);
  const auto exact = extract_exact(ReservoirSystem::linear(tk::random_nilpotent(rng, 3), tk::random_matrix(rng, 3, 1))
                                       .with_readout(tk::random_polynomial(rng, 3, 2, 2)),
                                   30);
  EXPECT_EQ(io::kernels_from_json(through_text(io::to_json(exact))), exact);
  const auto fd = extract_fd(tk::random_system(rng, tk::Family::EsnTanh, 2, 1, 0.5),
                             Window::constant(25, Vector::Constant(1, 0.1)), 2, 3);
  EXPECT_EQ(io::kernels_from_json(through_text(io::to_json(fd))), fd);
}

TEST(Kernels, JsonLayout) {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 1) = 1.0;
  Matrix c = Matrix::Zero(2, 1);
  c(1, 0) = 1.0;
  const auto K = extract_exact(A, c, Readout::polynomial(2, 1, {{{1, 1}, Vector::Ones(1)}}), 4);
  const json j = io::to_json(K);
  EXPECT_EQ(j["J"], 2);
  EXPECT_EQ(j["M_mem"], 1);
  EXPECT_EQ(j["g"]["2"], json::parse("[0.0, 0.5, 0.5, 0.0]"));
  json broken = j;
  broken["g"]["2"].erase(0);
  const std::string msg = error_text([&] { io::kernels_from_json(broken); });
  EXPECT_NE(msg.find("kernels.g.2"), std::string::npos) << msg;
}

TEST(EvalConfig, DefaultsAndOverrides) {
  const auto d = io::eval_config_from_json(json::object());
  EXPECT_EQ(d.mode, "picard");
  EXPECT_EQ(d.tol, 1e-12);
  EXPECT_EQ(d.T, 200u);
  const auto c = io::eval_config_from_json(json{{"mode", "forward_washout"}, {"T", 50}, {"x_init", {1.0, 2.0}}});
  EXPECT_TRUE(std::holds_alternative<ForwardWashout>(c.to_mode(2)));
  EXPECT_ERROR_CODE(c.to_mode(3), ErrorCode::InvalidInput);
  EXPECT_ERROR_CODE(io::eval_config_from_json(json{{"mode", "newton"}}), ErrorCode::ParseError);
  EXPECT_EQ(io::eval_config_from_json(io::to_json(c)).T, 50u);
}
