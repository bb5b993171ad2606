#include <doctest.h>

#include <cmath>
#include <random>

#include "spi/expr.hpp"
#include "spi/jet.hpp"

using namespace spi;
using spi::expr::parse;

namespace {

// All multi-indices over nv variables with total degree <= n.
std::vector<std::vector<int>> multi_indices(int nv, int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(nv, 0);
  auto rec = [&](auto&& self, int v, int left) -> void {
    if (v == nv) {
      out.push_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      cur[v] = e;
      self(self, v + 1, left - e);
    }
    cur[v] = 0;
  };
  rec(rec, 0, n);
  return out;
}

// Symbolic partial via repeated differentiation, evaluated pointwise.
double symbolic_partial(const expr::Expression& e, const std::vector<int>& alpha,
                        const std::vector<double>& pt) {
  expr::Expression d = e;
  for (std::size_t v = 0; v < alpha.size(); ++v)
    for (int k = 0; k < alpha[v]; ++k) d = expr::differentiate(d, static_cast<int>(v));
  return d.evaluate(pt);
}

// Richardson-extrapolated central difference of a pointwise function.
template <class F>
double fd(F f, std::vector<double> pt, int var, double h) {
  auto c = [&](double s) {
    auto p = pt, m = pt;
    p[var] += s;
    m[var] -= s;
    return (f(p) - f(m)) / (2 * s);
  };
  return (4 * c(h / 2) - c(h)) / 3;
}

}  // namespace

TEST_CASE("parse accepts the exponential-line Lagrangian") {
  auto e = parse("v^2/(2*q^2)", 1);
  std::vector<double> pt{0.0, 3.0, 2.0};
  CHECK(e.evaluate(pt) == doctest::Approx(9.0 / 8.0));
  auto q = parse("q", 1);
  CHECK(q.root().kind == expr::NodeKind::Variable);
}

TEST_CASE("parse errors carry offsets") {
  try {
    parse("1+", 1);
    FAIL("expected ParseError");
  } catch (const expr::ParseError& err) {
    CHECK(err.offset() == 2);
  }
  CHECK_THROWS_AS(parse("v3", 2), expr::ParseError);
  CHECK_THROWS_AS(parse("foo*q1", 2), expr::ParseError);
  CHECK_THROWS_AS(parse("", 1), expr::ParseError);
  CHECK_THROWS_AS(parse("sin q", 1), expr::ParseError);
  CHECK_NOTHROW(parse("g*q1", 2, {{"g", 0.5}}));
}

TEST_CASE("unary minus binds looser than power") {
  auto e = parse("-q^2", 1);
  std::vector<double> pt{0, 0, 3.0};
  CHECK(e.evaluate(pt) == doctest::Approx(-9.0));
  auto f = parse("2^-1", 1);
  CHECK(f.evaluate(pt) == doctest::Approx(0.5));
}

TEST_CASE("print then parse round-trips structurally") {
  const char* srcs[] = {"v^2/(2*q^2)", "-q^4*0.1 + exp(-tau)*sin(q)", "1e-3*v - -q",
                        "tanh(q)^3 / sqrt(1+q^2) - log(2+cos(v))", "2^q^2"};
  for (const char* s : srcs) {
    auto e = parse(s, 1);
    auto again = parse(expr::print(e), 1);
    CHECK(expr::structurally_equal(e, again));
  }
  auto e2 = parse("p*v1*v2 + q1^3 - q2", 2, {{"p", 1.25}});
  auto text = expr::print(e2);
  CHECK(expr::structurally_equal(e2, parse(text, 2, {{"p", 1.25}})));
}

TEST_CASE("jet of quadratic and constant") {
  auto e = parse("v^2/2", 1);
  std::vector<double> pt{0.0, 3.0, 0.7};
  auto j = jet_eval(e, pt, 2);
  CHECK(j.partial_wrt({1}) == doctest::Approx(3.0));
  CHECK(j.partial_wrt({1, 1}) == doctest::Approx(1.0));
  CHECK(j.partial_wrt({2}) == 0.0);
  CHECK(j.partial_wrt({1, 2}) == 0.0);
  auto c = jet_eval(parse("7", 1), pt, 3);
  CHECK(c.value() == 7.0);
  for (std::size_t i = 1; i < c.coefficients().size(); ++i) CHECK(c.coefficients()[i] == 0.0);
}

TEST_CASE("jet of v^2/(2q^2) gives the mixed partial -2 l / gamma^2") {
  auto e = parse("v^2/(2*q^2)", 1);
  double ell = 0.8, gam = 1.7;
  std::vector<double> pt{0.0, ell * gam, gam};
  auto j = jet_eval(e, pt, 2);
  CHECK(j.partial_wrt({1, 2}) == doctest::Approx(-2 * ell / (gam * gam)).epsilon(1e-13));
  auto h = velocity_hessian(j);
  CHECK(h.a(0, 0) == doctest::Approx(1 / (gam * gam)));
  CHECK(h.a_inv(0, 0) == doctest::Approx(gam * gam));
  CHECK(h.positive_definite);
}

TEST_CASE("velocity Hessian rejects degenerate Lagrangians") {
  std::vector<double> pt{0.0, 1.0, 1.0};
  CHECK_THROWS_AS(velocity_hessian(jet_eval(parse("v*q", 1), pt, 2)), SingularMatrixError);
  auto h = velocity_hessian(jet_eval(parse("v^2/2", 1), pt, 2));
  CHECK(h.a(0, 0) == 1.0);
  CHECK(h.a_inv(0, 0) == 1.0);
}

TEST_CASE("domain errors") {
  std::vector<double> pt{0.0, 1.0, -1.0};
  CHECK_THROWS_AS(jet_eval(parse("log(q)", 1), pt, 2), expr::DomainError);
  CHECK_THROWS_AS(jet_eval(parse("sqrt(q)", 1), pt, 2), expr::DomainError);
  CHECK_THROWS_AS(jet_eval(parse("1/(q+1)", 1), pt, 2), expr::DomainError);
  CHECK_THROWS_AS(jet_eval(parse("q^0.5", 1), pt, 2), expr::DomainError);
  CHECK_NOTHROW(jet_eval(parse("q^3 + q^-2", 1), pt, 4));
}

TEST_CASE("random polynomials: jet equals symbolic derivatives") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> pick(0, 4);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const char* names[] = {"tau", "v1", "v2", "q1", "q2"};
  for (int trial = 0; trial < 12; ++trial) {
    std::string src;
    for (int t = 0; t < 5; ++t) {
      src += (t ? " + " : "") + std::to_string(coef(rng));
      int deg = 1 + pick(rng) % 4;
      for (int k = 0; k < deg; ++k) src += std::string("*") + names[pick(rng)];
    }
    auto e = parse(src, 2);
    std::vector<double> pt{0.3, -0.4, 1.1, 0.9, -1.3};
    const int n = 4;
    auto j = jet_eval(e, pt, n);
    for (const auto& alpha : multi_indices(5, n)) {
      double want = symbolic_partial(e, alpha, pt);
      double got = j.partial(alpha);
      CHECK(got == doctest::Approx(want).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("non-polynomial jets match finite differences") {
  const char* srcs[] = {"exp(0.3*q1)*v1^2/2 + exp(-0.3*q1)*v2^2/2", "sin(q1*q2) + cos(tau*v1)",
                        "tanh(q2+v2) * log(2+q1^2)", "sqrt(1+q1^2+v2^2)", "(1+q1^2)^v1"};
  std::vector<double> pt{0.2, 0.5, -0.3, 0.7, 0.4};
  for (const char* s : srcs) {
    auto e = parse(s, 2);
    auto j = jet_eval(e, pt, 3);
    auto j2 = jet_eval(e, pt, 2);
    // First derivatives of each order-2 partial.
    for (const auto& alpha : multi_indices(5, 2)) {
      auto f = [&](const std::vector<double>& p) { return jet_eval(e, p, 2).partial(alpha); };
      for (int v = 0; v < 5; ++v) {
        auto beta = alpha;
        ++beta[v];
        double want = fd(f, pt, v, 1e-4);
        CHECK(j.partial(beta) == doctest::Approx(want).epsilon(1e-6).scale(1.0));
      }
      CHECK(j.partial(alpha) == doctest::Approx(j2.partial(alpha)).epsilon(1e-14));
    }
    CHECK(j.value() == doctest::Approx(e.evaluate(pt)).epsilon(1e-15));
  }
}

TEST_CASE("jet is invariant under print/parse") {
  auto e = parse("exp(-q^2)*v^4/(3+sin(tau)) - tanh(v*q)", 1);
  auto r = parse(expr::print(e), 1);
  std::vector<double> pt{0.4, 0.6, -0.2};
  auto a = jet_eval(e, pt, 5), b = jet_eval(r, pt, 5);
  for (std::size_t i = 0; i < a.coefficients().size(); ++i)
    CHECK(a.coefficients()[i] == b.coefficients()[i]);
}

TEST_CASE("substitution builds composed expressions") {
  // L(v, q) = v^2/2 with q = 2 qt, v = 2 vt.
  auto e = parse("v^2/2 + q", 1);
  expr::VarLayout lay{1};
  std::vector<expr::NodePtr> repl(3);
  repl[0] = expr::make_variable(0);
  repl[lay.v(0)] = expr::make_binary(expr::NodeKind::Mul, expr::make_number(2), expr::make_variable(lay.v(0)));
  repl[lay.q(0)] = expr::make_binary(expr::NodeKind::Mul, expr::make_number(2), expr::make_variable(lay.q(0)));
  auto s = expr::substitute(e, repl, 1);
  std::vector<double> pt{0.0, 1.5, 0.25};
  CHECK(s.evaluate(pt) == doctest::Approx(2 * 1.5 * 1.5 + 0.5));
}
