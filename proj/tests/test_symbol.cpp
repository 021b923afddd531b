#include <catch_amalgamated.hpp>

#include <random>

#include "mlw/error.hpp"
#include "mlw/symbol.hpp"

using namespace mlw;

namespace {

// Polynomial symbol sum_beta a_beta(x) xi^beta kept in operator form.
struct PolySymbol {
  int n = 2;
  std::vector<std::pair<std::vector<int>, Expr>> parts;

  ClassicalSymbol classical(int top) const {
    std::vector<Expr> terms(top + 1);
    for (const auto& [beta, c] : parts) {
      int d = 0;
      for (int b : beta) d += b;
      Expr m = c;
      for (int k = 0; k < n; ++k) m = m * pow(Expr::xi(k), beta[k]);
      terms[top - d] = terms[top - d] + m;
    }
    return ClassicalSymbol::from_terms(top, n, terms);
  }
};

Expr random_x_poly(std::mt19937& rng, int n, int deg) {
  std::uniform_int_distribution<int> c(-3, 3), v(0, n - 1), d(0, deg);
  Expr e = Expr::constant({c(rng) / 2.0, c(rng) / 2.0});
  for (int t = 0; t < 3; ++t) {
    Expr m = Expr::constant({c(rng) / 2.0, c(rng) / 3.0});
    for (int j = d(rng); j > 0; --j) m = m * Expr::x(v(rng));
    e = e + m;
  }
  return e;
}

PolySymbol random_symbol(std::mt19937& rng, int n, int top) {
  PolySymbol s;
  s.n = n;
  std::vector<int> beta(n, 0);
  std::function<void(int, int)> rec = [&](int k, int left) {
    if (k == n) {
      s.parts.push_back({beta, random_x_poly(rng, n, 2)});
      return;
    }
    for (int b = 0; b <= left; ++b) {
      beta[k] = b;
      rec(k + 1, left - b);
    }
    beta[k] = 0;
  };
  rec(0, top);
  return s;
}

Expr D_beta(Expr u, const std::vector<int>& beta) {
  int s = 0;
  for (std::size_t k = 0; k < beta.size(); ++k) {
    u = differentiate(u, xvar(static_cast<int>(k)), beta[k]);
    s += beta[k];
  }
  static const cplx p[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  return p[s % 4] * u;
}

Expr plane_wave(int n) {
  Expr phase;
  for (int k = 0; k < n; ++k) phase = phase + Expr::x(k) * Expr::xi(k);
  return exp(Expr::imag_unit() * phase);
}

Expr apply(const PolySymbol& a, const Expr& u) {
  Expr out;
  for (const auto& [beta, c] : a.parts) out = out + c * D_beta(u, beta);
  return out;
}

Expr apply_adjoint(const PolySymbol& a, const Expr& u) {
  Expr out;
  for (const auto& [beta, c] : a.parts) out = out + D_beta(conjugate(c) * u, beta);
  return out;
}

cplx total(const ClassicalSymbol& s, const Point& p) {
  cplx acc = 0;
  for (const auto& t : s.terms) acc += evaluate(t.expr, p);
  return acc;
}

Point random_point(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-1, 1);
  Point p{std::vector<double>(n), std::vector<double>(n)};
  for (auto& v : p.x) v = u(rng);
  for (auto& v : p.xi) v = u(rng);
  return p;
}

}  // namespace

TEST_CASE("homogeneity residuals") {
  CHECK(check_homogeneity({1, parse_expression("xi1", 2), 2}, 50) == 0.0);
  CHECK(check_homogeneity({1, parse_expression("normXiPrime*(-flatExp(-x1) + flatExp(x1 - 2))", 2), 2}, 200) < 1e-10);
  double r = check_homogeneity({1, parse_expression("xi1^2", 2), 2}, 200);
  CHECK(r > 0.1);
  for (const auto& [name, s] : fixtures(2))
    for (const auto& t : s.terms) {
      INFO(name);
      CHECK(check_homogeneity(t, 200) < 1e-8);
    }
  for (const auto& [name, s] : fixtures(3))
    for (const auto& t : s.terms) CHECK(check_homogeneity(t, 100) < 1e-8);
}

TEST_CASE("composition examples") {
  auto a = ClassicalSymbol::from_terms(1, 2, {parse_expression("xi1 + i*x1*xi2", 2), parse_expression("x2", 2)});
  auto one = ClassicalSymbol::from_terms(0, 2, {Expr::constant(1.0)});
  auto c = compose_symbols(a, one, 2);
  Point p{{0.3, -0.7}, {0.2, 0.9}};
  for (int k = 0; k <= 2; ++k) CHECK(std::abs(evaluate(c.terms[k].expr, p) - evaluate(a.term(k), p)) < 1e-15);

  auto xi1 = ClassicalSymbol::from_terms(1, 1, {parse_expression("xi1", 1)});
  auto x1 = ClassicalSymbol::from_terms(0, 1, {parse_expression("x1", 1)});
  auto r = compose_symbols(xi1, x1, 1);
  CHECK(r.top_degree == 1);
  CHECK(std::abs(evaluate(r.terms[0].expr, {{0.5}, {3.0}}) - 1.5) < 1e-15);
  CHECK(std::abs(evaluate(r.terms[1].expr, {{0.5}, {3.0}}) - cplx(0, -1)) < 1e-15);

  auto tr = ClassicalSymbol::from_terms(1, 2, {parse_expression("xi1", 2)}, true);
  CHECK_THROWS_AS(compose_symbols(tr, one, 1), PreconditionError);
  CHECK_THROWS_AS(compose_symbols(xi1, a, 1), PreconditionError);
}

TEST_CASE("order-zero term of a composition with a first-order symbol") {
  // sigma_0(E P) = e_{-1} p_1 + e_0 p_0 + sum_k d_xi_k e_0 D_k p_1
  std::mt19937 rng(11);
  const int n = 2;
  Expr e0 = parse_expression("(1 + x1*x2)*xi2^2/(xi1^2 + xi2^2)", n);
  Expr em1 = parse_expression("x1*xi1/(xi1^2 + xi2^2)", n);
  Expr p1 = parse_expression("xi1 + i*x1^2*xi2", n);
  Expr p0 = parse_expression("2 + x2", n);
  auto E = ClassicalSymbol::from_terms(0, n, {e0, em1});
  auto P = ClassicalSymbol::from_terms(1, n, {p1, p0});
  auto EP = compose_symbols(E, P, 1);
  for (int s = 0; s < 20; ++s) {
    Point p = random_point(rng, n);
    cplx want = evaluate(em1 * p1 + e0 * p0, p);
    for (int k = 0; k < n; ++k)
      want += evaluate(differentiate(e0, xivar(k)), p) * cplx(0, -1) * evaluate(differentiate(p1, xvar(k)), p);
    CHECK(std::abs(evaluate(EP.terms[1].expr, p) - want) < 1e-12);
  }
}

TEST_CASE("composition agrees with operator action on plane waves") {
  std::mt19937 rng(7);
  const int n = 2;
  Expr w = plane_wave(n);
  for (int trial = 0; trial < 10; ++trial) {
    PolySymbol A = random_symbol(rng, n, 2), B = random_symbol(rng, n, 2);
    auto ab = compose_symbols(A.classical(2), B.classical(2), 6);
    Expr oracle = apply(A, apply(B, w)) / w;
    for (int s = 0; s < 5; ++s) {
      Point p = random_point(rng, n);
      CHECK(std::abs(total(ab, p) - evaluate(oracle, p)) < 1e-10);
    }
  }
}

TEST_CASE("adjoint examples and operator oracle") {
  auto r = ClassicalSymbol::from_terms(1, 2, {parse_expression("xi2", 2)});
  auto q = adjoint_symbol(r, 2);
  Point p{{0.4, 0.1}, {0.3, -2}};
  CHECK(evaluate(q.terms[0].expr, p) == cplx(-2.0));
  CHECK(q.terms[1].expr.is_zero());

  auto r2 = ClassicalSymbol::from_terms(1, 2, {parse_expression("x1*xi2", 2)});
  auto q2 = adjoint_symbol(r2, 1);
  CHECK(std::abs(evaluate(q2.terms[0].expr, p) - cplx(0.4 * -2)) < 1e-15);
  CHECK(std::abs(evaluate(q2.terms[1].expr, p)) == 0.0);

  std::mt19937 rng(8);
  Expr w = plane_wave(2);
  for (int trial = 0; trial < 10; ++trial) {
    PolySymbol A = random_symbol(rng, 2, 2);
    auto adj = adjoint_symbol(A.classical(2), 4);
    Expr oracle = apply_adjoint(A, w) / w;
    for (int s = 0; s < 5; ++s) {
      Point pt = random_point(rng, 2);
      CHECK(std::abs(total(adj, pt) - evaluate(oracle, pt)) < 1e-10);
    }
  }
}

TEST_CASE("adjoint is an involution") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    auto A = random_symbol(rng, 2, 2).classical(2);
    auto back = adjoint_symbol(adjoint_symbol(A, 4), 4);
    for (int s = 0; s < 5; ++s) {
      Point pt = random_point(rng, 2);
      for (int k = 0; k <= 4; ++k) CHECK(std::abs(evaluate(back.terms[k].expr, pt) - evaluate(A.term(k), pt)) < 1e-10);
    }
  }
}

TEST_CASE("adjoint with xi1-independent terms") {
  auto r = ClassicalSymbol::from_terms(1, 2, {parse_expression("x1*x2*xi2", 2), parse_expression("x2^2", 2)});
  auto full = adjoint_symbol(r, 2), part = adjoint_symbol(r, 2, true);
  std::mt19937 rng(2);
  for (int s = 0; s < 10; ++s) {
    Point pt = random_point(rng, 2);
    for (int k = 0; k <= 2; ++k) CHECK(std::abs(evaluate(full.terms[k].expr, pt) - evaluate(part.terms[k].expr, pt)) < 1e-14);
    // q0 = conj(r0) + d_xi2 D_x2 conj(r1) = x2^2 - i x1
    CHECK(std::abs(evaluate(full.terms[1].expr, pt) - cplx(pt.x[1] * pt.x[1], -pt.x[0])) < 1e-14);
  }
}

TEST_CASE("composition is associative") {
  std::mt19937 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_symbol(rng, 2, 2).classical(2);
    auto b = random_symbol(rng, 2, 2).classical(2);
    auto c = random_symbol(rng, 2, 2).classical(2);
    auto l = compose_symbols(compose_symbols(a, b, 3), c, 3);
    auto r = compose_symbols(a, compose_symbols(b, c, 3), 3);
    Point pt = random_point(rng, 2);
    for (int k = 0; k <= 3; ++k)
      CHECK(std::abs(evaluate(l.terms[k].expr, pt) - evaluate(r.terms[k].expr, pt)) < 1e-10);
  }
}

TEST_CASE("poisson brackets") {
  CHECK(poisson(parse_expression("xi1", 1), parse_expression("x1", 1), 1).is_one());
  Expr b = poisson(parse_expression("xi1", 2), parse_expression("x1*xi2", 2), 2);
  CHECK(evaluate(b, {{0.3, 0.2}, {0, 1}}) == cplx(1.0));
  CHECK(std::abs(evaluate(b, {{0.3, 0.2}, {5, -2.5}}) - cplx(-2.5)) < 1e-15);

  std::mt19937 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto A = random_symbol(rng, 2, 2).classical(2);
    auto B = random_symbol(rng, 2, 1).classical(1);
    auto C = random_symbol(rng, 2, 2).classical(2);
    Expr a = A.terms[0].expr, bb = B.terms[0].expr, c = C.terms[1].expr;
    Point pt = random_point(rng, 2);
    CHECK(std::abs(evaluate(poisson(a, a, 2), pt)) < 1e-12);
    Expr jac = poisson(a, poisson(bb, c, 2), 2) + poisson(bb, poisson(c, a, 2), 2) + poisson(c, poisson(a, bb, 2), 2);
    CHECK(std::abs(evaluate(jac, pt)) < 1e-9);
  }
}

TEST_CASE("iterated hamilton fields") {
  Expr p = parse_expression("xi1", 1), q = parse_expression("x1^2", 1);
  Point pt{{0.7}, {1.0}};
  CHECK(std::abs(evaluate(iterated_hamilton(p, q, 1, 1), pt) - 1.4) < 1e-15);
  CHECK(evaluate(iterated_hamilton(p, q, 2, 1), pt) == cplx(2.0));
  CHECK(iterated_hamilton(p, q, 3, 1).is_zero());
  CHECK(iterated_hamilton(p, Expr::constant(3.0), 2, 1).is_zero());
  Expr r = parse_expression("x1*xi1 + i*x1^3", 1);
  CHECK(iterated_hamilton(r, q, 1, 1).equals(poisson(r, q, 1)));
  CHECK_THROWS_AS(iterated_hamilton(p, q, 0, 1), PreconditionError);
}

TEST_CASE("principal type") {
  CHECK(is_principal_type({1, parse_expression("xi1", 2), 2}, {{0, 0}, {0, 1}}));
  CHECK(is_principal_type({1, parse_expression("xi1 + i*x1*xi2", 2), 2}, {{0, 0}, {0, 1}}));
  CHECK_THROWS_AS(is_principal_type({2, parse_expression("xi1^2 + xi2^2", 2), 2}, {{0, 0}, {0, 0}}), PreconditionError);
  CHECK_THROWS_AS(is_principal_type({2, parse_expression("xi1^2 + xi2^2", 2), 2}, {{0, 0}, {0, 1}}), PreconditionError);
  // radial direction only: Hamilton field parallel to (0, xi)
  CHECK(!is_principal_type({1, parse_expression("x1*xi1", 1), 1}, {{0}, {1}}));
  auto lewy = fixture("lewy");
  CHECK(lewy.n == 3);
  CHECK(is_principal_type(lewy.terms[0], {{0, 0, 0}, {0, 0, 1}}));
}

TEST_CASE("fixture values") {
  auto p1 = fixture("p1");
  CHECK(std::abs(evaluate(p1.terms[0].expr, {{1, 0}, {0, 1}})) == 0.0);
  auto p2 = fixture("p2");
  for (double x1 : {-2.0, -0.5, 0.0, 0.7, 1.5, 2.5, 4.0})
    CHECK(evaluate(p2.terms[0].expr, {{x1, 0}, {0, 1}}) == cplx(0.0));
  CHECK(evaluate(p2.terms[0].expr, {{-0.5, 0.5}, {0, 1}}).imag() < 0);
  CHECK(evaluate(p2.terms[0].expr, {{2.5, 0.5}, {0, 1}}).imag() > 0);
  CHECK(evaluate(p2.terms[0].expr, {{0.5, -0.5}, {0, 1}}).imag() < 0);
  CHECK(evaluate(fixture("model2d").terms[0].expr, {{0, 0}, {0, 1}}) == cplx(0.0));
  auto tmpl = fixture("template", 2, "x1^3*xi2");
  CHECK(std::abs(evaluate(tmpl.terms[0].expr, {{2, 0}, {0.5, 1}}) - cplx(0.5, 8)) < 1e-15);
  CHECK_THROWS_AS(fixture("nope"), PreconditionError);
}
