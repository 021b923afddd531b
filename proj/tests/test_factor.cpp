#include <catch_amalgamated.hpp>

#include <random>

#include "mlw/error.hpp"
#include "mlw/factor.hpp"

using namespace mlw;

namespace {

const Point kBase{{0, 0}, {0, 1}};

double jet_diff(const Jet& a, const Jet& b) {
  const int K = std::min(a.order(), b.order());
  return (a.truncated(K) - b.truncated(K)).max_abs();
}

Expr rnd_poly_x(std::mt19937& rng, int n, int deg, bool vanish_at_0 = false) {
  std::uniform_int_distribution<int> c(-4, 4), v(0, n - 1), d(1, deg);
  Expr e = vanish_at_0 ? Expr() : Expr::constant({c(rng) / 4.0, c(rng) / 4.0});
  for (int t = 0; t < 3; ++t) {
    Expr m = Expr::constant({c(rng) / 4.0, c(rng) / 4.0});
    for (int j = d(rng); j > 0; --j) m = m * Expr::x(v(rng));
    e = e + m;
  }
  return e;
}

// Homogeneous of degree `deg` in xi: sum of c(x) xi_k xi_n^{deg-1} terms
// plus c(x) xi_n^deg, optionally without xi1.
Expr rnd_homog(std::mt19937& rng, int n, int deg, bool with_xi1) {
  Expr e = rnd_poly_x(rng, n, 2) * pow(Expr::xi(n - 1), deg);
  for (int k = with_xi1 ? 0 : 1; k < n - 1; ++k)
    e = e + rnd_poly_x(rng, n, 2) * Expr::xi(k) * pow(Expr::xi(n - 1), deg - 1);
  if (with_xi1) e = e + rnd_poly_x(rng, n, 1) * Expr::xi(0) * Expr::xi(0) * pow(Expr::xi(n - 1), deg - 2);
  return e;
}

}  // namespace

TEST_CASE("term division examples") {
  Jet p = jet_of(parse_expression("xi1", 2), kBase, 5);
  auto t = malgrange_divide_term(jet_of(parse_expression("xi1", 2), kBase, 5), p);
  CHECK(jet_diff(t.e, Jet::constant(kBase, 4, 1.0)) < 1e-15);
  CHECK(t.r.max_abs() == 0.0);
  auto t2 = malgrange_divide_term(jet_of(parse_expression("xi2", 2), kBase, 5), p);
  CHECK(t2.e.max_abs() == 0.0);
  CHECK(jet_diff(t2.r, jet_of(parse_expression("xi2", 2), kBase, 5)) == 0.0);

  // xi1^2 = (xi1 + i f)(xi1 - i f) + f^2 with f = x1 xi2 + x2^2
  Expr f = parse_expression("x1*xi2 + x2^2", 2);
  Jet pf = jet_of(Expr::xi(0) + Expr::imag_unit() * f, kBase, 6);
  auto t3 = malgrange_divide_term(jet_of(parse_expression("xi1^2", 2), kBase, 6), pf);
  CHECK(jet_diff(t3.e, jet_of(Expr::xi(0) - Expr::imag_unit() * f, kBase, 5)) < 1e-13);
  CHECK(jet_diff(t3.r, jet_of(-f * f, kBase, 6)) < 1e-13);

  CHECK_THROWS_AS(malgrange_divide_term(p, jet_of(parse_expression("2*xi1", 2), kBase, 5)), PreconditionError);
}

TEST_CASE("normalizing lower-order terms") {
  auto P = ClassicalSymbol::from_terms(1, 2, {parse_expression("xi1 + i*x1*xi2", 2), Expr()});
  auto S = normalize_lower_order(P, kBase, 2, 5);
  CHECK(S.terms[1].max_abs() == 0.0);

  // p0 = xi1 b(x): a = b, new p0 = -i f b, with the next term corrected
  Expr b = parse_expression("1 + x2 + x1^2", 2), f = parse_expression("x1*xi2", 2);
  auto P2 = ClassicalSymbol::from_terms(1, 2, {Expr::xi(0) + Expr::imag_unit() * f, Expr::xi(0) * b, Expr()});
  auto S2 = normalize_lower_order(P2, kBase, 2, 5);
  CHECK(jet_diff(S2.terms[1], jet_of(Expr::constant({0, -1}) * f * b, kBase, 5)) < 1e-12);
  // degree -1 term of -(b # P): -(d_xi b D_x p1) - b p0 = -b^2 xi1 (b has no xi)
  // followed by its own normalization, which leaves it xi1-free
  for (const auto& t : S2.terms) {
    const MonomialTable& T = t.table();
    for (int i = 0; i < T.size(); ++i)
      if (T.exp(i, 2) > 0 && &t != &S2.terms[0]) CHECK(std::abs(t.taylor(i)) < 1e-9);
  }
  auto S3 = normalize_lower_order(S2);
  for (int k = 0; k <= 2; ++k) CHECK(jet_diff(S3.terms[k], S2.terms[k]) < 1e-10);

  auto bad = ClassicalSymbol::from_terms(1, 2, {parse_expression("xi1 + i*xi1*x1", 2)});
  CHECK_THROWS_AS(normalize_lower_order(bad, kBase, 0, 3), PreconditionError);
}

TEST_CASE("trivial factorizations") {
  auto P = ClassicalSymbol::from_terms(1, 2, {parse_expression("xi1 + i*x1*xi2", 2), parse_expression("x2", 2)});
  auto f = factor_symbol(P, P, kBase, 2, 5);
  CHECK(jet_diff(f.E.terms[0], Jet::constant(kBase, 4, 1.0)) < 1e-12);
  CHECK(f.E.terms[1].max_abs() < 1e-12);
  for (const auto& r : f.R.terms) CHECK(r.max_abs() < 1e-10);
  for (double r : f.residual) CHECK(r < 1e-10);
  CHECK(!first_nonvanishing(remainder_terms(f), 1e-9));

  auto R0 = ClassicalSymbol::from_terms(1, 2, {parse_expression("x1*xi2 + x2^2*xi2", 2), parse_expression("3 + x1", 2)});
  auto g = factor_symbol(R0, P, kBase, 1, 5);
  for (const auto& e : g.E.terms) CHECK(e.max_abs() < 1e-12);
  CHECK(jet_diff(g.R.terms[0], jet_of(R0.term(0), kBase, 5)) < 1e-12);
  CHECK(jet_diff(g.R.terms[1], jet_of(R0.term(1), kBase, 5)) < 1e-12);
  CHECK(g.r_xi1_independent);
}

TEST_CASE("planted factorizations round trip") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = trial < 6 ? 2 : 3;
    Point base{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    base.xi[n - 1] = 1;
    Expr xin = Expr::xi(n - 1);
    Expr f = rnd_poly_x(rng, n, 2, true) * xin + Expr::x(0) * rnd_homog(rng, n, 1, false);
    auto P = ClassicalSymbol::from_terms(1, n, {Expr::xi(0) + Expr::imag_unit() * f, rnd_poly_x(rng, n, 2),
                                                 rnd_poly_x(rng, n, 2) / xin});
    auto E = ClassicalSymbol::from_terms(0, n, {rnd_homog(rng, n, 2, true) / pow(xin, 2), rnd_homog(rng, n, 2, true) / pow(xin, 3),
                                                 rnd_homog(rng, n, 2, true) / pow(xin, 4)});
    auto R = ClassicalSymbol::from_terms(1, n, {rnd_homog(rng, n, 1, false), rnd_poly_x(rng, n, 2),
                                                 rnd_poly_x(rng, n, 2) / xin});
    auto PE = compose_symbols(P, E, 2);
    std::vector<Expr> q;
    for (int k = 0; k <= 2; ++k) q.push_back(PE.term(k) + R.term(k));
    auto Q = ClassicalSymbol::from_terms(1, n, q);
    auto fr = factor_symbol(Q, P, base, 2, 4);
    for (int k = 0; k <= 2; ++k) {
      CHECK(jet_diff(fr.E.terms[k], jet_of(E.term(k), base, 3)) < 1e-8);
      CHECK(jet_diff(fr.R.terms[k], jet_of(R.term(k), base, 4)) < 1e-8);
      CHECK(fr.residual[k] < 1e-8);
    }
    CHECK(fr.r_xi1_independent);
  }
}

TEST_CASE("proportionality") {
  auto P = ClassicalSymbol::from_terms(1, 2, {parse_expression("xi1 + i*x1*xi2", 2), parse_expression("1 + x2", 2)});
  std::vector<Expr> q3{Expr::constant(3.0) * P.term(0), Expr::constant(3.0) * P.term(1)};
  auto r = proportionality(P, ClassicalSymbol::from_terms(1, 2, q3), kBase);
  CHECK(std::abs(r.mu - 3.0) < 1e-14);
  CHECK(r.ok);
  CHECK(r.principal_residual == 0.0);

  Expr mu0 = parse_expression("(2 + i) + x1 - 0.5*x2^2 + i*x1*x2", 2);
  auto Q = ClassicalSymbol::from_terms(1, 2, {mu0 * P.term(0), mu0 * P.term(1)});
  auto rq = proportionality(P, Q, kBase);
  CHECK(std::abs(rq.mu - cplx(2, 1)) < 1e-12);
  CHECK(rq.ok);
  CHECK(rq.e0_gradient < 1e-12);

  auto Qbad = ClassicalSymbol::from_terms(1, 2, {parse_expression("xi1 + 2*i*x1*xi2 + xi2", 2), Expr()});
  auto rb = proportionality(P, Qbad, kBase);
  CHECK(!rb.ok);
  CHECK(rb.principal_residual > 0.5);

  CHECK_THROWS_AS(proportionality(P, Q, {{0, 0}, {0, -1}}), PreconditionError);
  CHECK_THROWS_AS(proportionality(P, Q, {{0, 0}, {1, 1}}), PreconditionError);

  // three-dimensional Lewy operator, bracket positive at xi = (0, 0, -1)
  auto L = fixture("lewy");
  auto LP = ClassicalSymbol::from_terms(1, 3, {L.term(0), parse_expression("x3", 3)});
  Expr m3 = parse_expression("(2 + i) + x1*x3 - x2", 3);
  auto LQ = ClassicalSymbol::from_terms(1, 3, {m3 * LP.term(0), m3 * LP.term(1)});
  auto rl = proportionality(LP, LQ, {{0, 0, 0}, {0, 0, -1}});
  CHECK(std::abs(rl.mu - cplx(2, 1)) < 1e-12);
  CHECK(rl.ok);
}

TEST_CASE("commutator criteria") {
  Expr p = parse_expression("xi1 + i*x1*xi2", 2);
  std::vector<Point> pts{kBase, {{0, 0.7}, {0, 1}}, {{0, -1.3}, {0, 2}}};
  for (const auto& c : commutator_test(p, Expr::constant(4.0), 2, pts, 5)) CHECK(c.pass);
  auto sq = commutator_test(p, parse_expression("x2^2", 2), 2, {kBase}, 3);
  CHECK(sq[0].pass);
  auto sq4 = commutator_test(p, parse_expression("x2^2", 2), 2, {kBase}, 4);
  CHECK(!sq4[0].pass);
  CHECK(std::abs(sq4[0].hamilton[3] + 6.0) < 1e-12);
  auto good = commutator_test(p, parse_expression("(x2 - i*x1^2/2)^2", 2), 2, pts, 6);
  for (const auto& c : good) CHECK(c.pass);
  auto bad = commutator_test(p, parse_expression("x1", 2), 2, {kBase}, 2);
  CHECK(!bad[0].pass);
  CHECK(std::abs(bad[0].hamilton[0] - 1.0) < 1e-15);
  CHECK(std::abs(*bad[0].transport - cplx(0, -1)) < 1e-15);
  CHECK_THROWS_AS(commutator_test(p, Expr::x(0), 2, {{{1, 0}, {0, 1}}}, 1), PreconditionError);
}
