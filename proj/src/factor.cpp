// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#include "mlw/factor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mlw/error.hpp"

namespace mlw {

namespace {

void for_each_multi(int n, int s, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> a(n, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1) {
      a[i] = left;
      fn(a);
      return;
    }
    for (int k = left; k >= 0; --k) {
      a[i] = k;
      rec(i + 1, left - k);
    }
  };
  rec(0, s);
}

double multi_factorial(const std::vector<int>& a) {
  double f = 1;
  for (int k : a)
    for (int j = 2; j <= k; ++j) f *= j;
  return f;
}

int abs_of(const std::vector<int>& a) {
  int s = 0;
  for (int k : a) s += k;
  return s;
}

Jet d_xi(Jet j, const std::vector<int>& alpha) {
  const int n = j.n();
  for (int k = 0; k < n; ++k)
    for (int r = 0; r < alpha[k]; ++r) j = j.diff(n + k);
  return j;
}

Jet D_x(Jet j, const std::vector<int>& alpha) {
  static const cplx powers[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  for (std::size_t k = 0; k < alpha.size(); ++k)
    for (int r = 0; r < alpha[k]; ++r) j = j.diff(static_cast<int>(k));
  return powers[abs_of(alpha) % 4] * j;
}

// Sum of jets truncated to their smallest order.
Jet sum_truncated(const std::vector<Jet>& parts, const Point& base, int fallback_order) {
  int K = fallback_order;
  for (const auto& p : parts) K = std::min(K, p.order());
  Jet acc(base, K);
  for (const auto& p : parts) acc += p.truncated(K);
  return acc;
}

// Pieces of the degree-d term of a#b, skipping (i, j) pairs rejected by `use`.
std::vector<Jet> compose_pieces(const JetSymbol& a, const JetSymbol& b, int d,
                                const std::function<bool(int, int)>& use) {
  std::vector<Jet> parts;
  for (int s = 0; s <= d; ++s)
    for (int i = 0; i + s <= d; ++i) {
      const int j = d - s - i;
      if (i > a.depth() || j > b.depth() || !use(i, j)) continue;
      const Jet& ai = a.terms[i];
      const Jet& bj = b.terms[j];
      if (ai.order() < s || bj.order() < s)
        throw PreconditionError("jet order too low for the requested composition depth");
      const int n = ai.n();
      for_each_multi(n, s, [&](const std::vector<int>& al) {
        Jet x = d_xi(ai, al), y = D_x(bj, al);
        const int K = std::min(x.order(), y.order());
        parts.push_back(cplx(1.0 / multi_factorial(al)) * (x.truncated(K) * y.truncated(K)));
      });
    }
  return parts;
}

const Point& base_of(const JetSymbol& s) {
  if (s.terms.empty()) throw PreconditionError("empty jet symbol");
  return s.terms[0].base();
}

}  // namespace

JetSymbol jet_symbol(const ClassicalSymbol& s, const Point& base, int K, int depth) {
  JetSymbol out;
  out.top_degree = s.top_degree;
  for (int k = 0; k <= depth; ++k) out.terms.push_back(jet_of(s.term(k), base, K));
  return out;
}

JetSymbol compose_jets(const JetSymbol& a, const JetSymbol& b, int depth) {
  JetSymbol out;
  out.top_degree = a.top_degree + b.top_degree;
  const Point& base = base_of(a);
  int top = 0;
  for (const auto& j : a.terms) top = std::max(top, j.order());
  for (const auto& j : b.terms) top = std::max(top, j.order());
  for (int d = 0; d <= depth; ++d)
    out.terms.push_back(sum_truncated(compose_pieces(a, b, d, [](int, int) { return true; }), base, top));
  return out;
}

TermDivision malgrange_divide_term(const Jet& q, const Jet& p) {
  const int n = q.n();
  const int K = std::min(q.order(), p.order());
  const Jet pp = p.truncated(K);
  const int e1 = pp.table().shift_up(0, xi1_slot(n));
  if (K < 1 || std::abs(pp.taylor(e1) - 1.0) > 1e-9) throw PreconditionError("d_xi1 p must equal 1 at the base point");
  DivisionResult r = divide_by_factor(q.truncated(K), pp, xi1_slot(n));
  return {std::move(r.quotient), std::move(r.remainder)};
}

JetSymbol normalize_lower_order(const JetSymbol& P) {
  const Jet& p1 = P.terms.at(0);
  const int n = p1.n();
  if (p1.order() < 1) throw PreconditionError("principal jet order too low");
  Jet chk = p1.diff(xi1_slot(n));
  chk.taylor(0) -= 1.0;
  if (chk.max_abs() > 1e-9) throw PreconditionError("principal symbol is not of the form xi1 + i f(x, xi')");
  JetSymbol S = P;
  for (int d = 1; d <= S.depth(); ++d) {
    TermDivision td = malgrange_divide_term(S.terms[d], p1);
    JetSymbol A;
    A.top_degree = S.top_degree - d - 1;
    A.terms.push_back(td.e);
    const int rest = S.depth() - d;
    JetSymbol AS = compose_jets(A, S, rest);
    S.terms[d] = td.r;
    for (int k = 1; k <= rest; ++k) {
      const int K = std::min(S.terms[d + k].order(), AS.terms[k].order());
      S.terms[d + k] = S.terms[d + k].truncated(K) - AS.terms[k].truncated(K);
    }
  }
  return S;
}

JetSymbol normalize_lower_order(const ClassicalSymbol& P, const Point& gamma, int depth, int K) {
  JetSymbol J = jet_symbol(P, gamma, K + 2 * depth, depth);
  JetSymbol S = normalize_lower_order(J);
  for (auto& t : S.terms) t = t.truncated(std::min(K, t.order()));
  return S;
}

FactorizationResult factor_symbol(const JetSymbol& Q, const JetSymbol& P, int depth, int K, int nu) {
  if (Q.depth() < depth) throw PreconditionError("Q has fewer terms than the requested depth");
  const Point& base = base_of(Q);
  const int n = base.dim();
  if (nu < 0) nu = xi1_slot(n);
  const Jet& p1 = P.terms.at(0);
  FactorizationResult f;
  f.depth = depth;
  f.K = K;
  f.nu = nu;
  f.E.top_degree = Q.top_degree - P.top_degree;
  f.R.top_degree = Q.top_degree;
  for (int d = 0; d <= depth; ++d) {
    std::vector<Jet> parts{Q.terms[d]};
    for (Jet& piece : compose_pieces(P, f.E, d, [d](int, int j) { return j < d; })) parts.push_back(-piece);
    Jet target = sum_truncated(parts, base, Q.terms[d].order());
    const int Kd = std::min(target.order(), p1.order());
    if (Kd < K) throw PreconditionError("input jet order too low: need K + 2*depth");
    DivisionResult r = divide_by_factor(target.truncated(Kd), p1.truncated(Kd), nu);
    f.E.terms.push_back(std::move(r.quotient));
    f.R.terms.push_back(std::move(r.remainder));
  }
  // residual sigma_Q - sigma_{PoE} - sigma_R per degree
  JetSymbol PE = compose_jets(P, f.E, depth);
  for (int d = 0; d <= depth; ++d) {
    const int Kd = std::min({Q.terms[d].order(), PE.terms[d].order(), f.R.terms[d].order()});
    Jet res = Q.terms[d].truncated(Kd) - PE.terms[d].truncated(Kd) - f.R.terms[d].truncated(Kd);
    f.residual.push_back(res.max_abs());
  }
  for (auto& e : f.E.terms) e = e.truncated(K - 1);
  for (auto& r : f.R.terms) {
    r = r.truncated(K);
    const MonomialTable& T = r.table();
    for (int i = 0; i < T.size(); ++i)
      if (T.exp(i, nu) != 0 && r.taylor(i) != cplx(0.0)) f.r_xi1_independent = false;
  }
  return f;
}

FactorizationResult factor_symbol(const ClassicalSymbol& Q, const ClassicalSymbol& P, const Point& gamma, int depth,
                                  int K) {
  const int Kin = K + 2 * depth;
  return factor_symbol(jet_symbol(Q, gamma, Kin, depth), jet_symbol(P, gamma, Kin, depth), depth, K);
}

std::vector<TermJet> remainder_terms(const FactorizationResult& f) {
  std::vector<TermJet> out;
  for (int k = 0; k <= f.R.depth(); ++k) out.push_back({k - f.R.top_degree, f.R.terms[k]});
  return out;
}

ProportionalityReport proportionality(const ClassicalSymbol& P, const ClassicalSymbol& Q, const Point& point,
                                      double tol) {
  const int n = P.n;
  if (Q.n != n || point.dim() != n) throw PreconditionError("dimension mismatch");
  const Expr p1 = P.term(0), p0 = P.depth() >= 1 ? P.term(1) : Expr();
  const Expr q1 = Q.term(0), q0 = Q.depth() >= 1 ? Q.term(1) : Expr();
  if (std::abs(evaluate(p1, point)) > tol) throw PreconditionError("point is not characteristic for p");
  const Expr half(Expr::constant(0.5));
  const Expr re = half * (p1 + conjugate(p1));
  const Expr im = Expr::constant({0.0, -0.5}) * (p1 - conjugate(p1));
  ProportionalityReport rep;
  rep.bracket = evaluate(poisson(re, im, n), point).real();
  if (!(rep.bracket > 0)) throw PreconditionError("hypothesis fails: {Re p, Im p} <= 0 at the point");

  double best = -1;
  std::vector<cplx> dp(n);
  for (int k = 0; k < n; ++k) {
    dp[k] = evaluate(differentiate(p1, xivar(k)), point);
    if (std::abs(dp[k]) > best) {
      best = std::abs(dp[k]);
      rep.nu = n + k;
    }
  }
  JetSymbol QJ{Q.top_degree, {jet_of(q1, point, 3)}}, PJ{P.top_degree, {jet_of(p1, point, 3)}};
  FactorizationResult f = factor_symbol(QJ, PJ, 0, 2, rep.nu);
  const Jet& e0 = f.E.terms[0];
  rep.mu = e0.value();

  Point at_zero{point.x, std::vector<double>(n, 0.0)};
  const Expr diff = q1 - Expr::constant(rep.mu) * p1;
  rep.principal_residual = std::abs(evaluate(diff, at_zero));
  for (int k = 0; k < n; ++k)
    rep.principal_residual = std::max(rep.principal_residual, std::abs(evaluate(differentiate(diff, xivar(k)), point)));
  rep.lower_residual = std::abs(evaluate(q0, point) - rep.mu * evaluate(p0, point));
  std::vector<cplx> g(n);
  for (int k = 0; k < n; ++k) {
    std::vector<int> mu(2 * n, 0);
    mu[n + k] = 1;
    g[k] = e0.derivative(mu);
    rep.e0_gradient = std::max(rep.e0_gradient, std::abs(g[k]));
  }
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) rep.gradient_residual = std::max(rep.gradient_residual, std::abs(g[j] * dp[k] + g[k] * dp[j]));
  rep.ok = rep.principal_residual < tol && rep.lower_residual < tol && rep.gradient_residual < tol;
  return rep;
}

std::vector<CommutatorPoint> commutator_test(const Expr& p, const Expr& q, int n, const std::vector<Point>& points,
                                             int m_max) {
  if (m_max < 1) throw PreconditionError("m_max must be at least 1");
  std::vector<Compiled> H;
  Expr h = q;
  for (int m = 1; m <= m_max; ++m) {
    h = poisson(p, h, n);
    H.emplace_back(h);
  }
  bool x_only = true;
  for (int k = 0; k < n; ++k) x_only = x_only && !q.depends_on(xivar(k));
  Compiled transport;
  if (x_only) {
    Expr t;
    for (int k = 0; k < n; ++k)
      t = t + differentiate(p, xivar(k)) * (Expr::constant({0.0, -1.0}) * differentiate(q, xvar(k)));
    transport = Compiled(t);
  }
  Compiled P(p);
  std::vector<CommutatorPoint> out;
  for (const auto& pt : points) {
    if (std::abs(P(pt)) > 1e-8) throw PreconditionError("commutator test point is not characteristic");
    CommutatorPoint c;
    c.pass = true;
    for (const auto& e : H) {
      c.hamilton.push_back(e(pt));
      if (!(std::abs(c.hamilton.back()) < 1e-7)) c.pass = false;
    }
    if (x_only) {
      c.transport = transport(pt);
      if (!(std::abs(*c.transport) < 1e-7)) c.pass = false;
    }
    out.push_back(std::move(c));
  }
  return out;
}

nlohmann::json to_json(const FactorizationResult& f) {
  nlohmann::json j;
  j["depth"] = f.depth;
  j["K"] = f.K;
  j["residual"] = f.residual;
  j["r_xi1_independent"] = f.r_xi1_independent;
  nlohmann::json E = nlohmann::json::array(), R = nlohmann::json::array();
  for (int k = 0; k <= f.E.depth(); ++k) E.push_back({{"degree", f.E.top_degree - k}, {"jet", to_json(f.E.terms[k])}});
  for (int k = 0; k <= f.R.depth(); ++k) R.push_back({{"degree", f.R.top_degree - k}, {"jet", to_json(f.R.terms[k])}});
  j["E"] = E;
  j["R"] = R;
  return j;
}

nlohmann::json to_json(const ProportionalityReport& r) {
  return {{"mu", {r.mu.real(), r.mu.imag()}},
          {"bracket", r.bracket},
          {"principal_residual", r.principal_residual},
          {"lower_residual", r.lower_residual},
          {"gradient_residual", r.gradient_residual},
          {"e0_gradient", r.e0_gradient},
          {"nu", r.nu},
          {"ok", r.ok}};
}

}  // namespace mlw
