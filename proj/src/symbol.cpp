// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#include "mlw/symbol.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "mlw/error.hpp"

namespace mlw {

namespace {

// All alpha in N^n with |alpha| = s, restricted to alpha_i = 0 for i < first.
void for_each_multi(int n, int s, int first, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> a(n, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1) {
      if (i < first && left > 0) return;
      a[i] = left;
      fn(a);
      a[i] = 0;
      return;
    }
    const int top = i < first ? 0 : left;
    for (int k = top; k >= 0; --k) {
      a[i] = k;
      rec(i + 1, left - k);
    }
    a[i] = 0;
  };
  if (n == 0) {
    if (s == 0) fn(a);
    return;
  }
  rec(0, s);
}

double multi_factorial(const std::vector<int>& a) {
  double f = 1;
  for (int k : a)
    for (int j = 2; j <= k; ++j) f *= j;
  return f;
}

Expr d_xi(Expr e, const std::vector<int>& alpha) {
  for (std::size_t k = 0; k < alpha.size(); ++k)
    if (alpha[k]) e = differentiate(e, xivar(static_cast<int>(k)), alpha[k]);
  return e;
}

// D_x^alpha = (-i)^{|alpha|} d_x^alpha.
Expr D_x(Expr e, const std::vector<int>& alpha) {
  int s = 0;
  for (std::size_t k = 0; k < alpha.size(); ++k)
    if (alpha[k]) {
      e = differentiate(e, xvar(static_cast<int>(k)), alpha[k]);
      s += alpha[k];
    }
  static const cplx powers[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  return powers[s % 4] * e;
}

}  // namespace

Expr ClassicalSymbol::term(int k) const {
  if (k < 0) throw PreconditionError("negative term index");
  if (k < static_cast<int>(terms.size())) return terms[k].expr;
  if (truncated) throw PreconditionError("requested depth exceeds available terms");
  return Expr();
}

ClassicalSymbol ClassicalSymbol::from_terms(int top_degree, int n, std::vector<Expr> exprs, bool truncated) {
  ClassicalSymbol s;
  s.top_degree = top_degree;
  s.n = n;
  s.truncated = truncated;
  for (std::size_t k = 0; k < exprs.size(); ++k)
    s.terms.push_back({top_degree - static_cast<int>(k), std::move(exprs[k]), n});
  return s;
}

double check_homogeneity(const HomogeneousTerm& term, int samples, std::uint64_t seed) {
  const int n = term.n;
  Compiled f(term.expr);
  std::vector<Compiled> g;
  for (int k = 0; k < n; ++k) g.emplace_back(differentiate(term.expr, xivar(k)));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-3, 3), ur(0.5, 2);
  std::normal_distribution<double> nd;
  double worst = 0;
  for (int s = 0; s < samples; ++s) {
    Point p{std::vector<double>(n), std::vector<double>(n)};
    for (auto& v : p.x) v = ux(rng);
    double nrm = 0;
    for (auto& v : p.xi) {
      v = nd(rng);
      nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    const double r = ur(rng);
    for (auto& v : p.xi) v *= r / nrm;
    const cplx a = f(p);
    cplx euler = 0;
    for (int k = 0; k < n; ++k) euler += p.xi[k] * g[k](p);
    const cplx res = euler - static_cast<double>(term.degree) * a;
    if (!std::isfinite(std::abs(res))) throw DomainError("singular sample in homogeneity check");
    worst = std::max(worst, std::abs(res) / (1 + std::abs(a)));
  }
  return worst;
}

ClassicalSymbol compose_symbols(const ClassicalSymbol& a, const ClassicalSymbol& b, int depth) {
  if (a.n != b.n) throw PreconditionError("symbols of different dimension");
  if (depth < 0) throw PreconditionError("negative depth");
  const int n = a.n;
  std::vector<Expr> out;
  for (int d = 0; d <= depth; ++d) {
    Expr acc;
    for (int s = 0; s <= d; ++s) {
      for (int i = 0; i + s <= d; ++i) {
        const int j = d - s - i;
        const Expr ai = a.term(i), bj = b.term(j);
        if (ai.is_zero() || bj.is_zero()) continue;
        for_each_multi(n, s, 0, [&](const std::vector<int>& al) {
          Expr t = d_xi(ai, al) * D_x(bj, al);
          if (!t.is_zero()) acc = acc + cplx(1.0 / multi_factorial(al)) * t;
        });
      }
    }
    out.push_back(acc);
  }
  return ClassicalSymbol::from_terms(a.top_degree + b.top_degree, n, std::move(out), true);
}

ClassicalSymbol adjoint_symbol(const ClassicalSymbol& r, int depth, bool xi1_independent) {
  if (depth < 0) throw PreconditionError("negative depth");
  const int n = r.n;
  std::vector<Expr> out;
  for (int d = 0; d <= depth; ++d) {
    Expr acc;
    for (int s = 0; s <= d; ++s) {
      const Expr rj = r.term(d - s);
      if (rj.is_zero()) continue;
      const Expr c = conjugate(rj);
      for_each_multi(n, s, xi1_independent ? 1 : 0, [&](const std::vector<int>& al) {
        Expr t = d_xi(D_x(c, al), al);
        if (!t.is_zero()) acc = acc + cplx(1.0 / multi_factorial(al)) * t;
      });
    }
    out.push_back(acc);
  }
  return ClassicalSymbol::from_terms(r.top_degree, n, std::move(out), true);
}

Expr poisson(const Expr& a, const Expr& b, int n) {
  Expr acc;
  for (int j = 0; j < n; ++j) {
    acc = acc + differentiate(a, xivar(j)) * differentiate(b, xvar(j));
    acc = acc - differentiate(a, xvar(j)) * differentiate(b, xivar(j));
  }
  return acc;
}

Expr iterated_hamilton(const Expr& p, const Expr& q, int m, int n) {
  if (m < 1) throw PreconditionError("iteration count must be at least 1");
  Expr h = q;
  for (int k = 0; k < m; ++k) h = poisson(p, h, n);
  return h;
}

bool is_principal_type(const HomogeneousTerm& p, const Point& point) {
  const int n = p.n;
  double xin = 0;
  for (double v : point.xi) xin += v * v;
  if (xin == 0) throw PreconditionError("xi = 0 is not a point of the cotangent bundle minus the zero section");
  if (std::abs(evaluate(p.expr, point)) > 1e-8) throw PreconditionError("point is not characteristic");
  std::vector<cplx> u(2 * n), v(2 * n, 0.0);
  for (int k = 0; k < n; ++k) {
    u[k] = evaluate(differentiate(p.expr, xivar(k)), point);
    u[n + k] = -evaluate(differentiate(p.expr, xvar(k)), point);
    v[n + k] = point.xi[k];
  }
  double g11 = 0, g22 = 0;
  cplx g12 = 0;
  for (int k = 0; k < 2 * n; ++k) {
    g11 += std::norm(u[k]);
    g22 += std::norm(v[k]);
    g12 += std::conj(u[k]) * v[k];
  }
  const double tr = g11 + g22, disc = std::sqrt((g11 - g22) * (g11 - g22) + 4 * std::norm(g12));
  return 0.5 * (tr - disc) > 1e-8;
}

std::string profile_f(const std::string& t) {
  return "(-flatExp(-(" + t + ")) + flatExp((" + t + ") - 2))";
}

std::map<std::string, ClassicalSymbol> fixtures(int n, const std::string& f_template) {
  if (n < 2) throw PreconditionError("fixtures need n >= 2");
  std::map<std::string, ClassicalSymbol> out;
  auto one = [](int n_, const std::string& src) {
    return ClassicalSymbol::from_terms(1, n_, {parse_expression(src, n_)});
  };
  // -i times the symbol of d1 + i d2 - 2i(x1 + i x2) d3
  out["lewy"] = one(3, "xi1 + 2*x2*xi3 + i*(xi2 - 2*x1*xi3)");
  out["model2d"] = one(2, "xi1 + i*x1*xi2");
  out["p1"] = one(n, "xi1 + i*normXiPrime*(" + profile_f("x1") + " + x2*cutoff(x1, 0, 2))");
  out["p2"] = one(n, "xi1 + i*normXiPrime*(" + profile_f("x1") + "*flatExp1(x2) + " + profile_f("x1 - 1") +
                         "*flatExp1(-x2))");
  out["template"] = one(n, "xi1 + i*(" + f_template + ")");
  return out;
}

ClassicalSymbol fixture(const std::string& name, int n, const std::string& f_template) {
  auto all = fixtures(n, f_template);
  auto it = all.find(name);
  if (it == all.end()) throw PreconditionError("unknown fixture: " + name);
  return it->second;
}

}  // namespace mlw
