// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Classical symbols as lists of homogeneous terms, and the symbol calculus
// with D = -i d.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mlw/symexpr.hpp"

namespace mlw {

struct HomogeneousTerm {
  int degree = 0;
  Expr expr;
  int n = 1;
};

// Terms p_m, p_{m-1}, ..., p_{m-D}.  When `truncated` is false the listed
// terms are the whole symbol and every lower term is zero; otherwise only
// depth D is known and asking for more is an error.
struct ClassicalSymbol {
  int top_degree = 0;
  int n = 1;
  std::vector<HomogeneousTerm> terms;
  bool truncated = false;

  int depth() const { return static_cast<int>(terms.size()) - 1; }
  // p_{m-k}; zero beyond the list for exact symbols.
  Expr term(int k) const;
  static ClassicalSymbol from_terms(int top_degree, int n, std::vector<Expr> exprs, bool truncated = false);
};

// max |<xi, d_xi a> - m a| / (1 + |a|) over samples with |xi| in [0.5, 2]
// and |x_i| <= 3.  Throws DomainError on a non-finite sample.
double check_homogeneity(const HomogeneousTerm& term, int samples, std::uint64_t seed = 1);

// Sum over alpha of d_xi^alpha a D_x^alpha b / alpha!, regrouped by degree,
// terms of degree m_a + m_b - d for d = 0..depth.  Results are marked
// truncated at the requested depth.
ClassicalSymbol compose_symbols(const ClassicalSymbol& a, const ClassicalSymbol& b, int depth);

// Sum over alpha of d_xi^alpha D_x^alpha conj(r) / alpha!.  With
// `xi1_independent` the sum runs over alpha with alpha_1 = 0 only.
ClassicalSymbol adjoint_symbol(const ClassicalSymbol& r, int depth, bool xi1_independent = false);

// {a, b} = sum_j d_xi_j a d_x_j b - d_x_j a d_xi_j b.
Expr poisson(const Expr& a, const Expr& b, int n);

// H_p^m(q), with H_p q = {p, q}.
Expr iterated_hamilton(const Expr& p, const Expr& q, int m, int n);

// Hamilton field (d_xi p, -d_x p) and the radial field (0, xi) span a
// two-dimensional space (smallest Gram eigenvalue > 1e-8).
bool is_principal_type(const HomogeneousTerm& p, const Point& point);

// Named fixtures in dimension n.  `f_template` is the imaginary part used by
// the "template" entry (xi1 + i f).
std::map<std::string, ClassicalSymbol> fixtures(int n = 2, const std::string& f_template = "x1*normXiPrime");
ClassicalSymbol fixture(const std::string& name, int n = 2, const std::string& f_template = "x1*normXiPrime");

// Expression text of the shared profile f(t) that vanishes on [0, 2].
std::string profile_f(const std::string& t);

}  // namespace mlw
