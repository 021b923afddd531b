// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Jet-level factorization Q = P o E + R with R independent of xi1, the
// xi1-normalization of lower-order terms, proportionality of first-order
// operators, and the commutator criteria.
#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "mlw/jet.hpp"
#include "mlw/symbol.hpp"

namespace mlw {

// Jets of p_m, p_{m-1}, ... at one base point.  Orders may decrease with
// the term index.
struct JetSymbol {
  int top_degree = 0;
  std::vector<Jet> terms;
  int depth() const { return static_cast<int>(terms.size()) - 1; }
};

JetSymbol jet_symbol(const ClassicalSymbol& s, const Point& base, int K, int depth);

// Jet-level a#b to `depth`; the order of each output term is the largest
// order available from its inputs.
JetSymbol compose_jets(const JetSymbol& a, const JetSymbol& b, int depth);

// Slot of xi1 in jet numbering.
inline int xi1_slot(int n) { return n; }

struct TermDivision {
  Jet e;  // order K - 1
  Jet r;  // order K, zero on every coefficient with a xi1 power
};

// q = p e + r along xi1.  Requires p(base) = 0 and d_xi1 p(base) = 1.
TermDivision malgrange_divide_term(const Jet& q, const Jet& p);

// Jet symbol of (I - a)P, a of order -1, whose lower-order terms carry no
// xi1 dependence.  Throws PreconditionError unless p - xi1 is free of xi1
// at the base.
JetSymbol normalize_lower_order(const JetSymbol& P);
JetSymbol normalize_lower_order(const ClassicalSymbol& P, const Point& gamma, int depth, int K);

struct FactorizationResult {
  JetSymbol E;  // e_{m'-m}, e_{m'-m-1}, ...
  JetSymbol R;  // r_{m'}, r_{m'-1}, ... with the xi1-independent flag
  bool r_xi1_independent = true;
  std::vector<double> residual;  // per degree, max |sigma_Q - sigma_{PoE} - sigma_R| coefficient
  int depth = 0;
  int K = 0;
  int nu = 0;
};

// Degree-by-degree division.  Input jets need order K + 2 depth so that the
// returned R terms have order K (E terms K - 1).
FactorizationResult factor_symbol(const JetSymbol& Q, const JetSymbol& P, int depth, int K, int nu = -1);
FactorizationResult factor_symbol(const ClassicalSymbol& Q, const ClassicalSymbol& P, const Point& gamma, int depth,
                                  int K);

// Terms of R as input for first_nonvanishing (q_1 -> j = -1, q_0 -> j = 0, ...).
std::vector<TermJet> remainder_terms(const FactorizationResult& f);

struct ProportionalityReport {
  cplx mu;
  double bracket = 0;              // {Re p1, Im p1} at the point
  double principal_residual = 0;   // max over xi-coefficients of q1 - mu p1 at x0
  double lower_residual = 0;       // |q0(x0) - mu p0(x0)|
  double gradient_residual = 0;    // max_jk |d_j e0 d_k p1 + d_k e0 d_j p1|
  double e0_gradient = 0;          // max_k |d_xi_k e0|
  int nu = 0;
  bool ok = false;
};

// P and Q first-order differential symbols (terms p1, p0).  Throws
// PreconditionError when p1(point) != 0 or {Re p1, Im p1}(point) <= 0.
ProportionalityReport proportionality(const ClassicalSymbol& P, const ClassicalSymbol& Q, const Point& point,
                                      double tol = 1e-8);

struct CommutatorPoint {
  std::vector<cplx> hamilton;  // H_p^m(q), m = 1..m_max
  std::optional<cplx> transport;  // sum_j d_xi_j p D_x_j mu when q = mu(x)
  bool pass = false;
};

// H_p^m(q) at characteristic points; when q depends on x only, also the
// transport identity.  Pass iff every value is below 1e-7.
std::vector<CommutatorPoint> commutator_test(const Expr& p, const Expr& q, int n, const std::vector<Point>& points,
                                             int m_max);

nlohmann::json to_json(const FactorizationResult& f);
nlohmann::json to_json(const ProportionalityReport& r);

}  // namespace mlw
