// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Truncated Taylor expansions ("jets") of phase-space functions at a base
// point, formal division by a transversal factor, and the total order on
// Taylor indices used to locate the first nonvanishing coefficient.
#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mlw/symexpr.hpp"

namespace mlw {

// All multi-indices in `vars` variables with total degree <= K, stored in
// graded order (degree ascending, lexicographically descending within a
// degree, so x1^d comes first).
class MonomialTable {
 public:
  static std::shared_ptr<const MonomialTable> get(int vars, int K);

  int vars() const { return vars_; }
  int order() const { return K_; }
  int size() const { return static_cast<int>(deg_.size()); }
  const int* exps(int idx) const { return &exps_[static_cast<std::size_t>(idx) * vars_]; }
  int exp(int idx, int v) const { return exps_[static_cast<std::size_t>(idx) * vars_ + v]; }
  int degree(int idx) const { return deg_[idx]; }
  int degree_begin(int d) const { return start_[d]; }
  int degree_end(int d) const { return start_[d + 1]; }
  int index(const int* mu) const;  // -1 when |mu| > K
  int shift_up(int idx, int v) const { return up_[static_cast<std::size_t>(idx) * vars_ + v]; }
  int shift_down(int idx, int v) const { return down_[static_cast<std::size_t>(idx) * vars_ + v]; }
  double factorial(int idx) const { return fact_[idx]; }

  // Triples (i, j, i+j) with deg(i) + deg(j) <= K, grouped by i.
  struct Triple {
    int i, j, k;
  };
  const std::vector<Triple>& products() const;
  // The same triples bucketed by k: pairs (i, j) with i + j = k are
  // by_sum()[sum_start()[k] .. sum_start()[k + 1]).
  const std::vector<std::pair<int, int>>& by_sum() const;
  const std::vector<int>& sum_start() const;

 private:
  MonomialTable(int vars, int K);
  std::uint64_t key(const int* mu) const;

  int vars_, K_;
  std::vector<int> exps_, deg_, start_, up_, down_;
  std::vector<double> fact_;
  std::unordered_map<std::uint64_t, int> rank_;
  mutable std::vector<Triple> prod_;
  mutable std::once_flag prod_once_;
  mutable std::vector<std::pair<int, int>> sum_pairs_;
  mutable std::vector<int> sum_start_;
  mutable std::once_flag sum_once_;
};

// Jet over 2n slots (x_1..x_n, xi_1..xi_n).  Stored coefficients are Taylor
// coefficients c_mu of z^mu; derivative values are c_mu * mu!.
class Jet {
 public:
  Jet() = default;
  Jet(Point base, int K);

  static Jet constant(const Point& base, int K, cplx c);
  static Jet variable(const Point& base, int K, int slot);

  const Point& base() const { return base_; }
  int order() const { return K_; }
  int n() const { return base_.dim(); }
  int slots() const { return 2 * n(); }
  const MonomialTable& table() const { return *table_; }
  std::shared_ptr<const MonomialTable> table_ptr() const { return table_; }

  cplx value() const { return c_.empty() ? cplx(0.0) : c_[0]; }
  cplx taylor(int idx) const { return c_[idx]; }
  cplx& taylor(int idx) { return c_[idx]; }
  cplx derivative(const std::vector<int>& mu) const;  // d^mu f at base
  cplx derivative_at(int idx) const { return c_[idx] * table_->factorial(idx); }
  void set_derivative(const std::vector<int>& mu, cplx v);
  const std::vector<cplx>& coeffs() const { return c_; }
  std::vector<cplx>& coeffs() { return c_; }
  double max_abs() const;
  double max_abs_through(int degree) const;

  Jet truncated(int K) const;
  Jet extended(int K) const;     // pad with zeros
  Jet diff(int slot) const;      // order K-1
  Jet conj() const;              // coefficientwise conjugate (real variables)
  Jet reciprocal() const;
  Jet power(int k) const;
  Jet exp() const;
  // F(f) where dF[k] = F^{(k)}(f(base)) for k = 0..K.
  Jet compose(const std::vector<cplx>& dF) const;
  // Homogeneous part of degree d (other coefficients zero).
  Jet homogeneous_part(int d) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(cplx s);

 private:
  void check_compatible(const Jet& o) const;
  friend Jet operator*(const Jet& a, const Jet& b);

  Point base_;
  int K_ = 0;
  std::shared_ptr<const MonomialTable> table_;
  std::vector<cplx> c_;
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator-(Jet a);
Jet operator*(const Jet& a, const Jet& b);
Jet operator*(cplx s, Jet a);

Jet jet_add(const Jet& a, const Jet& b);
Jet jet_mul(const Jet& a, const Jet& b);

// Taylor-mode evaluation of the expression over the jet algebra.
Jet jet_of(const Expr& e, const Point& base, int K);

struct DivisionResult {
  Jet quotient;   // order K-1
  Jet remainder;  // order K, no dependence on the division slot
  double residual = 0.0;  // max |remainder| coefficient (derivative convention)
};

constexpr double kDivisionTol = 1e-10;

// Formal division q = p*g + r along the coordinate slot nu, with r
// independent of that slot.  Unknown quotient coefficients are resolved in
// order of total degree and, within a degree, by decreasing count of nu.
DivisionResult divide_by_factor(const Jet& q, const Jet& p, int nu);

// Degree-m homogeneous extension |xi|^m g(x, xi/|xi|) of a jet based at a
// unit covector, with value and gradient (x slots then xi slots).
class Homogenized {
 public:
  Homogenized(Jet g, int m);
  cplx operator()(const Point& p) const;
  std::vector<cplx> gradient(const Point& p) const;
  int degree() const { return m_; }

 private:
  cplx poly(const Jet& j, const std::vector<double>& z) const;
  Jet g_;
  std::vector<Jet> grad_;
  int m_;
};

struct OrderedIndex {
  int j = -1;
  int k = 0;
  std::vector<int> alpha;  // base variables x'
  std::vector<int> beta;   // fiber variables xi'
  int total() const;
  bool operator==(const OrderedIndex&) const = default;
};

enum class Ordering { less = -1, equal = 0, greater = 1 };

Ordering compare_indices(const OrderedIndex& a, const OrderedIndex& b);

// One homogeneous term q_{-j} of a symbol, jetted at the point of interest.
struct TermJet {
  int j;
  Jet jet;
};

struct FirstCoefficient {
  OrderedIndex index;
  cplx value;
};

// Smallest index under the order whose derivative value exceeds tol in
// modulus.  Only coefficients with no xi_1 dependence are considered.
// `kappa` receives the covered depth (indices with total < kappa).
std::optional<FirstCoefficient> first_nonvanishing(const std::vector<TermJet>& terms, double tol,
                                                   int* kappa = nullptr);

nlohmann::json to_json(const Jet& j);
Jet jet_from_json(const nlohmann::json& j);

}  // namespace mlw
