// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Phase-space expressions: parsing, printing, exact differentiation and
// evaluation.  Variables are x1..xn and xi1..xin; `i` is the imaginary unit.
#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace mlw {

using cplx = std::complex<double>;
using cplxl = std::complex<long double>;

// 0-based variable handle; fiber == true selects xi.
struct VarId {
  bool fiber = false;
  int index = 0;
  bool operator==(const VarId&) const = default;
};

inline VarId xvar(int i) { return {false, i}; }
inline VarId xivar(int i) { return {true, i}; }

// Slot numbering used by jets: x_i -> i, xi_i -> n + i.
inline int slot_of(VarId v, int n) { return v.fiber ? n + v.index : v.index; }
inline VarId var_of_slot(int s, int n) { return s < n ? xvar(s) : xivar(s - n); }

struct Point {
  std::vector<double> x;
  std::vector<double> xi;
  int dim() const { return static_cast<int>(x.size()); }
};

enum class Op : std::uint8_t {
  Const,
  Var,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Exp,
  Flat,
  NormXiPrime,
};

struct Node;

class Expr {
 public:
  Expr();  // the constant 0
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Expr constant(cplx c);
  static Expr variable(VarId v);
  static Expr x(int i) { return variable(xvar(i)); }
  static Expr xi(int i) { return variable(xivar(i)); }
  static Expr norm_xi_prime();
  static Expr imag_unit() { return constant({0.0, 1.0}); }

  Op op() const;
  cplx value() const;     // Const
  VarId var() const;      // Var
  int exponent() const;   // Pow
  int flat_power() const; // Flat: 2 for e^{-1/t^2}, 1 for e^{-1/t}
  int flat_order() const; // Flat: derivative order
  Expr arg(int k = 0) const;

  bool is_const() const { return op() == Op::Const; }
  bool is_zero() const;
  bool is_one() const;
  bool equals(const Expr& o) const;
  const Node* get() const { return node_.get(); }
  std::size_t node_count() const;
  bool depends_on(VarId v) const;
  int max_index() const;  // largest 0-based variable index used, -1 if none

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  Op op;
  cplx value{};
  VarId var{};
  int ival = 0;  // exponent, or derivative order for Flat
  int pval = 0;  // Flat power
  Expr a, b;
};

// Smart constructors perform constant folding and 0/1 elimination only.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, int k);
Expr exp(const Expr& a);
Expr flat(int power, int order, const Expr& a);
inline Expr operator*(cplx c, const Expr& a) { return Expr::constant(c) * a; }
inline Expr operator+(const Expr& a, cplx c) { return a + Expr::constant(c); }
inline Expr operator-(const Expr& a, cplx c) { return a - Expr::constant(c); }

// Grammar in docs/grammar.md.  Throws ParseError with the byte offset.
Expr parse_expression(std::string_view src, int n);

// Canonical text; parse_expression(to_string(e), n) reproduces e.
std::string to_string(const Expr& e);

Expr differentiate(const Expr& e, VarId v);
Expr differentiate(const Expr& e, VarId v, int times);

// Complex conjugate, treating every variable as real.
Expr conjugate(const Expr& e);

// Replace variable v by the expression r.
Expr substitute(const Expr& e, VarId v, const Expr& r);

// Flat building blocks.  flat_poly(p, k) lists the coefficients c_j of
// P_k(s) with d^k/dt^k e^{-1/t^p} = P_k(1/t) e^{-1/t^p} for t > 0.
const std::vector<long double>& flat_poly(int power, int order);
long double flat_value(int power, int order, long double t);

// Straight-line program over the distinct nodes of an expression.  Shared
// subtrees are evaluated once.
class Compiled {
 public:
  Compiled() = default;
  explicit Compiled(const Expr& e);

  template <class T>
  std::complex<T> eval(const T* x, const T* xi, int n) const;

  cplx operator()(const Point& p) const;
  cplxl eval_long(const Point& p) const;
  bool empty() const { return code_.empty(); }

 private:
  struct Instr {
    Op op;
    int a = -1, b = -1;
    int ival = 0, pval = 0;
    VarId var{};
    cplx value{};
  };
  std::vector<Instr> code_;
};

cplx evaluate(const Expr& e, const Point& p);
cplxl evaluate_long(const Expr& e, const Point& p);

}  // namespace mlw
