// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#include "mlw/symexpr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <unordered_map>

#include "mlw/error.hpp"

namespace mlw {

namespace {

std::shared_ptr<const Node> make(Op op, Expr a = Expr(), Expr b = Expr()) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

const Expr& zero_expr() {
  static const Expr z = [] {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = 0.0;
    return Expr(n);
  }();
  return z;
}

bool is_real_const(const Expr& e) { return e.is_const() && e.value().imag() == 0.0; }

}  // namespace

Expr::Expr() : node_(nullptr) {}

Op Expr::op() const { return node_ ? node_->op : Op::Const; }
cplx Expr::value() const { return node_ ? node_->value : cplx(0.0); }
VarId Expr::var() const { return node_->var; }
int Expr::exponent() const { return node_->ival; }
int Expr::flat_power() const { return node_->pval; }
int Expr::flat_order() const { return node_->ival; }
Expr Expr::arg(int k) const { return k == 0 ? node_->a : node_->b; }

bool Expr::is_zero() const { return is_const() && value() == cplx(0.0); }
bool Expr::is_one() const { return is_const() && value() == cplx(1.0); }

Expr Expr::constant(cplx c) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = c;
  return Expr(n);
}

Expr Expr::variable(VarId v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = v;
  return Expr(n);
}

Expr Expr::norm_xi_prime() { return Expr(make(Op::NormXiPrime)); }

bool Expr::equals(const Expr& o) const {
  if (node_ == o.node_) return true;
  if (op() != o.op()) return false;
  switch (op()) {
    case Op::Const:
      return value() == o.value();
    case Op::Var:
      return var() == o.var();
    case Op::NormXiPrime:
      return true;
    case Op::Pow:
      return exponent() == o.exponent() && arg(0).equals(o.arg(0));
    case Op::Flat:
      return flat_power() == o.flat_power() && flat_order() == o.flat_order() &&
             arg(0).equals(o.arg(0));
    case Op::Neg:
    case Op::Exp:
      return arg(0).equals(o.arg(0));
    default:
      return arg(0).equals(o.arg(0)) && arg(1).equals(o.arg(1));
  }
}

std::size_t Expr::node_count() const {
  switch (op()) {
    case Op::Const:
    case Op::Var:
    case Op::NormXiPrime:
      return 1;
    case Op::Neg:
    case Op::Exp:
    case Op::Pow:
    case Op::Flat:
      return 1 + arg(0).node_count();
    default:
      return 1 + arg(0).node_count() + arg(1).node_count();
  }
}

bool Expr::depends_on(VarId v) const {
  switch (op()) {
    case Op::Const:
      return false;
    case Op::Var:
      return var() == v;
    case Op::NormXiPrime:
      return v.fiber && v.index >= 1;
    case Op::Neg:
    case Op::Exp:
    case Op::Pow:
    case Op::Flat:
      return arg(0).depends_on(v);
    default:
      return arg(0).depends_on(v) || arg(1).depends_on(v);
  }
}

int Expr::max_index() const {
  switch (op()) {
    case Op::Const:
    case Op::NormXiPrime:
      return -1;
    case Op::Var:
      return var().index;
    case Op::Neg:
    case Op::Exp:
    case Op::Pow:
    case Op::Flat:
      return arg(0).max_index();
    default:
      return std::max(arg(0).max_index(), arg(1).max_index());
  }
}

// ---------------------------------------------------------------- builders

Expr operator-(const Expr& a) {
  if (a.is_const()) return Expr::constant(-a.value());
  if (a.op() == Op::Neg) return a.arg(0);
  return Expr(make(Op::Neg, a));
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return Expr::constant(a.value() + b.value());
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (b.op() == Op::Neg) return a - b.arg(0);
  if (is_real_const(b) && b.value().real() < 0) return a - Expr::constant(-b.value());
  return Expr(make(Op::Add, a, b));
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return Expr::constant(a.value() - b.value());
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  if (a.equals(b)) return zero_expr();
  if (b.op() == Op::Neg) return a + b.arg(0);
  if (is_real_const(b) && b.value().real() < 0) return a + Expr::constant(-b.value());
  return Expr(make(Op::Sub, a, b));
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return Expr::constant(a.value() * b.value());
  if (a.is_zero() || b.is_zero()) return zero_expr();
  if (b.is_const()) return b * a;
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  if (a.is_const()) {
    if (a.value() == cplx(-1.0)) return -b;
    if (b.op() == Op::Mul && b.arg(0).is_const()) return (a.value() * b.arg(0).value()) * b.arg(1);
    if (b.op() == Op::Neg) return Expr::constant(-a.value()) * b.arg(0);
  }
  return Expr(make(Op::Mul, a, b));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_zero()) return zero_expr();
  if (b.is_one()) return a;
  if (a.is_const() && b.is_const() && b.value() != cplx(0.0))
    return Expr::constant(a.value() / b.value());
  return Expr(make(Op::Div, a, b));
}

Expr pow(const Expr& a, int k) {
  if (k == 0) return Expr::constant(1.0);
  if (k == 1) return a;
  if (a.is_const() && (k > 0 || a.value() != cplx(0.0))) return Expr::constant(std::pow(a.value(), k));
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->a = a;
  n->ival = k;
  return Expr(n);
}

Expr exp(const Expr& a) {
  if (a.is_const()) return Expr::constant(std::exp(a.value()));
  return Expr(make(Op::Exp, a));
}

Expr flat(int power, int order, const Expr& a) {
  if (power != 1 && power != 2) throw PreconditionError("flat power must be 1 or 2");
  if (a.is_const()) return Expr::constant(static_cast<double>(flat_value(power, order, a.value().real())));
  auto n = std::make_shared<Node>();
  n->op = Op::Flat;
  n->a = a;
  n->ival = order;
  n->pval = power;
  return Expr(n);
}

// ------------------------------------------------------------ flat blocks

namespace {

constexpr int kFlatMaxOrder = 64;

std::vector<std::vector<long double>> build_flat_table(int p) {
  std::vector<std::vector<long double>> t(kFlatMaxOrder + 1);
  t[0] = {1.0L};
  for (int k = 0; k < kFlatMaxOrder; ++k) {
    const auto& P = t[k];
    std::vector<long double> Q(P.size() + p + 1, 0.0L);
    for (std::size_t j = 0; j < P.size(); ++j) {
      if (P[j] == 0.0L) continue;
      // -s^2 d/ds (c s^j) = -j c s^{j+1}
      if (j > 0) Q[j + 1] -= static_cast<long double>(j) * P[j];
      Q[j + p + 1] += static_cast<long double>(p) * P[j];
    }
    while (!Q.empty() && Q.back() == 0.0L) Q.pop_back();
    t[k + 1] = std::move(Q);
  }
  return t;
}

}  // namespace

const std::vector<long double>& flat_poly(int power, int order) {
  static const auto t1 = build_flat_table(1);
  static const auto t2 = build_flat_table(2);
  if (order < 0 || order > kFlatMaxOrder) throw PreconditionError("flat derivative order out of range");
  return power == 1 ? t1[order] : t2[order];
}

long double flat_value(int power, int order, long double t) {
  if (!(t > 0.0L)) return 0.0L;
  const auto& P = flat_poly(power, order);
  const long double s = 1.0L / t;
  const long double ls = std::log(s);
  const long double sp = power == 2 ? s * s : s;
  long double sum = 0.0L;
  for (std::size_t j = 0; j < P.size(); ++j) {
    if (P[j] == 0.0L) continue;
    const long double mag = std::exp(static_cast<long double>(j) * ls - sp + std::log(std::fabs(P[j])));
    sum += P[j] > 0 ? mag : -mag;
  }
  return sum;
}

// ---------------------------------------------------------------- parser

namespace {

class Parser {
 public:
  Parser(std::string_view s, int n) : s_(s), n_(n) {}

  Expr parse() {
    skip();
    if (pos_ >= s_.size()) throw ParseError(pos_, "empty expression");
    Expr e = expr();
    skip();
    if (pos_ < s_.size()) throw ParseError(pos_, std::string("unexpected '") + s_[pos_] + "'");
    return e;
  }

 private:
  std::string_view s_;
  int n_;
  std::size_t pos_ = 0;

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    skip();
    if (pos_ >= s_.size()) throw ParseError(pos_, std::string("expected '") + c + "' but input ended");
    if (s_[pos_] != c) throw ParseError(pos_, std::string("expected '") + c + "'");
    ++pos_;
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+'))
        e = e + term();
      else if (accept('-'))
        e = e - term();
      else
        return e;
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (accept('*'))
        e = e * unary();
      else if (accept('/'))
        e = e / unary();
      else
        return e;
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (!accept('^')) return base;
    skip();
    bool paren = accept('(');
    bool neg = accept('-');
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) {
      if (pos_ >= s_.size()) throw ParseError(pos_, "expected integer exponent but input ended");
      throw ParseError(pos_, "exponent must be an integer literal");
    }
    if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
      throw ParseError(pos_, "exponent must be an integer literal");
    long k = std::strtol(std::string(s_.substr(start, pos_ - start)).c_str(), nullptr, 10);
    if (k > 1000) throw ParseError(start, "exponent too large");
    if (paren) expect(')');
    skip();
    if (pos_ < s_.size() && s_[pos_] == '^') throw ParseError(pos_, "chained exponents need parentheses");
    return pow(base, static_cast<int>(neg ? -k : k));
  }

  Expr number() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      std::size_t ds = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (ds == pos_) pos_ = save;
    }
    std::string text(s_.substr(start, pos_ - start));
    if (text == ".") throw ParseError(start, "malformed number");
    return Expr::constant(std::strtod(text.c_str(), nullptr));
  }

  std::vector<Expr> args() {
    std::vector<Expr> out;
    expect('(');
    if (accept(')')) return out;
    for (;;) {
      out.push_back(expr());
      if (accept(',') || accept(';')) continue;
      expect(')');
      return out;
    }
  }

  Expr call(const std::string& name, std::size_t at) {
    std::vector<Expr> a = args();
    auto need = [&](std::size_t k) {
      if (a.size() != k)
        throw ParseError(at, name + " expects " + std::to_string(k) + " argument(s)");
    };
    if (name == "exp") {
      need(1);
      return exp(a[0]);
    }
    if (name == "cutoff") {
      need(3);
      return flat(2, 0, a[0] - a[1]) * flat(2, 0, a[2] - a[0]);
    }
    if (name == "bump") {
      need(1);
      return flat(2, 0, a[0] + Expr::constant(1.0)) * flat(2, 0, Expr::constant(1.0) - a[0]);
    }
    // flatExp, flatExp1, flatExp_k, flatExp1_k
    std::string rest = name.substr(7);
    int power = 2;
    if (!rest.empty() && rest[0] == '1') {
      power = 1;
      rest = rest.substr(1);
    }
    int order = 0;
    if (!rest.empty()) {
      if (rest[0] != '_' || rest.size() < 2) throw ParseError(at, "unknown function '" + name + "'");
      for (std::size_t k = 1; k < rest.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(rest[k])))
          throw ParseError(at, "unknown function '" + name + "'");
      order = std::atoi(rest.c_str() + 1);
      if (order > kFlatMaxOrder) throw ParseError(at, "derivative order too large");
    }
    need(1);
    return flat(power, order, a[0]);
  }

  Expr variable(const std::string& name, std::size_t at) {
    bool fiber = name.rfind("xi", 0) == 0;
    std::string digits = name.substr(fiber ? 2 : 1);
    if (digits.empty() || digits[0] == '0') throw ParseError(at, "unknown identifier '" + name + "'");
    for (char c : digits)
      if (!std::isdigit(static_cast<unsigned char>(c))) throw ParseError(at, "unknown identifier '" + name + "'");
    if (digits.size() > 4) throw ParseError(at, "index out of range in '" + name + "'");
    int k = std::atoi(digits.c_str());
    if (k > n_) throw ParseError(at, "index out of range in '" + name + "' for dimension " + std::to_string(n_));
    return Expr::variable({fiber, k - 1});
  }

  Expr primary() {
    skip();
    if (pos_ >= s_.size()) throw ParseError(pos_, "unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t at = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string name(s_.substr(at, pos_ - at));
      if (name == "i") return Expr::imag_unit();
      if (name == "pi") return Expr::constant(M_PI);
      if (name == "normXiPrime") return Expr::norm_xi_prime();
      if (name == "exp" || name == "cutoff" || name == "bump" || name.rfind("flatExp", 0) == 0)
        return call(name, at);
      if (name[0] == 'x') return variable(name, at);
      throw ParseError(at, "unknown identifier '" + name + "'");
    }
    throw ParseError(pos_, std::string("unexpected '") + c + "'");
  }
};

}  // namespace

Expr parse_expression(std::string_view src, int n) {
  if (n < 1) throw PreconditionError("dimension must be at least 1");
  return Parser(src, n).parse();
}

// --------------------------------------------------------------- printer

namespace {

std::string num(double v) {
  char buf[40];
  if (v == std::floor(v) && std::fabs(v) < 1e15)
    std::snprintf(buf, sizeof buf, "%.0f", v);
  else
    std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int prec(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    case Op::Const:
      return (e.value().imag() == 0.0 && std::signbit(e.value().real())) ? 3 : 5;
    default:
      return 5;
  }
}

void print(const Expr& e, std::string& out);

void print_child(const Expr& e, int min_prec, std::string& out) {
  if (prec(e) < min_prec) {
    out += '(';
    print(e, out);
    out += ')';
  } else {
    print(e, out);
  }
}

void print(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::Const: {
      cplx c = e.value();
      if (c.imag() == 0.0) {
        out += num(c.real());
      } else if (c.real() == 0.0) {
        if (c.imag() == 1.0)
          out += "i";
        else if (c.imag() == -1.0)
          out += "(-i)";
        else
          out += "(" + num(c.imag()) + "*i)";
      } else {
        out += "(" + num(c.real()) + (c.imag() < 0 ? " - " : " + ") + num(std::fabs(c.imag())) + "*i)";
      }
      return;
    }
    case Op::Var:
      out += (e.var().fiber ? "xi" : "x") + std::to_string(e.var().index + 1);
      return;
    case Op::NormXiPrime:
      out += "normXiPrime";
      return;
    case Op::Neg:
      out += '-';
      print_child(e.arg(0), 3, out);
      return;
    case Op::Add:
    case Op::Sub:
      print_child(e.arg(0), 1, out);
      out += e.op() == Op::Add ? " + " : " - ";
      print_child(e.arg(1), 2, out);
      return;
    case Op::Mul:
    case Op::Div:
      print_child(e.arg(0), 2, out);
      out += e.op() == Op::Mul ? "*" : "/";
      print_child(e.arg(1), 3, out);
      return;
    case Op::Pow:
      print_child(e.arg(0), 5, out);
      out += '^';
      out += e.exponent() < 0 ? "(" + std::to_string(e.exponent()) + ")" : std::to_string(e.exponent());
      return;
    case Op::Exp:
      out += "exp(";
      print(e.arg(0), out);
      out += ')';
      return;
    case Op::Flat:
      out += e.flat_power() == 2 ? "flatExp" : "flatExp1";
      if (e.flat_order() > 0) out += "_" + std::to_string(e.flat_order());
      out += '(';
      print(e.arg(0), out);
      out += ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

// --------------------------------------------------------- differentiate

namespace {

struct Differ {
  VarId v;
  std::unordered_map<const Node*, Expr> memo;

  Expr d(const Expr& e) {
    if (e.op() == Op::Const) return Expr();
    if (e.op() == Op::Var) return e.var() == v ? Expr::constant(1.0) : Expr();
    auto it = memo.find(e.get());
    if (it != memo.end()) return it->second;
    Expr r;
    switch (e.op()) {
      case Op::NormXiPrime:
        r = (v.fiber && v.index >= 1) ? Expr::xi(v.index) / e : Expr();
        break;
      case Op::Neg:
        r = -d(e.arg(0));
        break;
      case Op::Add:
        r = d(e.arg(0)) + d(e.arg(1));
        break;
      case Op::Sub:
        r = d(e.arg(0)) - d(e.arg(1));
        break;
      case Op::Mul: {
        Expr da = d(e.arg(0)), db = d(e.arg(1));
        r = da * e.arg(1) + e.arg(0) * db;
        break;
      }
      case Op::Div: {
        Expr da = d(e.arg(0)), db = d(e.arg(1));
        r = da / e.arg(1) - (e.arg(0) * db) / pow(e.arg(1), 2);
        break;
      }
      case Op::Pow: {
        Expr da = d(e.arg(0));
        int k = e.exponent();
        r = da.is_zero() ? Expr() : (Expr::constant(static_cast<double>(k)) * pow(e.arg(0), k - 1)) * da;
        break;
      }
      case Op::Exp: {
        Expr da = d(e.arg(0));
        r = da.is_zero() ? Expr() : e * da;
        break;
      }
      case Op::Flat: {
        Expr da = d(e.arg(0));
        r = da.is_zero() ? Expr() : flat(e.flat_power(), e.flat_order() + 1, e.arg(0)) * da;
        break;
      }
      default:
        break;
    }
    memo.emplace(e.get(), r);
    return r;
  }
};

template <class F>
Expr rebuild(const Expr& e, F&& leaf, std::unordered_map<const Node*, Expr>& memo) {
  switch (e.op()) {
    case Op::Const:
    case Op::Var:
    case Op::NormXiPrime:
      return leaf(e);
    default:
      break;
  }
  auto it = memo.find(e.get());
  if (it != memo.end()) return it->second;
  Expr a = rebuild(e.arg(0), leaf, memo);
  Expr r;
  switch (e.op()) {
    case Op::Neg: r = -a; break;
    case Op::Exp: r = exp(a); break;
    case Op::Pow: r = pow(a, e.exponent()); break;
    case Op::Flat: r = flat(e.flat_power(), e.flat_order(), a); break;
    default: {
      Expr b = rebuild(e.arg(1), leaf, memo);
      switch (e.op()) {
        case Op::Add: r = a + b; break;
        case Op::Sub: r = a - b; break;
        case Op::Mul: r = a * b; break;
        case Op::Div: r = a / b; break;
        default: break;
      }
    }
  }
  memo.emplace(e.get(), r);
  return r;
}

}  // namespace

Expr differentiate(const Expr& e, VarId v) {
  Differ d{v, {}};
  return d.d(e);
}

Expr differentiate(const Expr& e, VarId v, int times) {
  Expr r = e;
  for (int k = 0; k < times; ++k) r = differentiate(r, v);
  return r;
}

Expr conjugate(const Expr& e) {
  std::unordered_map<const Node*, Expr> memo;
  return rebuild(
      e, [](const Expr& l) { return l.is_const() ? Expr::constant(std::conj(l.value())) : l; }, memo);
}

Expr substitute(const Expr& e, VarId v, const Expr& r) {
  if (v.fiber && v.index >= 1) {
    // normXiPrime hides its fiber variables; expand it only when needed.
    std::function<bool(const Expr&)> has_norm = [&](const Expr& x) -> bool {
      switch (x.op()) {
        case Op::NormXiPrime: return true;
        case Op::Const:
        case Op::Var: return false;
        case Op::Neg:
        case Op::Exp:
        case Op::Pow:
        case Op::Flat: return has_norm(x.arg(0));
        default: return has_norm(x.arg(0)) || has_norm(x.arg(1));
      }
    };
    if (has_norm(e)) throw PreconditionError("cannot substitute a fiber variable inside normXiPrime");
  }
  std::unordered_map<const Node*, Expr> memo;
  return rebuild(
      e, [&](const Expr& l) { return (l.op() == Op::Var && l.var() == v) ? r : l; }, memo);
}

// -------------------------------------------------------------- evaluate

Compiled::Compiled(const Expr& e) {
  std::unordered_map<const Node*, int> slot;
  std::function<int(const Expr&)> emit = [&](const Expr& x) -> int {
    if (x.get()) {
      auto it = slot.find(x.get());
      if (it != slot.end()) return it->second;
    }
    Instr ins;
    ins.op = x.op();
    switch (x.op()) {
      case Op::Const: ins.value = x.value(); break;
      case Op::Var: ins.var = x.var(); break;
      case Op::NormXiPrime: break;
      case Op::Neg:
      case Op::Exp: ins.a = emit(x.arg(0)); break;
      case Op::Pow:
        ins.a = emit(x.arg(0));
        ins.ival = x.exponent();
        break;
      case Op::Flat:
        ins.a = emit(x.arg(0));
        ins.ival = x.flat_order();
        ins.pval = x.flat_power();
        break;
      default:
        ins.a = emit(x.arg(0));
        ins.b = emit(x.arg(1));
        break;
    }
    code_.push_back(ins);
    int id = static_cast<int>(code_.size()) - 1;
    if (x.get()) slot.emplace(x.get(), id);
    return id;
  };
  emit(e);
}

template <class T>
std::complex<T> Compiled::eval(const T* x, const T* xi, int n) const {
  using C = std::complex<T>;
  std::vector<C> r(code_.size());
  for (std::size_t k = 0; k < code_.size(); ++k) {
    const Instr& s = code_[k];
    switch (s.op) {
      case Op::Const:
        r[k] = C(static_cast<T>(s.value.real()), static_cast<T>(s.value.imag()));
        break;
      case Op::Var:
        if (s.var.index >= n) throw DomainError("variable index exceeds point dimension");
        r[k] = C(s.var.fiber ? xi[s.var.index] : x[s.var.index]);
        break;
      case Op::NormXiPrime: {
        T acc = 0;
        for (int j = 1; j < n; ++j) acc += xi[j] * xi[j];
        if (acc == T(0)) throw DomainError("normXiPrime evaluated at xi' = 0");
        r[k] = C(std::sqrt(acc));
        break;
      }
      case Op::Neg: r[k] = -r[s.a]; break;
      case Op::Add: r[k] = r[s.a] + r[s.b]; break;
      case Op::Sub: r[k] = r[s.a] - r[s.b]; break;
      case Op::Mul: r[k] = r[s.a] * r[s.b]; break;
      case Op::Div:
        if (r[s.b] == C(0)) throw DomainError("division by zero");
        r[k] = r[s.a] / r[s.b];
        break;
      case Op::Pow: {
        C base = r[s.a];
        int e = s.ival;
        if (e < 0 && base == C(0)) throw DomainError("negative power of zero");
        C acc(1), b = base;
        unsigned u = static_cast<unsigned>(e < 0 ? -e : e);
        while (u) {
          if (u & 1u) acc *= b;
          b *= b;
          u >>= 1;
        }
        r[k] = e < 0 ? C(1) / acc : acc;
        break;
      }
      case Op::Exp: r[k] = std::exp(r[s.a]); break;
      case Op::Flat:
        r[k] = C(static_cast<T>(flat_value(s.pval, s.ival, static_cast<long double>(r[s.a].real()))));
        break;
    }
  }
  return r.back();
}

template std::complex<double> Compiled::eval<double>(const double*, const double*, int) const;
template std::complex<long double> Compiled::eval<long double>(const long double*, const long double*, int) const;

cplx Compiled::operator()(const Point& p) const { return eval<double>(p.x.data(), p.xi.data(), p.dim()); }

cplxl Compiled::eval_long(const Point& p) const {
  std::vector<long double> x(p.x.begin(), p.x.end()), xi(p.xi.begin(), p.xi.end());
  return eval<long double>(x.data(), xi.data(), p.dim());
}

cplx evaluate(const Expr& e, const Point& p) { return Compiled(e)(p); }
cplxl evaluate_long(const Expr& e, const Point& p) { return Compiled(e).eval_long(p); }

}  // namespace mlw
