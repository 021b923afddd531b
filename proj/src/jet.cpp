// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#include "mlw/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "mlw/error.hpp"

namespace mlw {

// ----------------------------------------------------------- MonomialTable

namespace {

void fill_degree(int vars, int d, int v, std::vector<int>& cur, std::vector<int>& out) {
  if (v == vars - 1) {
    cur[v] = d;
    out.insert(out.end(), cur.begin(), cur.end());
    return;
  }
  for (int e = d; e >= 0; --e) {
    cur[v] = e;
    fill_degree(vars, d - e, v + 1, cur, out);
  }
}

}  // namespace

MonomialTable::MonomialTable(int vars, int K) : vars_(vars), K_(K) {
  std::vector<int> cur(vars, 0);
  start_.push_back(0);
  for (int d = 0; d <= K; ++d) {
    fill_degree(vars, d, 0, cur, exps_);
    start_.push_back(static_cast<int>(exps_.size() / vars));
  }
  const int N = static_cast<int>(exps_.size() / vars);
  deg_.resize(N);
  fact_.resize(N);
  for (int i = 0; i < N; ++i) {
    int d = 0;
    double f = 1.0;
    for (int v = 0; v < vars; ++v) {
      d += exps_[i * vars + v];
      for (int e = 2; e <= exps_[i * vars + v]; ++e) f *= e;
    }
    deg_[i] = d;
    fact_[i] = f;
    rank_.emplace(key(&exps_[i * vars]), i);
  }
  up_.assign(static_cast<std::size_t>(N) * vars, -1);
  down_.assign(static_cast<std::size_t>(N) * vars, -1);
  std::vector<int> mu(vars);
  for (int i = 0; i < N; ++i) {
    for (int v = 0; v < vars; ++v) {
      std::copy(exps(i), exps(i) + vars, mu.begin());
      ++mu[v];
      up_[i * vars + v] = index(mu.data());
      mu[v] -= 2;
      if (mu[v] >= 0) down_[i * vars + v] = index(mu.data());
    }
  }
}

std::uint64_t MonomialTable::key(const int* mu) const {
  std::uint64_t k = 0;
  for (int v = 0; v < vars_; ++v) k = k * static_cast<std::uint64_t>(K_ + 1) + static_cast<std::uint64_t>(mu[v]);
  return k;
}

int MonomialTable::index(const int* mu) const {
  int d = 0;
  for (int v = 0; v < vars_; ++v) {
    if (mu[v] < 0) return -1;
    d += mu[v];
  }
  if (d > K_) return -1;
  auto it = rank_.find(key(mu));
  return it == rank_.end() ? -1 : it->second;
}

const std::vector<MonomialTable::Triple>& MonomialTable::products() const {
  std::call_once(prod_once_, [this] {
    std::vector<int> mu(vars_);
    for (int i = 0; i < size(); ++i) {
      for (int j = 0; j < degree_end(K_ - deg_[i]); ++j) {
        for (int v = 0; v < vars_; ++v) mu[v] = exp(i, v) + exp(j, v);
        prod_.push_back({i, j, index(mu.data())});
      }
    }
  });
  return prod_;
}

const std::vector<std::pair<int, int>>& MonomialTable::by_sum() const {
  std::call_once(sum_once_, [this] {
    const auto& P = products();
    sum_start_.assign(size() + 1, 0);
    for (const auto& t : P) ++sum_start_[t.k + 1];
    for (int k = 0; k < size(); ++k) sum_start_[k + 1] += sum_start_[k];
    sum_pairs_.resize(P.size());
    std::vector<int> fill(sum_start_.begin(), sum_start_.end() - 1);
    for (const auto& t : P) sum_pairs_[fill[t.k]++] = {t.i, t.j};
  });
  return sum_pairs_;
}

const std::vector<int>& MonomialTable::sum_start() const {
  by_sum();
  return sum_start_;
}

std::shared_ptr<const MonomialTable> MonomialTable::get(int vars, int K) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const MonomialTable>> cache;
  if (vars < 1 || K < 0) throw PreconditionError("invalid monomial table shape");
  if (K > 30 || vars > 12) throw PreconditionError("jet table too large");
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{vars, K}];
  if (!slot) slot = std::shared_ptr<const MonomialTable>(new MonomialTable(vars, K));
  return slot;
}

// -------------------------------------------------------------------- Jet

Jet::Jet(Point base, int K) : base_(std::move(base)), K_(K) {
  if (base_.x.size() != base_.xi.size() || base_.x.empty())
    throw PreconditionError("jet base must have matching non-empty x and xi");
  table_ = MonomialTable::get(2 * base_.dim(), K);
  c_.assign(table_->size(), cplx(0.0));
}

Jet Jet::constant(const Point& base, int K, cplx c) {
  Jet j(base, K);
  j.c_[0] = c;
  return j;
}

Jet Jet::variable(const Point& base, int K, int slot) {
  Jet j(base, K);
  int n = base.dim();
  j.c_[0] = slot < n ? base.x[slot] : base.xi[slot - n];
  if (K >= 1) j.c_[1 + slot] = 1.0;  // degree-1 block lists e_0, e_1, ... in order
  return j;
}

cplx Jet::derivative(const std::vector<int>& mu) const {
  int idx = table_->index(mu.data());
  if (idx < 0) throw PreconditionError("multi-index outside jet truncation");
  return derivative_at(idx);
}

void Jet::set_derivative(const std::vector<int>& mu, cplx v) {
  int idx = table_->index(mu.data());
  if (idx < 0) throw PreconditionError("multi-index outside jet truncation");
  c_[idx] = v / table_->factorial(idx);
}

double Jet::max_abs() const { return max_abs_through(K_); }

double Jet::max_abs_through(int degree) const {
  double m = 0.0;
  int end = table_->degree_end(std::min(degree, K_));
  for (int i = 0; i < end; ++i) m = std::max(m, std::abs(derivative_at(i)));
  return m;
}

Jet Jet::truncated(int K) const {
  if (K > K_) throw PreconditionError("cannot truncate a jet to a higher order");
  Jet r(base_, K);
  std::copy(c_.begin(), c_.begin() + r.table_->size(), r.c_.begin());
  return r;
}

Jet Jet::extended(int K) const {
  if (K <= K_) return truncated(K);
  Jet r(base_, K);
  std::copy(c_.begin(), c_.end(), r.c_.begin());
  return r;
}

Jet Jet::diff(int slot) const {
  if (K_ == 0) throw PreconditionError("cannot differentiate an order-0 jet");
  Jet r(base_, K_ - 1);
  for (int i = 0; i < r.table_->size(); ++i) {
    int up = table_->shift_up(i, slot);
    r.c_[i] = c_[up] * static_cast<double>(table_->exp(i, slot) + 1);
  }
  return r;
}

Jet Jet::conj() const {
  Jet r = *this;
  for (auto& v : r.c_) v = std::conj(v);
  return r;
}

Jet Jet::homogeneous_part(int d) const {
  Jet r(base_, K_);
  if (d <= K_)
    for (int i = table_->degree_begin(d); i < table_->degree_end(d); ++i) r.c_[i] = c_[i];
  return r;
}

void Jet::check_compatible(const Jet& o) const {
  if (K_ != o.K_) throw PreconditionError("jet order mismatch");
  if (base_.x != o.base_.x || base_.xi != o.base_.xi) throw PreconditionError("jet base mismatch");
}

Jet& Jet::operator+=(const Jet& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(cplx s) {
  for (auto& v : c_) v *= s;
  return *this;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator-(Jet a) { return a *= -1.0; }
Jet operator*(cplx s, Jet a) { return a *= s; }

Jet operator*(const Jet& a, const Jet& b) {
  a.check_compatible(b);
  Jet r(a.base_, a.K_);
  const auto& tr = a.table_->products();
  for (const auto& t : tr) {
    const cplx x = a.c_[t.i];
    if (x == cplx(0.0)) continue;
    r.c_[t.k] += x * b.c_[t.j];
  }
  return r;
}

Jet jet_add(const Jet& a, const Jet& b) { return a + b; }
Jet jet_mul(const Jet& a, const Jet& b) { return a * b; }

Jet Jet::compose(const std::vector<cplx>& dF) const {
  Jet delta = *this;
  delta.c_[0] = 0.0;
  Jet r = Jet::constant(base_, K_, dF.at(0));
  Jet term = delta;
  double fact = 1.0;
  for (int k = 1; k <= K_; ++k) {
    fact *= k;
    const cplx w = dF.at(k) / fact;
    if (w != cplx(0.0))
      for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] += w * term.c_[i];
    if (k < K_) term = term * delta;
  }
  return r;
}

Jet Jet::reciprocal() const {
  const cplx a = c_[0];
  if (a == cplx(0.0)) throw DomainError("reciprocal of a jet vanishing at its base");
  std::vector<cplx> d(K_ + 1);
  cplx p = 1.0 / a;
  double f = 1.0;
  for (int k = 0; k <= K_; ++k) {
    d[k] = (k % 2 ? -f : f) * p;
    p /= a;
    f *= (k + 1);
  }
  return compose(d);
}

Jet Jet::power(int k) const {
  if (k < 0) return reciprocal().power(-k);
  Jet r = Jet::constant(base_, K_, 1.0);
  Jet b = *this;
  unsigned u = static_cast<unsigned>(k);
  while (u) {
    if (u & 1u) r = r * b;
    u >>= 1;
    if (u) b = b * b;
  }
  return r;
}

Jet Jet::exp() const {
  std::vector<cplx> d(K_ + 1, std::exp(c_[0]));
  return compose(d);
}

// ----------------------------------------------------------------- jet_of

namespace {

struct JetEval {
  const Point& base;
  int K;
  std::unordered_map<const Node*, Jet> memo;

  Jet sqrt_of(const Jet& s) {
    const cplx a = s.value();
    if (std::abs(a) == 0.0) throw DomainError("normXiPrime jetted at xi' = 0");
    std::vector<cplx> d(K + 1);
    // d^k/da^k a^{1/2} = (1/2)(1/2 - 1)...(1/2 - k + 1) a^{1/2 - k}
    cplx coef = 1.0;
    for (int k = 0; k <= K; ++k) {
      d[k] = coef * std::pow(a, 0.5 - k);
      coef *= (0.5 - k);
    }
    return s.compose(d);
  }

  Jet go(const Expr& e) {
    switch (e.op()) {
      case Op::Const:
        return Jet::constant(base, K, e.value());
      case Op::Var:
        if (e.var().index >= base.dim()) throw DomainError("variable index exceeds jet dimension");
        return Jet::variable(base, K, slot_of(e.var(), base.dim()));
      default:
        break;
    }
    auto it = memo.find(e.get());
    if (it != memo.end()) return it->second;
    Jet r;
    switch (e.op()) {
      case Op::NormXiPrime: {
        Jet s(base, K);
        for (int j = 1; j < base.dim(); ++j) {
          Jet v = Jet::variable(base, K, base.dim() + j);
          s += v * v;
        }
        r = sqrt_of(s);
        break;
      }
      case Op::Neg: r = -go(e.arg(0)); break;
      case Op::Add: r = go(e.arg(0)) + go(e.arg(1)); break;
      case Op::Sub: r = go(e.arg(0)) - go(e.arg(1)); break;
      case Op::Mul: r = go(e.arg(0)) * go(e.arg(1)); break;
      case Op::Div: {
        Jet b = go(e.arg(1));
        if (b.value() == cplx(0.0)) throw DomainError("division by zero in jet evaluation");
        r = go(e.arg(0)) * b.reciprocal();
        break;
      }
      case Op::Pow: {
        Jet a = go(e.arg(0));
        if (e.exponent() < 0 && a.value() == cplx(0.0)) throw DomainError("negative power of zero");
        r = a.power(e.exponent());
        break;
      }
      case Op::Exp: r = go(e.arg(0)).exp(); break;
      case Op::Flat: {
        Jet a = go(e.arg(0));
        long double t = a.value().real();
        std::vector<cplx> d(K + 1);
        for (int k = 0; k <= K; ++k)
          d[k] = static_cast<double>(flat_value(e.flat_power(), e.flat_order() + k, t));
        r = a.compose(d);
        break;
      }
      default:
        break;
    }
    memo.emplace(e.get(), r);
    return r;
  }
};

}  // namespace

Jet jet_of(const Expr& e, const Point& base, int K) {
  JetEval ev{base, K, {}};
  return ev.go(e);
}

// --------------------------------------------------------------- division

DivisionResult divide_by_factor(const Jet& q, const Jet& p, int nu) {
  if (q.order() != p.order() || q.base().x != p.base().x || q.base().xi != p.base().xi)
    throw PreconditionError("division operands must share base and order");
  const int K = q.order();
  if (K < 1) throw PreconditionError("division needs jets of order >= 1");
  const MonomialTable& T = q.table();
  if (nu < 0 || nu >= T.vars()) throw PreconditionError("division slot out of range");
  if (std::abs(p.value()) > kDivisionTol) throw PreconditionError("divisor does not vanish at the base point");
  const int e_nu = T.shift_up(0, nu);
  const cplx pnu = p.taylor(e_nu);
  if (std::abs(pnu) < kDivisionTol) throw PreconditionError("divisor is not transversal to the division slot");

  Jet g(q.base(), K - 1);
  std::vector<char> known(T.size(), 0);

  // Sum over nonzero kappa <= mu of p_kappa g_{mu-kappa}, skipping the slots
  // where g is unknown.
  const auto& pairs = T.by_sum();
  const auto& start = T.sum_start();
  auto convolve = [&](int mu, int skip_kappa) {
    cplx s = 0.0;
    for (int q = start[mu]; q < start[mu + 1]; ++q) {
      const auto [kap, rest] = pairs[q];
      if (kap == 0 || kap == skip_kappa || T.degree(rest) > K - 1 || !known[rest]) continue;
      const cplx pk = p.taylor(kap);
      if (pk != cplx(0.0)) s += pk * g.taylor(rest);
    }
    return s;
  };

  for (int d = 0; d <= K - 1; ++d) {
    std::vector<int> lam;
    for (int i = T.degree_begin(d); i < T.degree_end(d); ++i) lam.push_back(i);
    std::stable_sort(lam.begin(), lam.end(), [&](int a, int b) { return T.exp(a, nu) > T.exp(b, nu); });
    for (int l : lam) {
      const int mu = T.shift_up(l, nu);
      g.taylor(l) = (q.taylor(mu) - convolve(mu, e_nu)) / pnu;
      known[l] = 1;
    }
  }

  Jet r(q.base(), K);
  double res = 0.0;
  for (int mu = 0; mu < T.size(); ++mu) {
    if (T.exp(mu, nu) != 0) continue;
    r.taylor(mu) = q.taylor(mu) - convolve(mu, -1);
    res = std::max(res, std::abs(r.derivative_at(mu)));
  }
  return {std::move(g), std::move(r), res};
}

// ------------------------------------------------------------ Homogenized

Homogenized::Homogenized(Jet g, int m) : g_(std::move(g)), m_(m) {
  double nrm = 0.0;
  for (double v : g_.base().xi) nrm += v * v;
  if (std::fabs(std::sqrt(nrm) - 1.0) > 1e-12) throw PreconditionError("homogenize needs a unit covector base");
  if (g_.order() >= 1)
    for (int s = 0; s < g_.slots(); ++s) grad_.push_back(g_.diff(s));
}

cplx Homogenized::poly(const Jet& j, const std::vector<double>& z) const {
  const MonomialTable& T = j.table();
  cplx s = 0.0;
  for (int i = 0; i < T.size(); ++i) {
    if (j.taylor(i) == cplx(0.0)) continue;
    double m = 1.0;
    for (int v = 0; v < T.vars(); ++v)
      for (int e = 0; e < T.exp(i, v); ++e) m *= z[v];
    s += j.taylor(i) * m;
  }
  return s;
}

cplx Homogenized::operator()(const Point& p) const {
  const int n = g_.n();
  double r = 0.0;
  for (double v : p.xi) r += v * v;
  r = std::sqrt(r);
  if (r == 0.0) throw DomainError("homogeneous extension evaluated at xi = 0");
  std::vector<double> z(2 * n);
  for (int k = 0; k < n; ++k) {
    z[k] = p.x[k] - g_.base().x[k];
    z[n + k] = p.xi[k] / r - g_.base().xi[k];
  }
  return std::pow(r, m_) * poly(g_, z);
}

std::vector<cplx> Homogenized::gradient(const Point& p) const {
  const int n = g_.n();
  double r = 0.0;
  for (double v : p.xi) r += v * v;
  r = std::sqrt(r);
  if (r == 0.0) throw DomainError("homogeneous extension evaluated at xi = 0");
  std::vector<double> z(2 * n), w(n);
  for (int k = 0; k < n; ++k) {
    w[k] = p.xi[k] / r;
    z[k] = p.x[k] - g_.base().x[k];
    z[n + k] = w[k] - g_.base().xi[k];
  }
  const cplx G = poly(g_, z);
  std::vector<cplx> dG(2 * n, 0.0);
  if (!grad_.empty())
    for (int s = 0; s < 2 * n; ++s) dG[s] = poly(grad_[s], z);
  const double rm = std::pow(r, m_);
  std::vector<cplx> out(2 * n);
  for (int k = 0; k < n; ++k) out[k] = rm * dG[k];
  cplx proj = 0.0;
  for (int l = 0; l < n; ++l) proj += dG[n + l] * w[l];
  for (int k = 0; k < n; ++k)
    out[n + k] = static_cast<double>(m_) * std::pow(r, m_ - 1) * w[k] * G + rm * (dG[n + k] - proj * w[k]) / r;
  return out;
}

// --------------------------------------------------------------- ordering

int OrderedIndex::total() const {
  int t = j + k;
  for (int a : alpha) t += a;
  for (int b : beta) t += b;
  return t;
}

namespace {

int sum(const std::vector<int>& v) {
  int s = 0;
  for (int x : v) s += x;
  return s;
}

int lex(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    int x = i < a.size() ? a[i] : 0, y = i < b.size() ? b[i] : 0;
    if (x != y) return x > y ? 1 : -1;
  }
  return 0;
}

Ordering from(int c) { return c < 0 ? Ordering::less : (c > 0 ? Ordering::greater : Ordering::equal); }

}  // namespace

Ordering compare_indices(const OrderedIndex& a, const OrderedIndex& b) {
  const int ta = a.total(), tb = b.total();
  if (ta != tb) return from(ta < tb ? -1 : 1);
  const int ba = sum(a.beta), bb = sum(b.beta);
  if (ba != bb) return from(ba > bb ? -1 : 1);  // reversed
  if (int c = lex(a.beta, b.beta)) return from(c);
  std::vector<int> ka{a.k}, kb{b.k};
  ka.insert(ka.end(), a.alpha.begin(), a.alpha.end());
  kb.insert(kb.end(), b.alpha.begin(), b.alpha.end());
  const int sa = sum(ka), sb = sum(kb);
  if (sa != sb) return from(sa > sb ? -1 : 1);  // reversed
  if (int c = lex(ka, kb)) return from(c);
  return from(a.j == b.j ? 0 : (a.j < b.j ? -1 : 1));
}

std::optional<FirstCoefficient> first_nonvanishing(const std::vector<TermJet>& terms, double tol, int* kappa) {
  if (terms.empty()) throw PreconditionError("no symbol terms to scan");
  std::vector<const TermJet*> sorted;
  for (const auto& t : terms) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->j < b->j; });
  const int n = sorted.front()->jet.n();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i]->j != -1 + static_cast<int>(i))
      throw PreconditionError("inconsistent truncation depths: terms must be q_1, q_0, q_-1, ... without gaps");
    if (sorted[i]->jet.n() != n) throw PreconditionError("inconsistent truncation depths: dimension mismatch");
  }
  // Largest T such that every total order <= T is covered.
  int T = -2;
  for (int cand = -1;; ++cand) {
    bool ok = true;
    for (int j = -1; j <= cand && ok; ++j) {
      if (j + 1 >= static_cast<int>(sorted.size()) || sorted[j + 1]->jet.order() < cand - j) ok = false;
    }
    if (!ok) break;
    T = cand;
  }
  if (T < -1) throw PreconditionError("inconsistent truncation depths: nothing covered");
  if (kappa) *kappa = T + 1;

  std::optional<FirstCoefficient> best;
  for (const TermJet* t : sorted) {
    const MonomialTable& M = t->jet.table();
    for (int i = 0; i < M.size(); ++i) {
      if (t->j + M.degree(i) > T) break;
      if (M.exp(i, n) != 0) continue;  // xi_1
      const cplx v = t->jet.derivative_at(i);
      if (std::abs(v) <= tol) continue;
      OrderedIndex idx;
      idx.j = t->j;
      idx.k = M.exp(i, 0);
      for (int s = 1; s < n; ++s) idx.alpha.push_back(M.exp(i, s));
      for (int s = 1; s < n; ++s) idx.beta.push_back(M.exp(i, n + s));
      if (!best || compare_indices(idx, best->index) == Ordering::less) best = FirstCoefficient{idx, v};
    }
  }
  return best;
}

// ------------------------------------------------------------------- JSON

nlohmann::json to_json(const Jet& j) {
  nlohmann::json out;
  out["base"] = {{"x", j.base().x}, {"xi", j.base().xi}};
  out["order"] = j.order();
  nlohmann::json cs = nlohmann::json::array();
  const MonomialTable& T = j.table();
  const int n = j.n();
  for (int i = 0; i < T.size(); ++i) {
    std::vector<int> a(T.exps(i), T.exps(i) + n), b(T.exps(i) + n, T.exps(i) + 2 * n);
    const cplx v = j.derivative_at(i);
    cs.push_back({{"alpha", a}, {"beta", b}, {"re", v.real()}, {"im", v.imag()}});
  }
  out["coeffs"] = std::move(cs);
  return out;
}

Jet jet_from_json(const nlohmann::json& js) {
  try {
    Point base{js.at("base").at("x").get<std::vector<double>>(), js.at("base").at("xi").get<std::vector<double>>()};
    Jet j(base, js.at("order").get<int>());
    for (const auto& c : js.at("coeffs")) {
      std::vector<int> mu = c.at("alpha").get<std::vector<int>>();
      auto b = c.at("beta").get<std::vector<int>>();
      mu.insert(mu.end(), b.begin(), b.end());
      if (static_cast<int>(mu.size()) != j.slots()) throw SchemaError("jet coefficient index has wrong length");
      j.set_derivative(mu, {c.at("re").get<double>(), c.at("im").get<double>()});
    }
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed jet: ") + e.what());
  }
}

}  // namespace mlw
