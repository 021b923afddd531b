// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#include "mlw/wkb.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mlw/error.hpp"

namespace mlw {

namespace {

using Poly = std::vector<cplx>;

Poly poly_mul(const Poly& a, const Poly& b, const MonomialTable& T) {
  Poly out(T.size(), 0.0);
  for (const auto& tr : T.products()) {
    const cplx u = a[tr.i];
    if (u == 0.0) continue;
    out[tr.k] += u * b[tr.j];
  }
  return out;
}

void poly_axpy(Poly& y, cplx s, const Poly& x) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += s * x[k];
}

// G(t, y + z, (0, eta) + (0, zeta(z))) as a polynomial in z, truncated at
// the table order.  G is jetted at (t, y; 0, eta) over 2n slots; slots t and
// xi_1 are held fixed.
Poly compose(const Jet& G, const std::vector<Poly>& zeta, const MonomialTable& T) {
  const int n = G.n(), d = n - 1, K = T.order();
  const MonomialTable& GT = G.table();
  std::vector<std::vector<Poly>> pw(d);
  auto power = [&](int k, int p) -> const Poly& {
    auto& v = pw[k];
    if (v.empty()) {
      Poly one(T.size(), 0.0);
      one[0] = 1;
      v.push_back(one);
    }
    while (static_cast<int>(v.size()) <= p) v.push_back(poly_mul(v.back(), zeta[k], T));
    return v[p];
  };
  Poly out(T.size(), 0.0);
  std::vector<int> gamma(d);
  for (int idx = 0; idx < GT.size(); ++idx) {
    const cplx c = G.taylor(idx);
    if (c == 0.0 || GT.degree(idx) > K) continue;
    const int* e = GT.exps(idx);
    if (e[0] != 0 || e[n] != 0) continue;
    for (int k = 0; k < d; ++k) gamma[k] = e[1 + k];
    const int gi = T.index(gamma.data());
    if (gi < 0) continue;
    Poly term(T.size(), 0.0);
    term[gi] = c;
    for (int k = 0; k < d; ++k)
      if (e[n + 1 + k]) term = poly_mul(term, power(k, e[n + 1 + k]), T);
    poly_axpy(out, 1.0, term);
  }
  return out;
}

Point base_point(int n, double t, const double* y, const double* eta) {
  Point p{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  p.x[0] = t;
  for (int k = 0; k < n - 1; ++k) {
    p.x[1 + k] = y[k];
    p.xi[1 + k] = eta[k];
  }
  return p;
}

// W coefficient (full order-M table) for the exponent vector mu; 0 when
// |mu| < 2 or |mu| > M.
cplx w_coeff(const PhaseExpansion& ph, const std::vector<double>& s, const int* mu) {
  const int i = ph.table->index(mu);
  if (i < 0 || ph.table->degree(i) < 2) return 0.0;
  const int o = ph.w_offset(i);
  return {s[o], s[o + 1]};
}

// zeta_k(z) = dw/dx'_k - eta_k as polynomials over T (order <= M - 1).
std::vector<Poly> zeta_polys(const PhaseExpansion& ph, const std::vector<double>& s, const MonomialTable& T) {
  const int d = ph.d;
  std::vector<Poly> zeta(d, Poly(T.size(), 0.0));
  std::vector<int> mu(d);
  for (int idx = 0; idx < T.size(); ++idx) {
    const int deg = T.degree(idx);
    if (deg < 1 || deg > ph.M - 1) continue;
    for (int k = 0; k < d; ++k) {
      std::copy(T.exps(idx), T.exps(idx) + d, mu.begin());
      ++mu[k];
      zeta[k][idx] = w_coeff(ph, s, mu.data()) / T.factorial(idx);
    }
  }
  return zeta;
}

double min_pd_eig(const PhaseExpansion& ph, const std::vector<double>& s) {
  const int d = ph.d;
  Eigen::MatrixXd A(d, d);
  std::vector<int> mu(d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      std::fill(mu.begin(), mu.end(), 0);
      ++mu[j];
      ++mu[k];
      A(j, k) = w_coeff(ph, s, mu.data()).imag() - (j == k ? 0.5 : 0.0);
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

OdeSolution merge(OdeSolution lower, const OdeSolution& upper) {
  std::reverse(lower.t.begin(), lower.t.end());
  std::reverse(lower.y.begin(), lower.y.end());
  std::reverse(lower.dy.begin(), lower.dy.end());
  for (std::size_t i = 1; i < upper.t.size(); ++i) {
    lower.t.push_back(upper.t[i]);
    lower.y.push_back(upper.y[i]);
    lower.dy.push_back(upper.dy[i]);
  }
  lower.rejected += upper.rejected;
  lower.stopped = lower.stopped || upper.stopped;
  return lower;
}

// Integrates both ways from t0; a zero-length side contributes the single
// initial node.
OdeSolution two_sided(const OdeRhs& rhs, const std::vector<double>& y0, double t0, double t_a, double t_b,
                      const OdeOptions& opt, const OdeHook& hook) {
  auto side = [&](double t1) {
    if (t1 == t0) {
      OdeSolution s;
      s.t = {t0};
      s.y = {y0};
      std::vector<double> dy(y0.size());
      rhs(t0, y0, dy);
      s.dy = {dy};
      return s;
    }
    return integrate_dopri(rhs, y0, t0, t1, opt, hook);
  };
  return merge(side(t_a), side(t_b));
}

void check_normal_form(const Expr& f, int n) {
  if (f.max_index() >= n) throw PreconditionError("f uses variables beyond dimension n");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int s = 0; s < 8; ++s) {
    Point p{std::vector<double>(n), std::vector<double>(n)};
    for (auto& v : p.x) v = u(rng);
    for (auto& v : p.xi) v = u(rng);
    p.xi[n - 1] += 2;
    const Jet j = jet_of(f, p, 1);
    if (std::abs(j.derivative_at(1 + n)) > 1e-12)
      throw PreconditionError("f depends on xi_1; the phase system needs the normal form");
    if (std::abs(j.value().imag()) > 1e-12 * (1 + std::abs(j.value())))
      throw PreconditionError("f must be real valued");
  }
}

}  // namespace

int PhaseExpansion::state_size() const { return 2 * d + 2 * (table->size() - table->degree_begin(2)) + 2; }
int PhaseExpansion::w_offset(int idx) const { return 2 * d + 2 * (idx - table->degree_begin(2)); }
int PhaseExpansion::w0_offset() const { return state_size() - 2; }

std::vector<double> PhaseExpansion::state(double t) const { return sol.at(t); }

std::vector<double> PhaseExpansion::rhs(double t, const std::vector<double>& s) const {
  const MonomialTable& T = *table;
  const double* y = s.data();
  const double* eta = s.data() + d;
  const Jet F = jet_of(f, base_point(n, t, y, eta), M);
  const Poly ft = compose(F, zeta_polys(*this, s, T), T);
  Eigen::VectorXd fx(d), fxi(d);
  Eigen::MatrixXd ReW(d, d), ImW(d, d);
  std::vector<int> mu(d);
  for (int j = 0; j < d; ++j) {
    fx(j) = F.derivative_at(1 + 1 + j).real();
    fxi(j) = F.derivative_at(1 + n + 1 + j).real();
    for (int k = 0; k < d; ++k) {
      std::fill(mu.begin(), mu.end(), 0);
      ++mu[j];
      ++mu[k];
      const cplx w = w_coeff(*this, s, mu.data());
      ReW(j, k) = w.real();
      ImW(j, k) = w.imag();
    }
  }
  const Eigen::VectorXd yp = ImW.ldlt().solve(-(fx + ReW * fxi));
  if (!yp.allFinite()) throw NumericalError("Im W is singular at t = " + std::to_string(t));
  const Eigen::VectorXd etap = ReW * yp - ImW * fxi;
  std::vector<double> out(s.size(), 0.0);
  for (int k = 0; k < d; ++k) {
    out[k] = yp(k);
    out[d + k] = etap(k);
  }
  for (int idx = T.degree_begin(2); idx < T.size(); ++idx) {
    cplx v = cplx(0, 1) * T.factorial(idx) * ft[idx];
    if (T.degree(idx) < M)
      for (int k = 0; k < d; ++k) {
        const int up = T.shift_up(idx, k);
        const int o = w_offset(up);
        v += cplx(s[o], s[o + 1]) * yp(k);
      }
    const int o = w_offset(idx);
    out[o] = v.real();
    out[o + 1] = v.imag();
  }
  double ye = 0;
  for (int k = 0; k < d; ++k) ye += yp(k) * eta[k];
  const double fv = F.value().real();
  out[w0_offset()] = ye;
  out[w0_offset() + 1] = fv;
  return out;
}

std::vector<double> PhaseExpansion::y(double t) const {
  const auto s = state(t);
  return {s.begin(), s.begin() + d};
}

std::vector<double> PhaseExpansion::eta(double t) const {
  const auto s = state(t);
  return {s.begin() + d, s.begin() + 2 * d};
}

cplx PhaseExpansion::w0(double t) const {
  const auto s = state(t);
  return cplx(s[w0_offset()], s[w0_offset() + 1]) - w0_shift;
}

cplx PhaseExpansion::coeff(double t, int idx) const {
  if (table->degree(idx) < 2) throw PreconditionError("W is indexed by |mu| >= 2");
  const auto s = state(t);
  return {s[w_offset(idx)], s[w_offset(idx) + 1]};
}

Eigen::MatrixXcd PhaseExpansion::hessian(double t) const {
  const auto s = state(t);
  Eigen::MatrixXcd H(d, d);
  std::vector<int> mu(d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      std::fill(mu.begin(), mu.end(), 0);
      ++mu[j];
      ++mu[k];
      H(j, k) = w_coeff(*this, s, mu.data());
    }
  return H;
}

cplx PhaseExpansion::w(double t, const double* xp) const {
  const auto s = state(t);
  const MonomialTable& T = *table;
  std::vector<double> z(d);
  cplx acc = cplx(s[w0_offset()], s[w0_offset() + 1]) - w0_shift;
  for (int k = 0; k < d; ++k) {
    z[k] = xp[k] - s[k];
    acc += z[k] * s[d + k];
  }
  for (int idx = T.degree_begin(2); idx < T.size(); ++idx) {
    double m = 1;
    for (int k = 0; k < d; ++k) m *= std::pow(z[k], T.exp(idx, k));
    acc += cplx(s[w_offset(idx)], s[w_offset(idx) + 1]) * (m / T.factorial(idx));
  }
  return acc;
}

std::vector<cplx> PhaseExpansion::grad_x(double t, const double* xp) const {
  const auto s = state(t);
  const MonomialTable& T = *table;
  const auto zeta = zeta_polys(*this, s, T);
  std::vector<cplx> g(d);
  for (int k = 0; k < d; ++k) {
    cplx acc = s[d + k];
    for (int idx = 1; idx < T.size(); ++idx) {
      if (zeta[k][idx] == 0.0) continue;
      double m = 1;
      for (int j = 0; j < d; ++j) m *= std::pow(xp[j] - s[j], T.exp(idx, j));
      acc += zeta[k][idx] * m;
    }
    g[k] = acc;
  }
  return g;
}

PhaseExpansion solve_phase_system(const Expr& f, int n, const Point& init, double t_a, double t_b,
                                  const PhaseOptions& opt) {
  if (n < 2) throw PreconditionError("phase system needs n >= 2");
  if (opt.M < 2) throw PreconditionError("expansion order M must be at least 2");
  if (opt.M > 8) throw PreconditionError("expansion order M above the cap 8");
  if (!(t_a <= t_b)) throw PreconditionError("empty t span");
  if (init.dim() != n) throw PreconditionError("initial point has the wrong dimension");
  check_normal_form(f, n);
  PhaseExpansion ph;
  ph.n = n;
  ph.d = n - 1;
  ph.M = opt.M;
  ph.t_a = t_a;
  ph.t_b = t_b;
  ph.t0 = std::isnan(opt.t0) ? 0.5 * (t_a + t_b) : opt.t0;
  if (ph.t0 < t_a || ph.t0 > t_b) throw PreconditionError("t0 outside the span");
  ph.f = f;
  ph.table = MonomialTable::get(ph.d, ph.M);
  std::vector<double> y0(ph.state_size(), 0.0);
  for (int k = 0; k < ph.d; ++k) {
    y0[k] = init.x[1 + k];
    y0[ph.d + k] = init.xi[1 + k];
    std::vector<int> mu(ph.d, 0);
    mu[k] = 2;
    y0[ph.w_offset(ph.table->index(mu.data())) + 1] = 1.0;
  }
  double pd_min = min_pd_eig(ph, y0);
  int checks = 1;
  double fail_t = 0;
  bool failed = false;
  OdeHook hook = [&](double t, std::vector<double>& s) {
    const double e = min_pd_eig(ph, s);
    ++checks;
    pd_min = std::min(pd_min, e);
    if (!(e > 0)) {
      failed = true;
      fail_t = t;
      return false;
    }
    return true;
  };
  OdeRhs rhs = [&](double t, const std::vector<double>& s, std::vector<double>& ds) { ds = ph.rhs(t, s); };
  ph.sol = two_sided(rhs, y0, ph.t0, t_a, t_b, opt.ode, hook);
  if (failed)
    throw NumericalError("Im W - I/2 lost positive definiteness at t = " + std::to_string(fail_t));
  ph.pd_min = pd_min;
  ph.pd_checks = checks;
  return ph;
}

PhaseExpansion normalize_w0(const PhaseExpansion& phase, W0Mode mode, double flat_tol) {
  PhaseExpansion out = phase;
  out.w0_shift = 0;
  out.mode = mode;
  if (mode == W0Mode::none) return out;
  // Node values are exact ODE states; Hermite samples can overshoot next to
  // a flat core, so the minimum and the core are located on nodes.
  const std::vector<double>& ts = phase.sol.t;
  std::vector<double> im(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) im[i] = out.w0(ts[i]).imag();
  const std::size_t amin = static_cast<std::size_t>(std::min_element(im.begin(), im.end()) - im.begin());
  const double lo = im[amin];
  double scale = 0;
  for (double v : im) scale = std::max(scale, std::abs(v - lo));
  const double tol = flat_tol * (1 + scale);
  if (!(im.front() - lo > tol) || !(im.back() - lo > tol))
    throw PreconditionError("Im w0 has no interior minimum: f never changes sign along the curve");
  double ca = ts[amin], cb = ts[amin];
  if (mode == W0Mode::interval) {
    std::size_t i = amin, j = amin;
    while (i > 0 && im[i - 1] - lo <= tol) --i;
    while (j + 1 < ts.size() && im[j + 1] - lo <= tol) ++j;
    ca = ts[i];
    cb = ts[j];
  } else if (amin > 0 && amin + 1 < ts.size()) {
    double best = lo;
    const double l = ts[amin - 1], r = ts[amin + 1];
    for (int k = 0; k <= 400; ++k) {
      const double t = l + (r - l) * k / 400;
      const double v = out.w0(t).imag();
      if (v < best) {
        best = v;
        ca = cb = t;
      }
    }
  }
  out.core_a = ca;
  out.core_b = cb;
  out.w0_shift = phase.w0(0.5 * (ca + cb)) + phase.w0_shift;
  return out;
}

double eiconal_residual(const PhaseExpansion& ph, double h, int directions, int max_times) {
  const int d = ph.d, n = ph.n, M = ph.M;
  const MonomialTable& T = *ph.table;
  std::vector<std::vector<double>> dirs;
  if (d == 1) {
    dirs = {{1.0}, {-1.0}};
  } else {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int k = 0; k < directions; ++k) {
      std::vector<double> u(d);
      double r = 0;
      for (auto& v : u) {
        v = nd(rng);
        r += v * v;
      }
      for (auto& v : u) v /= std::sqrt(r);
      dirs.push_back(u);
    }
  }
  const std::size_t count = ph.sol.t.size();
  const std::size_t stride = std::max<std::size_t>(1, count / std::max(1, max_times));
  double worst = 0;
  std::vector<double> z(d), x(d);
  for (std::size_t i = 0; i < count; i += stride) {
    const double t = ph.sol.t[i];
    const auto& s = ph.sol.y[i];
    const auto& ds = ph.sol.dy[i];
    const auto zeta = zeta_polys(ph, s, T);
    for (const auto& u : dirs) {
      for (int k = 0; k < d; ++k) {
        z[k] = h * u[k];
        x[k] = s[k] + z[k];
      }
      std::vector<double> mono(T.size());
      for (int idx = 0; idx < T.size(); ++idx) {
        double m = 1;
        for (int k = 0; k < d; ++k) m *= std::pow(z[k], T.exp(idx, k));
        mono[idx] = m;
      }
      std::vector<cplx> zv(d, 0.0);
      for (int k = 0; k < d; ++k)
        for (int idx = 0; idx < T.size(); ++idx) zv[k] += zeta[k][idx] * mono[idx];
      cplx dtw(ds[ph.w0_offset()], ds[ph.w0_offset() + 1]);
      for (int k = 0; k < d; ++k) dtw += z[k] * ds[d + k] - ds[k] * s[d + k] - zv[k] * ds[k];
      for (int idx = T.degree_begin(2); idx < T.size(); ++idx) {
        const int o = ph.w_offset(idx);
        dtw += cplx(ds[o], ds[o + 1]) * (mono[idx] / T.factorial(idx));
      }
      const Jet G = jet_of(ph.f, base_point(n, t, x.data(), s.data() + d), M);
      const MonomialTable& GT = G.table();
      cplx ft = 0;
      for (int idx = 0; idx < GT.size(); ++idx) {
        const int* e = GT.exps(idx);
        bool ok = e[n] == 0;
        for (int k = 0; k < n && ok; ++k) ok = e[k] == 0;
        if (!ok || G.taylor(idx) == 0.0) continue;
        cplx term = G.taylor(idx);
        for (int k = 0; k < d; ++k)
          for (int p = 0; p < e[n + 1 + k]; ++p) term *= zv[k];
        ft += term;
      }
      worst = std::max(worst, std::abs(dtw - cplx(0, 1) * ft));
    }
  }
  return worst;
}

SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("slope fit needs at least two points");
  const std::size_t m = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw NumericalError("slope fit needs positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double den = m * sxx - sx * sx;
  if (std::abs(den) < 1e-300) throw NumericalError("degenerate slope fit");
  SlopeFit f;
  f.slope = (m * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / m;
  const double mean = sy / m;
  double ss_tot = 0, ss_res = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    ss_res += r * r;
    ss_tot += (ly[i] - mean) * (ly[i] - mean);
  }
  f.r2 = ss_tot > 0 ? 1 - ss_res / ss_tot : (ss_res == 0 ? 1.0 : 0.0);
  return f;
}

cplx AmplitudeSet::coeff(double t, int idx) const {
  const auto s = sol.at(t);
  return {s[2 * idx], s[2 * idx + 1]};
}

std::vector<cplx> AmplitudeSet::coeffs(double t) const {
  const auto s = sol.at(t);
  std::vector<cplx> c(table->size());
  for (int i = 0; i < table->size(); ++i) c[i] = {s[2 * i], s[2 * i + 1]};
  return c;
}

cplx AmplitudeSet::eval(const PhaseExpansion& phase, double t, const double* xp) const {
  const auto c = coeffs(t);
  const auto y = phase.y(t);
  cplx acc = 0;
  for (int idx = 0; idx < table->size(); ++idx) {
    double m = 1;
    for (int k = 0; k < d; ++k) m *= std::pow(xp[k] - y[k], table->exp(idx, k));
    acc += c[idx] * m;
  }
  return acc;
}

OdeSolution solve_linear_transport(const TransportMatrix& A, const Eigen::VectorXcd& phi0, double t0, double t_a,
                                   double t_b, const OdeOptions& opt) {
  if (!(t_a <= t0 && t0 <= t_b)) throw PreconditionError("t0 outside the transport span");
  const Eigen::Index S = phi0.size();
  std::vector<double> y0(2 * S);
  for (Eigen::Index i = 0; i < S; ++i) {
    y0[2 * i] = phi0(i).real();
    y0[2 * i + 1] = phi0(i).imag();
  }
  OdeRhs rhs = [&](double t, const std::vector<double>& s, std::vector<double>& ds) {
    Eigen::VectorXcd p(S);
    for (Eigen::Index i = 0; i < S; ++i) p(i) = {s[2 * i], s[2 * i + 1]};
    const Eigen::MatrixXcd a = A(t);
    if (a.rows() != S || a.cols() != S) throw PreconditionError("transport matrix has the wrong size");
    // D_t phi = -A phi, i.e. phi' = -i A phi
    const Eigen::VectorXcd dp = cplx(0, -1) * (a * p);
    ds.resize(2 * S);
    for (Eigen::Index i = 0; i < S; ++i) {
      ds[2 * i] = dp(i).real();
      ds[2 * i + 1] = dp(i).imag();
    }
  };
  return two_sided(rhs, y0, t0, t_a, t_b, opt, nullptr);
}

Eigen::MatrixXcd transport_matrix(const PhaseExpansion& ph, const Expr& p0, double t) {
  const int n = ph.n, d = ph.d, K = ph.M - 1;
  const auto Tp = MonomialTable::get(d, K);
  const MonomialTable& T = *Tp;
  const auto s = ph.state(t);
  const auto ds = ph.rhs(t, s);
  const Point base = base_point(n, t, s.data(), s.data() + d);
  const Jet F = jet_of(ph.f, base, ph.M + 1);
  const auto zeta = zeta_polys(ph, s, T);
  std::vector<Poly> v(d);
  for (int k = 0; k < d; ++k) {
    v[k] = compose(F.diff(n + 1 + k), zeta, T);
    for (auto& c : v[k]) c = -c;
    v[k][0] += cplx(0, ds[k]);
  }
  Poly c = compose(jet_of(conjugate(p0), base, K), zeta, T);
  std::vector<int> mu(d);
  for (int j = 0; j < d; ++j) {
    const Jet Fj = F.diff(n + 1 + j);
    poly_axpy(c, -1.0, compose(Fj.diff(1 + j), zeta, T));
    for (int k = 0; k < d; ++k) {
      Poly wjk(T.size(), 0.0);
      for (int idx = 0; idx < T.size(); ++idx) {
        std::copy(T.exps(idx), T.exps(idx) + d, mu.begin());
        ++mu[j];
        ++mu[k];
        wjk[idx] = w_coeff(ph, s, mu.data()) / T.factorial(idx);
      }
      poly_axpy(c, -0.5, poly_mul(compose(Fj.diff(n + 1 + k), zeta, T), wjk, T));
    }
  }
  const int S = T.size();
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(S, S);
  for (int b = 0; b < S; ++b) {
    Poly zb(S, 0.0);
    zb[b] = 1;
    Poly col = poly_mul(c, zb, T);
    for (int k = 0; k < d; ++k) {
      const int e = T.exp(b, k);
      if (!e) continue;
      Poly dz(S, 0.0);
      dz[T.shift_down(b, k)] = static_cast<double>(e);
      poly_axpy(col, 1.0, poly_mul(v[k], dz, T));
    }
    for (int a = 0; a < S; ++a) A(a, b) = col[a];
  }
  return A;
}

AmplitudeSet solve_transport(const PhaseExpansion& phase, const Expr& p0, const std::vector<int>& beta0, double t0,
                             int amp_count) {
  if (amp_count != 0)
    throw PreconditionError("only the leading amplitude phi_0 is constructed (amp_count must be 0)");
  if (static_cast<int>(beta0.size()) != phase.d) throw PreconditionError("beta0 must have n - 1 entries");
  AmplitudeSet a;
  a.d = phase.d;
  a.M = phase.M;
  a.beta0 = beta0;
  a.table = MonomialTable::get(phase.d, phase.M - 1);
  a.t0 = std::isnan(t0) ? phase.t0 : t0;
  const int bi = a.table->index(beta0.data());
  if (bi < 0) throw PreconditionError("|beta0| must be below M");
  for (int b : beta0)
    if (b < 0) throw PreconditionError("negative entry in beta0");
  Eigen::VectorXcd phi0 = Eigen::VectorXcd::Zero(a.table->size());
  // D^beta z^beta = (-i)^{|beta|} beta!
  static const cplx ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  phi0(bi) = ipow[a.table->degree(bi) % 4] / a.table->factorial(bi);
  a.sol = solve_linear_transport([&](double t) { return transport_matrix(phase, p0, t); }, phi0, a.t0, phase.t_a,
                                 phase.t_b);
  return a;
}

double smooth_step(double s, double a, double b) {
  const double u = b - s, v = s - a;
  const double eu = u > 0 ? std::exp(-1 / u) : 0.0, ev = v > 0 ? std::exp(-1 / v) : 0.0;
  return eu / (eu + ev);
}

Expr smooth_step_expr(const Expr& s, double a, double b) {
  const Expr eu = flat(1, 0, Expr::constant(b) - s), ev = flat(1, 0, s - Expr::constant(a));
  return eu / (eu + ev);
}

GridFunction assemble_v(const Field& w, const Field& amp, double tau, int N, const GridSpec& grid) {
  grid.validate();
  if (!(tau > 0)) throw PreconditionError("tau must be positive");
  const int n = grid.n;
  const double pref = std::pow(tau, N + n);
  GridFunction g;
  g.spec = grid;
  g.data.assign(grid.size(), 0.0);
  std::vector<double> x(n);
  for (std::size_t f = 0; f < g.data.size(); ++f) {
    grid.point(f, x.data());
    const cplx a = amp(x.data());
    if (a == 0.0) continue;
    double ph = 0;
    for (int k = 0; k < n; ++k) ph += grid.carrier[k] * x[k];
    g.data[f] = pref * a * std::exp(cplx(0, tau) * w(x.data()) - cplx(0, ph));
  }
  const double peak = g.max_abs();
  for (std::size_t f = 0; f < g.data.size(); ++f) {
    if (!(std::abs(g.data[f]) > 1e-10 * peak)) continue;
    grid.point(f, x.data());
    for (int k = 0; k < n; ++k) {
      const double dl = 1e-6 * (1 + std::abs(x[k]));
      std::vector<double> xp = x, xm = x;
      xp[k] += dl;
      xm[k] -= dl;
      const double gk = (w(xp.data()) - w(xm.data())).real() / (2 * dl);
      if (std::abs(tau * gk - grid.carrier[k]) * grid.step(k) > M_PI)
        throw NumericalError("grid too coarse for the oscillation of e^{i tau w} along axis " + std::to_string(k));
    }
  }
  return g;
}

GridFunction assemble_v(const PhaseExpansion& phase, const AmplitudeSet& amp, double tau, int N,
                        const GridSpec& grid, const CutoffSpec& cut) {
  if (grid.n != phase.n) throw PreconditionError("grid dimension differs from the phase dimension");
  const double m = cut.t_margin;
  Field w = [&](const double* x) { return phase.w(x[0], x + 1); };
  Field a = [&](const double* x) -> cplx {
    const double t = x[0];
    if (t <= phase.t_a + m || t >= phase.t_b - m) return 0.0;
    const double ct = smooth_step(phase.t_a + 2 * m - t, 0, m) * smooth_step(t - (phase.t_b - 2 * m), 0, m);
    if (ct == 0) return 0.0;
    const auto y = phase.y(t);
    double r = 0;
    for (int k = 0; k < phase.d; ++k) r += (x[1 + k] - y[k]) * (x[1 + k] - y[k]);
    const double cr = smooth_step(std::sqrt(r), cut.r_in, cut.r_out);
    if (cr == 0) return 0.0;
    return ct * cr * amp.eval(phase, t, x + 1);
  };
  return assemble_v(w, a, tau, N, grid);
}

Expr CKAmplitude::to_expr() const {
  Expr acc;
  for (int idx = 0; idx < table->size(); ++idx) {
    if (c[idx] == 0.0) continue;
    Expr m = Expr::constant(c[idx]);
    for (int k = 0; k < n; ++k)
      if (table->exp(idx, k)) m = m * pow(Expr::x(k), table->exp(idx, k));
    acc = acc + m;
  }
  return acc;
}

cplx CKAmplitude::operator()(const double* x) const {
  cplx acc = 0;
  for (int idx = 0; idx < table->size(); ++idx) {
    if (c[idx] == 0.0) continue;
    double m = 1;
    for (int k = 0; k < n; ++k) m *= std::pow(x[k], table->exp(idx, k));
    acc += c[idx] * m;
  }
  return acc;
}

TaylorData prescription_data(const std::vector<int>& beta0) {
  static const cplx ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  int s = 0;
  double fact = 1;
  for (int b : beta0) {
    if (b < 0) throw PreconditionError("negative entry in beta0");
    s += b;
    for (int j = 2; j <= b; ++j) fact *= j;
  }
  return {{beta0, ipow[s % 4] / fact}};
}

CKAmplitude solve_ck_amplitude(int n, const TaylorData& initial, int J) {
  if (n < 2) throw PreconditionError("the model needs n >= 2");
  if (J < 0 || J > 24) throw PreconditionError("CK order J must be in [0, 24]");
  CKAmplitude a;
  a.n = n;
  a.J = J;
  a.table = MonomialTable::get(n, J);
  a.c.assign(a.table->size(), 0.0);
  std::vector<int> e(n);
  for (const auto& [gamma, v] : initial) {
    if (static_cast<int>(gamma.size()) != n - 1) throw PreconditionError("initial data index must have n - 1 entries");
    e[0] = 0;
    std::copy(gamma.begin(), gamma.end(), e.begin() + 1);
    const int i = a.table->index(e.data());
    if (i >= 0) a.c[i] += v;
  }
  // (m + 1) phi_{m+1} = i d_n phi_{m-1}, phi_1 = 0
  for (int k = 2; k <= J; ++k)
    for (int idx = 0; idx < a.table->size(); ++idx) {
      if (a.table->exp(idx, 0) != k) continue;
      std::copy(a.table->exps(idx), a.table->exps(idx) + n, e.begin());
      e[0] = k - 2;
      e[n - 1] += 1;
      const int src = a.table->index(e.data());
      if (src >= 0) a.c[idx] = cplx(0, 1) * static_cast<double>(e[n - 1]) * a.c[src] / static_cast<double>(k);
    }
  return a;
}

Expr model_phase(int n) {
  if (n < 2) throw PreconditionError("the model needs n >= 2");
  const Expr I = Expr::imag_unit();
  Expr q;
  for (int k = 0; k < n - 1; ++k) q = q + pow(Expr::x(k), 2);
  const Expr s = Expr::x(n - 1) + cplx(0, 0.5) * pow(Expr::x(0), 2);
  q = q + pow(s, 2);
  return Expr::x(n - 1) + cplx(0, 0.5) * q;
}

Expr ModelSolution::pstar_residual() const {
  const Expr a = amplitude();
  return cplx(0, -1) * differentiate(a, xvar(0)) - Expr::x(0) * differentiate(a, xvar(n - 1));
}

ModelSolution model_solution(int n, double radius, const TaylorData& initial, int J) {
  if (n < 2) throw PreconditionError("the model needs n >= 2");
  if (!(radius > 0)) throw PreconditionError("support radius must be positive");
  if (radius >= std::sqrt(2.0))
    throw PreconditionError("support radius too large for Im w >= |x|^2/4; shrink it below sqrt(2)");
  ModelSolution m;
  m.n = n;
  m.radius = radius;
  m.r_in = 0.8 * radius;
  m.w = model_phase(n);
  m.phi = solve_ck_amplitude(n, initial, J).to_expr();
  Expr r2;
  for (int k = 0; k < n; ++k) r2 = r2 + pow(Expr::x(k), 2);
  m.chi = smooth_step_expr(r2, m.r_in * m.r_in, radius * radius);
  const Compiled wc(m.w);
  std::vector<Compiled> grad;
  for (int k = 0; k < n; ++k) grad.emplace_back(differentiate(m.w, xvar(k)));
  // sample the closed ball
  std::vector<std::vector<double>> pts;
  if (n <= 3) {
    const int g = n == 2 ? 201 : 61;
    std::vector<int> i(n, 0);
    for (;;) {
      std::vector<double> x(n);
      double r = 0;
      for (int k = 0; k < n; ++k) {
        x[k] = -radius + 2 * radius * i[k] / (g - 1);
        r += x[k] * x[k];
      }
      if (r <= radius * radius) pts.push_back(x);
      int k = 0;
      while (k < n && ++i[k] == g) i[k++] = 0;
      if (k == n) break;
    }
  } else {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> u(0, 1);
    for (int s = 0; s < 200000; ++s) {
      std::vector<double> x(n);
      double r = 0;
      for (auto& v : x) {
        v = nd(rng);
        r += v * v;
      }
      const double rad = radius * std::pow(u(rng), 1.0 / n) / std::sqrt(r);
      for (auto& v : x) v *= rad;
      pts.push_back(x);
    }
  }
  double margin = INFINITY, dre = INFINITY;
  std::vector<double> zero(n, 0.0);
  for (const auto& x : pts) {
    const Point p{x, zero};
    double r2v = 0;
    for (double v : x) r2v += v * v;
    if (r2v > 0) margin = std::min(margin, (wc(p).imag() - r2v / 4) / r2v);
    double gn = 0;
    for (int k = 0; k < n; ++k) gn += std::norm(grad[k](p).real());
    dre = std::min(dre, std::sqrt(gn));
  }
  m.margin = margin;
  m.dre_min = dre;
  if (!(margin > 0) || !(dre > 0))
    throw PreconditionError("Im w >= |x|^2/4 or d Re w != 0 fails on the support ball; shrink the radius");
  return m;
}

nlohmann::json to_json(const PhaseExpansion& p, int samples) {
  nlohmann::json j;
  j["n"] = p.n;
  j["M"] = p.M;
  j["t_span"] = {p.t_a, p.t_b};
  j["t0"] = p.t0;
  j["pd_min"] = p.pd_min;
  j["pd_checks"] = p.pd_checks;
  j["normalization"] = p.mode == W0Mode::none ? "none" : p.mode == W0Mode::point ? "point" : "interval";
  if (p.mode != W0Mode::none) j["core"] = {p.core_a, p.core_b};
  const MonomialTable& T = *p.table;
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < samples; ++i) {
    const double t = samples == 1 ? p.t0 : p.t_a + (p.t_b - p.t_a) * i / (samples - 1);
    nlohmann::json r;
    r["t"] = t;
    r["y"] = p.y(t);
    r["eta"] = p.eta(t);
    const cplx w0 = p.w0(t);
    r["w0"] = {w0.real(), w0.imag()};
    nlohmann::json ws = nlohmann::json::array();
    for (int idx = T.degree_begin(2); idx < T.size(); ++idx) {
      const cplx c = p.coeff(t, idx);
      ws.push_back({{"mu", std::vector<int>(T.exps(idx), T.exps(idx) + p.d)}, {"value", {c.real(), c.imag()}}});
    }
    r["w"] = ws;
    rows.push_back(r);
  }
  j["samples"] = rows;
  return j;
}

nlohmann::json to_json(const AmplitudeSet& a, int samples) {
  nlohmann::json j;
  j["M"] = a.M;
  j["t0"] = a.t0;
  j["beta0"] = a.beta0;
  const MonomialTable& T = *a.table;
  nlohmann::json idx = nlohmann::json::array();
  for (int i = 0; i < T.size(); ++i) idx.push_back(std::vector<int>(T.exps(i), T.exps(i) + a.d));
  j["alpha"] = idx;
  nlohmann::json rows = nlohmann::json::array();
  const double lo = a.sol.t.front(), hi = a.sol.t.back();
  for (int i = 0; i < samples; ++i) {
    const double t = samples == 1 ? a.t0 : lo + (hi - lo) * i / (samples - 1);
    nlohmann::json c = nlohmann::json::array();
    for (const cplx& v : a.coeffs(t)) c.push_back({v.real(), v.imag()});
    rows.push_back({{"t", t}, {"phi", c}});
  }
  j["samples"] = rows;
  return j;
}

}  // namespace mlw
