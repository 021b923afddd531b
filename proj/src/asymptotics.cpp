// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#include "mlw/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mlw/error.hpp"
#include "mlw/jet.hpp"
#include "mlw/parallel.hpp"

namespace mlw {

namespace {

double bump_value(double s) {
  if (!(s > -1 && s < 1)) return 0.0;
  return static_cast<double>(flat_value(2, 0, 1 + s) * flat_value(2, 0, 1 - s));
}

// Tensor Gauss-Legendre over the box prod [lo_k, hi_k] with q nodes per axis.
template <class F>
cplx tensor_quad(int n, const std::vector<double>& lo, const std::vector<double>& hi, int q, F&& f) {
  std::vector<double> nodes, weights;
  gauss_legendre(q, nodes, weights);
  std::vector<int> i(n, 0);
  std::vector<double> x(n);
  cplx acc = 0;
  double jac = 1;
  for (int k = 0; k < n; ++k) jac *= (hi[k] - lo[k]) / 2;
  for (;;) {
    double w = jac;
    for (int k = 0; k < n; ++k) {
      x[k] = lo[k] + (hi[k] - lo[k]) * (nodes[i[k]] + 1) / 2;
      w *= weights[i[k]];
    }
    acc += w * f(x.data());
    int k = n - 1;
    while (k >= 0 && ++i[k] == q) i[k--] = 0;
    if (k < 0) break;
  }
  return acc;
}

// Doubles q until two successive results agree to tol (relative, with an
// absolute floor for vanishing integrals).
template <class F>
cplx settled_quad(int n, const std::vector<double>& lo, const std::vector<double>& hi, int q, int q_max, double tol,
                  double abs_floor, F&& f) {
  cplx prev = tensor_quad(n, lo, hi, q, f);
  for (q *= 2; q <= q_max; q *= 2) {
    const cplx cur = tensor_quad(n, lo, hi, q, f);
    if (std::abs(cur - prev) <= tol * std::abs(cur) || std::abs(cur - prev) <= abs_floor) return cur;
    prev = cur;
  }
  throw NumericalError("quadrature did not settle to the requested tolerance; raise quad_max");
}

int xprime_dim(const WavePacket& v) {
  if (v.n < 2) throw PreconditionError("wave packets need n >= 2");
  if (static_cast<int>(v.eta.size()) != v.n - 1) throw PreconditionError("eta must have n - 1 entries");
  return v.n - 1;
}

}  // namespace

ProbeWindow ProbeWindow::standard(int n) {
  ProbeWindow h;
  h.n = n;
  h.center.assign(n, 0.2);
  h.center[0] = 0.3;
  h.radius.assign(n, 1.0);
  return h;
}

void ProbeWindow::validate() const {
  if (n < 1 || static_cast<int>(center.size()) != n || static_cast<int>(radius.size()) != n)
    throw PreconditionError("window center and radius must have n entries");
  for (double r : radius)
    if (!(r > 0)) throw PreconditionError("window radii must be positive");
}

double ProbeWindow::operator()(const double* x) const {
  double v = 1;
  for (int k = 0; k < n && v != 0; ++k) v *= bump_value((x[k] - center[k]) / radius[k]);
  return v;
}

Expr ProbeWindow::to_expr() const {
  Expr h = Expr::constant(1.0);
  const Expr one = Expr::constant(1.0);
  for (int k = 0; k < n; ++k) {
    const Expr s = (Expr::x(k) - center[k]) / Expr::constant(radius[k]);
    h = h * flat(2, 0, one + s) * flat(2, 0, one - s);
  }
  return h;
}

void gauss_legendre(int q, std::vector<double>& nodes, std::vector<double>& weights) {
  if (q < 1) throw PreconditionError("quadrature needs at least one node");
  nodes.assign(q, 0.0);
  weights.assign(q, 0.0);
  for (int i = 0; i < (q + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (q + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= q; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = q * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1, p1 = x;
    for (int k = 2; k <= q; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = q * (x * p1 - p0) / (x * x - 1);
    nodes[i] = -x;
    nodes[q - 1 - i] = x;
    weights[i] = weights[q - 1 - i] = 2 / ((1 - x * x) * dp * dp);
  }
  if (q % 2 == 1) nodes[q / 2] = 0;
}

WavePacket model_packet(int n, const std::vector<int>& beta0, int J) {
  if (static_cast<int>(beta0.size()) != n - 1) throw PreconditionError("beta0 must have n - 1 entries");
  WavePacket v;
  v.n = n;
  v.w = model_phase(n);
  v.phi = solve_ck_amplitude(n, prescription_data(beta0), J).to_expr();
  v.eta.assign(n - 1, 0.0);
  v.eta.back() = 1.0;
  return v;
}

GaussianAction::GaussianAction(const Expr& q, const WavePacket& v, double tau, int k)
    : n_(v.n), tau_(tau), eta_(v.eta), w_(v.w) {
  const int d = xprime_dim(v);
  if (k < 1) throw PreconditionError("the action needs at least one term");
  if (q.depends_on(xivar(0))) throw PreconditionError("symbol acting in x' must not depend on xi_1");
  const auto table = MonomialTable::get(d, k - 1);
  std::vector<Expr> G(table->size());
  std::vector<Expr> dw(d);
  for (int j = 0; j < d; ++j) dw[j] = differentiate(v.w, xvar(1 + j)) - Expr::constant(v.eta[j]);
  G[0] = v.phi;
  for (int idx = 1; idx < table->size(); ++idx) {
    int j = d - 1;
    while (table->exp(idx, j) == 0) --j;
    const Expr& g = G[table->shift_down(idx, j)];
    G[idx] = cplx(0, -1) * differentiate(g, xvar(1 + j)) + cplx(tau, 0) * dw[j] * g;
  }
  for (int idx = 0; idx < table->size(); ++idx) {
    Expr c = q;
    for (int j = 0; j < d; ++j) c = differentiate(c, xivar(1 + j), table->exp(idx, j));
    if (c.is_zero() || G[idx].is_zero()) continue;
    terms_.emplace_back(Compiled(c), Compiled(G[idx] / Expr::constant(table->factorial(idx))));
  }
}

cplx GaussianAction::reduced(const double* x) const {
  std::vector<double> xi(n_, 0.0);
  for (int j = 0; j + 1 < n_; ++j) xi[1 + j] = tau_ * eta_[j];
  cplx acc = 0;
  for (const auto& [c, g] : terms_) acc += c.eval(x, xi.data(), n_) * g.eval(x, xi.data(), n_);
  return acc;
}

cplx GaussianAction::operator()(const double* x) const {
  std::vector<double> xi(n_, 0.0);
  return std::exp(cplx(0, tau_) * w_.eval(x, xi.data(), n_)) * reduced(x);
}

GridFunction apply_symbol_gaussian(const Expr& q, const WavePacket& v, double tau, int k, const GridSpec& grid) {
  grid.validate();
  if (grid.n != v.n) throw PreconditionError("grid dimension differs from the packet dimension");
  const GaussianAction act(q, v, tau, k);
  // Im w >= 0 on the grid with a strict minimum
  const Compiled wc(v.w);
  std::vector<double> x(v.n), xi(v.n, 0.0);
  double min_im = 0;
  for (std::size_t f = 0; f < grid.size(); ++f) {
    grid.point(f, x.data());
    min_im = std::min(min_im, wc.eval(x.data(), xi.data(), v.n).imag());
  }
  if (min_im < -1e-12) throw DomainError("Im w is negative on the grid");
  GridFunction g;
  g.spec = grid;
  g.data.resize(grid.size());
  for (std::size_t f = 0; f < grid.size(); ++f) {
    grid.point(f, x.data());
    double ph = 0;
    for (int j = 0; j < v.n; ++j) ph += grid.carrier[j] * x[j];
    g.data[f] = act(x.data()) * std::exp(cplx(0, -ph));
  }
  return g;
}

Expr lambda_profile(const ClassicalSymbol& rstar, const WavePacket& v, const std::vector<Expr>& phis, int J,
                    int taylor_order) {
  const int d = xprime_dim(v);
  if (J < -1) throw PreconditionError("lambda_J needs J >= -1");
  if (taylor_order < 0) throw PreconditionError("Taylor order must be nonnegative");
  std::vector<Expr> dz(d);
  for (int j = 0; j < d; ++j) dz[j] = differentiate(v.w, xvar(1 + j)) - Expr::constant(v.eta[j]);
  const auto beta_table = MonomialTable::get(d, taylor_order);
  Expr acc;
  for (int j = -1; j <= J; ++j) {
    const int deg = -j;
    if (deg > rstar.top_degree) continue;
    const int ti = rstar.top_degree - deg;
    if (rstar.truncated && ti > rstar.depth()) throw PreconditionError("symbol depth too small for lambda_J");
    const Expr q = rstar.term(ti);
    if (q.is_zero()) continue;
    for (int l = 0; l < static_cast<int>(phis.size()); ++l) {
      const int a = J - j - l;
      if (a < 0) continue;
      const auto at = MonomialTable::get(d, a);
      for (int ai = at->degree_begin(a); ai < at->degree_end(a); ++ai) {
        Expr dphi = phis[l];
        for (int k = 0; k < d; ++k) dphi = differentiate(dphi, xvar(1 + k), at->exp(ai, k));
        if (dphi.is_zero()) continue;
        static const cplx ipow[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
        dphi = ipow[a % 4] * dphi;
        for (int bi = 0; bi < beta_table->size(); ++bi) {
          Expr c = q;
          for (int k = 0; k < d; ++k) c = differentiate(c, xivar(1 + k), at->exp(ai, k) + beta_table->exp(bi, k));
          if (c.is_zero()) continue;
          c = substitute(c, xivar(0), Expr());
          for (int k = 0; k < d; ++k) c = substitute(c, xivar(1 + k), Expr::constant(v.eta[k]));
          Expr m = c / Expr::constant(beta_table->factorial(bi));
          for (int k = 0; k < d; ++k)
            if (beta_table->exp(bi, k)) m = m * pow(dz[k], beta_table->exp(bi, k));
          acc = acc + m * dphi;
        }
      }
    }
  }
  return acc;
}

namespace {

ClassicalSymbol adjoint_for_itau(const ClassicalSymbol& r, const WavePacket& v, const ProbeWindow& window,
                                 const ItauOptions& opt) {
  xprime_dim(v);
  window.validate();
  if (window.n != v.n || r.n != v.n) throw PreconditionError("symbol, packet and window dimensions differ");
  if (opt.quad < 2 || opt.quad_max < opt.quad) throw PreconditionError("bad quadrature sizes");
  return adjoint_symbol(r, opt.adjoint_depth, true);
}

std::vector<GaussianAction> actions(const ClassicalSymbol& rstar, const WavePacket& v, double tau,
                                    const ItauOptions& opt) {
  if (!(tau > 0)) throw PreconditionError("tau must be positive");
  std::vector<GaussianAction> out;
  for (int i = 0; i <= rstar.depth(); ++i) {
    const Expr q = rstar.term(i);
    if (!q.is_zero()) out.emplace_back(q, v, tau, opt.action_terms);
  }
  return out;
}

cplx itau_scaled(const ClassicalSymbol& rstar, const WavePacket& v, const ProbeWindow& window, double tau,
                 const ItauOptions& opt) {
  const auto acts = actions(rstar, v, tau, opt);
  if (acts.empty()) return 0.0;
  const int n = v.n;
  const Compiled wc(v.w);
  std::vector<double> lo(n), hi(n);
  for (int k = 0; k < n; ++k) {
    lo[k] = window.center[k] - window.radius[k];
    hi[k] = window.center[k] + window.radius[k];
  }
  auto f = [&](const double* s) -> cplx {
    const double h = window(s);
    if (h == 0) return 0.0;
    double x[16];
    for (int k = 0; k < n; ++k) x[k] = s[k] / tau;
    const double xi0[16] = {};
    cplx sum = 0;
    for (const auto& a : acts) sum += a.reduced(x);
    return h * std::exp(cplx(0, tau) * wc.eval(x, xi0, n)) * sum;
  };
  if (n > 16) throw PreconditionError("dimension too large for I_tau");
  return settled_quad(n, lo, hi, opt.quad, opt.quad_max, opt.quad_tol, 1e-300, f);
}

}  // namespace

cplx compute_I_tau(const ClassicalSymbol& r, const WavePacket& v, const ProbeWindow& window, double tau,
                   const ItauOptions& opt) {
  return itau_scaled(adjoint_for_itau(r, v, window, opt), v, window, tau, opt);
}

std::vector<cplx> compute_I_tau(const ClassicalSymbol& r, const WavePacket& v, const ProbeWindow& window,
                                const std::vector<double>& taus, const ItauOptions& opt) {
  const ClassicalSymbol rstar = adjoint_for_itau(r, v, window, opt);
  std::vector<cplx> out(taus.size());
  parallel_for(static_cast<int>(taus.size()), opt.workers,
               [&](int i) { out[i] = itau_scaled(rstar, v, window, taus[i], opt); });
  return out;
}

cplx compute_I_tau_unscaled(const ClassicalSymbol& r, const WavePacket& v, const ProbeWindow& window, double tau,
                            const ItauOptions& opt) {
  const ClassicalSymbol rstar = adjoint_for_itau(r, v, window, opt);
  const auto acts = actions(rstar, v, tau, opt);
  if (acts.empty()) return 0.0;
  const int n = v.n;
  std::vector<double> lo(n), hi(n);
  for (int k = 0; k < n; ++k) {
    lo[k] = (window.center[k] - window.radius[k]) / tau;
    hi[k] = (window.center[k] + window.radius[k]) / tau;
  }
  const double scale = std::pow(tau, n);
  auto f = [&](const double* x) -> cplx {
    double s[16];
    for (int k = 0; k < n; ++k) s[k] = tau * x[k];
    const double h = window(s);
    if (h == 0) return 0.0;
    cplx sum = 0;
    for (const auto& a : acts) sum += a(x);
    return scale * h * sum;
  };
  if (n > 16) throw PreconditionError("dimension too large for I_tau");
  return settled_quad(n, lo, hi, opt.quad, opt.quad_max, opt.quad_tol, 1e-300, f);
}

std::vector<cplx> window_moments(const ProbeWindow& window, int order, int quad) {
  window.validate();
  if (order < 0) throw PreconditionError("moment order must be nonnegative");
  const int n = window.n;
  const auto table = MonomialTable::get(n, order);
  std::vector<double> lo(n), hi(n);
  for (int k = 0; k < n; ++k) {
    lo[k] = window.center[k] - window.radius[k];
    hi[k] = window.center[k] + window.radius[k];
  }
  std::vector<cplx> out(table->size());
  for (int idx = 0; idx < table->size(); ++idx)
    out[idx] = settled_quad(n, lo, hi, quad, 16 * quad, 1e-12, 1e-15, [&](const double* x) -> cplx {
      double m = window(x);
      if (m == 0) return 0.0;
      for (int k = 0; k < n; ++k) m *= std::pow(x[k], table->exp(idx, k));
      return m * std::exp(cplx(0, x[n - 1]));
    });
  return out;
}

cplx predicted_limit(const ClassicalSymbol& rstar, const std::vector<int>& beta0, const ProbeWindow& window, int m,
                     int quad) {
  const int n = window.n;
  if (rstar.n != n) throw PreconditionError("symbol and window dimensions differ");
  if (static_cast<int>(beta0.size()) != n - 1) throw PreconditionError("beta0 must have n - 1 entries");
  int b0 = 0;
  for (int b : beta0) b0 += b;
  if (m < -1) return 0.0;
  const int order = m + 1 - b0;  // largest k + |alpha|
  if (order < 0) return 0.0;
  const auto mom = window_moments(window, order, quad);
  const auto table = MonomialTable::get(n, order);
  Point base;
  base.x.assign(n, 0.0);
  base.xi.assign(n, 0.0);
  base.xi[n - 1] = 1.0;
  cplx acc = 0;
  for (int j = -1; j <= m - b0; ++j) {
    const int deg = -j;
    if (deg > rstar.top_degree) continue;
    const int ti = rstar.top_degree - deg;
    if (rstar.truncated && ti > rstar.depth()) throw PreconditionError("symbol depth insufficient for the limit");
    const Expr q = rstar.term(ti);
    if (q.is_zero()) continue;
    const int ka = m - j - b0;
    const Jet jet = jet_of(q, base, ka + b0);
    std::vector<int> mu(2 * n, 0);
    for (int k = 0; k + 1 < n; ++k) mu[n + 1 + k] = beta0[k];
    for (int idx = table->degree_begin(ka); idx < table->degree_end(ka); ++idx) {
      for (int k = 0; k < n; ++k) mu[k] = table->exp(idx, k);
      acc += jet.derivative(mu) / table->factorial(idx) * mom[idx];
    }
  }
  return acc;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::match: return "match";
    case Verdict::decay: return "decay";
    default: return "inconclusive";
  }
}

int exit_code(Verdict v) { return v == Verdict::inconclusive ? 3 : 0; }

cplx extrapolate_to_zero(const std::vector<double>& h, const std::vector<cplx>& s, int points) {
  if (h.size() != s.size() || h.empty()) throw PreconditionError("extrapolation needs matching nonempty data");
  points = std::max(1, std::min<int>(points, static_cast<int>(h.size())));
  const std::size_t off = h.size() - points;
  // Neville at 0
  std::vector<cplx> p(s.begin() + off, s.end());
  for (int k = 1; k < points; ++k)
    for (int i = points - 1; i >= k; --i) {
      const double hi = h[off + i], hk = h[off + i - k];
      p[i] = (hk * p[i] - hi * p[i - 1]) / (hk - hi);
    }
  return p[points - 1];
}

AsymptoticReport decay_fit(const std::vector<double>& tau, const std::vector<cplx>& I, int m,
                           std::optional<cplx> predicted) {
  if (tau.size() != I.size()) throw PreconditionError("tau and I lengths differ");
  if (tau.size() < 5) throw PreconditionError("decay fit needs at least five tau values");
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(tau[i] > 0)) throw PreconditionError("tau values must be positive");
    if (i && !(tau[i] > tau[i - 1])) throw PreconditionError("tau grid must be strictly increasing");
  }
  AsymptoticReport r;
  r.tau = tau;
  r.I = I;
  r.m = m;
  std::vector<double> mag(I.size());
  for (std::size_t i = 0; i < I.size(); ++i) {
    mag[i] = std::abs(I[i]);
    if (!(mag[i] > 0) || !std::isfinite(mag[i])) throw NumericalError("I_tau vanishes or is not finite; degenerate fit");
  }
  r.fit = loglog_fit(tau, mag);
  r.low_r2 = r.fit.r2 < 0.9;
  std::vector<double> h(tau.size());
  std::vector<cplx> s(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) {
    h[i] = 1 / tau[i];
    s[i] = std::pow(tau[i], m) * I[i];
  }
  r.extrapolated = extrapolate_to_zero(h, s, 5);
  r.predicted = predicted;
  r.verdict = Verdict::inconclusive;
  if (predicted && std::abs(*predicted) > 0) {
    r.rel_error = std::abs(r.extrapolated - *predicted) / std::abs(*predicted);
    if (r.rel_error < 0.05) r.verdict = Verdict::match;
  }
  if (r.verdict != Verdict::match && r.fit.slope <= -(m + 0.8)) r.verdict = Verdict::decay;
  return r;
}

namespace {
nlohmann::json cjson(cplx c) { return {c.real(), c.imag()}; }
}  // namespace

nlohmann::json to_json(const AsymptoticReport& r) {
  nlohmann::json j;
  j["tau"] = r.tau;
  j["I"] = nlohmann::json::array();
  for (cplx c : r.I) j["I"].push_back(cjson(c));
  j["m"] = r.m;
  j["slope"] = r.fit.slope;
  j["intercept"] = r.fit.intercept;
  j["r2"] = r.fit.r2;
  j["low_r2"] = r.low_r2;
  j["extrapolated"] = cjson(r.extrapolated);
  j["predicted"] = r.predicted ? cjson(*r.predicted) : nlohmann::json(nullptr);
  j["rel_error"] = r.predicted ? nlohmann::json(r.rel_error) : nlohmann::json(nullptr);
  j["verdict"] = to_string(r.verdict);
  return j;
}

std::string to_csv(const AsymptoticReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "tau,re_I,im_I,abs_I\n";
  for (std::size_t i = 0; i < r.tau.size(); ++i)
    os << r.tau[i] << ',' << r.I[i].real() << ',' << r.I[i].imag() << ',' << std::abs(r.I[i]) << '\n';
  return os.str();
}

StationaryPhase stationary_phase(const Expr& phi, const Expr& u, int D, double lambda, const std::vector<double>& x0) {
  if (D < 1 || static_cast<int>(x0.size()) != D) throw PreconditionError("x0 must have D entries");
  if (!(lambda > 0)) throw PreconditionError("lambda must be positive");
  if (phi.max_index() >= D || u.max_index() >= D) throw PreconditionError("phase or amplitude uses more than D variables");
  Point p;
  p.x = x0;
  p.xi.assign(D, 0.0);
  double g = 0;
  for (int k = 0; k < D; ++k) g = std::max(g, std::abs(evaluate(differentiate(phi, xvar(k)), p)));
  if (g > 1e-9) throw PreconditionError("x0 is not a critical point of the phase");
  if (std::abs(evaluate(phi, p).imag()) > 1e-12) throw PreconditionError("phase must be real");
  Eigen::MatrixXd H(D, D);
  for (int a = 0; a < D; ++a)
    for (int b = a; b < D; ++b) {
      const cplx h = evaluate(differentiate(differentiate(phi, xvar(a)), xvar(b)), p);
      if (std::abs(h.imag()) > 1e-12) throw PreconditionError("phase must be real");
      H(a, b) = H(b, a) = h.real();
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const auto& ev = es.eigenvalues();
  const double big = std::max(1.0, ev.cwiseAbs().maxCoeff());
  StationaryPhase s;
  s.det = 1;
  for (int k = 0; k < D; ++k) {
    if (std::abs(ev[k]) < 1e-10 * big) throw DomainError("degenerate Hessian at the critical point");
    s.signature += ev[k] > 0 ? 1 : -1;
    s.det *= ev[k];
  }
  s.A0 = std::pow(2 * M_PI, D / 2.0) * std::exp(cplx(0, M_PI * s.signature / 4)) / std::sqrt(std::abs(s.det));
  s.value = std::exp(cplx(0, lambda) * evaluate(phi, p)) * s.A0 * evaluate(u, p) * std::pow(lambda, -D / 2.0);
  s.error_order = -(D / 2.0 + 1);
  return s;
}

NormCheck verify_norm_estimates(const std::vector<double>& tau, const std::vector<double>& norms, double cited,
                                double slack) {
  NormCheck c;
  c.fit = loglog_fit(tau, norms);
  c.cited = cited;
  c.pass = c.fit.slope <= cited + slack;
  return c;
}

NormStudy model_norm_study(const NormStudyOptions& opt) {
  if (opt.tau.size() < 2) throw PreconditionError("norm study needs at least two tau values");
  const int n = opt.n;
  std::vector<int> beta0 = opt.beta0.empty() ? std::vector<int>(n - 1, 0) : opt.beta0;
  const ModelSolution ms = model_solution(n, opt.radius, prescription_data(beta0), opt.J);
  const Compiled wc(ms.w), ac(ms.amplitude()), rc(ms.pstar_residual());
  const std::vector<double> xi0(n, 0.0);
  const Field w = [&](const double* x) { return wc.eval(x, xi0.data(), n); };
  const Field amp = [&](const double* x) { return ac.eval(x, xi0.data(), n); };
  const Field res = [&](const double* x) { return rc.eval(x, xi0.data(), n); };
  NormStudy st;
  st.margin = ms.margin;
  st.dre_min = ms.dre_min;
  st.rows.resize(opt.tau.size());
  parallel_for(static_cast<int>(opt.tau.size()), opt.workers, [&](int i) {
    const double tau = opt.tau[i];
    NormStudyRow& row = st.rows[i];
    row.tau = tau;
    row.half_width = 2 * std::min(opt.radius, 10.5 / std::sqrt(tau));
    std::vector<double> carrier(n, 0.0);
    carrier[n - 1] = tau;
    const GridSpec grid = GridSpec::cube(n, opt.points, row.half_width, carrier);
    const GridFunction v = assemble_v(w, amp, tau, -n, grid);
    row.norm_v = sobolev_norm(v, opt.s_minus);
    row.norm_v_plus = sobolev_norm(v, opt.s_plus);
    row.norm_pstar = sobolev_norm(assemble_v(w, res, tau, -n, grid), opt.s_plus);
    row.scaled = std::pow(tau, opt.k) * row.norm_pstar;
    row.resolved = row.norm_pstar > kNormFloor * row.norm_v_plus;
  });
  std::vector<double> tv, nv, rt, rs;
  for (const auto& r : st.rows) {
    tv.push_back(r.tau);
    nv.push_back(r.norm_v);
    if (r.resolved) {
      rt.push_back(r.tau);
      rs.push_back(r.scaled);
    }
  }
  st.v_check = verify_norm_estimates(tv, nv, opt.s_minus);
  if (rt.size() >= 2) st.pstar_fit = loglog_fit(rt, rs);
  st.decreasing = true;
  for (std::size_t i = 1; i < st.rows.size(); ++i) {
    const auto &a = st.rows[i - 1], &b = st.rows[i];
    if (b.resolved && !(a.resolved && b.scaled < a.scaled)) st.decreasing = false;
  }
  return st;
}

nlohmann::json to_json(const NormStudy& s) {
  nlohmann::json j;
  j["margin"] = s.margin;
  j["dre_min"] = s.dre_min;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : s.rows)
    j["rows"].push_back({{"tau", r.tau},
                         {"half_width", r.half_width},
                         {"norm_v", r.norm_v},
                         {"norm_pstar", r.norm_pstar},
                         {"scaled_pstar", r.scaled},
                         {"norm_v_plus", r.norm_v_plus},
                         {"resolved", r.resolved}});
  j["v_slope"] = s.v_check.fit.slope;
  j["v_r2"] = s.v_check.fit.r2;
  j["v_cited"] = s.v_check.cited;
  j["v_pass"] = s.v_check.pass;
  j["pstar_slope"] = s.pstar_fit.slope;
  j["pstar_decreasing"] = s.decreasing;
  return j;
}

}  // namespace mlw
