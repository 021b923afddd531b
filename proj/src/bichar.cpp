// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#include "mlw/bichar.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "mlw/error.hpp"
#include "mlw/parallel.hpp"

namespace mlw {

// ------------------------------------------------------------ curves

Point Bicharacteristic::at(double t) const {
  if (!flow.t.empty()) {
    auto y = flow.at(t);
    const int n = static_cast<int>(y.size()) / 2;
    return {std::vector<double>(y.begin(), y.begin() + n), std::vector<double>(y.begin() + n, y.end())};
  }
  if (!w.empty()) {
    const int n = static_cast<int>(w.size()) / 2 + 1;
    Point p{std::vector<double>(n), std::vector<double>(n, 0.0)};
    p.x[0] = t;
    for (int k = 1; k < n; ++k) {
      p.x[k] = w[k - 1];
      p.xi[k] = w[n - 1 + k - 1];
    }
    return p;
  }
  // piecewise linear through the samples
  if (samples.empty()) throw PreconditionError("empty bicharacteristic");
  auto it = std::lower_bound(samples.begin(), samples.end(), t, [](const BicharSample& s, double v) { return s.t < v; });
  if (it == samples.begin()) return {it->x, it->xi};
  if (it == samples.end()) return {samples.back().x, samples.back().xi};
  const auto& r = *it;
  const auto& l = *(it - 1);
  const double th = (t - l.t) / (r.t - l.t);
  Point p{l.x, l.xi};
  for (std::size_t k = 0; k < p.x.size(); ++k) {
    p.x[k] += th * (r.x[k] - l.x[k]);
    p.xi[k] += th * (r.xi[k] - l.xi[k]);
  }
  return p;
}

Bicharacteristic Bicharacteristic::resampled(int count) const {
  Bicharacteristic out = *this;
  out.samples.clear();
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? a : a + (b - a) * i / (count - 1);
    Point p = at(t);
    out.samples.push_back({t, p.x, p.xi});
  }
  return out;
}

Bicharacteristic integrate_bicharacteristic(const Expr& p_re, int n, const Point& start, double t_a, double t_b,
                                            const IntegrateOptions& opt) {
  if (!(t_a <= 0 && 0 <= t_b)) throw PreconditionError("time span must contain 0");
  Compiled P(p_re);
  std::vector<Compiled> grad;
  for (int s = 0; s < 2 * n; ++s) grad.emplace_back(differentiate(p_re, var_of_slot(s, n)));
  if (std::abs(P(start).real()) > opt.char_tol) throw PreconditionError("start point is not on {Re p = 0}");
  auto unpack = [n](const std::vector<double>& y) {
    return Point{std::vector<double>(y.begin(), y.begin() + n), std::vector<double>(y.begin() + n, y.end())};
  };
  auto gradient = [&](const Point& p) {
    std::vector<double> g(2 * n);
    for (int s = 0; s < 2 * n; ++s) g[s] = grad[s](p).real();
    return g;
  };
  OdeRhs rhs = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
    auto g = gradient(unpack(y));
    dy.resize(2 * n);
    for (int k = 0; k < n; ++k) {
      dy[k] = g[n + k];
      dy[n + k] = -g[k];
    }
  };
  OdeHook project = [&](double, std::vector<double>& y) {
    for (int it = 0; it < 3; ++it) {
      const Point p = unpack(y);
      const double v = P(p).real();
      if (std::abs(v) < 1e-13) break;
      auto g = gradient(p);
      double g2 = 0;
      for (double c : g) g2 += c * c;
      if (g2 == 0) throw NumericalError("dp vanishes on the bicharacteristic");
      for (int s = 0; s < 2 * n; ++s) y[s] -= v * g[s] / g2;
    }
    for (double c : y)
      if (!(std::abs(c) <= opt.box)) throw NumericalError("bicharacteristic left the chart box");
    if (std::abs(P(unpack(y)).real()) > 1e-9) throw NumericalError("projection onto {Re p = 0} failed");
    return true;
  };
  std::vector<double> y0 = start.x;
  y0.insert(y0.end(), start.xi.begin(), start.xi.end());
  OdeSolution fwd = integrate_dopri(rhs, y0, 0.0, t_b, opt.ode, project);
  OdeSolution bwd = integrate_dopri(rhs, y0, 0.0, t_a, opt.ode, project);
  Bicharacteristic g;
  g.a = t_a;
  g.b = t_b;
  for (std::size_t i = bwd.t.size(); i-- > 1;) {
    g.flow.t.push_back(bwd.t[i]);
    g.flow.y.push_back(bwd.y[i]);
    g.flow.dy.push_back(bwd.dy[i]);
  }
  for (std::size_t i = 0; i < fwd.t.size(); ++i) {
    g.flow.t.push_back(fwd.t[i]);
    g.flow.y.push_back(fwd.y[i]);
    g.flow.dy.push_back(fwd.dy[i]);
  }
  for (std::size_t i = 0; i < g.flow.t.size(); ++i) {
    Point p = unpack(g.flow.y[i]);
    g.samples.push_back({g.flow.t[i], p.x, p.xi});
  }
  return g;
}

Bicharacteristic normal_form_curve(int n, const std::vector<double>& w, double a, double b, int samples) {
  if (static_cast<int>(w.size()) != 2 * (n - 1)) throw PreconditionError("transverse label has the wrong size");
  Bicharacteristic g;
  g.a = a;
  g.b = b;
  g.w = w;
  return g.resampled(samples);
}

// ------------------------------------------------------------ normal form

NormalForm NormalForm::unchecked(const Expr& p, int n) {
  NormalForm f;
  f.p_ = p;
  f.c_ = Compiled(p);
  f.n_ = n;
  return f;
}

NormalForm::NormalForm(const Expr& p, int n) : p_(p), c_(p), n_(n) {
  if (n < 2) throw PreconditionError("normal form needs n >= 2");
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int s = 0; s < 32; ++s) {
    Point q{std::vector<double>(n), std::vector<double>(n)};
    for (auto& v : q.x) v = u(rng);
    for (auto& v : q.xi) v = u(rng);
    const cplx val = c_(q);
    if (std::abs(val.real() - q.xi[0]) > 1e-10 * (1 + std::abs(val)))
      throw PreconditionError("symbol is not in normal form: Re p != xi1");
  }
}

long double NormalForm::im(const Point& p) const {
  std::vector<long double> x(p.x.begin(), p.x.end()), xi(p.xi.begin(), p.xi.end());
  return c_.eval<long double>(x.data(), xi.data(), n_).imag();
}

Point NormalForm::slice_point(double t, const std::vector<double>& w) const {
  Point p{std::vector<double>(n_), std::vector<double>(n_, 0.0)};
  p.x[0] = t;
  for (int k = 1; k < n_; ++k) {
    p.x[k] = w[k - 1];
    p.xi[k] = w[n_ - 1 + k - 1];
  }
  return p;
}

long double NormalForm::im_slice(double t, const std::vector<double>& w) const { return im(slice_point(t, w)); }

bool NormalForm::depends_on_xi1() const {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int s = 0; s < 32; ++s) {
    Point q{std::vector<double>(n_), std::vector<double>(n_)};
    for (auto& v : q.x) v = u(rng);
    for (auto& v : q.xi) v = u(rng);
    const long double a = im(q);
    q.xi[0] += 0.75;
    const long double b = im(q);
    if (std::abs(static_cast<double>(a - b)) > 1e-12 * (1 + std::abs(static_cast<double>(a)))) return true;
  }
  return false;
}

// ------------------------------------------------------------ sign changes

namespace {

int sgn(long double v) { return v < 0 ? -1 : (v > 0 ? 1 : 0); }

// Boundary of {pred} on [lo, hi] with pred(lo) true and pred(hi) false.
std::pair<double, double> bisect(const std::function<bool(double)>& pred, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double m = 0.5 * (lo + hi);
    if (m <= lo || m >= hi) break;
    (pred(m) ? lo : hi) = m;
  }
  return {lo, hi};
}

struct Grid {
  std::vector<double> t;
  std::vector<int> s;
};

Grid scan(const SliceFn& g, double a, double b, int N) {
  Grid G;
  G.t.resize(N);
  G.s.resize(N);
  for (int i = 0; i < N; ++i) {
    G.t[i] = N == 1 ? a : a + (b - a) * i / (N - 1);
    G.s[i] = sgn(g(G.t[i]));
  }
  return G;
}

}  // namespace

std::optional<SignChange> detect_sign_change(const SliceFn& g, double a, double b, const ScanOptions& opt) {
  Grid G = scan(g, a, b, opt.grid);
  int ln = -1;
  for (int i = 0; i < opt.grid; ++i) {
    if (G.s[i] < 0) ln = i;
    else if (G.s[i] > 0 && ln >= 0) {
      auto neg = [&](double t) { return g(t) < 0; };
      auto notpos = [&](double t) { return !(g(t) > 0); };
      const double sm = bisect(neg, G.t[ln], G.t[ln + 1], opt.bisect_tol).first;
      const double sp = bisect(notpos, G.t[i - 1], G.t[i], opt.bisect_tol).second;
      return SignChange{sm, sp};
    }
  }
  return std::nullopt;
}

std::optional<SignChange> detect_sign_change(const NormalForm& nf, const Bicharacteristic& g, const ScanOptions& opt) {
  return detect_sign_change([&](double t) { return nf.im(g.at(t)); }, g.a, g.b, opt);
}

std::optional<StrongSignChange> strong_sign_change(const SliceFn& g, double a, double b, const ScanOptions& opt) {
  Grid G = scan(g, a, b, opt.grid);
  int ln = -1, bl = -1, bp = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < opt.grid; ++i) {
    if (G.s[i] < 0) ln = i;
    else if (G.s[i] > 0 && ln >= 0 && G.t[i] - G.t[ln] < best) {
      best = G.t[i] - G.t[ln];
      bl = ln;
      bp = i;
    }
  }
  if (bl < 0) return std::nullopt;
  auto neg = [&](double t) { return g(t) < 0; };
  auto notpos = [&](double t) { return !(g(t) > 0); };
  const auto [neg_lo, neg_hi] = bisect(neg, G.t[bl], G.t[bl + 1], opt.bisect_tol);
  StrongSignChange r;
  r.a = neg_hi;
  double pos_hi;
  if (g(neg_hi) > 0) {
    r.b = neg_hi;
    pos_hi = neg_hi;
  } else {
    const auto pr = bisect(notpos, neg_hi, G.t[bp], opt.bisect_tol);
    r.b = pr.first;
    pos_hi = pr.second;
  }
  for (int k = 0; k <= 20; ++k) {
    const double eps = std::ldexp(1.0, -k);
    std::optional<double> sm, sp;
    if (r.a - neg_lo < eps) sm = neg_lo;
    if (pos_hi - r.b < eps && pos_hi > r.b) sp = pos_hi;
    for (int m = 1; m < 8 && (!sm || !sp); ++m) {
      if (!sm && g(r.a - eps * m / 8) < 0) sm = r.a - eps * m / 8;
      if (!sp && g(r.b + eps * m / 8) > 0) sp = r.b + eps * m / 8;
    }
    if (!sm || !sp) break;
    r.witnesses.push_back({eps, *sm, *sp});
  }
  r.converged = r.witnesses.size() == 21;
  for (int m = 1; m < 64; ++m)
    r.interior_max = std::max(r.interior_max, static_cast<double>(std::abs(g(r.a + (r.b - r.a) * m / 64))));
  return r;
}

std::optional<StrongSignChange> strong_sign_change(const NormalForm& nf, const Bicharacteristic& g,
                                                   const ScanOptions& opt) {
  return strong_sign_change([&](double t) { return nf.im(g.at(t)); }, g.a, g.b, opt);
}

// ------------------------------------------------------------ minimality

std::string Approach::label(int n) const {
  if (coord < 0) return "slice";
  const std::string base = coord < n - 1 ? "x" + std::to_string(coord + 2) : "xi" + std::to_string(coord - (n - 1) + 2);
  return base + (sign > 0 ? "+" : "-");
}

namespace {

std::vector<double> shifted(const std::vector<double>& w0, const Approach& d, double delta) {
  std::vector<double> w = w0;
  if (d.coord >= 0) w[d.coord] += d.sign * delta;
  return w;
}

}  // namespace

LEstimate estimate_L(const NormalForm& nf, double a, double b, const std::vector<double>& w0,
                     const MinimalityOptions& opt) {
  if (static_cast<int>(w0.size()) != nf.wdim()) throw PreconditionError("transverse label has the wrong size");
  if (!(b > a)) throw PreconditionError("empty curve interval");
  LEstimate est;
  est.tol_L = opt.tol_L > 0 ? opt.tol_L : 0.1 * std::min(1.0, b - a);

  std::vector<Approach> dirs;
  if (opt.approach) {
    dirs.push_back(*opt.approach);
  } else {
    dirs.push_back({-1, 1});
    for (int c = 0; c < nf.wdim(); ++c) {
      dirs.push_back({c, 1});
      dirs.push_back({c, -1});
    }
  }
  for (const auto& d : dirs) {
    const int kmax = d.coord < 0 ? 0 : opt.k_max;
    for (int k = 0; k <= kmax; ++k)
      est.records.push_back({d, d.coord < 0 ? 0.0 : std::ldexp(opt.eps0, -k), std::nullopt, std::nullopt});
  }
  parallel_for(static_cast<int>(est.records.size()), opt.workers, [&](int i) {
    OffsetRecord& r = est.records[i];
    const auto w = shifted(w0, r.dir, r.offset);
    SliceFn g = [&nf, w](double t) { return nf.im_slice(t, w); };
    r.outer = strong_sign_change(g, a - r.offset, b + r.offset, opt.scan);
    r.inner = r.offset == 0 ? r.outer : strong_sign_change(g, a, b, opt.scan);
  });

  std::size_t pos = 0;
  for (const auto& d : dirs) {
    const int kmax = d.coord < 0 ? 0 : opt.k_max;
    const std::size_t begin = pos, end = pos + kmax + 1;
    pos = end;
    const std::size_t tail_begin = d.coord < 0 ? begin : end - std::min<std::size_t>(opt.tail, end - begin);
    std::optional<double> A, B;
    bool complete = true;
    for (std::size_t i = tail_begin; i < end; ++i) {
      const auto& r = est.records[i];
      if (!r.outer) {
        complete = false;
        break;
      }
      A = std::min(A.value_or(r.outer->length()), r.outer->length());
      if (r.inner) B = std::min(B.value_or(r.inner->length()), r.inner->length());
    }
    if (!complete) continue;
    if (!est.A || *A < *est.A - 0.1 * est.tol_L) {
      est.A = A;
      est.best = d;
      est.best_interval = est.records[end - 1].outer;
    }
    if (B && (!est.B || *B < *est.B)) est.B = B;
  }
  est.converged = est.A && est.B && std::abs(*est.A - *est.B) < est.tol_L;
  return est;
}

namespace {

void for_each_multi(int dims, int order, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> a(dims, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == dims - 1) {
      a[i] = left;
      fn(a);
      return;
    }
    for (int k = left; k >= 0; --k) {
      a[i] = k;
      rec(i + 1, left - k);
    }
  };
  if (dims > 0) rec(0, order);
}

}  // namespace

MinimalityReport find_minimal_interval(const NormalForm& nf, double a, double b, const std::vector<double>& w0,
                                       const MinimalityOptions& opt) {
  LEstimate est = estimate_L(nf, a, b, w0, opt);
  MinimalityReport rep;
  rep.w0 = w0;
  rep.L_A = est.A;
  rep.L_B = est.B;
  rep.L_estimate = est.A;
  rep.converged = est.converged;
  rep.approach = est.best;
  if (!est.A) return rep;
  rep.a0 = est.best_interval->a;
  rep.b0 = est.best_interval->b;
  rep.degenerate = rep.b0 - rep.a0 < est.tol_L;
  for (const auto& r : est.records)
    if (r.dir.coord == est.best->coord && r.dir.sign == est.best->sign && r.outer) rep.witnesses.push_back(*r.outer);
  if (!rep.degenerate) {
    const int n = nf.n(), d = nf.wdim();
    std::vector<Compiled> ders;
    for (int ord = 1; ord <= 4; ++ord)
      for_each_multi(d, ord, [&](const std::vector<int>& al) {
        Expr e = nf.symbol();
        for (int c = 0; c < d; ++c)
          if (al[c]) e = differentiate(e, c < n - 1 ? xvar(c + 1) : xivar(c - (n - 1) + 1), al[c]);
        ders.emplace_back(e);
      });
    for (int i = 0; i <= 100; ++i) {
      const Point p = nf.slice_point(rep.a0 + (rep.b0 - rep.a0) * i / 100, w0);
      std::vector<long double> x(p.x.begin(), p.x.end()), xi(p.xi.begin(), p.xi.end());
      for (const auto& c : ders)
        rep.derivative_max =
            std::max(rep.derivative_max, static_cast<double>(std::abs(c.eval<long double>(x.data(), xi.data(), n).imag())));
    }
    rep.derivatives_vanish = rep.derivative_max < 1e-6;
    const RhoResult rr = rho_minimality(nf, rep.a0, rep.b0, w0);
    rep.rho = rr.rho;
    rep.rho_certified = rr.certified;
  }
  return rep;
}

RhoResult rho_minimality(const NormalForm& nf, double a0, double b0, const std::vector<double>& w0,
                         const RhoOptions& opt) {
  if (!(b0 > a0)) throw PreconditionError("rho-minimality needs a non-degenerate interval");
  const int d = nf.wdim();
  std::vector<std::vector<double>> offs;
  offs.push_back(std::vector<double>(d, 0.0));
  for (int c = 0; c < d; ++c)
    for (double s : {-1.0, -0.5, 0.5, 1.0}) {
      std::vector<double> o(d, 0.0);
      o[c] = s * opt.r0;
      offs.push_back(o);
    }
  if (d <= 6)
    for (int mask = 0; mask < (1 << d); ++mask) {
      std::vector<double> o(d);
      for (int c = 0; c < d; ++c) o[c] = ((mask >> c) & 1 ? 1.0 : -1.0) * opt.r0 / std::sqrt(static_cast<double>(d));
      offs.push_back(o);
    }
  const double lo = a0 - opt.r0, hi = b0 + opt.r0;
  std::vector<double> t(opt.t_grid);
  std::vector<char> nz(opt.t_grid, 0);
  for (int i = 0; i < opt.t_grid; ++i) {
    t[i] = lo + (hi - lo) * i / (opt.t_grid - 1);
    for (const auto& o : offs) {
      std::vector<double> w = w0;
      for (int c = 0; c < d; ++c) w[c] += o[c];
      if (nf.im_slice(t[i], w) != 0) {
        nz[i] = 1;
        break;
      }
    }
  }
  const double cap = 0.5 * (b0 - a0);
  RhoResult r{0.0, true, cap};
  for (int k = opt.kappa_grid; k >= 1; --k) {
    const double kappa = cap * k / opt.kappa_grid;
    const double ta = a0 + kappa - opt.r0, tb = b0 - kappa + opt.r0;
    bool vanish = true;
    for (int i = 0; i < opt.t_grid && vanish; ++i)
      if (t[i] >= ta && t[i] <= tb && nz[i]) vanish = false;
    if (!vanish) {
      r.rho = kappa;
      r.certified = k < opt.kappa_grid;
      break;
    }
  }
  return r;
}

SequenceResult approximating_sequence(const NormalForm& nf, double a0, double b0, const std::vector<double>& w0,
                                      double a, double b, int count, const MinimalityOptions& opt,
                                      const RhoOptions& ropt) {
  SequenceResult out;
  if (count <= 0) return out;
  if (nf.depends_on_xi1()) throw PreconditionError("Im p depends on xi1; the symbol is not in normal form");
  auto slice = [&](const Approach& d, double delta) {
    const auto w = shifted(w0, d, delta);
    return strong_sign_change([&nf, w](double t) { return nf.im_slice(t, w); }, a, b, opt.scan);
  };
  auto hausdorff = [&](const StrongSignChange& s) { return std::max(std::abs(s.a - a0), std::abs(s.b - b0)); };
  if (opt.approach) {
    out.approach = opt.approach;
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < nf.wdim(); ++c)
      for (int sg : {1, -1}) {
        auto s = slice({c, sg}, 1.0 / count);
        if (s && hausdorff(*s) < best - 1e-9) {
          best = hausdorff(*s);
          out.approach = Approach{c, sg};
        }
      }
  }
  if (!out.approach) {
    out.exhausted = true;
    return out;
  }
  std::vector<std::optional<SequenceEntry>> slots(count);
  parallel_for(count, opt.workers, [&](int j) {
    const double delta = 1.0 / (j + 1);
    auto s = slice(*out.approach, delta);
    if (!s) return;
    SequenceEntry e;
    e.offset = delta;
    e.w = shifted(w0, *out.approach, delta);
    e.interval = *s;
    e.rho = s->length() > 0 ? rho_minimality(nf, s->a, s->b, e.w, ropt) : RhoResult{0.0, true, 0.0};
    e.hausdorff = hausdorff(*s);
    slots[j] = e;
  });
  for (auto& s : slots)
    if (s) out.entries.push_back(*s);
    else out.exhausted = true;
  return out;
}

OneDimResult check_one_dim_bichar(const Expr& p, int n, const Bicharacteristic& g) {
  OneDimResult r;
  const auto& S = g.samples;
  if (S.size() < 3) throw PreconditionError("need at least three samples");
  Compiled P(p);
  std::vector<Compiled> dxi, dx;
  for (int k = 0; k < n; ++k) {
    dxi.emplace_back(differentiate(p, xivar(k)));
    dx.emplace_back(differentiate(p, xvar(k)));
  }
  auto coord = [&](std::size_t i, int s) { return s < n ? S[i].x[s] : S[i].xi[s - n]; };
  r.ok = true;
  for (std::size_t i = 0; i < S.size(); ++i) {
    const Point pt{S[i].x, S[i].xi};
    if (std::abs(P(pt)) >= 1e-7) {
      r.characteristic = false;
      r.ok = false;
    }
    // second-order finite differences on a possibly nonuniform grid
    std::size_t i0, i1, i2;
    if (i == 0) std::tie(i0, i1, i2) = std::make_tuple(0, 1, 2);
    else if (i + 1 == S.size()) std::tie(i0, i1, i2) = std::make_tuple(i - 2, i - 1, i);
    else std::tie(i0, i1, i2) = std::make_tuple(i - 1, i, i + 1);
    const double t0 = S[i0].t, t1 = S[i1].t, t2 = S[i2].t, t = S[i].t;
    const double w0 = (2 * t - t1 - t2) / ((t0 - t1) * (t0 - t2));
    const double w1 = (2 * t - t0 - t2) / ((t1 - t0) * (t1 - t2));
    const double w2 = (2 * t - t0 - t1) / ((t2 - t0) * (t2 - t1));
    std::vector<double> gp(2 * n);
    double gn = 0;
    for (int s = 0; s < 2 * n; ++s) {
      gp[s] = w0 * coord(i0, s) + w1 * coord(i1, s) + w2 * coord(i2, s);
      gn += gp[s] * gp[s];
    }
    gn = std::sqrt(gn);
    if (gn < 1e-14) throw PreconditionError("curve derivative vanishes");
    std::vector<cplx> H(2 * n);
    for (int k = 0; k < n; ++k) {
      H[k] = dxi[k](pt);
      H[n + k] = -dx[k](pt);
    }
    cplx num = 0;
    double den = 0;
    for (int s = 0; s < 2 * n; ++s) {
      num += std::conj(H[s]) * gp[s];
      den += std::norm(H[s]);
    }
    const cplx c = den > 0 ? num / den : cplx(0.0);
    double res = 0;
    for (int s = 0; s < 2 * n; ++s) res += std::norm(gp[s] - c * H[s]);
    res = std::sqrt(res) / gn;
    r.max_residual = std::max(r.max_residual, res);
    if (res >= 1e-4) r.ok = false;
    r.t.push_back(S[i].t);
    r.c.push_back(c);
  }
  return r;
}

std::vector<std::vector<int>> sign_grid(const NormalForm& nf, double x1a, double x1b, double x2a, double x2b, int nx,
                                        int ny, const Point& rest) {
  std::vector<std::vector<int>> out(ny, std::vector<int>(nx));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      Point p = rest;
      p.x[0] = nx == 1 ? x1a : x1a + (x1b - x1a) * i / (nx - 1);
      p.x[1] = ny == 1 ? x2a : x2a + (x2b - x2a) * j / (ny - 1);
      out[j][i] = sgn(nf.im(p));
    }
  return out;
}

nlohmann::json to_json(const StrongSignChange& s) {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& x : s.witnesses) w.push_back({{"eps", x.eps}, {"s_minus", x.s_minus}, {"s_plus", x.s_plus}});
  return {{"a", s.a}, {"b", s.b}, {"length", s.length()}, {"converged", s.converged},
          {"interior_max", s.interior_max}, {"witnesses", w}};
}

nlohmann::json to_json(const MinimalityReport& r, int n) {
  nlohmann::json j;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j["L_estimate"] = opt(r.L_estimate);
  j["L_sequence"] = opt(r.L_A);
  j["L_slice_infimum"] = opt(r.L_B);
  j["one_sided_estimate"] = true;
  j["interval"] = {r.a0, r.b0};
  j["degenerate"] = r.degenerate;
  j["rho"] = opt(r.rho);
  j["rho_certified"] = r.rho_certified;
  j["converged"] = r.converged;
  j["derivatives_vanish"] = r.derivatives_vanish;
  j["derivative_max"] = r.derivative_max;
  j["approach"] = r.approach ? nlohmann::json(r.approach->label(n)) : nlohmann::json(nullptr);
  j["w0"] = r.w0;
  nlohmann::json w = nlohmann::json::array();
  for (const auto& s : r.witnesses) w.push_back({{"a", s.a}, {"b", s.b}});
  j["witnesses"] = w;
  return j;
}

}  // namespace mlw
