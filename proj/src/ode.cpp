// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#include "mlw/ode.hpp"

#include <algorithm>
#include <cmath>

#include "mlw/error.hpp"

namespace mlw {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

std::size_t locate(const std::vector<double>& t, double s) {
  const bool fwd = t.back() >= t.front();
  auto it = fwd ? std::upper_bound(t.begin(), t.end(), s)
                : std::upper_bound(t.begin(), t.end(), s, [](double a, double b) { return a > b; });
  std::size_t i = static_cast<std::size_t>(it - t.begin());
  if (i == 0) return 0;
  return std::min(i - 1, t.size() - 2);
}

}  // namespace

std::vector<double> OdeSolution::at(double s) const {
  if (t.size() == 1) return y[0];
  const std::size_t i = locate(t, s);
  const double h = t[i + 1] - t[i];
  const double th = std::clamp((s - t[i]) / h, 0.0, 1.0);
  const double h00 = (1 + 2 * th) * (1 - th) * (1 - th), h10 = th * (1 - th) * (1 - th);
  const double h01 = th * th * (3 - 2 * th), h11 = th * th * (th - 1);
  std::vector<double> out(y[i].size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = h00 * y[i][k] + h10 * h * dy[i][k] + h01 * y[i + 1][k] + h11 * h * dy[i + 1][k];
  return out;
}

std::vector<double> OdeSolution::derivative_at(double s) const {
  if (t.size() == 1) return dy[0];
  const std::size_t i = locate(t, s);
  const double h = t[i + 1] - t[i];
  const double th = std::clamp((s - t[i]) / h, 0.0, 1.0);
  const double d00 = 6 * th * th - 6 * th, d10 = 3 * th * th - 4 * th + 1;
  const double d01 = -d00, d11 = 3 * th * th - 2 * th;
  std::vector<double> out(y[i].size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = (d00 * y[i][k] + d01 * y[i + 1][k]) / h + d10 * dy[i][k] + d11 * dy[i + 1][k];
  return out;
}

OdeSolution integrate_dopri(const OdeRhs& f, std::vector<double> y, double t0, double t1, const OdeOptions& opt,
                            const OdeHook& hook) {
  const std::size_t N = y.size();
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  OdeSolution sol;
  std::vector<double> k1(N), k2(N), k3(N), k4(N), k5(N), k6(N), k7(N), tmp(N), ynew(N);
  double t = t0;
  f(t, y, k1);
  sol.t.push_back(t);
  sol.y.push_back(y);
  sol.dy.push_back(k1);
  if (t0 == t1) return sol;
  double h = std::min(opt.h0, std::abs(t1 - t0));
  int steps = 0;
  while (dir * (t1 - t) > 0) {
    if (++steps > opt.max_steps) throw NumericalError("ODE integration exceeded the step budget");
    h = std::min({h, opt.h_max, std::abs(t1 - t)});
    const double hs = dir * h;
    auto stage = [&](std::vector<double>& out, double c, std::initializer_list<std::pair<double, const std::vector<double>*>> terms) {
      for (std::size_t i = 0; i < N; ++i) {
        double acc = y[i];
        for (const auto& [a, k] : terms) acc += hs * a * (*k)[i];
        tmp[i] = acc;
      }
      f(t + c * hs, tmp, out);
    };
    stage(k2, c2, {{a21, &k1}});
    stage(k3, c3, {{a31, &k1}, {a32, &k2}});
    stage(k4, c4, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
    stage(k5, c5, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    stage(k6, 1.0, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    for (std::size_t i = 0; i < N; ++i)
      ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(t + hs, ynew, k7);
    double err = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err = std::max(err, std::abs(ei) / sc);
    }
    if (!std::isfinite(err)) err = 1e10;
    if (err <= 1.0) {
      t += hs;
      if (dir * (t - t1) > -1e-14 * std::max(1.0, std::abs(t1))) t = t1;
      y = ynew;
      bool go = true;
      if (hook) {
        go = hook(t, y);
        f(t, y, k7);
      }
      k1 = k7;
      sol.t.push_back(t);
      sol.y.push_back(y);
      sol.dy.push_back(k1);
      if (!go) {
        sol.stopped = true;
        return sol;
      }
      const double fac = err == 0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= fac;
    } else {
      ++sol.rejected;
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      if (h < opt.h_min) throw NumericalError("ODE step size underflow");
    }
  }
  return sol;
}

}  // namespace mlw
