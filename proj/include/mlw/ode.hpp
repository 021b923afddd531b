// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Adaptive Dormand-Prince 5(4) integration with an accepted-step hook and
// cubic Hermite dense output.
#pragma once

#include <functional>
#include <vector>

namespace mlw {

using OdeRhs = std::function<void(double t, const std::vector<double>& y, std::vector<double>& dy)>;
// Called after each accepted step.  May modify y (projection); returning
// false stops the integration with `stopped` set.
using OdeHook = std::function<bool(double t, std::vector<double>& y)>;

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double h0 = 1e-2;
  double h_min = 1e-12;
  double h_max = 0.25;
  int max_steps = 200000;
};

struct OdeSolution {
  std::vector<double> t;
  std::vector<std::vector<double>> y, dy;
  bool stopped = false;
  int rejected = 0;

  std::vector<double> at(double s) const;  // Hermite interpolation, clamped
  std::vector<double> derivative_at(double s) const;
};

// Integrates from t0 to t1 (either direction).  Throws NumericalError on
// step underflow or when max_steps is exceeded.
OdeSolution integrate_dopri(const OdeRhs& f, std::vector<double> y0, double t0, double t1, const OdeOptions& opt,
                            const OdeHook& hook = nullptr);

}  // namespace mlw
