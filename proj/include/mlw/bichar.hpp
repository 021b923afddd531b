// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bicharacteristics of Re p, sign changes of Im p along them, and the
// minimality analysis of bicharacteristic intervals.  Everything past the
// integrator works in normal-form coordinates: Re p = xi1, Im p independent
// of xi1, curves t -> (t, x', 0, xi') with the transverse label w = (x', xi').
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlw/ode.hpp"
#include "mlw/symexpr.hpp"

namespace mlw {

struct BicharSample {
  double t;
  std::vector<double> x, xi;
};

struct Bicharacteristic {
  std::vector<BicharSample> samples;
  double a = 0, b = 0;
  std::vector<double> w;  // (x', xi') for normal-form curves, empty otherwise
  OdeSolution flow;       // dense output in (x, xi); empty for straight lines

  Point at(double t) const;
  // Uniform resampling on [a, b].
  Bicharacteristic resampled(int count) const;
};

struct IntegrateOptions {
  OdeOptions ode{1e-11, 1e-11, 1e-2, 1e-12, 0.25, 200000};
  double box = 1e3;           // |coordinate| bound of the chart
  double char_tol = 1e-8;     // |Re p(start)| allowed
};

// Flow of (d_xi p_re, -d_x p_re) through `start` (at time 0) over [t_a, t_b],
// t_a <= 0 <= t_b, re-projected onto {p_re = 0} after every accepted step.
Bicharacteristic integrate_bicharacteristic(const Expr& p_re, int n, const Point& start, double t_a, double t_b,
                                            const IntegrateOptions& opt = {});

// Straight normal-form curve over [a, b] with label w.
Bicharacteristic normal_form_curve(int n, const std::vector<double>& w, double a, double b, int samples = 401);

// Principal symbol in normal form.  Im p is evaluated in long double.
class NormalForm {
 public:
  // Throws PreconditionError if Re p != xi1 or Im p depends on xi1.
  NormalForm(const Expr& p, int n);
  static NormalForm unchecked(const Expr& p, int n);

  int n() const { return n_; }
  int wdim() const { return 2 * (n_ - 1); }
  const Expr& symbol() const { return p_; }
  long double im(const Point& p) const;
  long double im_slice(double t, const std::vector<double>& w) const;
  Point slice_point(double t, const std::vector<double>& w) const;
  // True iff Im p depends on xi1 at sampled points.
  bool depends_on_xi1() const;

 private:
  NormalForm() = default;
  Expr p_;
  Compiled c_;
  int n_ = 0;
};

using SliceFn = std::function<long double(double)>;

struct ScanOptions {
  int grid = 4001;
  double bisect_tol = 1e-8;
};

struct SignChange {
  double s_minus, s_plus;
};

// Earliest s_- < s_+ with Im p < 0 at s_- and > 0 at s_+ along the curve,
// both refined towards each other by bisection.
std::optional<SignChange> detect_sign_change(const NormalForm& nf, const Bicharacteristic& g,
                                             const ScanOptions& opt = {});
std::optional<SignChange> detect_sign_change(const SliceFn& g, double a, double b, const ScanOptions& opt = {});

struct Witness {
  double eps, s_minus, s_plus;
};

struct StrongSignChange {
  double a = 0, b = 0;  // [a', b']
  std::vector<Witness> witnesses;
  bool converged = false;
  double interior_max = 0;  // max |Im p| sampled on [a', b']
  double length() const { return b - a; }
};

// Minimal gap inf{t - s : s < t, Im(s) < 0 < Im(t)} realized on the scan
// grid and refined: a' is the supremum of the negative set and b' the
// infimum of the positive set around the optimal pair.
std::optional<StrongSignChange> strong_sign_change(const SliceFn& g, double a, double b, const ScanOptions& opt = {});
std::optional<StrongSignChange> strong_sign_change(const NormalForm& nf, const Bicharacteristic& g,
                                                   const ScanOptions& opt = {});

// Transverse direction: coordinate of w and a sign.  coord == -1 stands for
// the curve's own slice (constant sequence).
struct Approach {
  int coord = -1;
  int sign = 1;
  std::string label(int n) const;
};

struct MinimalityOptions {
  double eps0 = 0.5;
  int k_max = 12;
  int tail = 3;  // liminf taken over the last `tail` offsets
  double tol_L = -1;  // default 0.1 * min(1, |gamma|)
  ScanOptions scan{};
  int workers = 1;
  std::optional<Approach> approach;  // force the approach side
};

struct OffsetRecord {
  Approach dir;
  double offset;
  std::optional<StrongSignChange> outer;  // window [a - offset, b + offset]
  std::optional<StrongSignChange> inner;  // window [a, b]
};

struct LEstimate {
  std::optional<double> A, B;
  double tol_L = 0;
  bool converged = false;
  bool one_sided = true;  // a sampler bounds the infimum from above only
  std::optional<Approach> best;
  std::optional<StrongSignChange> best_interval;  // at the smallest offset
  std::vector<OffsetRecord> records;
};

LEstimate estimate_L(const NormalForm& nf, double a, double b, const std::vector<double>& w0,
                     const MinimalityOptions& opt = {});

struct MinimalityReport {
  std::optional<double> L_estimate, L_A, L_B;
  double a0 = 0, b0 = 0;
  std::optional<double> rho;  // set for non-degenerate intervals
  bool rho_certified = false;
  std::vector<StrongSignChange> witnesses;
  bool converged = false;
  bool degenerate = false;
  bool derivatives_vanish = true;  // transverse derivatives of order <= 4
  double derivative_max = 0;
  std::optional<Approach> approach;
  std::vector<double> w0;
};

MinimalityReport find_minimal_interval(const NormalForm& nf, double a, double b, const std::vector<double>& w0,
                                       const MinimalityOptions& opt = {});

struct RhoOptions {
  int kappa_grid = 200;
  int t_grid = 2001;
  double r0 = 1e-3;
};

struct RhoResult {
  double rho;
  bool certified;  // false when vanishing was never observed (rho = |Gamma|/2)
  double cap;
};

RhoResult rho_minimality(const NormalForm& nf, double a0, double b0, const std::vector<double>& w0,
                         const RhoOptions& opt = {});

struct SequenceEntry {
  double offset;
  std::vector<double> w;
  StrongSignChange interval;
  RhoResult rho;
  double hausdorff;
};

struct SequenceResult {
  std::vector<SequenceEntry> entries;
  std::optional<Approach> approach;
  bool exhausted = false;  // fewer entries than requested
};

// Gamma_j at offsets 1/j along the transverse direction whose slices
// approach [a0, b0] most closely (Hausdorff distance at the last offset).
SequenceResult approximating_sequence(const NormalForm& nf, double a0, double b0, const std::vector<double>& w0,
                                      double a, double b, int count, const MinimalityOptions& opt = {},
                                      const RhoOptions& ropt = {});

struct OneDimResult {
  bool ok = false;
  bool characteristic = true;
  std::vector<double> t;
  std::vector<cplx> c;
  double max_residual = 0;
};

// gamma' = c(t) H_p along the samples.  Throws PreconditionError if gamma'
// vanishes at a sample.
OneDimResult check_one_dim_bichar(const Expr& p, int n, const Bicharacteristic& g);

// Sign of Im p (-1, 0, 1) on an (x1, x2) grid with the remaining
// coordinates frozen at `rest` (x3.., then xi).
std::vector<std::vector<int>> sign_grid(const NormalForm& nf, double x1a, double x1b, double x2a, double x2b, int nx,
                                        int ny, const Point& rest);

nlohmann::json to_json(const StrongSignChange& s);
nlohmann::json to_json(const MinimalityReport& r, int n);

}  // namespace mlw
