// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Approximate null solutions of P*: the eiconal system for the Taylor
// expansion of the phase along a bicharacteristic, the transport system for
// the leading amplitude, grid assembly, and the explicit solution for the
// model operator D_1 + i x_1 D_n.
//
// Conventions: t = x_1, x' = (x_2..x_n), d = n - 1.  The phase is
//   w(t, x') = w0 + <z, eta> + sum_{2 <= |mu| <= M} W_mu z^mu / mu!,
// z = x' - y(t), with W_mu indexed by multi-indices (symmetric by
// construction).  Amplitudes are phi(t, x') = sum_{|alpha| < M} phi_alpha z^alpha.
#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mlw/grid.hpp"
#include "mlw/jet.hpp"
#include "mlw/ode.hpp"
#include "mlw/symexpr.hpp"

namespace mlw {

struct PhaseOptions {
  int M = 3;
  double t0 = std::numeric_limits<double>::quiet_NaN();  // NaN: midpoint of the span
  OdeOptions ode{1e-10, 1e-9, 1e-2, 1e-12, 0.01, 200000};
};

enum class W0Mode { none, point, interval };

struct PhaseExpansion {
  int n = 0, d = 0, M = 0;
  double t_a = 0, t_b = 0, t0 = 0;
  Expr f;                                      // real, independent of xi_1
  std::shared_ptr<const MonomialTable> table;  // d variables, order M
  OdeSolution sol;                             // ascending in t
  cplx w0_shift = 0;
  W0Mode mode = W0Mode::none;
  double core_a = 0, core_b = 0;  // minimizer (point mode: core_a == core_b)
  double pd_min = 0;              // min over accepted steps of min eig(Im W - I/2)
  int pd_checks = 0;

  int state_size() const;
  int w_offset(int table_idx) const;  // real part; imaginary part follows
  int w0_offset() const;

  std::vector<double> state(double t) const;
  std::vector<double> rhs(double t, const std::vector<double>& s) const;
  std::vector<double> y(double t) const;
  std::vector<double> eta(double t) const;
  cplx w0(double t) const;
  cplx coeff(double t, int table_idx) const;  // W_mu for |mu| >= 2
  Eigen::MatrixXcd hessian(double t) const;   // W_jk
  cplx w(double t, const double* xprime) const;
  std::vector<cplx> grad_x(double t, const double* xprime) const;  // dw/dx'
};

// Integrates the phase system from t0 toward both ends of [t_a, t_b] with
// y(t0) = init.x', eta(t0) = init.xi', W_jk(t0) = i delta_jk, other W and w0
// zero.  Throws NumericalError when Im W - I/2 stops being positive definite.
PhaseExpansion solve_phase_system(const Expr& f, int n, const Point& init, double t_a, double t_b,
                                  const PhaseOptions& opt = {});

// Additive normalization of w0: min Im w0 = 0 and Re w0 = 0 at the minimizer
// (point) or at the middle of the flat core (interval).  Throws
// PreconditionError when the minimum is not interior (f never changed sign).
PhaseExpansion normalize_w0(const PhaseExpansion& phase, W0Mode mode, double flat_tol = 1e-13);

// Symbolic-expansion check of the eiconal equation: max over node times and
// |x' - y(t)| = h of |dw/dt - i f~(t, x', dw/dx')|, with f~ the order-M
// Taylor expansion in xi' at eta(t).
double eiconal_residual(const PhaseExpansion& phase, double h, int directions = 16, int max_times = 40);

struct SlopeFit {
  double slope = 0, intercept = 0, r2 = 0;
};
SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

struct AmplitudeSet {
  int d = 0, M = 0;
  double t0 = 0;
  std::vector<int> beta0;
  std::shared_ptr<const MonomialTable> table;  // d variables, order M - 1
  OdeSolution sol;                             // ascending in t, re/im interleaved

  cplx coeff(double t, int table_idx) const;
  std::vector<cplx> coeffs(double t) const;
  cplx eval(const PhaseExpansion& phase, double t, const double* xprime) const;
};

using TransportMatrix = std::function<Eigen::MatrixXcd(double t)>;

// D_t phi + A(t) phi = 0 from phi(t0) over [t_a, t_b].
OdeSolution solve_linear_transport(const TransportMatrix& A, const Eigen::VectorXcd& phi0, double t0, double t_a,
                                   double t_b, const OdeOptions& opt = {1e-12, 1e-11, 1e-2, 1e-12, 0.01, 200000});

// Matrix of L in the basis z^beta, |beta| < M, where D_t phi = -L phi is the
// tau^0 part of e^{-i tau w} P*(phi e^{i tau w}) for P = D_t + i f(t, x, D_x') + p0.
Eigen::MatrixXcd transport_matrix(const PhaseExpansion& phase, const Expr& p0, double t);

// Leading amplitude with D^{beta0} phi0(t0, y(t0)) = 1 and the other
// coefficients zero at t0.  Only phi_0 is constructed (amp_count must be 0).
AmplitudeSet solve_transport(const PhaseExpansion& phase, const Expr& p0, const std::vector<int>& beta0,
                             double t0 = std::numeric_limits<double>::quiet_NaN(), int amp_count = 0);

using Field = std::function<cplx(const double* x)>;

// Samples tau^{N+n} e^{i tau w} amp on the grid (times e^{-i carrier.x}).
// Throws NumericalError when tau |grad Re w - carrier/tau| h > pi at a
// sample where the result is not negligible.
GridFunction assemble_v(const Field& w, const Field& amp, double tau, int N, const GridSpec& grid);

struct CutoffSpec {
  double r_in = 0.5, r_out = 0.8;  // radial, in |x' - y(t)|
  double t_margin = 0.1;           // t cutoff 1 on [t_a + 2m, t_b - 2m], 0 outside [t_a + m, t_b - m]
};
GridFunction assemble_v(const PhaseExpansion& phase, const AmplitudeSet& amp, double tau, int N,
                        const GridSpec& grid, const CutoffSpec& cut = {});

// Smooth step: 1 for s <= a, 0 for s >= b, flat transitions.
double smooth_step(double s, double a, double b);
Expr smooth_step_expr(const Expr& s, double a, double b);

// Truncated power series in x (n variables, total degree <= J).
struct CKAmplitude {
  int n = 0, J = 0;
  std::shared_ptr<const MonomialTable> table;
  std::vector<cplx> c;
  Expr to_expr() const;
  cplx operator()(const double* x) const;
};

// Taylor data of the initial function f(x') (multi-index over x_2..x_n, coefficient).
using TaylorData = std::vector<std::pair<std::vector<int>, cplx>>;
// Taylor data realizing D^{beta0} f(0) = 1 and D^gamma f(0) = 0 otherwise.
TaylorData prescription_data(const std::vector<int>& beta0);

// Solves D_1 phi - i x_1 D_n phi = 0 with phi(0, x') = f(x') recursively in the x_1 degree.
CKAmplitude solve_ck_amplitude(int n, const TaylorData& initial, int J);

struct ModelSolution {
  int n = 0;
  double radius = 0, r_in = 0;
  Expr w, phi, chi;  // phase, CK amplitude, radial cutoff
  double margin = 0;   // min over the support ball of (Im w - |x|^2/4)/|x|^2
  double dre_min = 0;  // min |grad Re w| over the support ball
  Expr amplitude() const { return chi * phi; }
  Expr pstar_residual() const;  // P*(chi phi) for P = D_1 + i x_1 D_n
};

// Model phase w = x_n + i(x_1^2 + ... + x_{n-1}^2 + (x_n + i x_1^2/2)^2)/2 with
// amplitude from solve_ck_amplitude and a cutoff equal to 1 on |x| <= 0.8 radius.
ModelSolution model_solution(int n, double radius, const TaylorData& initial, int J);
Expr model_phase(int n);

nlohmann::json to_json(const PhaseExpansion& p, int samples = 65);
nlohmann::json to_json(const AmplitudeSet& a, int samples = 65);

}  // namespace mlw
