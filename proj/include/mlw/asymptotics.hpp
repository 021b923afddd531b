// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pairings of R* v_tau against shrinking windows, the symbol action on
// Gaussian wave packets, limit prediction from symbol jets, decay fits, the
// stationary-phase primitive and norm-slope checks for the model family.
//
// Variables follow the wkb module: t = x_1, x' = (x_2..x_n).  Symbols acting
// in x' carry no xi_1 dependence; the covector eta is given on x' (size n - 1).
#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlw/grid.hpp"
#include "mlw/symbol.hpp"
#include "mlw/symexpr.hpp"
#include "mlw/wkb.hpp"

namespace mlw {

// H(x) = prod_k bump((x_k - center_k) / radius_k).
struct ProbeWindow {
  int n = 2;
  std::vector<double> center, radius;
  int N = 2;

  static ProbeWindow standard(int n);  // centers (0.3, 0.2, 0.2, ...), radii 1
  double operator()(const double* x) const;
  Expr to_expr() const;
  void validate() const;
};

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int q, std::vector<double>& nodes, std::vector<double>& weights);

// Phase, amplitude and covector of a wave packet phi e^{i tau w}.
struct WavePacket {
  int n = 2;
  Expr w, phi;
  std::vector<double> eta;  // on x'
};

WavePacket model_packet(int n, const std::vector<int>& beta0, int J = 8);

// Sum_{|alpha| < k} q^{(alpha)}(x, tau eta) e^{-i tau w} (D - tau eta)^alpha (phi e^{i tau w}) / alpha!
// as a function of x, for one fixed tau.  Multiply by e^{i tau w} for the action.
class GaussianAction {
 public:
  GaussianAction(const Expr& q, const WavePacket& v, double tau, int k);
  cplx reduced(const double* x) const;  // without the factor e^{i tau w}
  cplx operator()(const double* x) const;

 private:
  int n_;
  double tau_;
  std::vector<double> eta_;
  Compiled w_;
  std::vector<std::pair<Compiled, Compiled>> terms_;  // coefficient, G_alpha / alpha!
};

// Samples q(x, D)(phi e^{i tau w}) on the grid via GaussianAction.
GridFunction apply_symbol_gaussian(const Expr& q, const WavePacket& v, double tau, int k, const GridSpec& grid);

// lambda_J = sum_{j + |alpha| + l = J} sum_{|beta| <= L} q_{-j}^{(alpha + beta)}(t, x, eta)
//            (w_x' - eta)^beta / beta! D^alpha phi_l,
// where q_{-j} is the term of degree -j.  Throws PreconditionError when a
// fiber variable sits inside normXiPrime.
Expr lambda_profile(const ClassicalSymbol& rstar, const WavePacket& v, const std::vector<Expr>& phis, int J,
                    int taylor_order = 4);

struct ItauOptions {
  int adjoint_depth = 3;
  int action_terms = 4;
  int quad = 32;
  int quad_max = 512;
  double quad_tol = 1e-8;
  int workers = 1;
};

// tau^n int H(tau x) R* v_tau(x) dx in the scaled variables, R* = adjoint of
// r with the x' sum only.  Throws NumericalError when doubling the quadrature
// does not settle to quad_tol.
cplx compute_I_tau(const ClassicalSymbol& r, const WavePacket& v, const ProbeWindow& window, double tau,
                   const ItauOptions& opt = {});
std::vector<cplx> compute_I_tau(const ClassicalSymbol& r, const WavePacket& v, const ProbeWindow& window,
                                const std::vector<double>& taus, const ItauOptions& opt = {});
// The same integral over x directly (window of width 1/tau); for cross-checks.
cplx compute_I_tau_unscaled(const ClassicalSymbol& r, const WavePacket& v, const ProbeWindow& window, double tau,
                            const ItauOptions& opt = {});

// int H(t, x) e^{i x_{n-1}} t^k x^alpha over the window, for all k + |alpha| <= order.
// Indexed by the n-variable monomial table (slot 0 is t).
std::vector<cplx> window_moments(const ProbeWindow& window, int order, int quad = 64);

// Limit of tau^m I_tau predicted from the Taylor coefficients of the terms of
// rstar at (0, 0; xi0) for the prescription beta0.
cplx predicted_limit(const ClassicalSymbol& rstar, const std::vector<int>& beta0, const ProbeWindow& window, int m,
                     int quad = 64);

enum class Verdict { match, decay, inconclusive };
std::string to_string(Verdict v);
int exit_code(Verdict v);

struct AsymptoticReport {
  std::vector<double> tau;
  std::vector<cplx> I;
  int m = 0;
  SlopeFit fit;
  bool low_r2 = false;
  cplx extrapolated = 0;
  std::optional<cplx> predicted;
  double rel_error = 0;  // vs predicted, when available
  Verdict verdict = Verdict::inconclusive;
};

// Needs at least five strictly increasing tau values.
AsymptoticReport decay_fit(const std::vector<double>& tau, const std::vector<cplx>& I, int m,
                           std::optional<cplx> predicted = std::nullopt);
nlohmann::json to_json(const AsymptoticReport& r);
std::string to_csv(const AsymptoticReport& r);

// Polynomial extrapolation to h = 0 of samples s(h) from the last `points` entries.
cplx extrapolate_to_zero(const std::vector<double>& h, const std::vector<cplx>& s, int points);

struct StationaryPhase {
  cplx value = 0;  // e^{i lambda phi(x0)} A0 u(x0) lambda^{-D/2}
  cplx A0 = 0;
  int signature = 0;
  double det = 0;
  double error_order = 0;  // exponent of the remainder bound, -(D/2 + 1)
};

// Leading term of int e^{i lambda phi} u over R^D at a non-degenerate real
// critical point x0; phi and u are expressions in x_1..x_D.
StationaryPhase stationary_phase(const Expr& phi, const Expr& u, int D, double lambda, const std::vector<double>& x0);

struct NormCheck {
  SlopeFit fit;
  double cited = 0;
  bool pass = false;
};

// Pass when the fitted log-log slope is at most cited + slack.
NormCheck verify_norm_estimates(const std::vector<double>& tau, const std::vector<double>& norms, double cited,
                                double slack = 0.2);

struct NormStudyOptions {
  int n = 2;
  std::vector<double> tau{16, 32, 64, 128, 256, 512, 1024};
  int points = 256;
  int J = 8;
  double radius = 1.0;
  std::vector<int> beta0;  // empty: zeros
  double s_minus = -2, s_plus = 1;
  int k = 2;
  int workers = 1;
};

struct NormStudyRow {
  double tau = 0, half_width = 0;
  double norm_v = 0;       // ||v||_(s_minus)
  double norm_pstar = 0;   // ||P* v||_(s_plus)
  double scaled = 0;       // tau^k ||P* v||_(s_plus)
  double norm_v_plus = 0;  // ||v||_(s_plus)
  bool resolved = true;    // norm_pstar above the round-off floor
};

struct NormStudy {
  std::vector<NormStudyRow> rows;
  double margin = 0, dre_min = 0;
  NormCheck v_check;
  SlopeFit pstar_fit;   // over resolved rows only (zero when fewer than two)
  bool decreasing = false;
};

// Relative round-off floor of the discrete norms: ||P* v|| below
// kNormFloor ||v||_(s_plus) counts as zero.
constexpr double kNormFloor = 1e-12;

// v_tau = chi phi e^{i tau w} for the model operator, without the tau^{N+n}
// factor.  `decreasing` holds when tau^k ||P* v|| strictly decreases along
// the grid until it drops below the floor and stays there.
NormStudy model_norm_study(const NormStudyOptions& opt = {});
nlohmann::json to_json(const NormStudy& s);

}  // namespace mlw
