#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <random>

#include "mlw/error.hpp"
#include "mlw/grid.hpp"
#include "mlw/symbol.hpp"
#include "mlw/wkb.hpp"

using namespace mlw;

namespace {

const cplx I(0, 1);

Expr P2(const std::string& s) { return parse_expression(s, 2); }

int idx1(const PhaseExpansion& p, std::vector<int> mu) { return p.table->index(mu.data()); }

}  // namespace

TEST_CASE("phase system with f = 0 is stationary", "[wkb]") {
  const Point init{{0, 0.3, -0.2}, {0, 0.5, 1.0}};
  const auto ph = solve_phase_system(Expr(), 3, init, -1, 1, {.M = 3});
  for (double t : {-1.0, -0.3, 0.4, 1.0}) {
    const auto y = ph.y(t), eta = ph.eta(t);
    CHECK(y[0] == Catch::Approx(0.3).margin(1e-15));
    CHECK(y[1] == Catch::Approx(-0.2).margin(1e-15));
    CHECK(eta[0] == Catch::Approx(0.5).margin(1e-15));
    CHECK(eta[1] == Catch::Approx(1.0).margin(1e-15));
    const auto H = ph.hessian(t);
    CHECK(std::abs(H(0, 0) - I) < 1e-15);
    CHECK(std::abs(H(0, 1)) < 1e-15);
    CHECK(std::abs(H(1, 1) - I) < 1e-15);
    for (int idx = ph.table->degree_begin(3); idx < ph.table->size(); ++idx) CHECK(std::abs(ph.coeff(t, idx)) < 1e-15);
    CHECK(std::abs(ph.w0(t)) < 1e-15);
  }
  CHECK(ph.pd_min == Catch::Approx(0.5));
  CHECK(eiconal_residual(ph, 0.1) < 1e-15);

  const auto amp = solve_transport(ph, Expr(), {0, 0});
  const auto c = amp.coeffs(-0.7);
  CHECK(std::abs(c[0] - 1.0) < 1e-14);
  for (std::size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[k]) < 1e-14);
  const double yp[2] = {0.3, -0.2};
  CHECK(std::abs(amp.eval(ph, 0.0, yp) - 1.0) < 1e-14);
}

TEST_CASE("phase system matches a hand-derived reference integrator", "[wkb]") {
  // f = a x xi + b x + c xi + e x^2 with n = 2, M = 2:
  //   y' = -(f_x + Re W f_xi)/Im W, eta' = Re W y' - Im W f_xi,
  //   W' = 2 i (a W + e), w0' = y' eta + i f.
  const double a = 0.4, b = 0.3, c = -0.2, e = 0.25;
  const Expr f = P2("0.4*x2*xi2 + 0.3*x2 - 0.2*xi2 + 0.25*x2^2");
  const Point init{{0, 0.1}, {0, 1.0}};
  const auto ph = solve_phase_system(f, 2, init, -0.5, 0.5, {.M = 2});
  using S = std::array<cplx, 4>;  // y, eta, W, w0
  auto rhs = [&](const S& s) {
    const double y = s[0].real(), eta = s[1].real();
    const cplx W = s[2];
    const double fx = a * eta + b + 2 * e * y, fxi = a * y + c;
    const double yp = -(fx + W.real() * fxi) / W.imag();
    const double ep = W.real() * yp - W.imag() * fxi;
    const double fv = a * y * eta + b * y + c * eta + e * y * y;
    return S{yp, ep, 2.0 * I * (a * W + e), yp * eta + I * fv};
  };
  auto rk4 = [&](double t1) {
    S s{0.1, 1.0, I, 0.0};
    const int steps = 20000;
    const double h = t1 / steps;
    for (int k = 0; k < steps; ++k) {
      const S k1 = rhs(s);
      S u;
      for (int i = 0; i < 4; ++i) u[i] = s[i] + 0.5 * h * k1[i];
      const S k2 = rhs(u);
      for (int i = 0; i < 4; ++i) u[i] = s[i] + 0.5 * h * k2[i];
      const S k3 = rhs(u);
      for (int i = 0; i < 4; ++i) u[i] = s[i] + h * k3[i];
      const S k4 = rhs(u);
      for (int i = 0; i < 4; ++i) s[i] += h / 6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return s;
  };
  for (double t1 : {-0.5, 0.5}) {
    const S ref = rk4(t1);
    CHECK(std::abs(ph.y(t1)[0] - ref[0].real()) < 1e-8);
    CHECK(std::abs(ph.eta(t1)[0] - ref[1].real()) < 1e-8);
    CHECK(std::abs(ph.coeff(t1, idx1(ph, {2})) - ref[2]) < 1e-8);
    CHECK(std::abs(ph.w0(t1) - ref[3]) < 1e-8);
  }
  CHECK(ph.pd_min > 0);
}

TEST_CASE("phase on the p2 vanishing tube keeps w0 flat", "[wkb]") {
  const std::string f = "normXiPrime*(" + profile_f("x1") + "*flatExp1(x2) + " + profile_f("x1 - 1") +
                        "*flatExp1(-x2))";
  const Point init{{0, 0}, {0, 1}};
  const auto ph = solve_phase_system(P2(f), 2, init, -0.5, 3.5, {.M = 3});
  for (double t = -0.5; t <= 3.5; t += 0.25) {
    CHECK(std::abs(ph.w0(t)) == 0.0);
    CHECK(std::abs(ph.y(t)[0]) == 0.0);
  }
}

TEST_CASE("normalize_w0 point, interval and failure modes", "[wkb]") {
  const Point init{{0, 0}, {0, 1}};
  // f = t xi: W stays i, y stays 0, eta = 1 - t^2/2, Im w0 = t^2/2 - t^4/8
  const auto ph = solve_phase_system(P2("x1*xi2"), 2, init, -1, 1, {.M = 3});
  CHECK(std::abs(ph.w0(0.8) - I * (0.32 - 0.8 * 0.8 * 0.8 * 0.8 / 8)) < 1e-9);
  const auto np = normalize_w0(ph, W0Mode::point);
  CHECK(std::abs(np.core_a) < 1e-3);
  CHECK(std::abs(np.w0(np.core_a)) < 1e-12);
  CHECK(np.w0(-1).imag() > 0);
  CHECK(np.w0(1).imag() > 0);

  const auto fl = solve_phase_system(P2("xi2*(" + profile_f("x1") + ")"), 2, init, -1, 3, {.M = 2});
  const auto ni = normalize_w0(fl, W0Mode::interval);
  CHECK(ni.core_a < 0.05);
  CHECK(ni.core_a > -0.3);
  CHECK(ni.core_b > 1.95);
  CHECK(ni.core_b < 2.3);
  for (double t = 0.2; t <= 1.8; t += 0.2) CHECK(std::abs(ni.w0(t)) < 1e-12);
  CHECK(ni.w0(-1).imag() > 0);
  CHECK(ni.w0(3).imag() > 0);

  const auto pos = solve_phase_system(P2("xi2*flatExp(x1 - 2)"), 2, init, -1, 3, {.M = 2});
  CHECK_THROWS_AS(normalize_w0(pos, W0Mode::point), PreconditionError);
}

TEST_CASE("eiconal residual decays like h^(M+1)", "[wkb]") {
  const Expr f = P2("0.3*x2^2*xi2 + 0.2*x1*x2 + 0.1*x2*xi2^2 + 0.15*x2^3 + 0.1*xi2^2 + 0.05*x1*x2^2*xi2");
  const Point init{{0, 0.05}, {0, 1.0}};
  for (int M : {2, 3}) {
    const auto ph = solve_phase_system(f, 2, init, -0.3, 0.3, {.M = M});
    CHECK(ph.pd_min > 0);
    std::vector<double> hs{0.1, 0.05, 0.025}, rs;
    for (double h : hs) rs.push_back(eiconal_residual(ph, h));
    const auto fit = loglog_fit(hs, rs);
    CHECK(fit.slope > M + 1 - 0.3);
    CHECK(fit.slope < M + 1 + 0.3);
  }
  const Expr f3 = parse_expression("0.2*x2*x3*xi2 + 0.1*x2^2*xi3 + 0.1*xi2*xi3 + 0.1*x1*x3^2", 3);
  const auto ph3 = solve_phase_system(f3, 3, Point{{0, 0, 0}, {0, 0.3, 1}}, -0.2, 0.2, {.M = 3});
  std::vector<double> hs{0.1, 0.05, 0.025}, rs;
  for (double h : hs) rs.push_back(eiconal_residual(ph3, h));
  CHECK(std::abs(loglog_fit(hs, rs).slope - 4) < 0.3);
}

TEST_CASE("phase system preconditions", "[wkb]") {
  const Point init{{0, 0}, {0, 1}};
  CHECK_THROWS_AS(solve_phase_system(P2("xi1*x2"), 2, init, -1, 1), PreconditionError);
  CHECK_THROWS_AS(solve_phase_system(P2("i*x2"), 2, init, -1, 1), PreconditionError);
  CHECK_THROWS_AS(solve_phase_system(P2("x2"), 2, init, -1, 1, {.M = 1}), PreconditionError);
  // W' = 2 i a W drives Im W below 1/2 once |2 a t| > pi/3
  CHECK_THROWS_AS(solve_phase_system(P2("2*x2*xi2"), 2, init, -1, 1, {.M = 2}), NumericalError);
}

TEST_CASE("transport reproduces exact null solutions of the model adjoint", "[wkb]") {
  // P = D_t + i t D_x: P* u = 0 is solved by any g(x + i t^2/2).  The phase
  // s + i s^2/2 (s = x + i t^2/2) is what the phase system produces from
  // (y, eta) = (0, 1), and g(s) = i s, -s^2/2 are the prescribed amplitudes
  // for beta0 = 1, 2.
  const Point init{{0, 0}, {0, 1}};
  const auto ph = solve_phase_system(P2("x1*xi2"), 2, init, -1, 1, {.M = 3});
  for (double t : {-0.9, 0.5}) {
    CHECK(std::abs(ph.coeff(t, idx1(ph, {2})) - I) < 1e-10);
    CHECK(std::abs(ph.coeff(t, idx1(ph, {3}))) < 1e-10);
    CHECK(std::abs(ph.eta(t)[0] - (1 - t * t / 2)) < 1e-9);
  }
  CHECK(eiconal_residual(ph, 0.1) < 1e-12);
  const auto a1 = solve_transport(ph, Expr(), {1});
  const auto a2 = solve_transport(ph, Expr(), {2});
  for (double t : {-0.8, 0.3, 1.0}) {
    const auto c1 = a1.coeffs(t), c2 = a2.coeffs(t);
    // table order for d = 1: 1, z, z^2
    CHECK(std::abs(c1[0] - (-t * t / 2)) < 1e-9);
    CHECK(std::abs(c1[1] - I) < 1e-9);
    CHECK(std::abs(c1[2]) < 1e-9);
    CHECK(std::abs(c2[0] - t * t * t * t / 8) < 1e-9);
    CHECK(std::abs(c2[1] - (-I * t * t / 2.0)) < 1e-9);
    CHECK(std::abs(c2[2] + 0.5) < 1e-9);
  }
  // a constant lower-order term c multiplies by e^{-i conj(c) (t - t0)}
  const cplx c0(0.3, 0.7);
  const auto a0 = solve_transport(ph, Expr::constant(c0), {0});
  for (double t : {-0.6, 0.9}) CHECK(std::abs(a0.coeffs(t)[0] - std::exp(-I * std::conj(c0) * t)) < 1e-9);
  CHECK_THROWS_AS(solve_transport(ph, Expr(), {0}, NAN, 1), PreconditionError);
  CHECK_THROWS_AS(solve_transport(ph, Expr(), {3}), PreconditionError);
}

TEST_CASE("planted diagonal transport matrix", "[wkb]") {
  const std::vector<double> lam{0.5, -1.2, 2.0, 0.1};
  Eigen::VectorXcd phi0(4);
  phi0 << cplx(1, 0), cplx(0.5, -0.25), cplx(-1, 2), cplx(0, 1);
  TransportMatrix A = [&](double) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 4);
    for (int k = 0; k < 4; ++k) m(k, k) = I * lam[k];
    return m;
  };
  const auto sol = solve_linear_transport(A, phi0, 0.2, -1, 1.5);
  for (double t : {-1.0, 0.0, 0.7, 1.5}) {
    const auto s = sol.at(t);
    for (int k = 0; k < 4; ++k) {
      // D_t phi + i lam phi = 0  =>  phi = phi(t0) e^{lam (t - t0)}
      const cplx want = phi0(k) * std::exp(lam[k] * (t - 0.2));
      CHECK(std::abs(cplx(s[2 * k], s[2 * k + 1]) - want) < 1e-9 * (1 + std::abs(want)));
    }
  }
}

TEST_CASE("Cauchy-Kovalevsky amplitude for the model", "[wkb]") {
  const auto one = solve_ck_amplitude(3, {{{0, 0}, 1.0}}, 8);
  for (int i = 1; i < one.table->size(); ++i) CHECK(one.c[i] == 0.0);
  CHECK(one.c[0] == 1.0);
  // f = x_n gives phi = x_n + i x_1^2/2
  const auto lin = solve_ck_amplitude(2, {{{1}, 1.0}}, 8);
  const double x[2] = {0.3, -0.7};
  CHECK(std::abs(lin(x) - (x[1] + I * x[0] * x[0] / 2.0)) < 1e-15);
  // D_1 phi - i x_1 D_n phi vanishes through degree J - 1
  const int J = 8;
  for (const auto& beta : std::vector<std::vector<int>>{{0, 0}, {0, 1}, {1, 1}, {0, 2}, {2, 0}}) {
    const auto ck = solve_ck_amplitude(3, prescription_data(beta), J);
    const Expr phi = ck.to_expr();
    const Expr res = cplx(0, -1) * differentiate(phi, xvar(0)) - Expr::x(0) * differentiate(phi, xvar(2));
    const Jet r = jet_of(res, Point{{0, 0, 0}, {0, 0, 0}}, J);
    CHECK(r.max_abs_through(J - 1) < 1e-13);
    // slice x_1 = 0 carries the prescription
    const Jet p = jet_of(phi, Point{{0, 0, 0}, {0, 0, 0}}, 2);
    std::vector<int> mu(6, 0);
    for (int a = 0; a <= 2; ++a)
      for (int b = 0; a + b <= 2; ++b) {
        mu[1] = a;
        mu[2] = b;
        // D^gamma phi(0) = (-i)^{|gamma|} d^gamma phi(0)
        const cplx D = std::pow(cplx(0, -1), a + b) * p.derivative(mu);
        const bool is_beta = a == beta[0] && b == beta[1];
        CHECK(std::abs(D - (is_beta ? 1.0 : 0.0)) < 1e-14);
      }
  }
}

TEST_CASE("model phase and solution", "[wkb]") {
  const Expr w = model_phase(2);
  const Point o{{0, 0}, {0, 0}};
  CHECK(std::abs(evaluate(w, o)) == 0.0);
  CHECK(std::abs(evaluate(differentiate(w, xvar(0)), o)) < 1e-15);
  CHECK(std::abs(evaluate(differentiate(w, xvar(1)), o) - 1.0) < 1e-15);
  // P* w = 0 for P = D_1 + i x_1 D_n
  for (int n : {2, 3}) {
    const Expr wn = model_phase(n);
    const Expr r = cplx(0, -1) * differentiate(wn, xvar(0)) - Expr::x(0) * differentiate(wn, xvar(n - 1));
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int s = 0; s < 20; ++s) {
      Point p{std::vector<double>(n), std::vector<double>(n, 0.0)};
      for (auto& v : p.x) v = u(rng);
      CHECK(std::abs(evaluate(r, p)) < 1e-14);
    }
  }
  // grid minimization of Im w - |x|^2/4 on the ball of radius 0.5
  double mn = INFINITY;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) {
      const double a = -0.5 + i * 0.005, b = -0.5 + j * 0.005;
      if (a * a + b * b > 0.25) continue;
      mn = std::min(mn, evaluate(w, Point{{a, b}, {0, 0}}).imag() - (a * a + b * b) / 4);
    }
  CHECK(mn >= 0);
  const auto m = model_solution(2, 0.5, prescription_data({0}), 8);
  CHECK(m.margin > 0.1);
  CHECK(m.dre_min > 0.8);
  CHECK_THROWS_AS(model_solution(2, 1.5, prescription_data({0}), 8), PreconditionError);
  // with phi = 1 the residual of P* is the cutoff derivative only
  CHECK(std::abs(evaluate(m.pstar_residual(), Point{{0.1, 0.2}, {0, 0}})) < 1e-15);
}

TEST_CASE("assemble_v samples, decay bound and Nyquist check", "[wkb]") {
  const auto g1 = assemble_v([](const double* x) { return cplx(x[1]); }, [](const double*) { return cplx(1.0); }, 1.0,
                             2, GridSpec::cube(2, 16, 1.0));
  for (std::size_t f = 0; f < g1.data.size(); f += 7) {
    double x[2];
    g1.spec.point(f, x);
    CHECK(std::abs(g1.data[f] - std::exp(I * x[1])) < 1e-15);
  }
  const auto m = model_solution(2, 1.0, prescription_data({0}), 8);
  const Compiled wc(m.w), ac(m.amplitude());
  auto at = [](const double* x) { return Point{{x[0], x[1]}, {0, 0}}; };
  const double tau = 64;
  const int N = 2;
  const auto grid = GridSpec::cube(2, 128, 1.2, {0, tau});
  const auto v = assemble_v([&](const double* x) { return wc(at(x)); }, [&](const double* x) { return ac(at(x)); },
                            tau, N, grid);
  const double pref = std::pow(tau, N + 2);
  for (std::size_t f = 0; f < v.data.size(); ++f) {
    double x[2];
    grid.point(f, x);
    const double bound = pref * 1.0 * std::exp(-tau * wc(at(x)).imag());
    CHECK(std::abs(v.data[f]) <= bound * (1 + 1e-12));
    if (x[0] == 0 && x[1] == 0) CHECK(std::abs(v.data[f]) == Catch::Approx(pref));
  }
  CHECK_THROWS_AS(assemble_v([&](const double* x) { return wc(at(x)); }, [&](const double* x) { return ac(at(x)); },
                             tau, N, GridSpec::cube(2, 32, 1.2)),
                  NumericalError);
}

TEST_CASE("assemble_v from a phase expansion", "[wkb]") {
  const auto ph = normalize_w0(solve_phase_system(P2("x1*xi2"), 2, Point{{0, 0}, {0, 1}}, -1, 1, {.M = 3}),
                               W0Mode::point);
  const auto amp = solve_transport(ph, Expr(), {0});
  GridSpec grid = GridSpec::cube(2, 64, 1.0, {0, 16});
  const auto v = assemble_v(ph, amp, 16, 0, grid, {0.3, 0.5, 0.1});
  // on the curve at t = 0 the sample is tau^{N+n} (w = 0 there)
  std::size_t f0 = 32 * 64 + 32;
  double x[2];
  grid.point(f0, x);
  CHECK(x[0] == 0.0);
  CHECK(x[1] == 0.0);
  CHECK(std::abs(v.value(f0) - 256.0) < 1e-7);  // tau^{N+n}
  CHECK(std::abs(v.data[5]) == 0.0);
}

TEST_CASE("grid binary round trip", "[grid]") {
  GridFunction g;
  g.spec = GridSpec::cube(2, 4, 1.0, {0.5, -1});
  g.spec.dims = {4, 3};
  g.data.resize(g.spec.size());
  for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] = {double(k), -0.5 * k};
  const std::string path = "test_grid_roundtrip.bin";
  write_grid(g, path);
  const auto h = read_grid(path);
  CHECK(h.spec.dims == g.spec.dims);
  CHECK(h.spec.lo == g.spec.lo);
  CHECK(h.spec.carrier == g.spec.carrier);
  CHECK(h.data == g.data);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_grid("no_such_grid.bin"), Error);
}

TEST_CASE("Sobolev norms on the periodized box", "[grid]") {
  GridFunction z;
  z.spec = GridSpec::cube(1, 64, 10);
  z.data.assign(64, 0.0);
  CHECK(sobolev_norm(z, 1) == 0.0);

  GridFunction g;
  g.spec = GridSpec::cube(1, 512, 20);
  g.data.resize(512);
  double l2 = 0;
  for (std::size_t k = 0; k < 512; ++k) {
    double x;
    g.spec.point(k, &x);
    g.data[k] = std::exp(-x * x / 2);
    l2 += std::norm(g.data[k]) * g.spec.step(0);
  }
  CHECK(sobolev_norm(g, 0) == Catch::Approx(std::sqrt(l2)).epsilon(1e-12));
  const double h1 = sobolev_norm(g, 1);
  CHECK(h1 * h1 == Catch::Approx(1.5 * std::sqrt(M_PI)).epsilon(1e-6));
  double prev = 0;
  for (double s : {-2.0, -1.0, 0.0, 0.5, 1.0, 2.0}) {
    const double v = sobolev_norm(g, s);
    CHECK(v >= prev);
    prev = v;
  }
  // a carrier shifts the spectrum: e^{i k x} g with k resolvable
  GridFunction mod = g, dem = g;
  dem.spec.carrier = {3.0};
  for (std::size_t k = 0; k < 512; ++k) {
    double x;
    g.spec.point(k, &x);
    mod.data[k] = g.data[k] * std::exp(I * 3.0 * x);
  }
  CHECK(sobolev_norm(dem, -1) == Catch::Approx(sobolev_norm(mod, -1)).epsilon(1e-12));
  GridFunction bad = g;
  bad.data[0] = 1;
  CHECK_THROWS_AS(sobolev_norm(bad, 0), DomainError);
}
