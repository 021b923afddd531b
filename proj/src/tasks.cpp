// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#include "mlw/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mlw/asymptotics.hpp"
#include "mlw/bichar.hpp"
#include "mlw/error.hpp"
#include "mlw/factor.hpp"
#include "mlw/jet.hpp"
#include "mlw/wkb.hpp"

namespace mlw {

using nlohmann::json;

namespace {

// ----------------------------------------------------------- schema access

[[noreturn]] void schema_fail(const std::string& where, const std::string& msg) {
  throw SchemaError(where + ": " + msg);
}

const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      schema_fail(where, "unknown key '" + it.key() + "'");
}

double num(const json& obj, const std::string& key, const std::string& where, std::optional<double> def = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    schema_fail(where, "missing number '" + key + "'");
  }
  if (!v->is_number()) schema_fail(where + "." + key, "expected a number");
  return v->get<double>();
}

int integer(const json& obj, const std::string& key, const std::string& where, std::optional<int> def = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    schema_fail(where, "missing integer '" + key + "'");
  }
  if (!v->is_number_integer()) schema_fail(where + "." + key, "expected an integer");
  return v->get<int>();
}

std::string str(const json& obj, const std::string& key, const std::string& where,
                std::optional<std::string> def = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    schema_fail(where, "missing string '" + key + "'");
  }
  if (!v->is_string()) schema_fail(where + "." + key, "expected a string");
  return v->get<std::string>();
}

std::vector<double> vec(const json& v, const std::string& where, int size = -1) {
  if (!v.is_array()) schema_fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) schema_fail(where, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  if (size >= 0 && static_cast<int>(out.size()) != size)
    schema_fail(where, "expected " + std::to_string(size) + " entries");
  return out;
}

std::vector<int> ivec(const json& v, const std::string& where, int size) {
  if (!v.is_array() || static_cast<int>(v.size()) != size) schema_fail(where, "expected " + std::to_string(size) + " integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<int>() < 0) schema_fail(where, "expected nonnegative integers");
    out.push_back(e.get<int>());
  }
  return out;
}

Point point_of(const json& v, int n, const std::string& where) {
  if (!v.is_object()) schema_fail(where, "expected {\"x\": [...], \"xi\": [...]}");
  allow_keys(v, where, {"x", "xi"});
  const json* x = find(v, "x");
  const json* xi = find(v, "xi");
  if (!x || !xi) schema_fail(where, "point needs 'x' and 'xi'");
  return {vec(*x, where + ".x", n), vec(*xi, where + ".xi", n)};
}

Expr expr_of(const json& obj, const std::string& key, int n, const std::string& where,
             std::optional<std::string> def = {}) {
  const std::string s = str(obj, key, where, def);
  try {
    return parse_expression(s, n);
  } catch (const ParseError& e) {
    schema_fail(where + "." + key, e.what());
  }
}

json cj(cplx c) { return {c.real(), c.imag()}; }

struct Ctx {
  const json& cfg;
  json params;
  int n;
  std::filesystem::path out;
  const RunOptions& opt;
  TaskResult result;

  ClassicalSymbol symbol(const std::string& name) const {
    const json* s = find(cfg, "symbols");
    if (!s || !s->is_object()) schema_fail("config", "missing object 'symbols'");
    const json* e = find(*s, name);
    if (!e) schema_fail("config.symbols", "missing symbol '" + name + "'");
    return symbol_from_json(*e, n, "config.symbols." + name);
  }
  bool has_symbol(const std::string& name) const {
    const json* s = find(cfg, "symbols");
    return s && s->is_object() && find(*s, name);
  }
  void write(const std::string& file, const std::string& text) {
    std::filesystem::create_directories(out);
    const auto path = out / file;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Status::io, "cannot write " + path.string());
    f << text;
    if (!f) throw Error(Status::io, "write failed for " + path.string());
    result.artifacts.push_back(path.string());
  }
  void write_json(const std::string& file, const json& j) { write(file, j.dump(2) + "\n"); }
};

// ------------------------------------------------------------------ SVG

std::string svg_sign_grid(const std::vector<std::vector<int>>& G, double x1a, double x1b, double x2a, double x2b,
                          const std::string& title) {
  const int ny = static_cast<int>(G.size()), nx = ny ? static_cast<int>(G[0].size()) : 0;
  const double W = 640, H = 320, m = 40;
  const double cw = W / nx, ch = H / ny;
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W + 2 * m << "\" height=\"" << H + 2 * m << "\">\n";
  os << "<text x=\"" << m << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int s = G[j][i];
      const char* col = s < 0 ? "#3b6fb6" : s > 0 ? "#c8453b" : "#f2f2f2";
      os << "<rect x=\"" << m + i * cw << "\" y=\"" << m + (ny - 1 - j) * ch << "\" width=\"" << cw
         << "\" height=\"" << ch << "\" fill=\"" << col << "\"/>\n";
    }
  os << "<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << W << "\" height=\"" << H
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << m << "\" y=\"" << H + m + 16 << "\" font-size=\"12\">x1 = " << x1a << "</text>\n";
  os << "<text x=\"" << W + m - 60 << "\" y=\"" << H + m + 16 << "\" font-size=\"12\">x1 = " << x1b << "</text>\n";
  os << "<text x=\"2\" y=\"" << H + m << "\" font-size=\"12\">" << x2a << "</text>\n";
  os << "<text x=\"2\" y=\"" << m + 10 << "\" font-size=\"12\">" << x2b << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string svg_loglog(const std::vector<double>& x, const std::vector<double>& y, const std::string& title) {
  const double W = 480, H = 320, m = 50;
  double lx0 = 1e300, lx1 = -1e300, ly0 = 1e300, ly1 = -1e300;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0)) continue;
    lx0 = std::min(lx0, std::log10(x[i]));
    lx1 = std::max(lx1, std::log10(x[i]));
    ly0 = std::min(ly0, std::log10(y[i]));
    ly1 = std::max(ly1, std::log10(y[i]));
  }
  if (lx1 <= lx0) lx1 = lx0 + 1;
  if (ly1 <= ly0) ly1 = ly0 + 1;
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W + 2 * m << "\" height=\"" << H + 2 * m << "\">\n";
  os << "<text x=\"" << m << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << W << "\" height=\"" << H
     << "\" fill=\"none\" stroke=\"black\"/>\n<path fill=\"none\" stroke=\"#c8453b\" d=\"";
  bool first = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0)) continue;
    const double px = m + W * (std::log10(x[i]) - lx0) / (lx1 - lx0);
    const double py = m + H * (1 - (std::log10(y[i]) - ly0) / (ly1 - ly0));
    os << (first ? "M" : " L") << px << ' ' << py;
    first = false;
  }
  os << "\"/>\n";
  os << "<text x=\"" << m << "\" y=\"" << H + m + 16 << "\" font-size=\"12\">log10 tau " << lx0 << " .. " << lx1
     << "</text>\n";
  os << "<text x=\"4\" y=\"" << m - 6 << "\" font-size=\"12\">log10 |I| " << ly0 << " .. " << ly1 << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------- tasks

std::vector<std::vector<double>> labels_of(const Ctx& c, const std::vector<double>& def_x2) {
  const int wd = 2 * (c.n - 1);
  std::vector<std::vector<double>> out;
  if (const json* l = find(c.params, "labels")) {
    if (!l->is_array() || l->empty()) schema_fail("params.labels", "expected a nonempty array of labels");
    for (std::size_t i = 0; i < l->size(); ++i) out.push_back(vec((*l)[i], "params.labels", wd));
  } else {
    for (double x2 : def_x2) {
      std::vector<double> w(wd, 0.0);
      w[0] = x2;
      w[wd - 1] = 1.0;
      out.push_back(w);
    }
  }
  return out;
}

NormalForm normal_form_of(const Ctx& c) {
  const ClassicalSymbol P = c.symbol("P");
  return NormalForm(P.term(0), c.n);
}

void task_psi_scan(Ctx& c) {
  allow_keys(c.params, "params", {"a", "b", "labels", "starts", "grid", "bisect_tol"});
  const ClassicalSymbol P = c.symbol("P");
  ScanOptions so;
  so.grid = integer(c.params, "grid", "params", 4001);
  so.bisect_tol = c.opt.tol.value_or(num(c.params, "bisect_tol", "params", 1e-8));
  const double a = num(c.params, "a", "params", -1.0), b = num(c.params, "b", "params", 3.0);
  if (!(b > a)) schema_fail("params", "need a < b");
  json curves = json::array();
  std::ostringstream csv;
  csv.precision(12);
  csv << "curve,sign_change,s_minus,s_plus,strong_a,strong_b,converged\n";
  auto record = [&](const std::string& label, const SliceFn& g, json extra) {
    const auto sc = detect_sign_change(g, a, b, so);
    const auto st = strong_sign_change(g, a, b, so);
    extra["sign_change"] = sc ? json{{"s_minus", sc->s_minus}, {"s_plus", sc->s_plus}} : json(nullptr);
    extra["strong"] = st ? to_json(*st) : json(nullptr);
    curves.push_back(extra);
    csv << label << ',' << (sc ? 1 : 0) << ',';
    if (sc) csv << sc->s_minus << ',' << sc->s_plus;
    else csv << ',';
    csv << ',';
    if (st) csv << st->a << ',' << st->b << ',' << (st->converged ? 1 : 0);
    else csv << ",,";
    csv << '\n';
  };
  if (const json* starts = find(c.params, "starts")) {
    if (!starts->is_array() || starts->empty()) schema_fail("params.starts", "expected a nonempty array of points");
    const Expr p = P.term(0);
    const Expr re = cplx(0.5, 0) * (p + conjugate(p));
    const Expr im = cplx(0, -0.5) * (p - conjugate(p));
    const Compiled imc(im);
    for (std::size_t i = 0; i < starts->size(); ++i) {
      const Point s = point_of((*starts)[i], c.n, "params.starts");
      if (a > 0 || b < 0) schema_fail("params", "integrated curves need a <= 0 <= b");
      const Bicharacteristic g = integrate_bicharacteristic(re, c.n, s, a, b);
      const int n = c.n;
      SliceFn f = [&g, &imc, n](double t) -> long double {
        const Point q = g.at(t);
        return imc.eval_long(q).real();
      };
      record("start" + std::to_string(i), f, {{"start", {{"x", s.x}, {"xi", s.xi}}}});
    }
  } else {
    const NormalForm nf(P.term(0), c.n);
    const auto labels = labels_of(c, {-1, -0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75, 1});
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto w = labels[i];
      SliceFn f = [&nf, w](double t) { return nf.im_slice(t, w); };
      record("label" + std::to_string(i), f, {{"w", w}});
    }
  }
  c.result.report["curves"] = curves;
  c.write_json("psi_scan.json", c.result.report);
  c.write("psi_scan.csv", csv.str());
}

Approach approach_of(const json& j, int n) {
  if (!j.is_object()) schema_fail("params.approach", "expected {\"coord\": k, \"sign\": +-1}");
  allow_keys(j, "params.approach", {"coord", "sign"});
  Approach a{integer(j, "coord", "params.approach"), integer(j, "sign", "params.approach")};
  if (a.coord < 0 || a.coord >= 2 * (n - 1) || (a.sign != 1 && a.sign != -1))
    schema_fail("params.approach", "coord out of range or sign not +-1");
  return a;
}

void task_minimal(Ctx& c) {
  allow_keys(c.params, "params", {"a", "b", "labels", "approach", "sequence", "tol_L", "eps0", "k_max", "grid"});
  const NormalForm nf = normal_form_of(c);
  const bool is_p1 = c.has_symbol("P") && c.cfg["symbols"]["P"].is_string() && c.cfg["symbols"]["P"] == "p1";
  const double a = num(c.params, "a", "params", is_p1 ? -1.0 : -0.5);
  const double b = num(c.params, "b", "params", is_p1 ? 3.0 : 3.5);
  if (!(b > a)) schema_fail("params", "need a < b");
  MinimalityOptions mo;
  mo.workers = c.opt.workers;
  mo.eps0 = num(c.params, "eps0", "params", 0.5);
  mo.k_max = integer(c.params, "k_max", "params", 12);
  mo.tol_L = c.opt.tol.value_or(num(c.params, "tol_L", "params", -1.0));
  mo.scan.grid = integer(c.params, "grid", "params", 4001);
  if (const json* ap = find(c.params, "approach")) mo.approach = approach_of(*ap, c.n);
  const int seq = integer(c.params, "sequence", "params", 4);
  if (seq < 0) schema_fail("params.sequence", "must be nonnegative");
  json slices = json::array();
  for (const auto& w : labels_of(c, {0.5, 0.1, 0.0, -0.1, -0.5})) {
    const MinimalityReport r = find_minimal_interval(nf, a, b, w, mo);
    json s = to_json(r, c.n);
    s["w"] = w;
    if (!r.degenerate && seq > 0) {
      const SequenceResult sr = approximating_sequence(nf, r.a0, r.b0, w, a, b, seq, mo);
      json e = json::array();
      for (const auto& x : sr.entries)
        e.push_back({{"offset", x.offset},
                     {"w", x.w},
                     {"interval", {x.interval.a, x.interval.b}},
                     {"rho", x.rho.rho},
                     {"rho_certified", x.rho.certified},
                     {"hausdorff", x.hausdorff}});
      s["sequence"] = {{"approach", sr.approach ? json(sr.approach->label(c.n)) : json(nullptr)},
                       {"exhausted", sr.exhausted},
                       {"entries", e}};
    }
    slices.push_back(s);
  }
  c.result.report["slices"] = slices;
  c.write_json("minimal.json", c.result.report);
}

json index_json(const OrderedIndex& i) { return {{"j", i.j}, {"k", i.k}, {"alpha", i.alpha}, {"beta", i.beta}}; }

void task_factor(Ctx& c) {
  allow_keys(c.params, "params", {"point", "depth", "K", "tol", "normalize"});
  const ClassicalSymbol Q = c.symbol("Q"), P = c.symbol("P");
  Point g;
  if (const json* p = find(c.params, "point")) g = point_of(*p, c.n, "params.point");
  else {
    g.x.assign(c.n, 0.0);
    g.xi.assign(c.n, 0.0);
    g.xi[c.n - 1] = 1.0;
  }
  const int depth = integer(c.params, "depth", "params", 2), K = integer(c.params, "K", "params", 4);
  if (depth < 0 || K < 1) schema_fail("params", "need depth >= 0 and K >= 1");
  const double tol = c.opt.tol.value_or(num(c.params, "tol", "params", 1e-10));
  const int Kin = K + 2 * depth;
  bool normalize = true;
  if (const json* nz = find(c.params, "normalize")) {
    if (!nz->is_boolean()) schema_fail("params.normalize", "expected a boolean");
    normalize = nz->get<bool>();
  }
  const JetSymbol PJ = normalize ? normalize_lower_order(P, g, depth, Kin) : jet_symbol(P, g, Kin, depth);
  const FactorizationResult f = factor_symbol(jet_symbol(Q, g, Kin, depth), PJ, depth, K);
  int kappa = 0;
  const auto first = first_nonvanishing(remainder_terms(f), tol, &kappa);
  c.result.report["factorization"] = to_json(f);
  c.result.report["first_nonvanishing"] =
      first ? json{{"index", index_json(first->index)}, {"value", cj(first->value)}} : json(nullptr);
  c.result.report["kappa"] = kappa;
  c.write_json("factor.json", c.result.report);
}

void task_wkb(Ctx& c) {
  allow_keys(c.params, "params",
             {"f", "init", "t_a", "t_b", "t0", "M", "w0_mode", "p0", "beta0", "residual_h", "grid"});
  Expr f;
  if (find(c.params, "f")) f = expr_of(c.params, "f", c.n, "params");
  else f = cplx(0, -1) * (c.symbol("P").term(0) - Expr::xi(0));
  const json* ini = find(c.params, "init");
  if (!ini) schema_fail("params", "missing point 'init'");
  const Point init = point_of(*ini, c.n, "params.init");
  PhaseOptions po;
  po.M = integer(c.params, "M", "params", 3);
  po.t0 = num(c.params, "t0", "params", std::nan(""));
  const double ta = num(c.params, "t_a", "params"), tb = num(c.params, "t_b", "params");
  PhaseExpansion ph = solve_phase_system(f, c.n, init, ta, tb, po);
  const std::string mode = str(c.params, "w0_mode", "params", "none");
  if (mode == "point") ph = normalize_w0(ph, W0Mode::point);
  else if (mode == "interval") ph = normalize_w0(ph, W0Mode::interval);
  else if (mode != "none") schema_fail("params.w0_mode", "expected none, point or interval");
  const Expr p0 = expr_of(c.params, "p0", c.n, "params", "0");
  std::vector<int> beta0(c.n - 1, 0);
  if (const json* b = find(c.params, "beta0")) beta0 = ivec(*b, "params.beta0", c.n - 1);
  const AmplitudeSet amp = solve_transport(ph, p0, beta0);
  std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
  if (const json* h = find(c.params, "residual_h")) hs = vec(*h, "params.residual_h");
  json res = json::array();
  std::vector<double> rv;
  for (double h : hs) {
    rv.push_back(eiconal_residual(ph, h));
    res.push_back({{"h", h}, {"residual", rv.back()}});
  }
  c.result.report["phase"] = to_json(ph);
  c.result.report["amplitude"] = to_json(amp);
  c.result.report["eiconal_residual"] = res;
  if (hs.size() >= 2 && std::all_of(rv.begin(), rv.end(), [](double v) { return v > 0; }))
    c.result.report["eiconal_slope"] = loglog_fit(hs, rv).slope;
  if (const json* gj = find(c.params, "grid")) {
    allow_keys(*gj, "params.grid", {"tau", "points", "half_width", "N", "file"});
    const double tau = num(*gj, "tau", "params.grid");
    const int pts = integer(*gj, "points", "params.grid", 128);
    const double hw = num(*gj, "half_width", "params.grid", 1.0);
    const int N = integer(*gj, "N", "params.grid", 2);
    std::vector<double> carrier(c.n, 0.0);
    for (int k = 0; k + 1 < c.n; ++k) carrier[1 + k] = tau * init.xi[1 + k];
    GridSpec grid = GridSpec::cube(c.n, pts, hw, carrier);
    for (int k = 0; k < c.n; ++k) {
      const double mid = k == 0 ? 0.5 * (ta + tb) : init.x[k];
      grid.lo[k] += mid;
      grid.hi[k] += mid;
    }
    const GridFunction v = assemble_v(ph, amp, tau, N, grid);
    std::filesystem::create_directories(c.out);
    const std::string file = str(*gj, "file", "params.grid", "v.mlwg");
    const auto path = (c.out / file).string();
    write_grid(v, path);
    c.result.artifacts.push_back(path);
    c.result.report["grid"] = {{"file", file}, {"tau", tau}, {"points", pts}, {"max_abs", v.max_abs()}};
  }
  c.write_json("wkb.json", c.result.report);
}

std::vector<double> tau_grid(const Ctx& c) {
  if (const json* t = find(c.params, "tau")) {
    if (c.opt.tau_min || c.opt.tau_max) schema_fail("params.tau", "conflicts with --tau-min/--tau-max");
    return vec(*t, "params.tau");
  }
  const double lo = c.opt.tau_min.value_or(num(c.params, "tau_min", "params", 16.0));
  const double hi = c.opt.tau_max.value_or(num(c.params, "tau_max", "params", 1024.0));
  if (!(lo > 0) || !(hi >= lo)) schema_fail("params", "need 0 < tau_min <= tau_max");
  std::vector<double> out;
  for (double t = lo; t <= hi * (1 + 1e-12); t *= 2) out.push_back(t);
  return out;
}

void task_itau(Ctx& c) {
  allow_keys(c.params, "params", {"m", "beta0", "tau", "tau_min", "tau_max", "window", "J", "quad", "quad_max",
                                  "adjoint_depth", "action_terms", "norms"});
  if (c.n < 2) schema_fail("config.n", "itau needs n >= 2");
  ItauOptions io;
  io.workers = c.opt.workers;
  io.quad = integer(c.params, "quad", "params", 32);
  io.quad_max = integer(c.params, "quad_max", "params", 512);
  io.adjoint_depth = integer(c.params, "adjoint_depth", "params", 3);
  io.action_terms = integer(c.params, "action_terms", "params", 4);
  if (c.opt.tol) io.quad_tol = *c.opt.tol;
  const int m = integer(c.params, "m", "params");
  std::vector<int> beta0(c.n - 1, 0);
  if (const json* b = find(c.params, "beta0")) beta0 = ivec(*b, "params.beta0", c.n - 1);
  ProbeWindow H = ProbeWindow::standard(c.n);
  if (const json* w = find(c.params, "window")) {
    allow_keys(*w, "params.window", {"center", "radius", "N"});
    if (const json* v = find(*w, "center")) H.center = vec(*v, "params.window.center", c.n);
    if (const json* v = find(*w, "radius")) H.radius = vec(*v, "params.window.radius", c.n);
    H.N = integer(*w, "N", "params.window", 2);
  }
  const std::vector<double> taus = tau_grid(c);
  const ClassicalSymbol R = c.has_symbol("R") ? c.symbol("R") : [&] {
    if (!c.has_symbol("Rstar")) schema_fail("config.symbols", "itau needs 'R' or 'Rstar'");
    return adjoint_symbol(c.symbol("Rstar"), io.adjoint_depth, true);
  }();
  const WavePacket v = model_packet(c.n, beta0, integer(c.params, "J", "params", 8));
  const ClassicalSymbol rstar = adjoint_symbol(R, io.adjoint_depth, true);
  std::optional<cplx> pred;
  try {
    pred = predicted_limit(rstar, beta0, H, m);
  } catch (const PreconditionError& e) {
    c.result.report["predicted_error"] = e.what();
  }
  const AsymptoticReport rep = decay_fit(taus, compute_I_tau(R, v, H, taus, io), m, pred);
  c.result.report["asymptotics"] = to_json(rep);
  c.result.report["window"] = {{"center", H.center}, {"radius", H.radius}, {"N", H.N}};
  c.result.exit_code = exit_code(rep.verdict);
  c.write_json("itau.json", c.result.report);
  c.write("itau.csv", to_csv(rep));
  std::vector<double> mag;
  for (cplx z : rep.I) mag.push_back(std::abs(z));
  c.write("itau.svg", svg_loglog(rep.tau, mag, "|I_tau| vs tau, verdict " + to_string(rep.verdict)));
  if (const json* nj = find(c.params, "norms")) {
    allow_keys(*nj, "params.norms", {"points", "J", "radius", "s_minus", "s_plus", "k"});
    NormStudyOptions no;
    no.n = c.n;
    no.tau = taus;
    no.beta0 = beta0;
    no.workers = c.opt.workers;
    no.points = integer(*nj, "points", "params.norms", 256);
    no.J = integer(*nj, "J", "params.norms", 8);
    no.radius = num(*nj, "radius", "params.norms", 1.0);
    no.s_minus = num(*nj, "s_minus", "params.norms", -2);
    no.s_plus = num(*nj, "s_plus", "params.norms", 1);
    no.k = integer(*nj, "k", "params.norms", 2);
    const NormStudy st = model_norm_study(no);
    c.result.report["norms"] = to_json(st);
    c.write_json("itau.json", c.result.report);
  }
}

void task_fixtures(Ctx& c) {
  allow_keys(c.params, "params", {"names", "nx", "ny", "rest"});
  std::vector<std::string> names;
  if (const json* nm = find(c.params, "names")) {
    if (!nm->is_array()) schema_fail("params.names", "expected an array of fixture names");
    for (const auto& e : *nm) {
      if (!e.is_string()) schema_fail("params.names", "expected strings");
      names.push_back(e.get<std::string>());
    }
  } else if (!c.opt.name.empty()) {
    names.push_back(c.opt.name);
  } else {
    names = {"p1", "p2"};
  }
  const int nx = integer(c.params, "nx", "params", 81), ny = integer(c.params, "ny", "params", 41);
  if (nx < 2 || ny < 2) schema_fail("params", "nx and ny must be at least 2");
  Point rest;
  rest.x.assign(c.n, 0.0);
  rest.xi.assign(c.n, 0.0);
  rest.xi[c.n - 1] = 1.0;
  if (const json* r = find(c.params, "rest")) rest = point_of(*r, c.n, "params.rest");
  json out = json::array();
  for (const auto& name : names) {
    if (name != "p1" && name != "p2") schema_fail("params.names", "sign grids exist for p1 and p2 only, not " + name);
    const NormalForm nf(fixture(name, c.n).term(0), c.n);
    const auto G = sign_grid(nf, -1, 3, -1, 1, nx, ny, rest);
    std::ostringstream csv;
    csv.precision(10);
    csv << "x2\\x1";
    for (int i = 0; i < nx; ++i) csv << ',' << -1 + 4.0 * i / (nx - 1);
    csv << '\n';
    int counts[3] = {0, 0, 0};
    for (int j = 0; j < ny; ++j) {
      csv << -1 + 2.0 * j / (ny - 1);
      for (int i = 0; i < nx; ++i) {
        csv << ',' << G[j][i];
        ++counts[G[j][i] + 1];
      }
      csv << '\n';
    }
    c.write(name + "_sign.csv", csv.str());
    c.write(name + "_sign.svg", svg_sign_grid(G, -1, 3, -1, 1, "sign Im " + name + " (blue -, grey 0, red +)"));
    out.push_back({{"name", name}, {"negative", counts[0]}, {"zero", counts[1]}, {"positive", counts[2]}});
  }
  c.result.report["grids"] = out;
  c.write_json("fixtures.json", c.result.report);
}

void task_proportionality(Ctx& c) {
  allow_keys(c.params, "params", {"point", "tol"});
  const ClassicalSymbol P = c.symbol("P"), Q = c.symbol("Q");
  const json* p = find(c.params, "point");
  if (!p) schema_fail("params", "missing point 'point'");
  const double tol = c.opt.tol.value_or(num(c.params, "tol", "params", 1e-8));
  const ProportionalityReport r = proportionality(P, Q, point_of(*p, c.n, "params.point"), tol);
  c.result.report["proportionality"] = to_json(r);
  c.write_json("proportionality.json", c.result.report);
}

void task_commutator(Ctx& c) {
  allow_keys(c.params, "params", {"p", "q", "points", "m_max"});
  const Expr p = c.has_symbol("P") ? c.symbol("P").term(0) : expr_of(c.params, "p", c.n, "params");
  const Expr q = expr_of(c.params, "q", c.n, "params");
  const json* pts = find(c.params, "points");
  if (!pts || !pts->is_array() || pts->empty()) schema_fail("params", "missing nonempty array 'points'");
  std::vector<Point> points;
  for (const auto& e : *pts) points.push_back(point_of(e, c.n, "params.points"));
  const int m_max = integer(c.params, "m_max", "params", 3);
  const auto res = commutator_test(p, q, c.n, points, m_max);
  json arr = json::array();
  bool all = true;
  for (const auto& r : res) {
    json h = json::array();
    for (cplx v : r.hamilton) h.push_back(cj(v));
    arr.push_back({{"hamilton", h}, {"transport", r.transport ? cj(*r.transport) : json(nullptr)}, {"pass", r.pass}});
    all = all && r.pass;
  }
  c.result.report["points"] = arr;
  c.result.report["pass"] = all;
  c.write_json("commutator.json", c.result.report);
}

}  // namespace

const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names{"psi-scan", "minimal",  "factor",          "wkb",
                                              "itau",     "fixtures", "proportionality", "commutator"};
  return names;
}

json parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("config must be a JSON object");
  return j;
}

ClassicalSymbol symbol_from_json(const json& j, int n, const std::string& where) {
  if (j.is_string()) {
    try {
      return fixture(j.get<std::string>(), n);
    } catch (const PreconditionError& e) {
      schema_fail(where, e.what());
    }
  }
  if (!j.is_object()) schema_fail(where, "expected a fixture name or {\"degree\": m, \"terms\": [...]}");
  allow_keys(j, where, {"degree", "terms"});
  const int deg = integer(j, "degree", where);
  const json* t = find(j, "terms");
  if (!t || !t->is_array() || t->empty()) schema_fail(where, "missing nonempty array 'terms'");
  std::vector<Expr> terms;
  for (std::size_t k = 0; k < t->size(); ++k) {
    if (!(*t)[k].is_string()) schema_fail(where + ".terms", "expected expression strings");
    try {
      terms.push_back(parse_expression((*t)[k].get<std::string>(), n));
    } catch (const ParseError& e) {
      schema_fail(where + ".terms[" + std::to_string(k) + "]", e.what());
    }
  }
  return ClassicalSymbol::from_terms(deg, n, std::move(terms));
}

TaskResult run_task(const std::string& task, const json& config, const std::string& out_dir, const RunOptions& opt) {
  if (std::find(task_names().begin(), task_names().end(), task) == task_names().end())
    throw SchemaError("unknown subcommand '" + task + "'");
  if (!config.is_object()) throw SchemaError("config must be a JSON object");
  allow_keys(config, "config", {"n", "symbols", "params", "seed"});
  if (opt.workers < 1) throw SchemaError("workers must be at least 1");
  const bool needs_symbols = task != "fixtures" && task != "commutator" && task != "wkb";
  if (needs_symbols && !find(config, "symbols")) schema_fail("config", "missing object 'symbols'");
  if (task == "wkb" && !find(config, "params")) schema_fail("config", "missing object 'params'");
  if (task == "commutator" && !find(config, "params")) schema_fail("config", "missing object 'params'");
  const int n = integer(config, "n", "config", 2);
  if (n < 2 || n > 6) schema_fail("config.n", "expected 2 <= n <= 6");
  json params = json::object();
  if (const json* p = find(config, "params")) {
    if (!p->is_object()) schema_fail("config.params", "expected an object");
    params = *p;
  }
  Ctx c{config, params, n, out_dir, opt, {}};
  std::uint64_t seed = opt.seed.value_or(0);
  if (!opt.seed && find(config, "seed")) {
    if (!config["seed"].is_number_unsigned()) schema_fail("config.seed", "expected a nonnegative integer");
    seed = config["seed"].get<std::uint64_t>();
  }
  c.result.report["task"] = task;
  c.result.report["n"] = n;
  c.result.report["seed"] = seed;
  if (task == "psi-scan") task_psi_scan(c);
  else if (task == "minimal") task_minimal(c);
  else if (task == "factor") task_factor(c);
  else if (task == "wkb") task_wkb(c);
  else if (task == "itau") task_itau(c);
  else if (task == "fixtures") task_fixtures(c);
  else if (task == "proportionality") task_proportionality(c);
  else task_commutator(c);
  return std::move(c.result);
}

}  // namespace mlw
