#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mlw/capi.h"

namespace {

std::string out_dir(const std::string& leaf) {
  const auto p = std::filesystem::temp_directory_path() / ("mlw_capi_" + leaf);
  std::filesystem::remove_all(p);
  return p.string();
}

nlohmann::json run_ok(const char* task, const std::string& cfg, const std::string& dir, mlw_status want = MLW_OK) {
  mlw_run_options o;
  mlw_run_options_init(&o);
  mlw_report* r = nullptr;
  const mlw_status st = mlw_run_task(task, cfg.c_str(), dir.c_str(), &o, &r);
  INFO(mlw_last_error());
  REQUIRE(st == want);
  REQUIRE(r);
  auto j = nlohmann::json::parse(mlw_report_json(r));
  for (int i = 0; i < mlw_report_artifact_count(r); ++i) CHECK(std::filesystem::exists(mlw_report_artifact(r, i)));
  CHECK(mlw_report_artifact(r, -1) == nullptr);
  mlw_report_free(r);
  return j;
}

}  // namespace

TEST_CASE("expressions through the C interface", "[capi]") {
  mlw_expr* e = nullptr;
  REQUIRE(mlw_expr_parse("x1^2*xi2 + i*x2", 2, &e) == MLW_OK);
  CHECK(mlw_expr_dim(e) == 2);
  const double x[2] = {3, 2}, xi[2] = {0, 0.5};
  double re = 0, im = 0;
  REQUIRE(mlw_expr_eval(e, x, xi, &re, &im) == MLW_OK);
  CHECK(re == Catch::Approx(4.5));
  CHECK(im == Catch::Approx(2));
  mlw_expr* d = nullptr;
  REQUIRE(mlw_expr_diff(e, 0, 1, &d) == MLW_OK);
  REQUIRE(mlw_expr_eval(d, x, xi, &re, &im) == MLW_OK);
  CHECK(re == Catch::Approx(3));
  CHECK(im == 0);
  size_t need = 0;
  REQUIRE(mlw_expr_to_string(e, nullptr, 0, &need) == MLW_OK);
  std::string buf(need + 1, '\0');
  REQUIRE(mlw_expr_to_string(e, buf.data(), buf.size(), &need) == MLW_OK);
  mlw_expr* back = nullptr;
  REQUIRE(mlw_expr_parse(buf.c_str(), 2, &back) == MLW_OK);
  double r2 = 0, i2 = 0;
  mlw_expr_eval(back, x, xi, &r2, &i2);
  mlw_expr_eval(e, x, xi, &re, &im);
  CHECK(r2 == re);
  CHECK(i2 == im);
  char tiny[4];
  REQUIRE(mlw_expr_to_string(e, tiny, sizeof tiny, nullptr) == MLW_OK);
  CHECK(std::strlen(tiny) == 3);
  CHECK(mlw_expr_diff(e, 1, 3, &d) == MLW_E_ARGUMENT);
  mlw_expr_free(back);
  mlw_expr_free(d);
  mlw_expr_free(e);

  mlw_expr* bad = reinterpret_cast<mlw_expr*>(1);
  CHECK(mlw_expr_parse("x1 +* 2", 2, &bad) == MLW_E_PARSE);
  CHECK(bad == nullptr);
  CHECK(std::string(mlw_last_error()).find("offset") != std::string::npos);
  CHECK(mlw_expr_parse(nullptr, 2, &bad) == MLW_E_ARGUMENT);
  mlw_expr_free(nullptr);
}

TEST_CASE("symbols through the C interface", "[capi]") {
  const char* terms[] = {"xi1 + i*x1*xi2", "x2"};
  mlw_symbol* s = nullptr;
  REQUIRE(mlw_symbol_from_terms(1, 2, terms, 2, &s) == MLW_OK);
  CHECK(mlw_symbol_top_degree(s) == 1);
  CHECK(mlw_symbol_depth(s) == 1);
  mlw_symbol *a = nullptr, *aa = nullptr;
  REQUIRE(mlw_symbol_adjoint(s, 3, 0, &a) == MLW_OK);
  REQUIRE(mlw_symbol_adjoint(a, 3, 0, &aa) == MLW_OK);
  const double x[2] = {0.3, -0.7}, xi[2] = {1.1, 0.4};
  for (int k = 0; k <= 1; ++k) {
    mlw_expr *t0 = nullptr, *t1 = nullptr;
    REQUIRE(mlw_symbol_term(s, k, &t0) == MLW_OK);
    REQUIRE(mlw_symbol_term(aa, k, &t1) == MLW_OK);
    double r0, i0, r1, i1;
    mlw_expr_eval(t0, x, xi, &r0, &i0);
    mlw_expr_eval(t1, x, xi, &r1, &i1);
    CHECK(std::abs(r0 - r1) < 1e-12);
    CHECK(std::abs(i0 - i1) < 1e-12);
    mlw_expr_free(t0);
    mlw_expr_free(t1);
  }
  mlw_symbol* c = nullptr;
  REQUIRE(mlw_symbol_compose(s, a, 2, &c) == MLW_OK);
  CHECK(mlw_symbol_top_degree(c) == 2);
  mlw_expr* deep = nullptr;
  CHECK(mlw_symbol_term(c, 5, &deep) == MLW_E_PRECONDITION);
  mlw_symbol* f = nullptr;
  REQUIRE(mlw_symbol_fixture("p2", 2, &f) == MLW_OK);
  mlw_symbol* none = nullptr;
  CHECK(mlw_symbol_fixture("nope", 2, &none) == MLW_E_PRECONDITION);
  for (auto* p : {s, a, aa, c, f}) mlw_symbol_free(p);
}

TEST_CASE("task runner: fixtures and minimal", "[capi]") {
  const auto dir = out_dir("fixtures");
  const auto j = run_ok("fixtures", R"J({"params": {"names": ["p2"], "nx": 21, "ny": 11}})J", dir);
  CHECK(j["grids"][0]["name"] == "p2");
  CHECK(std::filesystem::exists(dir + "/p2_sign.csv"));
  CHECK(std::filesystem::exists(dir + "/p2_sign.svg"));

  const auto m = run_ok("minimal", R"J({"symbols": {"P": "p2"}, "params": {"labels": [[0.0, 1.0]], "sequence": 2}})J",
                        out_dir("minimal"));
  const auto& s = m["slices"][0];
  CHECK(std::abs(s["L_estimate"].get<double>() - 2.0) < 0.1);
  CHECK(std::abs(s["interval"][0].get<double>()) < 0.05);
  CHECK(std::abs(s["interval"][1].get<double>() - 2.0) < 0.05);
  CHECK(s["sequence"]["entries"].size() == 2);
}

TEST_CASE("task runner: deterministic artifacts", "[capi]") {
  const std::string cfg = R"J({"symbols": {"P": "p1"}, "params": {"labels": [[0.2, 1.0], [-0.2, 1.0]]}})J";
  const auto a = out_dir("det_a"), b = out_dir("det_b");
  run_ok("psi-scan", cfg, a);
  run_ok("psi-scan", cfg, b);
  for (const char* f : {"/psi_scan.json", "/psi_scan.csv"}) {
    std::ifstream fa(a + f, std::ios::binary), fb(b + f, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(!sa.empty());
    CHECK(sa == sb);
  }
}

TEST_CASE("task runner: schema errors", "[capi]") {
  mlw_run_options o;
  mlw_run_options_init(&o);
  mlw_report* r = nullptr;
  const auto dir = out_dir("schema");
  CHECK(mlw_run_task("minimal", "{}", dir.c_str(), &o, &r) == MLW_E_SCHEMA);
  CHECK(r == nullptr);
  CHECK(std::string(mlw_last_error()).find("symbols") != std::string::npos);
  CHECK(mlw_run_task("minimal", "not json", dir.c_str(), &o, &r) == MLW_E_SCHEMA);
  CHECK(mlw_run_task("nosuch", "{}", dir.c_str(), &o, &r) == MLW_E_SCHEMA);
  CHECK(mlw_run_task("minimal", R"J({"symbols": {"P": "p2"}, "bogus": 1})J", dir.c_str(), &o, &r) == MLW_E_SCHEMA);
  CHECK(mlw_run_task("factor", R"J({"symbols": {"P": {"degree": 1, "terms": ["xi1 +"]}, "Q": "p2"}})J", dir.c_str(), &o,
                     &r) == MLW_E_SCHEMA);
  CHECK(mlw_run_task("itau", R"J({"symbols": {"Rstar": {"degree": 0, "terms": ["1"]}}})J", dir.c_str(), &o, &r) ==
        MLW_E_SCHEMA);
  CHECK(mlw_run_task(nullptr, "{}", dir.c_str(), &o, &r) == MLW_E_ARGUMENT);
}

TEST_CASE("task runner: factor, proportionality, commutator", "[capi]") {
  const auto f = run_ok("factor",
                        R"J({"symbols": {"P": {"degree": 1, "terms": ["xi1 + i*x1*xi2"]},
                            "Q": {"degree": 1, "terms": ["(2 + x2)*(xi1 + i*x1*xi2)", "x2^2"]}},
                            "params": {"depth": 3, "K": 4}})J",
                        out_dir("factor"));
  // Q = P o E + R with E = 2 + x2 leaves r_0 = x2^2 - x1
  REQUIRE(!f["first_nonvanishing"].is_null());
  CHECK(f["kappa"] == 3);
  CHECK(f["first_nonvanishing"]["index"]["j"] == 0);
  CHECK(f["first_nonvanishing"]["index"]["k"] == 1);
  CHECK(std::abs(f["first_nonvanishing"]["value"][0].get<double>() + 1.0) < 1e-9);

  const auto p = run_ok("proportionality",
                        R"J({"n": 3, "symbols": {"P": "lewy",
                            "Q": {"degree": 1, "terms": ["(2 + i)*(xi1 + 2*x2*xi3 + i*(xi2 - 2*x1*xi3))"]}},
                            "params": {"point": {"x": [0, 0, 0], "xi": [0, 0, -1]}}})J",
                        out_dir("prop"));
  CHECK(std::abs(p["proportionality"]["mu"][0].get<double>() - 2) < 1e-8);
  CHECK(std::abs(p["proportionality"]["mu"][1].get<double>() - 1) < 1e-8);

  const auto c = run_ok("commutator",
                        R"J({"params": {"p": "xi1 + i*x1*xi2", "q": "(x2 - i*x1^2/2)^2",
                            "points": [{"x": [0, 0.7], "xi": [0, 1]}], "m_max": 4}})J",
                        out_dir("comm"));
  CHECK(c["pass"] == true);
}

TEST_CASE("task runner: itau and wkb", "[capi]") {
  const auto dir = out_dir("itau");
  const auto j = run_ok("itau", R"J({"symbols": {"Rstar": {"degree": 1, "terms": ["x1*xi2"]}}, "params": {"m": 0}})J",
                        dir);
  CHECK(j["asymptotics"]["verdict"] == "match");
  CHECK(std::filesystem::exists(dir + "/itau.csv"));
  CHECK(std::filesystem::exists(dir + "/itau.svg"));
  // a bounded I_tau fitted with the wrong order neither matches nor decays
  run_ok("itau", R"J({"symbols": {"Rstar": {"degree": 1, "terms": ["x1*xi2"]}}, "params": {"m": 1, "tau": [16, 32, 64, 128, 256]}})J",
         out_dir("itau3"), MLW_E_INCONCLUSIVE);

  const auto wdir = out_dir("wkb");
  const auto w = run_ok("wkb",
                        R"J({"params": {"f": "x1*xi2", "init": {"x": [0, 0], "xi": [0, 1]}, "t_a": -0.5, "t_b": 0.5,
                            "M": 3, "grid": {"tau": 32, "points": 64, "half_width": 1.5, "N": -2}}})J",
                        wdir);
  CHECK(w["phase"]["M"] == 3);
  double norm = -1;
  REQUIRE(mlw_grid_sobolev_norm((wdir + "/v.mlwg").c_str(), 0.0, &norm) == MLW_OK);
  CHECK(norm > 0);
  CHECK(mlw_grid_sobolev_norm("/nonexistent/v.mlwg", 0.0, &norm) == MLW_E_IO);
}

TEST_CASE("stationary phase through the C interface", "[capi]") {
  mlw_expr *phi = nullptr, *u = nullptr;
  REQUIRE(mlw_expr_parse("(x1^2 - x2^2)/2", 2, &phi) == MLW_OK);
  REQUIRE(mlw_expr_parse("1", 2, &u) == MLW_OK);
  const double x0[2] = {0, 0};
  double re, im;
  REQUIRE(mlw_stationary_phase(phi, u, 2, 4.0, x0, &re, &im) == MLW_OK);
  CHECK(re == Catch::Approx(2 * M_PI / 4));
  CHECK(std::abs(im) < 1e-14);
  mlw_expr_free(phi);
  mlw_expr_free(u);
  CHECK(std::string(mlw_version()).size() > 0);
}
