// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#include "mlw/capi.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "mlw/asymptotics.hpp"
#include "mlw/error.hpp"
#include "mlw/grid.hpp"
#include "mlw/symbol.hpp"
#include "mlw/tasks.hpp"

struct mlw_expr {
  mlw::Expr e;
  int n;
};

struct mlw_symbol {
  mlw::ClassicalSymbol s;
};

struct mlw_report {
  std::string json;
  std::vector<std::string> artifacts;
};

namespace {

thread_local std::string g_error;

mlw_status fail(mlw_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

template <class F>
mlw_status guard(F&& f) {
  try {
    g_error.clear();
    return f();
  } catch (const mlw::Error& e) {
    return fail(static_cast<mlw_status>(e.status()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(MLW_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MLW_E_INTERNAL, e.what());
  } catch (...) {
    return fail(MLW_E_INTERNAL, "unknown error");
  }
}

}  // namespace

extern "C" {

const char* mlw_version(void) { return "1.0.0"; }

const char* mlw_last_error(void) { return g_error.c_str(); }

mlw_status mlw_expr_parse(const char* src, int n, mlw_expr** out) {
  if (!src || !out || n < 1) return fail(MLW_E_ARGUMENT, "null argument or n < 1");
  *out = nullptr;
  return guard([&] {
    *out = new mlw_expr{mlw::parse_expression(src, n), n};
    return MLW_OK;
  });
}

void mlw_expr_free(mlw_expr* e) { delete e; }

int mlw_expr_dim(const mlw_expr* e) { return e ? e->n : 0; }

mlw_status mlw_expr_eval(const mlw_expr* e, const double* x, const double* xi, double* re, double* im) {
  if (!e || !x || !xi || !re || !im) return fail(MLW_E_ARGUMENT, "null argument");
  return guard([&] {
    const mlw::Point p{{x, x + e->n}, {xi, xi + e->n}};
    const mlw::cplx v = mlw::evaluate(e->e, p);
    *re = v.real();
    *im = v.imag();
    return MLW_OK;
  });
}

mlw_status mlw_expr_diff(const mlw_expr* e, int fiber, int index, mlw_expr** out) {
  if (!e || !out) return fail(MLW_E_ARGUMENT, "null argument");
  if (index < 1 || index > e->n) return fail(MLW_E_ARGUMENT, "variable index out of range");
  *out = nullptr;
  return guard([&] {
    const mlw::VarId v = fiber ? mlw::xivar(index - 1) : mlw::xvar(index - 1);
    *out = new mlw_expr{mlw::differentiate(e->e, v), e->n};
    return MLW_OK;
  });
}

mlw_status mlw_expr_to_string(const mlw_expr* e, char* buf, size_t cap, size_t* needed) {
  if (!e) return fail(MLW_E_ARGUMENT, "null argument");
  return guard([&] {
    const std::string s = mlw::to_string(e->e);
    if (needed) *needed = s.size();
    if (buf && cap > 0) {
      const size_t k = std::min(cap - 1, s.size());
      std::memcpy(buf, s.data(), k);
      buf[k] = '\0';
    }
    return MLW_OK;
  });
}

mlw_status mlw_symbol_from_terms(int top_degree, int n, const char* const* terms, int count, mlw_symbol** out) {
  if (!terms || !out || count < 1 || n < 1) return fail(MLW_E_ARGUMENT, "null argument or empty term list");
  *out = nullptr;
  return guard([&] {
    std::vector<mlw::Expr> t;
    for (int k = 0; k < count; ++k) {
      if (!terms[k]) return fail(MLW_E_ARGUMENT, "null term");
      t.push_back(mlw::parse_expression(terms[k], n));
    }
    *out = new mlw_symbol{mlw::ClassicalSymbol::from_terms(top_degree, n, std::move(t))};
    return MLW_OK;
  });
}

mlw_status mlw_symbol_fixture(const char* name, int n, mlw_symbol** out) {
  if (!name || !out) return fail(MLW_E_ARGUMENT, "null argument");
  *out = nullptr;
  return guard([&] {
    *out = new mlw_symbol{mlw::fixture(name, n)};
    return MLW_OK;
  });
}

void mlw_symbol_free(mlw_symbol* s) { delete s; }

int mlw_symbol_top_degree(const mlw_symbol* s) { return s ? s->s.top_degree : 0; }

int mlw_symbol_depth(const mlw_symbol* s) { return s ? s->s.depth() : -1; }

mlw_status mlw_symbol_term(const mlw_symbol* s, int k, mlw_expr** out) {
  if (!s || !out) return fail(MLW_E_ARGUMENT, "null argument");
  if (k < 0) return fail(MLW_E_ARGUMENT, "negative term index");
  *out = nullptr;
  return guard([&] {
    *out = new mlw_expr{s->s.term(k), s->s.n};
    return MLW_OK;
  });
}

mlw_status mlw_symbol_compose(const mlw_symbol* a, const mlw_symbol* b, int depth, mlw_symbol** out) {
  if (!a || !b || !out) return fail(MLW_E_ARGUMENT, "null argument");
  *out = nullptr;
  return guard([&] {
    *out = new mlw_symbol{mlw::compose_symbols(a->s, b->s, depth)};
    return MLW_OK;
  });
}

mlw_status mlw_symbol_adjoint(const mlw_symbol* r, int depth, int xi1_independent, mlw_symbol** out) {
  if (!r || !out) return fail(MLW_E_ARGUMENT, "null argument");
  *out = nullptr;
  return guard([&] {
    *out = new mlw_symbol{mlw::adjoint_symbol(r->s, depth, xi1_independent != 0)};
    return MLW_OK;
  });
}

void mlw_run_options_init(mlw_run_options* o) {
  if (!o) return;
  o->workers = 1;
  o->has_seed = 0;
  o->seed = 0;
  o->tau_min = o->tau_max = o->tol = std::nan("");
  o->name = nullptr;
}

mlw_status mlw_run_task(const char* task, const char* config_json, const char* out_dir, const mlw_run_options* opt,
                        mlw_report** out) {
  if (!task || !config_json || !out_dir || !out) return fail(MLW_E_ARGUMENT, "null argument");
  *out = nullptr;
  return guard([&] {
    mlw::RunOptions ro;
    if (opt) {
      ro.workers = opt->workers;
      if (opt->has_seed) ro.seed = opt->seed;
      if (!std::isnan(opt->tau_min)) ro.tau_min = opt->tau_min;
      if (!std::isnan(opt->tau_max)) ro.tau_max = opt->tau_max;
      if (!std::isnan(opt->tol)) ro.tol = opt->tol;
      if (opt->name) ro.name = opt->name;
    }
    mlw::TaskResult r = mlw::run_task(task, mlw::parse_config(config_json), out_dir, ro);
    *out = new mlw_report{r.report.dump(2), std::move(r.artifacts)};
    if (r.exit_code == MLW_E_INCONCLUSIVE) return fail(MLW_E_INCONCLUSIVE, "verdict inconclusive");
    return MLW_OK;
  });
}

const char* mlw_report_json(const mlw_report* r) { return r ? r->json.c_str() : ""; }

int mlw_report_artifact_count(const mlw_report* r) { return r ? static_cast<int>(r->artifacts.size()) : 0; }

const char* mlw_report_artifact(const mlw_report* r, int i) {
  if (!r || i < 0 || i >= static_cast<int>(r->artifacts.size())) return nullptr;
  return r->artifacts[i].c_str();
}

void mlw_report_free(mlw_report* r) { delete r; }

mlw_status mlw_grid_sobolev_norm(const char* path, double s, double* out) {
  if (!path || !out) return fail(MLW_E_ARGUMENT, "null argument");
  return guard([&] {
    *out = mlw::sobolev_norm(mlw::read_grid(path), s);
    return MLW_OK;
  });
}

mlw_status mlw_stationary_phase(const mlw_expr* phi, const mlw_expr* u, int D, double lambda, const double* x0,
                                double* re, double* im) {
  if (!phi || !u || !x0 || !re || !im) return fail(MLW_E_ARGUMENT, "null argument");
  return guard([&] {
    const auto sp = mlw::stationary_phase(phi->e, u->e, D, lambda, std::vector<double>(x0, x0 + D));
    *re = sp.value.real();
    *im = sp.value.imag();
    return MLW_OK;
  });
}

}  // extern "C"
