/* Copyright 2026 The mlw Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of libmlw.  Objects are opaque handles released with the
 * matching *_free function.  Every call returns an mlw_status; on failure
 * mlw_last_error() describes the problem (per thread, valid until the next
 * call on that thread). */
#ifndef MLW_CAPI_H
#define MLW_CAPI_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MLW_API __declspec(dllexport)
#else
#define MLW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mlw_status {
  MLW_OK = 0,
  MLW_E_PARSE = 1,
  MLW_E_SCHEMA = 2,
  MLW_E_INCONCLUSIVE = 3,
  MLW_E_NUMERICAL = 4,
  MLW_E_DOMAIN = 5,
  MLW_E_PRECONDITION = 6,
  MLW_E_IO = 7,
  MLW_E_INTERNAL = 8,
  MLW_E_ARGUMENT = 9
} mlw_status;

typedef struct mlw_expr mlw_expr;
typedef struct mlw_symbol mlw_symbol;
typedef struct mlw_report mlw_report;

MLW_API const char* mlw_version(void);
MLW_API const char* mlw_last_error(void);

/* Expressions in x1..xn, xi1..xin (grammar in docs/grammar.md). */
MLW_API mlw_status mlw_expr_parse(const char* src, int n, mlw_expr** out);
MLW_API void mlw_expr_free(mlw_expr* e);
MLW_API int mlw_expr_dim(const mlw_expr* e);
/* x and xi hold n values each. */
MLW_API mlw_status mlw_expr_eval(const mlw_expr* e, const double* x, const double* xi, double* re, double* im);
/* fiber = 0 differentiates in x_index, 1 in xi_index (1-based index). */
MLW_API mlw_status mlw_expr_diff(const mlw_expr* e, int fiber, int index, mlw_expr** out);
/* Copies the canonical text into buf (NUL-terminated, truncated to cap);
 * *needed receives the full length without the terminator. */
MLW_API mlw_status mlw_expr_to_string(const mlw_expr* e, char* buf, size_t cap, size_t* needed);

/* Classical symbols: terms of degree top, top - 1, ... */
MLW_API mlw_status mlw_symbol_from_terms(int top_degree, int n, const char* const* terms, int count,
                                         mlw_symbol** out);
MLW_API mlw_status mlw_symbol_fixture(const char* name, int n, mlw_symbol** out);
MLW_API void mlw_symbol_free(mlw_symbol* s);
MLW_API int mlw_symbol_top_degree(const mlw_symbol* s);
MLW_API int mlw_symbol_depth(const mlw_symbol* s);
MLW_API mlw_status mlw_symbol_term(const mlw_symbol* s, int k, mlw_expr** out);
MLW_API mlw_status mlw_symbol_compose(const mlw_symbol* a, const mlw_symbol* b, int depth, mlw_symbol** out);
MLW_API mlw_status mlw_symbol_adjoint(const mlw_symbol* r, int depth, int xi1_independent, mlw_symbol** out);

/* Task runner.  Unset numeric fields are NaN; seed is used when has_seed. */
typedef struct mlw_run_options {
  int workers;
  int has_seed;
  uint64_t seed;
  double tau_min, tau_max, tol;
  const char* name; /* fixture shortcut, may be NULL */
} mlw_run_options;

MLW_API void mlw_run_options_init(mlw_run_options* o);

/* Runs a subcommand (psi-scan, minimal, factor, wkb, itau, fixtures,
 * proportionality, commutator) on JSON config text.  A report is produced
 * whenever the task ran to completion, including MLW_E_INCONCLUSIVE. */
MLW_API mlw_status mlw_run_task(const char* task, const char* config_json, const char* out_dir,
                                const mlw_run_options* opt, mlw_report** out);
MLW_API const char* mlw_report_json(const mlw_report* r);
MLW_API int mlw_report_artifact_count(const mlw_report* r);
MLW_API const char* mlw_report_artifact(const mlw_report* r, int i);
MLW_API void mlw_report_free(mlw_report* r);

/* Discrete H_(s) norm of a grid file written by the wkb task. */
MLW_API mlw_status mlw_grid_sobolev_norm(const char* path, double s, double* out);

/* Leading stationary-phase term of int e^{i lambda phi} u over R^D at x0. */
MLW_API mlw_status mlw_stationary_phase(const mlw_expr* phi, const mlw_expr* u, int D, double lambda,
                                        const double* x0, double* re, double* im);

#ifdef __cplusplus
}
#endif

#endif /* MLW_CAPI_H */
