// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command line front end over the C API.
//
//   mlw <subcommand> [--config FILE] [--out DIR] [--workers N] [--seed S]
//       [--tau-min T] [--tau-max T] [--tol X] [--name FIXTURE]
//
// Exit codes: 0 ok, 2 schema/config errors, 3 inconclusive verdict,
// 4 numerical failure, other nonzero codes mirror mlw_status.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mlw/capi.h"

namespace {

const char* status_name(mlw_status s) {
  switch (s) {
    case MLW_OK: return "ok";
    case MLW_E_PARSE: return "parse error";
    case MLW_E_SCHEMA: return "schema error";
    case MLW_E_INCONCLUSIVE: return "inconclusive";
    case MLW_E_NUMERICAL: return "numerical error";
    case MLW_E_DOMAIN: return "domain error";
    case MLW_E_PRECONDITION: return "precondition failed";
    case MLW_E_IO: return "i/o error";
    case MLW_E_ARGUMENT: return "bad argument";
    default: return "internal error";
  }
}

// Config used when only a fixture name is given.
std::string shortcut_config(const std::string& task, const std::string& name) {
  if (task == "fixtures") return "{}";
  return "{\"symbols\": {\"P\": \"" + name + "\"}}";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microlocal solvability toolkit"};
  app.require_subcommand(1, 1);
  std::string config, out = "mlw_out", name;
  int workers = 1;
  std::uint64_t seed = 0;
  double tau_min = NAN, tau_max = NAN, tol = NAN;
  const char* tasks[] = {"psi-scan", "minimal", "factor", "wkb", "itau", "fixtures", "proportionality", "commutator"};
  const char* help[] = {"sign changes of Im p along a bicharacteristic family",
                        "minimal intervals, rho-minimality and approximating sequences",
                        "xi1-normalization, jet factorization and first nonvanishing coefficient",
                        "phase and transport along a bicharacteristic, eiconal residual",
                        "I_tau asymptotics for a planted operator on the model solution",
                        "sign grids of the p1/p2 fixtures as CSV and SVG",
                        "proportionality of first-order operators",
                        "iterated Hamilton commutators and the transport identity"};
  CLI::Option* seed_opt = nullptr;
  for (int i = 0; i < 8; ++i) {
    CLI::App* sub = app.add_subcommand(tasks[i], help[i]);
    sub->add_option("--config", config, "JSON config file");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    auto* so = sub->add_option("--seed", seed, "random seed (overrides the config)");
    if (!seed_opt) seed_opt = so;
    sub->add_option("--tau-min", tau_min, "smallest tau of the geometric grid");
    sub->add_option("--tau-max", tau_max, "largest tau of the geometric grid");
    sub->add_option("--tol", tol, "primary tolerance of the task");
    sub->add_option("--name,--fixture", name, "fixture name used when no config is given");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string task = app.get_subcommands().front()->get_name();
  bool has_seed = false;
  for (auto* sub : app.get_subcommands())
    if (sub->get_option("--seed")->count() > 0) has_seed = true;

  std::string text;
  if (!config.empty()) {
    std::ifstream f(config, std::ios::binary);
    if (!f) {
      std::fprintf(stderr, "mlw: i/o error: cannot read %s\n", config.c_str());
      return MLW_E_IO;
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  } else if (!name.empty()) {
    text = shortcut_config(task, name);
  } else {
    std::fprintf(stderr, "mlw: schema error: no --config given (and no --name shortcut)\n");
    return MLW_E_SCHEMA;
  }

  mlw_run_options opt;
  mlw_run_options_init(&opt);
  opt.workers = workers;
  opt.has_seed = has_seed;
  opt.seed = seed;
  opt.tau_min = tau_min;
  opt.tau_max = tau_max;
  opt.tol = tol;
  opt.name = name.empty() ? nullptr : name.c_str();

  mlw_report* rep = nullptr;
  const mlw_status st = mlw_run_task(task.c_str(), text.c_str(), out.c_str(), &opt, &rep);
  if (rep) {
    std::printf("%s\n", mlw_report_json(rep));
    mlw_report_free(rep);
  }
  if (st != MLW_OK) std::fprintf(stderr, "mlw: %s: %s\n", status_name(st), mlw_last_error());
  if (st == MLW_E_ARGUMENT) return MLW_E_SCHEMA;
  return st;
}
