// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Config-driven runners behind the command line.  Config layout and the
// per-task parameters are described in README.md.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlw/symbol.hpp"

namespace mlw {

struct RunOptions {
  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau_min, tau_max, tol;
  std::string name;  // fixture shortcut when no config is given
};

struct TaskResult {
  nlohmann::json report;
  int exit_code = 0;
  std::vector<std::string> artifacts;
};

const std::vector<std::string>& task_names();

// Parses config text.  Throws SchemaError for malformed JSON or a non-object.
nlohmann::json parse_config(const std::string& text);

// Runs one subcommand.  Artifacts go to out_dir (created when missing).
// Throws SchemaError for config problems; numerical and other failures
// propagate as their own error types.
TaskResult run_task(const std::string& task, const nlohmann::json& config, const std::string& out_dir,
                    const RunOptions& opt = {});

// Symbol from a config entry: a fixture name or {"degree": m, "terms": [...]}.
ClassicalSymbol symbol_from_json(const nlohmann::json& j, int n, const std::string& where);

}  // namespace mlw
