// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlw {

// Status codes shared by the C API and the command line tool.
enum class Status : int {
  ok = 0,
  parse = 1,
  schema = 2,
  inconclusive = 3,
  numerical = 4,
  domain = 5,
  precondition = 6,
  io = 7,
  internal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(Status s, const std::string& what) : std::runtime_error(what), status_(s) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& msg)
      : Error(Status::parse, msg + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(Status::domain, msg) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& msg) : Error(Status::precondition, msg) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(Status::numerical, msg) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& msg) : Error(Status::schema, msg) {}
};

}  // namespace mlw
