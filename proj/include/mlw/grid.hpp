// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Complex samples on a periodic box grid and their discrete Sobolev norms.
#pragma once

#include <complex>
#include <string>
#include <vector>

namespace mlw {

// Points lo + i (hi - lo)/dims, i = 0..dims-1 on each axis; the last axis
// varies fastest.  Samples are stored demodulated by e^{-i carrier.x}.
struct GridSpec {
  int n = 0;
  std::vector<int> dims;
  std::vector<double> lo, hi, carrier;

  static GridSpec cube(int n, int points, double half_width, std::vector<double> carrier = {});
  std::size_t size() const;
  double step(int axis) const { return (hi[axis] - lo[axis]) / dims[axis]; }
  void point(std::size_t flat, double* x) const;
  void validate() const;
};

struct GridFunction {
  GridSpec spec;
  std::vector<std::complex<double>> data;

  std::complex<double> value(std::size_t flat) const;  // remodulated sample
  double max_abs() const;
};

// Binary layout: "MLWG", u32 version, u32 n, u32 dims[n], f64 lo[n], f64 hi[n],
// f64 carrier[n], then re/im doubles per sample, all little-endian.
void write_grid(const GridFunction& g, const std::string& path);
GridFunction read_grid(const std::string& path);

// (2 pi)^{-n} int (1 + |xi|^2)^s |g^(xi)|^2 dxi realized on the periodized
// box by FFT.  Throws DomainError when the boundary samples exceed
// edge_tol times the maximum.
double sobolev_norm(const GridFunction& g, double s, double edge_tol = 1e-12);

}  // namespace mlw
