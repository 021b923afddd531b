// Copyright 2026 The mlw Authors
// SPDX-License-Identifier: Apache-2.0
#include "mlw/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>

#include "mlw/error.hpp"

namespace mlw {

static_assert(std::endian::native == std::endian::little, "grid I/O assumes a little-endian host");

GridSpec GridSpec::cube(int n, int points, double half_width, std::vector<double> carrier) {
  GridSpec g;
  g.n = n;
  g.dims.assign(n, points);
  g.lo.assign(n, -half_width);
  g.hi.assign(n, half_width);
  g.carrier = carrier.empty() ? std::vector<double>(n, 0.0) : std::move(carrier);
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (n < 1) throw PreconditionError("grid dimension must be positive");
  if (static_cast<int>(dims.size()) != n || static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n ||
      static_cast<int>(carrier.size()) != n)
    throw PreconditionError("grid spec arrays must have length n");
  for (int k = 0; k < n; ++k) {
    if (dims[k] < 2) throw PreconditionError("grid needs at least 2 points per axis");
    if (!(hi[k] > lo[k])) throw PreconditionError("empty grid box");
  }
}

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (int d : dims) s *= static_cast<std::size_t>(d);
  return s;
}

void GridSpec::point(std::size_t flat, double* x) const {
  for (int k = n - 1; k >= 0; --k) {
    const std::size_t i = flat % dims[k];
    flat /= dims[k];
    x[k] = lo[k] + static_cast<double>(i) * step(k);
  }
}

std::complex<double> GridFunction::value(std::size_t flat) const {
  std::vector<double> x(spec.n);
  spec.point(flat, x.data());
  double ph = 0;
  for (int k = 0; k < spec.n; ++k) ph += spec.carrier[k] * x[k];
  return data[flat] * std::polar(1.0, ph);
}

double GridFunction::max_abs() const {
  double m = 0;
  for (const auto& v : data) m = std::max(m, std::abs(v));
  return m;
}

namespace {

template <class T>
void put(std::ofstream& o, T v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(Status::io, "truncated grid file");
  return v;
}

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void write_grid(const GridFunction& g, const std::string& path) {
  g.spec.validate();
  if (g.data.size() != g.spec.size()) throw PreconditionError("grid data size mismatch");
  std::ofstream o(path, std::ios::binary);
  if (!o) throw Error(Status::io, "cannot open " + path);
  o.write("MLWG", 4);
  put<std::uint32_t>(o, 1);
  put<std::uint32_t>(o, static_cast<std::uint32_t>(g.spec.n));
  for (int d : g.spec.dims) put<std::uint32_t>(o, static_cast<std::uint32_t>(d));
  for (double v : g.spec.lo) put(o, v);
  for (double v : g.spec.hi) put(o, v);
  for (double v : g.spec.carrier) put(o, v);
  for (const auto& v : g.data) {
    put(o, v.real());
    put(o, v.imag());
  }
  if (!o) throw Error(Status::io, "write failed: " + path);
}

GridFunction read_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Status::io, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MLWG", 4) != 0) throw Error(Status::io, "not a grid file: " + path);
  if (get<std::uint32_t>(in) != 1) throw Error(Status::io, "unsupported grid version");
  GridFunction g;
  g.spec.n = static_cast<int>(get<std::uint32_t>(in));
  if (g.spec.n < 1 || g.spec.n > 16) throw Error(Status::io, "bad grid dimension");
  for (int k = 0; k < g.spec.n; ++k) g.spec.dims.push_back(static_cast<int>(get<std::uint32_t>(in)));
  for (auto* v : {&g.spec.lo, &g.spec.hi, &g.spec.carrier})
    for (int k = 0; k < g.spec.n; ++k) v->push_back(get<double>(in));
  g.spec.validate();
  g.data.resize(g.spec.size());
  for (auto& v : g.data) {
    const double re = get<double>(in);
    v = {re, get<double>(in)};
  }
  return g;
}

double sobolev_norm(const GridFunction& g, double s, double edge_tol) {
  const GridSpec& sp = g.spec;
  sp.validate();
  if (g.data.size() != sp.size()) throw PreconditionError("grid data size mismatch");
  const double peak = g.max_abs();
  if (peak == 0) return 0;
  // boundary layer: first and last index on every axis
  std::vector<int> idx(sp.n);
  for (std::size_t f = 0; f < g.data.size(); ++f) {
    std::size_t r = f;
    bool edge = false;
    for (int k = sp.n - 1; k >= 0; --k) {
      const int i = static_cast<int>(r % sp.dims[k]);
      r /= sp.dims[k];
      if (i == 0 || i == sp.dims[k] - 1) edge = true;
    }
    if (edge && std::abs(g.data[f]) > edge_tol * peak)
      throw DomainError("grid function is not supported inside the box (edge/max = " +
                        std::to_string(std::abs(g.data[f]) / peak) + ")");
  }
  const std::size_t N = sp.size();
  fftw_complex* buf = fftw_alloc_complex(N);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(planner_mutex());
    plan = fftw_plan_dft(sp.n, sp.dims.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t f = 0; f < N; ++f) {
    buf[f][0] = g.data[f].real();
    buf[f][1] = g.data[f].imag();
  }
  fftw_execute(plan);
  double cell = 1, vol = 1;
  for (int k = 0; k < sp.n; ++k) {
    cell *= sp.step(k);
    vol *= sp.hi[k] - sp.lo[k];
  }
  // The transform of the demodulated samples at index m sits at frequency
  // 2 pi m~/L + carrier; the phase from lo is irrelevant for |g^|.
  long double acc = 0;
  for (std::size_t f = 0; f < N; ++f) {
    std::size_t r = f;
    double xi2 = 0;
    for (int k = sp.n - 1; k >= 0; --k) {
      const int m = static_cast<int>(r % sp.dims[k]);
      r /= sp.dims[k];
      const int ms = m <= sp.dims[k] / 2 ? m : m - sp.dims[k];
      const double xi = 2 * M_PI * ms / (sp.hi[k] - sp.lo[k]) + sp.carrier[k];
      xi2 += xi * xi;
    }
    const double a2 = (buf[f][0] * buf[f][0] + buf[f][1] * buf[f][1]) * cell * cell;
    acc += static_cast<long double>(std::pow(1 + xi2, s) * a2);
  }
  {
    std::lock_guard<std::mutex> lk(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return std::sqrt(static_cast<double>(acc / vol));
}

}  // namespace mlw
