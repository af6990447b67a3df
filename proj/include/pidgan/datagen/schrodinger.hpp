#pragma once

// Nonlinear Schrodinger reference: i h_t + 0.5 h_xx + |h|^2 h = 0 on the
// periodic domain [-5, 5), h(x, 0) = 2 sech(x), by Strang split-step Fourier.

#include "pidgan/datagen/sampling.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <numbers>

namespace pidgan::datagen {

struct SchrodingerGridSpec {
  Eigen::Index nx = 256;
  Eigen::Index nt = 201;  // output time levels on [0, pi/2]
  int substeps = 50;      // split steps between output levels
  double x_min = -5.0;
  double x_max = 5.0;
  double t_max = std::numbers::pi / 2;
  double tail_fraction = 0.25;   // top fraction of |k| checked for aliasing
  double tail_threshold = 1e-6;  // relative spectral energy allowed there
};

struct SchrodingerSolution {
  Grid2D grid;  // fields: u = Re h, v = Im h
  Vector mass;  // int |h|^2 dx at each output level
  double max_tail_energy = 0.0;
};

inline SchrodingerSolution solve_schrodinger_reference(const SchrodingerGridSpec& spec = {}) {
  using cd = std::complex<double>;
  if (spec.nx < 8 || spec.nx % 2 != 0) throw ValidationError("Schrodinger grid needs an even number of points >= 8");
  if (spec.substeps < 1) throw ValidationError("substeps must be positive");
  const Eigen::Index n = spec.nx;
  const double length = spec.x_max - spec.x_min, dx = length / static_cast<double>(n);
  Vector x(n);
  for (Eigen::Index j = 0; j < n; ++j) x(j) = spec.x_min + dx * static_cast<double>(j);
  const Vector t = linspace(0.0, spec.t_max, spec.nt);
  const double dt = (t(1) - t(0)) / spec.substeps;

  // Angular wavenumbers in FFT order.
  std::vector<double> k(static_cast<std::size_t>(n));
  for (Eigen::Index m = 0; m < n; ++m) {
    const Eigen::Index mm = m <= n / 2 ? m : m - n;
    k[static_cast<std::size_t>(m)] = 2.0 * std::numbers::pi * static_cast<double>(mm) / length;
  }
  std::vector<cd> linear(static_cast<std::size_t>(n));
  for (std::size_t m = 0; m < k.size(); ++m) linear[m] = std::exp(cd(0.0, -0.5 * k[m] * k[m] * dt));

  std::vector<cd> h(static_cast<std::size_t>(n)), hat;
  for (Eigen::Index j = 0; j < n; ++j) h[static_cast<std::size_t>(j)] = 2.0 / std::cosh(x(j));

  Eigen::FFT<double> fft;
  SchrodingerSolution sol;
  sol.grid.col_axis = x;
  sol.grid.row_axis = t;
  Matrix u(spec.nt, n), v(spec.nt, n);
  sol.mass.resize(spec.nt);

  auto record = [&](Eigen::Index level) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      u(level, j) = h[static_cast<std::size_t>(j)].real();
      v(level, j) = h[static_cast<std::size_t>(j)].imag();
      m += std::norm(h[static_cast<std::size_t>(j)]) * dx;
    }
    sol.mass(level) = m;
    // Aliasing check: energy share of the highest wavenumbers.
    fft.fwd(hat, h);
    double total = 0.0, tail = 0.0;
    const double kmax = std::numbers::pi / dx;
    for (std::size_t q = 0; q < hat.size(); ++q) {
      const double e = std::norm(hat[q]);
      total += e;
      if (std::abs(k[q]) >= (1.0 - spec.tail_fraction) * kmax) tail += e;
    }
    const double share = tail / total;
    sol.max_tail_energy = std::max(sol.max_tail_energy, share);
    if (share > spec.tail_threshold)
      throw std::runtime_error("Schrodinger solver: spectral tail energy " + std::to_string(share) + " at t = " +
                               std::to_string(t(level)) + " exceeds threshold; refine the grid (nx = " +
                               std::to_string(n) + ")");
  };

  auto half_nonlinear = [&] {
    for (auto& z : h) z *= std::exp(cd(0.0, std::norm(z) * 0.5 * dt));
  };

  record(0);
  for (Eigen::Index level = 1; level < spec.nt; ++level) {
    for (int s = 0; s < spec.substeps; ++s) {
      half_nonlinear();
      fft.fwd(hat, h);
      for (std::size_t q = 0; q < hat.size(); ++q) hat[q] *= linear[q];
      fft.inv(h, hat);
      half_nonlinear();
    }
    record(level);
  }
  sol.grid.fields = {std::move(u), std::move(v)};
  return sol;
}

}  // namespace pidgan::datagen
