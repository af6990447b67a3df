#pragma once

// Viscous Burgers reference: u_t + u u_x = nu u_xx on [-1, 1] x [0, 1],
// u(x, 0) = -sin(pi x), u(+-1, t) = 0, via the Cole-Hopf transform
//
//   u(x, t) = -int sin(pi (x - s)) F(x - s) G(s) ds / int F(x - s) G(s) ds
//   F(y) = exp(-cos(pi y) / (2 pi nu)),  G(s) = exp(-s^2 / (4 nu t)).
//
// Integrals use composite Gauss-Legendre on the window where G is not
// negligible, with the exponents shifted by their maximum.

#include "pidgan/datagen/sampling.hpp"

#include <array>
#include <limits>
#include <numbers>

namespace pidgan::datagen {

struct BurgersGridSpec {
  Eigen::Index nx = 256;
  Eigen::Index nt = 100;
  double nu = 0.01 / std::numbers::pi;
  int panels = 400;  // Gauss-Legendre panels over the window
};

namespace detail {

// 10-point Gauss-Legendre nodes and weights on [-1, 1].
inline constexpr std::array<double, 10> kGlNodes{
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244, -0.4333953941292472, -0.1488743389816312,
    0.1488743389816312,  0.4333953941292472,  0.6794095682990244,  0.8650633666889845,  0.9739065285171717};
inline constexpr std::array<double, 10> kGlWeights{
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820, 0.2692667193099963, 0.2955242247147529,
    0.2955242247147529, 0.2692667193099963, 0.2190863625159820, 0.1494513491505806, 0.0666713443086881};

}  // namespace detail

/// Half-width of the convolution window for time t.
inline double burgers_window(double t, double nu) {
  return std::sqrt(4.0 * nu * t * (1.0 / (std::numbers::pi * nu) + 40.0));
}

/// Pointwise Cole-Hopf value.
inline double burgers_cole_hopf(double x, double t, double nu, int panels = 400) {
  if (t <= 0.0) return -std::sin(std::numbers::pi * x);
  const double pi = std::numbers::pi;
  const double a = 1.0 / (2.0 * pi * nu), b = 1.0 / (4.0 * nu * t);
  const double w = burgers_window(t, nu);
  const double h = 2.0 * w / panels;
  thread_local std::vector<double> expo, sines, weights;
  expo.clear();
  sines.clear();
  weights.clear();
  double top = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < panels; ++p) {
    const double mid = -w + (p + 0.5) * h;
    for (std::size_t q = 0; q < detail::kGlNodes.size(); ++q) {
      const double s = mid + 0.5 * h * detail::kGlNodes[q];
      const double y = x - s;
      expo.push_back(-a * std::cos(pi * y) - b * s * s);
      sines.push_back(std::sin(pi * y));
      weights.push_back(detail::kGlWeights[q]);
      top = std::max(top, expo.back());
    }
  }
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < expo.size(); ++k) {
    const double e = std::exp(expo[k] - top) * weights[k];
    num += sines[k] * e;
    den += e;
  }
  if (!(den > 0.0) || !std::isfinite(num))
    throw std::runtime_error("Burgers quadrature failed at x = " + std::to_string(x) + ", t = " + std::to_string(t) +
                             " (panels = " + std::to_string(panels) + ")");
  return -num / den;
}

/// Reference field on a uniform grid; rows are time levels, columns x nodes.
inline Grid2D solve_burgers_reference(const BurgersGridSpec& spec = {}) {
  if (!(spec.nu > 0.0)) throw ValidationError("viscosity must be positive");
  Grid2D g{linspace(-1.0, 1.0, spec.nx), linspace(0.0, 1.0, spec.nt), {}};
  Matrix u(spec.nt, spec.nx);
  for (Eigen::Index i = 0; i < spec.nt; ++i)
    for (Eigen::Index j = 0; j < spec.nx; ++j) {
      if (j == 0 || j == spec.nx - 1)
        u(i, j) = 0.0;
      else
        u(i, j) = burgers_cole_hopf(g.col_axis(j), g.row_axis(i), spec.nu, spec.panels);
    }
  g.fields.push_back(std::move(u));
  return g;
}

}  // namespace pidgan::datagen
