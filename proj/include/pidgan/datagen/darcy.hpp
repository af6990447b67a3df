#pragma once

// Nonlinear Darcy reference: div(k(u) grad u) = 0 on [0, L1] x [0, L2] with
// k(u) = k_s exp(alpha u), flux -k u_x1 = q at x1 = 0, u = u0 at x1 = L1 and
// no-flow at x2 in {0, L2}. Conservative finite volumes on the nodes with
// Kirchhoff face coefficients, solved by damped Newton with a sparse LU.

#include "pidgan/datagen/sampling.hpp"
#include "pidgan/physics/darcy.hpp"

#include <Eigen/SparseLU>

namespace pidgan::datagen {

struct DarcyModel {
  double k_s = 1.0;
  double alpha = 0.1;  // 0 gives a constant coefficient

  double k(double u) const { return k_s * std::exp(alpha * u); }
};

struct DarcyGridSpec {
  Eigen::Index n1 = 51;  // nodes along x1
  Eigen::Index n2 = 51;  // nodes along x2
  physics::DarcyOptions domain;
  DarcyModel model;
  double tolerance = 1e-10;  // max-norm of the discrete residual
  int max_iterations = 50;
};

struct DarcySolution {
  Grid2D grid;  // rows x2, cols x1; fields u, k
  double residual = 0.0;
  int iterations = 0;
};

/// Closed form of the one-dimensional solution the boundary data select.
inline double darcy_closed_form(double x1, const physics::DarcyOptions& d, const DarcyModel& m) {
  if (m.alpha == 0.0) return d.dirichlet_value + d.flux * (d.length1 - x1) / m.k_s;
  return std::log(std::exp(m.alpha * d.dirichlet_value) + m.alpha * d.flux * (d.length1 - x1) / m.k_s) / m.alpha;
}

namespace detail {

struct Dual {
  double v, d;
};
inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator*(double s, Dual a) { return {s * a.v, s * a.d}; }
inline Dual dexp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}

// Face coefficient: mean of k over [a, b], exact flux for the exponential model.
inline Dual face_k(Dual a, Dual b, const DarcyModel& m) {
  const Dual diff = b - a;
  const double z = m.alpha * diff.v;
  if (std::abs(z) < 1e-6) {
    // k(mid) * (1 + z^2 / 24)
    const Dual mid = 0.5 * (a + b);
    const Dual km = m.k_s * dexp(m.alpha * mid);
    const Dual zz = (m.alpha * diff) * (m.alpha * diff);
    return km * Dual{1.0 + zz.v / 24.0, zz.d / 24.0};
  }
  // k_s (e^{alpha b} - e^{alpha a}) / (alpha (b - a))
  const Dual num = dexp(m.alpha * b) - dexp(m.alpha * a);
  const Dual den = m.alpha * diff;
  return {m.k_s * num.v / den.v, m.k_s * (num.d * den.v - num.v * den.d) / (den.v * den.v)};
}

}  // namespace detail

inline DarcySolution solve_darcy_reference(const DarcyGridSpec& spec = {}) {
  using detail::Dual;
  const Eigen::Index n1 = spec.n1, n2 = spec.n2;
  if (n1 < 3 || n2 < 3) throw ValidationError("Darcy grid needs at least 3 nodes per axis");
  const auto& dom = spec.domain;
  const double h1 = dom.length1 / static_cast<double>(n1 - 1), h2 = dom.length2 / static_cast<double>(n2 - 1);
  const Eigen::Index unknowns = (n1 - 1) * n2;  // the x1 = L1 column is fixed
  auto id = [&](Eigen::Index i, Eigen::Index j) { return j * (n1 - 1) + i; };

  Matrix u = Matrix::Constant(n2, n1, dom.dirichlet_value);
  auto residual_at = [&](Eigen::Index i, Eigen::Index j, int seed_di, int seed_dj) {
    // Value of node (i + di, j + dj) as a dual number seeded at (i + seed_di, j + seed_dj).
    auto node = [&](int di, int dj) {
      const Eigen::Index ii = i + di, jj = j + dj;
      const bool seeded = di == seed_di && dj == seed_dj && ii < n1 - 1;
      return Dual{u(jj, ii), seeded ? 1.0 : 0.0};
    };
    const Dual c = node(0, 0);
    Dual r{0.0, 0.0};
    // x1 direction; flux boundary closes the half cell at i = 0.
    const Dual e = node(1, 0);
    const Dual fe = detail::face_k(c, e, spec.model) * (e - c);
    if (i == 0) {
      r = r + (2.0 / (h1 * h1)) * fe + Dual{2.0 * dom.flux / h1, 0.0};
    } else {
      const Dual w = node(-1, 0);
      const Dual fw = detail::face_k(w, c, spec.model) * (c - w);
      r = r + (1.0 / (h1 * h1)) * (fe - fw);
    }
    // x2 direction; no-flow closes the half cells at both edges.
    if (j == 0) {
      const Dual nn = node(0, 1);
      r = r + (2.0 / (h2 * h2)) * (detail::face_k(c, nn, spec.model) * (nn - c));
    } else if (j == n2 - 1) {
      const Dual s = node(0, -1);
      r = r - (2.0 / (h2 * h2)) * (detail::face_k(s, c, spec.model) * (c - s));
    } else {
      const Dual nn = node(0, 1), s = node(0, -1);
      r = r + (1.0 / (h2 * h2)) *
                  (detail::face_k(c, nn, spec.model) * (nn - c) - detail::face_k(s, c, spec.model) * (c - s));
    }
    return r;
  };

  auto assemble = [&](Vector& f, Eigen::SparseMatrix<double>* jac) {
    f.resize(unknowns);
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index j = 0; j < n2; ++j)
      for (Eigen::Index i = 0; i < n1 - 1; ++i) {
        f(id(i, j)) = residual_at(i, j, 99, 99).v;
        if (!jac) continue;
        const int offsets[5][2] = {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (const auto& o : offsets) {
          const Eigen::Index ii = i + o[0], jj = j + o[1];
          if (ii < 0 || ii >= n1 - 1 || jj < 0 || jj >= n2) continue;
          trip.emplace_back(id(i, j), id(ii, jj), residual_at(i, j, o[0], o[1]).d);
        }
      }
    if (jac) {
      jac->resize(unknowns, unknowns);
      jac->setFromTriplets(trip.begin(), trip.end());
    }
  };

  DarcySolution sol;
  Vector f;
  Eigen::SparseMatrix<double> jac;
  assemble(f, nullptr);
  double norm = f.cwiseAbs().maxCoeff();
  int it = 0;
  while (norm > spec.tolerance) {
    if (++it > spec.max_iterations)
      throw std::runtime_error("Darcy Newton did not converge in " + std::to_string(spec.max_iterations) +
                               " iterations (residual " + std::to_string(norm) +
                               "); try a smaller alpha or a stronger damping");
    assemble(f, &jac);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success) throw std::runtime_error("Darcy Newton: singular Jacobian");
    const Vector step = lu.solve(-f);
    const Matrix saved = u;
    double damping = 1.0, trial = norm;
    for (int b = 0; b < 30; ++b) {
      for (Eigen::Index j = 0; j < n2; ++j)
        for (Eigen::Index i = 0; i < n1 - 1; ++i) u(j, i) = saved(j, i) + damping * step(id(i, j));
      assemble(f, nullptr);
      trial = f.allFinite() ? f.cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity();
      if (trial < norm) break;
      damping *= 0.5;
    }
    if (!(trial < norm))
      throw std::runtime_error("Darcy Newton: line search failed at residual " + std::to_string(norm) +
                               "; try stronger damping or a better initial guess");
    norm = trial;
  }
  sol.residual = norm;
  sol.iterations = it;
  sol.grid.col_axis = linspace(0.0, dom.length1, n1);
  sol.grid.row_axis = linspace(0.0, dom.length2, n2);
  Matrix k = u.unaryExpr([&](double v) { return spec.model.k(v); });
  sol.grid.fields = {u, k};
  return sol;
}

}  // namespace pidgan::datagen
