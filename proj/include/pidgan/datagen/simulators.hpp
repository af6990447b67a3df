#pragma once

// Synthetic data for the two imperfect-physics case studies.

#include "pidgan/datagen/sampling.hpp"
#include "pidgan/physics/tossing.hpp"

#include <array>

namespace pidgan::datagen {

struct Range {
  double lo, hi;
};

/// Object a slides towards object b, loses speed to friction over distance d,
/// then the pair collides elastically.
struct CollisionSpec {
  double friction = 0.3;  // sliding friction coefficient mu
  double gravity = 9.8;
  Range speed_a{2.0, 10.0};
  Range speed_b{0.0, 2.0};
  Range mass{1.0, 5.0};
  Range distance{0.5, 2.0};
};

struct Simulation {
  Matrix x, y;
};

/// Post-impact speeds for one sample of inputs {v_a1, v_b1, m_a, m_b, d}.
inline std::array<double, 2> collide(double va, double vb, double ma, double mb, double d, const CollisionSpec& s) {
  // Relative approach speed after friction, floored at zero (a stops short).
  const double w0 = va - vb;
  const double w2 = std::max(w0 * w0 - 2.0 * s.friction * s.gravity * d, 0.0);
  const double va_impact = vb + std::copysign(std::sqrt(w2), w0);
  const double m = ma + mb;
  return {((ma - mb) * va_impact + 2.0 * mb * vb) / m, (2.0 * ma * va_impact + (mb - ma) * vb) / m};
}

inline Simulation simulate_collisions(Eigen::Index n, const CollisionSpec& s, Rng& rng) {
  if (s.friction < 0.0) throw ValidationError("friction coefficient must be non-negative");
  if (!(s.mass.lo > 0.0)) throw ValidationError("masses must be positive");
  Matrix bounds(5, 2);
  bounds << s.speed_a.lo, s.speed_a.hi, s.speed_b.lo, s.speed_b.hi, s.mass.lo, s.mass.hi, s.mass.lo, s.mass.hi,
      s.distance.lo, s.distance.hi;
  Simulation out{latin_hypercube(n, bounds, rng), Matrix(n, 2)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto v = collide(out.x(i, 0), out.x(i, 1), out.x(i, 2), out.x(i, 3), out.x(i, 4), s);
    out.y(i, 0) = v[0];
    out.y(i, 1) = v[1];
  }
  return out;
}

/// Projectiles under gravity, a constant random wind and linear drag.
struct TossingSpec {
  physics::TossingOptions kinematics;
  double wind = 1.0;     // wind acceleration drawn from [-wind, wind] per axis
  double damping = 0.1;  // drag rate c in a = g + wind - c v
  Range speed{5.0, 15.0};
  Range angle{0.5, 1.2};  // launch angle in radians
  Range start{-1.0, 1.0};
  int substeps = 10;  // RK4 steps per output interval
};

inline Simulation simulate_tossing(Eigen::Index n, const TossingSpec& s, Rng& rng) {
  if (s.wind < 0.0 || s.damping < 0.0) throw ValidationError("wind and damping must be non-negative");
  if (s.substeps < 1) throw ValidationError("integrator substeps must be positive");
  const auto& k = s.kinematics;
  physics::tossing_kinematics(k);  // validates dt and horizon
  const int positions = 3 + k.horizon;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&](Range r) { return r.lo + (r.hi - r.lo) * u(rng); };
  Simulation out{Matrix(n, 6), Matrix(n, 2 * k.horizon)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double speed = draw(s.speed), angle = draw(s.angle);
    const double wx = s.wind * (2 * u(rng) - 1), wy = s.wind * (2 * u(rng) - 1);
    std::array<double, 4> state{draw(s.start), draw(s.start), speed * std::cos(angle), speed * std::sin(angle)};
    auto deriv = [&](const std::array<double, 4>& q) {
      return std::array<double, 4>{q[2], q[3], wx - s.damping * q[2], wy - k.gravity - s.damping * q[3]};
    };
    const double h = k.dt / s.substeps;
    for (int p = 0; p < positions; ++p) {
      if (p < 3) {
        out.x(i, 2 * p) = state[0];
        out.x(i, 2 * p + 1) = state[1];
      } else {
        out.y(i, 2 * (p - 3)) = state[0];
        out.y(i, 2 * (p - 3) + 1) = state[1];
      }
      for (int sub = 0; sub < s.substeps; ++sub) {
        std::array<double, 4> k1 = deriv(state), tmp{};
        for (int c = 0; c < 4; ++c) tmp[c] = state[c] + 0.5 * h * k1[c];
        const auto k2 = deriv(tmp);
        for (int c = 0; c < 4; ++c) tmp[c] = state[c] + 0.5 * h * k2[c];
        const auto k3 = deriv(tmp);
        for (int c = 0; c < 4; ++c) tmp[c] = state[c] + h * k3[c];
        const auto k4 = deriv(tmp);
        for (int c = 0; c < 4; ++c) state[c] += h / 6.0 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
      }
    }
  }
  return out;
}

}  // namespace pidgan::datagen
