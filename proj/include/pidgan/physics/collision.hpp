#pragma once

#include "pidgan/physics/system.hpp"

namespace pidgan::physics {

/// Input column layout {v_a1, v_b1, m_a, m_b, d}; outputs {v_af, v_bf}.
struct CollisionColumns {
  static constexpr int kVa = 0;
  static constexpr int kVb = 1;
  static constexpr int kMa = 2;
  static constexpr int kMb = 3;
  static constexpr int kDistance = 4;
};

inline void require_positive_masses(const Matrix& m_a, const Matrix& m_b) {
  for (Eigen::Index i = 0; i < m_a.rows(); ++i)
    if (!(m_a(i, 0) > 0) || !(m_b(i, 0) > 0))
      throw ValidationError("collision: non-positive mass at sample " + std::to_string(i));
}

/// [momentum, kinetic energy] before minus after. Masses and pre-impact
/// speeds are N x 1 data columns; the post-impact speeds are predictions.
inline ad::Var collision_residual(const Matrix& m_a, const Matrix& m_b, const Matrix& v_a1, const Matrix& v_b1,
                                  const ad::Var& v_af, const ad::Var& v_bf) {
  require_positive_masses(m_a, m_b);
  ad::Tape& t = v_af.tape();
  const Matrix p_before = (m_a.array() * v_a1.array() + m_b.array() * v_b1.array()).matrix();
  const Matrix e_before =
      (0.5 * m_a.array() * v_a1.array().square() + 0.5 * m_b.array() * v_b1.array().square()).matrix();
  const ad::Var ma = t.constant(m_a), mb = t.constant(m_b);
  const ad::Var momentum = t.constant(p_before) - (ma * v_af + mb * v_bf);
  const ad::Var energy =
      t.constant(e_before) - (0.5 * (ma * ad::square(v_af)) + 0.5 * (mb * ad::square(v_bf)));
  return ad::concat_cols({momentum, energy});
}

/// Two-body elastic collision: conservation of momentum and energy.
class CollisionSystem final : public PhysicsSystem {
 public:
  std::string name() const override { return "collision"; }
  int residual_count() const override { return 2; }
  int input_dim() const override { return 5; }
  int output_dim() const override { return 2; }
  PhysicsKind kind() const override { return PhysicsKind::imperfect; }

 protected:
  ad::Var compute(const Matrix& x, const Jet& y) const override {
    using C = CollisionColumns;
    return collision_residual(x.col(C::kMa), x.col(C::kMb), x.col(C::kVa), x.col(C::kVb), y.u(0), y.u(1));
  }
};

}  // namespace pidgan::physics
