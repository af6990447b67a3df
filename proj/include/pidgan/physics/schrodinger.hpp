#pragma once

#include "pidgan/physics/system.hpp"

namespace pidgan::physics {

/// Real and imaginary parts of i h_t + 0.5 h_xx + |h|^2 h for h = u + i v.
/// Returns an N x 2 batch [f_u, f_v].
inline ad::Var schrodinger_residual(const ad::Var& u, const ad::Var& v, const ad::Var& u_t,
                                    const ad::Var& v_t, const ad::Var& u_xx, const ad::Var& v_xx) {
  const ad::Var mod2 = ad::square(u) + ad::square(v);
  const ad::Var f_u = 0.5 * u_xx - v_t + mod2 * u;
  const ad::Var f_v = 0.5 * v_xx + u_t + mod2 * v;
  return ad::concat_cols({f_u, f_v});
}

/// Inputs (x, t), outputs (u, v). Two residuals.
class SchrodingerSystem final : public PhysicsSystem {
 public:
  static constexpr int kX = 0;
  static constexpr int kT = 1;

  std::string name() const override { return "schrodinger"; }
  int residual_count() const override { return 2; }
  int input_dim() const override { return 2; }
  int output_dim() const override { return 2; }
  PhysicsKind kind() const override { return PhysicsKind::perfect; }
  DerivativeRequest derivatives() const override { return DerivativeRequest{{kX, kT}, {{kX, kX}}}; }

 protected:
  ad::Var compute(const Matrix&, const Jet& y) const override {
    const ad::Var h_t = y.d(kT);
    const ad::Var h_xx = y.dd(kX, kX);
    return schrodinger_residual(y.u(0), y.u(1), ad::col(h_t, 0), ad::col(h_t, 1), ad::col(h_xx, 0),
                                ad::col(h_xx, 1));
  }
};

}  // namespace pidgan::physics
