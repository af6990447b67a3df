#pragma once

#include "pidgan/physics/system.hpp"

#include <numbers>

namespace pidgan::physics {

struct BurgersOptions {
  double nu = 0.01 / std::numbers::pi;
  /// Coefficient sign of nu * u_xx in the residual. -1 gives the standard
  /// viscous form u_t + u u_x - nu u_xx; +1 gives u_t + u u_x + nu u_xx.
  double diffusion_sign = -1.0;
};

/// u_t + u u_x + sign * nu * u_xx. Inputs are the columns of a jet over (x, t).
inline ad::Var burgers_residual(const ad::Var& u, const ad::Var& u_t, const ad::Var& u_x,
                                const ad::Var& u_xx, const BurgersOptions& opt = {}) {
  return u_t + u * u_x + (opt.diffusion_sign * opt.nu) * u_xx;
}

/// Inputs (x, t), output u. One residual.
class BurgersSystem final : public PhysicsSystem {
 public:
  static constexpr int kX = 0;
  static constexpr int kT = 1;

  explicit BurgersSystem(BurgersOptions opt = {}) : opt_(opt) {
    if (!(opt_.nu >= 0)) throw ValidationError("burgers: viscosity must be non-negative");
    if (opt_.diffusion_sign != 1.0 && opt_.diffusion_sign != -1.0)
      throw ValidationError("burgers: diffusion_sign must be +1 or -1");
  }

  std::string name() const override { return "burgers"; }
  int residual_count() const override { return 1; }
  int input_dim() const override { return 2; }
  int output_dim() const override { return 1; }
  PhysicsKind kind() const override { return PhysicsKind::perfect; }
  DerivativeRequest derivatives() const override { return DerivativeRequest{{kX, kT}, {{kX, kX}}}; }
  const BurgersOptions& options() const { return opt_; }

 protected:
  ad::Var compute(const Matrix&, const Jet& y) const override {
    return burgers_residual(y.value, y.d(kT), y.d(kX), y.dd(kX, kX), opt_);
  }

 private:
  BurgersOptions opt_;
};

}  // namespace pidgan::physics
