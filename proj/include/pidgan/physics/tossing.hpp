#pragma once

#include "pidgan/physics/system.hpp"

namespace pidgan::physics {

/// Uniformly sampled 2-D trajectories. Inputs are the first three positions
/// (l1x, l1y, l2x, l2y, l3x, l3y); outputs the next `horizon` positions,
/// interleaved x/y.
struct TossingOptions {
  double gravity = 9.8;
  double dt = 0.1;
  int horizon = 12;
};

/// Time of output step s (0-based) measured from the first input position.
inline double tossing_time(int step, const TossingOptions& opt) { return (step + 3) * opt.dt; }

/// Linear map from inputs to the drag-free projectile prediction:
/// prediction = x * weights + offset, with velocity estimated from the first
/// two positions and the vertical component corrected by +g dt / 2.
struct TossingKinematics {
  Matrix weights;  // 6 x 2H
  RowVector offset;  // 1 x 2H
};

inline TossingKinematics tossing_kinematics(const TossingOptions& opt) {
  if (opt.horizon < 1) throw ValidationError("tossing: horizon must be at least 1");
  if (!(opt.dt > 0)) throw ValidationError("tossing: dt must be positive");
  const int h = opt.horizon;
  TossingKinematics km{Matrix::Zero(6, 2 * h), RowVector::Zero(2 * h)};
  for (int s = 0; s < h; ++s) {
    const double t = tossing_time(s, opt);
    const double r = t / opt.dt;
    // x: l1x + (l2x - l1x)/dt * t
    km.weights(0, 2 * s) = 1.0 - r;
    km.weights(2, 2 * s) = r;
    // y: l1y + ((l2y - l1y)/dt + g dt / 2) t - g t^2 / 2
    km.weights(1, 2 * s + 1) = 1.0 - r;
    km.weights(3, 2 * s + 1) = r;
    km.offset(2 * s + 1) = 0.5 * opt.gravity * opt.dt * t - 0.5 * opt.gravity * t * t;
  }
  return km;
}

/// Residual per predicted step: [R_x(0), R_y(0), R_x(1), ...].
inline ad::Var tossing_residual(const Matrix& inputs, const ad::Var& trajectory, const TossingOptions& opt) {
  if (inputs.cols() < 6) throw ValidationError("tossing: need three input positions (6 columns)");
  if (trajectory.cols() != 2 * opt.horizon)
    throw ValidationError("tossing: trajectory has " + std::to_string(trajectory.cols()) + " columns, expected " +
                          std::to_string(2 * opt.horizon));
  const TossingKinematics km = tossing_kinematics(opt);
  const Matrix ideal = (inputs.leftCols(6) * km.weights).rowwise() + km.offset;
  return trajectory - trajectory.tape().constant(ideal);
}

class TossingSystem final : public PhysicsSystem {
 public:
  explicit TossingSystem(TossingOptions opt = {}) : opt_(opt) { tossing_kinematics(opt_); }

  std::string name() const override { return "tossing"; }
  int residual_count() const override { return 2 * opt_.horizon; }
  int input_dim() const override { return 6; }
  int output_dim() const override { return 2 * opt_.horizon; }
  PhysicsKind kind() const override { return PhysicsKind::imperfect; }
  const TossingOptions& options() const { return opt_; }

 protected:
  ad::Var compute(const Matrix& x, const Jet& y) const override { return tossing_residual(x, y.value, opt_); }

 private:
  TossingOptions opt_;
};

}  // namespace pidgan::physics
