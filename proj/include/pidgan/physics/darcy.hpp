#pragma once

#include "pidgan/physics/system.hpp"

namespace pidgan::physics {

/// Domain [0, L1] x [0, L2]. Flux -k u_x1 = q at x1 = 0, Dirichlet u = u0 at
/// x1 = L1, no-flow u_x2 = 0 at x2 in {0, L2}.
struct DarcyOptions {
  double length1 = 10.0;
  double length2 = 10.0;
  double flux = 1.0;
  double dirichlet_value = 0.0;
  double boundary_tolerance = 1e-9;
};

/// Boundary family membership, N x 3 with 0/1 entries.
struct DarcyBoundaryMask {
  static constexpr int kFlux = 0;
  static constexpr int kNoFlow = 1;
  static constexpr int kDirichlet = 2;
  Matrix mask;
};

/// Assigns each sample to at most one boundary family by geometry. Corners
/// go to Dirichlet first, then flux, then no-flow.
inline DarcyBoundaryMask classify_darcy_boundary(const Matrix& x, const DarcyOptions& opt) {
  DarcyBoundaryMask out{Matrix::Zero(x.rows(), 3)};
  const double tol = opt.boundary_tolerance;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double x1 = x(i, 0), x2 = x(i, 1);
    if (std::abs(x1 - opt.length1) <= tol)
      out.mask(i, DarcyBoundaryMask::kDirichlet) = 1;
    else if (std::abs(x1) <= tol)
      out.mask(i, DarcyBoundaryMask::kFlux) = 1;
    else if (std::abs(x2) <= tol || std::abs(x2 - opt.length2) <= tol)
      out.mask(i, DarcyBoundaryMask::kNoFlow) = 1;
  }
  return out;
}

inline void validate_darcy_mask(const DarcyBoundaryMask& m) {
  if (m.mask.cols() != 3) throw ValidationError("darcy: boundary mask needs 3 columns");
  for (Eigen::Index i = 0; i < m.mask.rows(); ++i) {
    double members = 0;
    for (int c = 0; c < 3; ++c) {
      const double v = m.mask(i, c);
      if (v != 0.0 && v != 1.0) throw ValidationError("darcy: boundary mask entries must be 0 or 1");
      members += v;
    }
    if (members > 1)
      throw ValidationError("darcy: sample " + std::to_string(i) + " assigned to conflicting boundary families");
  }
}

/// Columns: [interior, flux, no-flow, Dirichlet]. Interior is
/// d/dx1(k u_x1) + d/dx2(k u_x2), expanded by the product rule. Boundary
/// columns are zero for samples outside that family.
inline ad::Var darcy_residual(const ad::Var& u, const ad::Var& k, const ad::Var& u_x1, const ad::Var& u_x2,
                              const ad::Var& u_x1x1, const ad::Var& u_x2x2, const ad::Var& k_x1,
                              const ad::Var& k_x2, const DarcyBoundaryMask& boundary, const DarcyOptions& opt) {
  validate_darcy_mask(boundary);
  if (boundary.mask.rows() != u.rows()) throw ValidationError("darcy: boundary mask row count mismatch");
  ad::Tape& t = u.tape();
  auto mask = [&](int c) { return t.constant(boundary.mask.col(c)); };
  const ad::Var interior = k_x1 * u_x1 + k * u_x1x1 + k_x2 * u_x2 + k * u_x2x2;
  const ad::Var flux = mask(DarcyBoundaryMask::kFlux) * add_scalar(-(k * u_x1), -opt.flux);
  const ad::Var no_flow = mask(DarcyBoundaryMask::kNoFlow) * u_x2;
  const ad::Var dirichlet = mask(DarcyBoundaryMask::kDirichlet) * add_scalar(u, -opt.dirichlet_value);
  return ad::concat_cols({interior, flux, no_flow, dirichlet});
}

/// Inputs (x1, x2), outputs (u, k) where k is the predicted diffusion
/// coefficient at the predicted state. Four residual families.
class DarcySystem final : public PhysicsSystem {
 public:
  static constexpr int kX1 = 0;
  static constexpr int kX2 = 1;

  explicit DarcySystem(DarcyOptions opt = {}) : opt_(opt) {
    if (!(opt_.length1 > 0 && opt_.length2 > 0)) throw ValidationError("darcy: domain lengths must be positive");
  }

  std::string name() const override { return "darcy"; }
  int residual_count() const override { return 4; }
  int input_dim() const override { return 2; }
  int output_dim() const override { return 2; }
  PhysicsKind kind() const override { return PhysicsKind::perfect; }
  DerivativeRequest derivatives() const override {
    return DerivativeRequest{{kX1, kX2}, {{kX1, kX1}, {kX2, kX2}}};
  }
  const DarcyOptions& options() const { return opt_; }

 protected:
  ad::Var compute(const Matrix& x, const Jet& y) const override {
    const ad::Var g1 = y.d(kX1), g2 = y.d(kX2);
    return darcy_residual(y.u(0), y.u(1), ad::col(g1, 0), ad::col(g2, 0), y.dd(kX1, kX1, 0),
                          y.dd(kX2, kX2, 0), ad::col(g1, 1), ad::col(g2, 1), classify_darcy_boundary(x, opt_),
                          opt_);
  }

 private:
  DarcyOptions opt_;
};

}  // namespace pidgan::physics
