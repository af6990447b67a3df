#pragma once

#include "pidgan/physics/system.hpp"

#include <limits>

namespace pidgan::physics {

/// Scores are floored here so that exp underflow never produces an exact 0.
inline constexpr double kMinConsistency = std::numeric_limits<double>::min();

/// Physics consistency scores eta = exp(-lambda * R^2), one per residual entry.
struct ConsistencyVector {
  Matrix eta;  // N x K, entries in (0, 1]
  double lambda = 1.0;
};

inline void require_positive_lambda(double lambda) {
  if (!(lambda > 0) || !std::isfinite(lambda))
    throw ValidationError("consistency sharpness lambda must be a positive finite number");
}

inline ConsistencyVector consistency_score(const ResidualBatch& residuals, double lambda) {
  require_positive_lambda(lambda);
  require_finite(residuals);
  return {(-lambda * residuals.values.array().square()).exp().max(kMinConsistency).matrix(), lambda};
}

/// Differentiable form used inside training objectives.
inline ad::Var consistency_score(const ad::Var& residuals, double lambda) {
  require_positive_lambda(lambda);
  return ad::clamp(ad::exp(-lambda * ad::square(residuals)), kMinConsistency, 1.0);
}

/// eta' of ground-truth labels. Algebraic systems need only (x, y); PDE
/// systems need a provider that supplies the labels' derivatives.
inline ConsistencyVector ground_truth_consistency(const Matrix& x_u, const Matrix& y_u,
                                                  const PhysicsSystem& system, double lambda,
                                                  const DerivativeProvider* label_derivatives = nullptr) {
  if (label_derivatives) return consistency_score(system.evaluate(x_u, *label_derivatives), lambda);
  return consistency_score(system.evaluate(x_u, y_u), lambda);
}

/// Rejects scores outside (0, 1].
inline void require_valid_eta(const Matrix& eta) {
  for (Eigen::Index i = 0; i < eta.rows(); ++i)
    for (Eigen::Index k = 0; k < eta.cols(); ++k) {
      const double e = eta(i, k);
      if (!(e > 0.0 && e <= 1.0))
        throw ValidationError("consistency score outside (0, 1] at sample " + std::to_string(i));
    }
}

}  // namespace pidgan::physics
