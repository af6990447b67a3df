#pragma once

// Adaptive physics weight: lambda_hat = max|grad data| / mean|grad physics|,
// smoothed with a moving average.

#include "pidgan/common.hpp"

#include <vector>

namespace pidgan::training {

struct ApinnGradientStats {
  double max_abs_data = 0.0;
  double mean_abs_physics = 0.0;
};

inline ApinnGradientStats apinn_gradient_stats(const std::vector<Matrix>& data_grads,
                                               const std::vector<Matrix>& physics_grads) {
  ApinnGradientStats s;
  double sum = 0.0;
  Eigen::Index count = 0;
  for (const auto& g : data_grads)
    if (g.size() > 0) s.max_abs_data = std::max(s.max_abs_data, g.cwiseAbs().maxCoeff());
  for (const auto& g : physics_grads) {
    sum += g.cwiseAbs().sum();
    count += g.size();
  }
  s.mean_abs_physics = count > 0 ? sum / static_cast<double>(count) : 0.0;
  return s;
}

inline double apinn_update(double lambda_prev, const ApinnGradientStats& s, double alpha = 0.1) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("adaptive weight smoothing must lie in (0, 1]");
  if (!(s.mean_abs_physics > 0.0) || !std::isfinite(s.mean_abs_physics) || !std::isfinite(s.max_abs_data)) {
    warn("adaptive weight: physics gradients vanish, keeping lambda = " + std::to_string(lambda_prev));
    return lambda_prev;
  }
  const double lambda_hat = s.max_abs_data / s.mean_abs_physics;
  const double next = (1.0 - alpha) * lambda_prev + alpha * lambda_hat;
  if (!(next > 0.0)) {
    warn("adaptive weight: update would not be positive, keeping lambda");
    return lambda_prev;
  }
  return next;
}

}  // namespace pidgan::training
