#pragma once

#include "pidgan/networks/ensemble.hpp"
#include "pidgan/physics/system.hpp"

namespace pidgan::evaluation {

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError(std::string(what) + ": shape mismatch");
}

inline double rmse(const Matrix& y, const Matrix& y_hat) {
  require_same_shape(y, y_hat, "rmse");
  if (y.size() == 0) throw ValidationError("rmse of an empty set");
  return std::sqrt((y - y_hat).array().square().mean());
}

inline double relative_l2(const Matrix& y, const Matrix& y_hat) {
  require_same_shape(y, y_hat, "relative_l2");
  const double n = y.norm();
  if (!(n > 0.0)) throw ValidationError("relative L2 error is undefined for an all-zero reference");
  return (y - y_hat).norm() / n;
}

/// Fraction of entries with |y - mean| <= 2 std.
inline double ci95_coverage(const Matrix& y, const Matrix& mean, const Matrix& std) {
  require_same_shape(y, mean, "ci95_coverage");
  require_same_shape(y, std, "ci95_coverage");
  if ((std.array() < 0.0).any()) throw ValidationError("predictive std must be non-negative");
  if (y.size() == 0) return 0.0;
  const auto inside = ((y - mean).array().abs() <= 2.0 * std.array()).count();
  return static_cast<double>(inside) / static_cast<double>(y.size());
}

/// Residuals of the ensemble-mean prediction, using its mean input derivatives.
inline Matrix ensemble_residuals(const Matrix& x, const networks::Ensemble& e, const physics::PhysicsSystem& system) {
  const physics::DerivativeRequest need = system.derivatives().normalized();
  ad::Tape tape;
  physics::Jet jet;
  jet.request = need;
  jet.value = tape.constant(e.mean);
  for (int c : need.first) {
    const int s = e.request.first_index(c);
    if (s < 0) throw ConfigurationError("ensemble lacks the first derivative in coordinate " + std::to_string(c));
    jet.first.push_back(tape.constant(e.mean_first[static_cast<std::size_t>(s)]));
  }
  for (const auto& [i, j] : need.second) {
    const int s = e.request.second_index(i, j);
    if (s < 0) throw ConfigurationError("ensemble lacks a second derivative the residual needs");
    jet.second.push_back(tape.constant(e.mean_second[static_cast<std::size_t>(s)]));
  }
  return system.residual(x, jet).value();
}

/// Mean over samples and equations of |R|.
inline double residual_metric(const Matrix& residuals) {
  if (residuals.size() == 0) return 0.0;
  return residuals.cwiseAbs().mean();
}

inline double residual_metric(const Matrix& x, const networks::Ensemble& e, const physics::PhysicsSystem& system) {
  return residual_metric(ensemble_residuals(x, e, system));
}

struct UQReport {
  std::vector<double> relative_l2;  // per output column of y_test
  std::vector<double> rmse;
  double relative_l2_all = 0.0;
  double rmse_all = 0.0;
  double residual = 0.0;
  double mean_std = 0.0;
  double ci95 = 0.0;

  bool valid() const {
    bool ok = std::isfinite(residual) && std::isfinite(mean_std) && std::isfinite(ci95) && mean_std >= 0.0 &&
              ci95 >= 0.0 && ci95 <= 1.0;
    for (double v : relative_l2) ok = ok && std::isfinite(v);
    for (double v : rmse) ok = ok && std::isfinite(v);
    return ok;
  }
};

/// S-sample predictive ensemble of any trained generator-style model.
inline networks::Ensemble predictive_ensemble(const networks::Generator& g, const Matrix& x, Rng& rng, int samples,
                                              const physics::DerivativeRequest& request) {
  if (g.latent_dim() > 0) return networks::generate(g, x, rng, samples, request);
  if (g.dropout() > 0.0) return networks::mc_dropout_predict(g, x, rng, samples, request);
  return networks::generate(g, x, rng, 1, request);
}

/// Metrics against y_test; columns of y_test beyond the prediction are ignored.
inline UQReport uq_report(const Matrix& x_test, const Matrix& y_test, const networks::Ensemble& e,
                          const physics::PhysicsSystem& system) {
  UQReport r;
  const Eigen::Index c = std::min(y_test.cols(), e.mean.cols());
  const Matrix y = y_test.leftCols(c), mean = e.mean.leftCols(c), std = e.std.leftCols(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    r.relative_l2.push_back(relative_l2(y.col(k), mean.col(k)));
    r.rmse.push_back(rmse(y.col(k), mean.col(k)));
  }
  r.relative_l2_all = relative_l2(y, mean);
  r.rmse_all = rmse(y, mean);
  r.residual = residual_metric(x_test, e, system);
  r.mean_std = std.mean();
  r.ci95 = ci95_coverage(y, mean, std);
  return r;
}

inline UQReport evaluate(const networks::Generator& g, const Matrix& x_test, const Matrix& y_test,
                         const physics::PhysicsSystem& system, Rng& rng, int samples = 100) {
  const auto e = predictive_ensemble(g, x_test, rng, samples, system.derivatives());
  return uq_report(x_test, y_test, e, system);
}

}  // namespace pidgan::evaluation
