#pragma once

#include "pidgan/networks/models.hpp"

namespace pidgan::networks {

/// S predictions of an N x d_y batch plus per-entry mean and (population) std.
struct Ensemble {
  std::vector<Matrix> samples;
  Matrix mean;
  Matrix std;
  /// Mean input derivatives of the ensemble, aligned with `request`
  /// (the derivatives of the mean prediction, since differentiation is linear).
  DerivativeRequest request;
  std::vector<Matrix> mean_first;
  std::vector<Matrix> mean_second;
};

inline void summarize(Ensemble& e) {
  // Shifted by the first sample so identical draws give exactly zero spread.
  const double s = static_cast<double>(e.samples.size());
  const Matrix& ref = e.samples.front();
  Matrix sum = Matrix::Zero(ref.rows(), ref.cols()), sq = sum;
  for (const auto& m : e.samples) {
    const Matrix d = m - ref;
    sum += d;
    sq.array() += d.array().square();
  }
  e.mean = ref + sum / s;
  e.std = (sq.array() / s - (sum.array() / s).square()).max(0.0).sqrt().matrix();
}

namespace detail {

inline constexpr Eigen::Index kEnsembleChunk = 4096;

// One stochastic pass in row chunks; accumulates derivative streams.
inline Matrix ensemble_pass(const Generator& g, const Matrix& x, const Matrix& z, const DerivativeRequest& req,
                            Rng* dropout_rng, std::vector<Matrix>& first, std::vector<Matrix>& second) {
  const Eigen::Index n = x.rows();
  Matrix value(n, g.output_dim());
  for (Eigen::Index start = 0; start < n; start += kEnsembleChunk) {
    const Eigen::Index len = std::min(kEnsembleChunk, n - start);
    ad::Tape tape;
    Jet j = g.forward(tape, x.middleRows(start, len), z.middleRows(start, len), req, false, dropout_rng);
    value.middleRows(start, len) = j.value.value();
    for (std::size_t s = 0; s < req.first.size(); ++s) first[s].middleRows(start, len) += j.d(req.first[s]).value();
    for (std::size_t s = 0; s < req.second.size(); ++s)
      second[s].middleRows(start, len) += j.dd(req.second[s].first, req.second[s].second).value();
  }
  return value;
}

inline Ensemble run_ensemble(const Generator& g, const Matrix& x, Rng& rng, int samples,
                             const DerivativeRequest& request, bool dropout) {
  if (samples < 1) throw ValidationError("ensemble size must be at least 1");
  Ensemble e;
  e.request = request.normalized();
  const Eigen::Index n = x.rows();
  const int dy = g.output_dim();
  e.mean_first.assign(e.request.first.size(), Matrix::Zero(n, dy));
  e.mean_second.assign(e.request.second.size(), Matrix::Zero(n, dy));
  for (int s = 0; s < samples; ++s) {
    const Matrix z = g.sample_latent(n, rng);
    e.samples.push_back(ensemble_pass(g, x, z, e.request, dropout ? &rng : nullptr, e.mean_first, e.mean_second));
  }
  for (auto& m : e.mean_first) m /= samples;
  for (auto& m : e.mean_second) m /= samples;
  summarize(e);
  return e;
}

}  // namespace detail

/// S independent latent draws per input.
inline Ensemble generate(const Generator& g, const Matrix& x, Rng& rng, int samples,
                         const DerivativeRequest& request = {}) {
  return detail::run_ensemble(g, x, rng, samples, request, false);
}

/// S stochastic forward passes with dropout active.
inline Ensemble mc_dropout_predict(const DropoutNet& net, const Matrix& x, Rng& rng, int samples,
                                   const DerivativeRequest& request = {}) {
  if (net.dropout() == 0.0) warn("mc_dropout_predict: dropout rate is 0, the ensemble is deterministic");
  return detail::run_ensemble(net, x, rng, samples, request, true);
}

}  // namespace pidgan::networks
