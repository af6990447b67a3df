#pragma once

#include "pidgan/networks/models.hpp"
#include "pidgan/physics/consistency.hpp"

#include <algorithm>

namespace pidgan::evaluation {

/// Linear-interpolation quantile of unsorted data, q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw ValidationError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline const std::vector<double>& summary_levels() {
  static const std::vector<double> levels{0.05, 0.25, 0.5, 0.75, 0.95};
  return levels;
}

/// One empirical distribution on [0, 1] with summaries.
struct Distribution {
  std::string name;
  std::vector<double> samples;
  double mean = 0.0;
  double median = 0.0;
  std::vector<double> quantiles;  // at summary_levels()
  std::vector<int> counts;        // equal-width bins over [0, 1]
};

inline Distribution summarize_distribution(std::string name, std::vector<double> samples, int bins = 20) {
  Distribution d{std::move(name), std::move(samples), 0.0, 0.0, {}, std::vector<int>(static_cast<std::size_t>(bins), 0)};
  if (d.samples.empty()) return d;
  double s = 0.0;
  for (double v : d.samples) {
    s += v;
    const int b = std::clamp(static_cast<int>(v * bins), 0, bins - 1);
    ++d.counts[static_cast<std::size_t>(b)];
  }
  d.mean = s / static_cast<double>(d.samples.size());
  d.median = quantile(d.samples, 0.5);
  for (double q : summary_levels()) d.quantiles.push_back(quantile(d.samples, q));
  return d;
}

inline std::vector<double> to_vector(const Matrix& m) { return std::vector<double>(m.data(), m.data() + m.size()); }

/// One discriminator input group: (x, y[, eta]).
struct ScoreGroup {
  std::string name;
  Matrix x, y;
  std::optional<Matrix> eta;
};

/// Omega for each group; eta is supplied iff the discriminator is physics-informed.
inline std::vector<Distribution> discriminator_score_histogram(const networks::Discriminator& d,
                                                               const std::vector<ScoreGroup>& groups, int bins = 20) {
  std::vector<Distribution> out;
  for (const auto& g : groups) {
    std::optional<Matrix> eta = g.eta;
    if (d.physics_informed() && !eta) eta = Matrix::Ones(g.x.rows(), d.eta_dim());
    if (!d.physics_informed()) eta.reset();
    out.push_back(summarize_distribution(g.name, to_vector(d.discriminate(g.x, g.y, eta)), bins));
  }
  return out;
}

/// Distributions of eta_u, eta_f (predictions) and eta'_u (ground truth),
/// pooled over equations.
inline std::vector<Distribution> consistency_histogram(const Matrix& eta_u, const Matrix& eta_f,
                                                       const Matrix& eta_prime_u, int bins = 20) {
  physics::require_valid_eta(eta_u);
  physics::require_valid_eta(eta_f);
  physics::require_valid_eta(eta_prime_u);
  return {summarize_distribution("eta_u", to_vector(eta_u), bins),
          summarize_distribution("eta_f", to_vector(eta_f), bins),
          summarize_distribution("eta_prime_u", to_vector(eta_prime_u), bins)};
}

}  // namespace pidgan::evaluation
