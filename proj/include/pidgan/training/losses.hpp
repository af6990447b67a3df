#pragma once

// Training objectives. Every function works on tape nodes so the same code
// computes values for logging and gradients for the optimizer.

#include "pidgan/ad/tape.hpp"

#include <string>
#include <vector>

namespace pidgan::training {

/// Probabilities are clamped to [eps, 1 - eps] before any log.
inline constexpr double kProbabilityEpsilon = 1e-7;

struct LossTerm {
  std::string name;
  ad::Var value;  // 1 x 1, already weighted
};

/// Scalar snapshot of a loss: per-term values and their sum.
struct LossBreakdown {
  std::vector<std::pair<std::string, double>> terms;
  double total = 0.0;
  int clamped = 0;  // probabilities that hit the clamp

  double term(const std::string& name) const {
    for (const auto& [n, v] : terms)
      if (n == name) return v;
    throw std::out_of_range("loss has no term '" + name + "'");
  }
  bool has(const std::string& name) const {
    for (const auto& t : terms)
      if (t.first == name) return true;
    return false;
  }
};

struct Loss {
  std::vector<LossTerm> terms;
  ad::Var total;
  int clamped = 0;

  const ad::Var& term(const std::string& name) const {
    for (const auto& t : terms)
      if (t.name == name) return t.value;
    throw std::out_of_range("loss has no term '" + name + "'");
  }

  LossBreakdown breakdown() const {
    LossBreakdown b;
    for (const auto& t : terms) b.terms.emplace_back(t.name, t.value.scalar());
    b.total = total.scalar();
    b.clamped = clamped;
    return b;
  }
};

namespace detail {

inline Loss assemble(std::vector<LossTerm> terms, int clamped = 0) {
  if (terms.empty()) throw std::logic_error("a loss needs at least one term");
  Loss l{std::move(terms), {}, clamped};
  l.total = l.terms.front().value;
  for (std::size_t i = 1; i < l.terms.size(); ++i) l.total = l.total + l.terms[i].value;
  return l;
}

inline Loss merge(const Loss& a, const Loss& b) {
  std::vector<LossTerm> t = a.terms;
  t.insert(t.end(), b.terms.begin(), b.terms.end());
  return assemble(std::move(t), a.clamped + b.clamped);
}

// Clamps probabilities and counts how many entries needed it. Values outside
// the open unit interval are a contract breach and also warn.
inline ad::Var clamp_probability(const ad::Var& p, int& clamped) {
  const Matrix& v = p.value();
  int outside = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = v.data()[i];
    if (!(x >= kProbabilityEpsilon && x <= 1.0 - kProbabilityEpsilon)) ++clamped;
    if (!(x > 0.0 && x < 1.0)) ++outside;
  }
  if (outside > 0) warn(std::to_string(outside) + " discriminator outputs outside (0, 1) were clamped");
  return ad::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

// -mean log(p)
inline ad::Var neg_log_mean(const ad::Var& p, int& clamped) { return -ad::mean(ad::log(clamp_probability(p, clamped))); }

// -mean log(1 - p)
inline ad::Var neg_log1m_mean(const ad::Var& p, int& clamped) {
  return -ad::mean(ad::log(ad::add_scalar(-clamp_probability(p, clamped), 1.0)));
}

}  // namespace detail

/// (lambda / N_f) * sum_j sum_k R^(k)(x_j)^2.
inline ad::Var physics_penalty(const ad::Var& residuals, double lambda) {
  if (residuals.rows() == 0) throw ValidationError("physics term needs at least one collocation point");
  return (lambda / static_cast<double>(residuals.rows())) * ad::sum(ad::square(residuals));
}

/// Mean over labeled points of the squared label error, summed over outputs.
inline ad::Var label_mse(const ad::Var& y, const ad::Var& y_hat) {
  if (y.rows() == 0) throw ValidationError("labeled set is empty");
  return (1.0 / static_cast<double>(y.rows())) * ad::sum(ad::square(y_hat - y));
}

/// PINN objective: label MSE plus the lambda-weighted residual mean. Pass an
/// invalid Var for `residuals` to drop the physics term.
inline Loss pinn_loss(const ad::Var& y_u, const ad::Var& y_hat_u, const ad::Var& residuals, double lambda) {
  std::vector<LossTerm> t{{"data", label_mse(y_u, y_hat_u)}};
  if (residuals.valid()) t.push_back({"physics", physics_penalty(residuals, lambda)});
  return detail::assemble(std::move(t));
}

/// Non-saturating generator objective: mean Omega of generated samples.
inline Loss cgan_generator_loss(const ad::Var& omega_fake) {
  return detail::assemble({{"g_fake", ad::mean(omega_fake)}});
}

inline Loss cgan_discriminator_loss(const ad::Var& omega_fake, const ad::Var& omega_real) {
  int clamped = 0;
  ad::Var fake = detail::neg_log_mean(omega_fake, clamped);
  ad::Var real = detail::neg_log1m_mean(omega_real, clamped);
  return detail::assemble({{"d_fake", fake}, {"d_real", real}}, clamped);
}

/// PIG-GAN generator: labeled discriminator term plus the physics penalty.
inline Loss pig_generator_loss(const ad::Var& omega_fake_u, const ad::Var& residuals_f, double lambda) {
  return detail::assemble({{"g_labeled", ad::mean(omega_fake_u)}, {"physics", physics_penalty(residuals_f, lambda)}});
}

/// PIG-GAN discriminator only sees labeled samples.
inline Loss pig_discriminator_loss(const ad::Var& omega_fake_u, const ad::Var& omega_real_u) {
  return cgan_discriminator_loss(omega_fake_u, omega_real_u);
}

/// PID-GAN generator: discriminator scores on labeled and collocation predictions.
inline Loss pid_generator_loss(const ad::Var& omega_fake_u, const ad::Var& omega_fake_f) {
  return detail::assemble({{"g_labeled", ad::mean(omega_fake_u)}, {"g_collocation", ad::mean(omega_fake_f)}});
}

/// Four-term discriminator loss: (x_u, y_hat_u, eta_u) fake, (x_u, y_u, 1) real,
/// (x_f, y_hat_f, eta_f) fake, (x_f, y_hat_f, 1) real proxy.
inline Loss pid_discriminator_loss(const ad::Var& fake_u, const ad::Var& real_u, const ad::Var& fake_f,
                                   const ad::Var& real_f) {
  int clamped = 0;
  std::vector<LossTerm> t{{"d_term1", detail::neg_log_mean(fake_u, clamped)},
                          {"d_term2", detail::neg_log1m_mean(real_u, clamped)},
                          {"d_term3", detail::neg_log_mean(fake_f, clamped)},
                          {"d_term4", detail::neg_log1m_mean(real_f, clamped)}};
  return detail::assemble(std::move(t), clamped);
}

/// Imperfect-physics discriminator: real labels carry eta', no collocation real proxy.
inline Loss pid_imperfect_discriminator_loss(const ad::Var& fake_u, const ad::Var& real_u, const ad::Var& fake_f) {
  int clamped = 0;
  std::vector<LossTerm> t{{"d_term1", detail::neg_log_mean(fake_u, clamped)},
                          {"d_term2", detail::neg_log1m_mean(real_u, clamped)},
                          {"d_term3", detail::neg_log_mean(fake_f, clamped)}};
  return detail::assemble(std::move(t), clamped);
}

/// ||z - z_hat||^2 / d_z, averaged over samples.
inline ad::Var q_reconstruction_loss(const ad::Var& z, const ad::Var& z_hat) {
  if (z.rows() != z_hat.rows() || z.cols() != z_hat.cols())
    throw ValidationError("latent reconstruction: z is " + std::to_string(z.rows()) + "x" + std::to_string(z.cols()) +
                          " but z_hat is " + std::to_string(z_hat.rows()) + "x" + std::to_string(z_hat.cols()));
  return ad::mean(ad::square(z - z_hat));
}

/// Appends a weighted latent-reconstruction term to a generator loss.
inline Loss with_q_term(const Loss& generator, const ad::Var& q_loss, double weight) {
  return detail::merge(generator, detail::assemble({{"q", weight * q_loss}}));
}

}  // namespace pidgan::training
