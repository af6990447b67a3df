#pragma once

// Per-term generator gradients on a parameter subset.

#include "pidgan/networks/models.hpp"
#include "pidgan/training/losses.hpp"

#include <cmath>

namespace pidgan::evaluation {

struct TermGradient {
  std::string term;
  Vector values;  // concatenated gradient entries, parameter order preserved
  double mean = 0.0;
  double std = 0.0;
  double max_abs = 0.0;
  bool finite = true;
};

struct GradientReport {
  std::vector<std::string> parameters;
  std::vector<TermGradient> terms;
  /// std(first term) / std(second term); NaN when undefined.
  double imbalance_ratio = std::nan("");
  bool non_finite = false;
};

inline void summarize(TermGradient& g) {
  g.finite = g.values.allFinite();
  const double n = static_cast<double>(g.values.size());
  if (n == 0) return;
  g.mean = g.values.mean();
  g.std = std::sqrt((g.values.array() - g.mean).square().sum() / n);
  g.max_abs = g.values.cwiseAbs().maxCoeff();
}

/// The final two parameterized layers of the generator body, weights and biases.
inline std::vector<const ad::Parameter*> last_two_layers(const networks::Generator& g) {
  const auto& body = g.body();
  const std::size_t n = body.layer_count();
  std::vector<const ad::Parameter*> out;
  for (std::size_t l = n >= 2 ? n - 2 : 0; l < n; ++l) {
    out.push_back(&body.layer(l).weight);
    out.push_back(&body.layer(l).bias);
  }
  return out;
}

/// Backpropagates each named term on its own and records the gradients.
inline GradientReport record_gradient_report(ad::Tape& tape, const training::Loss& loss,
                                             const std::vector<std::string>& term_names,
                                             const std::vector<const ad::Parameter*>& params) {
  GradientReport r;
  for (const auto* p : params) r.parameters.push_back(p->name);
  for (const auto& name : term_names) {
    tape.backward(loss.term(name));
    Eigen::Index size = 0;
    for (const auto* p : params) size += p->value.size();
    TermGradient g{name, Vector(size)};
    Eigen::Index pos = 0;
    for (const auto* p : params) {
      const Matrix grad = tape.gradient(*p);
      for (Eigen::Index i = 0; i < grad.rows(); ++i)
        for (Eigen::Index j = 0; j < grad.cols(); ++j) g.values(pos++) = grad(i, j);
    }
    summarize(g);
    if (!g.finite) r.non_finite = true;
    r.terms.push_back(std::move(g));
  }
  if (r.terms.size() >= 2 && r.terms[1].std > 0.0) r.imbalance_ratio = r.terms[0].std / r.terms[1].std;
  return r;
}

}  // namespace pidgan::evaluation
