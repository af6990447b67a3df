#pragma once

#include "pidgan/physics/jet.hpp"

#include <memory>
#include <string>

namespace pidgan::physics {

enum class PhysicsKind { perfect, imperfect };

inline std::string to_string(PhysicsKind k) { return k == PhysicsKind::perfect ? "perfect" : "imperfect"; }

/// N x K residual values, one column per governing equation.
struct ResidualBatch {
  Matrix values;

  Eigen::Index samples() const { return values.rows(); }
  Eigen::Index equations() const { return values.cols(); }
};

/// Throws ValidationError naming the first sample with a non-finite residual.
inline void require_finite(const ResidualBatch& r) {
  for (Eigen::Index i = 0; i < r.values.rows(); ++i)
    for (Eigen::Index k = 0; k < r.values.cols(); ++k)
      if (!std::isfinite(r.values(i, k)))
        throw ValidationError("non-finite residual at sample " + std::to_string(i) + ", equation " +
                              std::to_string(k));
}

/// A set of K residual operators R^(k)(x, y_hat).
class PhysicsSystem {
 public:
  virtual ~PhysicsSystem() = default;

  virtual std::string name() const = 0;
  virtual int residual_count() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual PhysicsKind kind() const = 0;
  /// Input derivatives the residual reads; empty for algebraic systems.
  virtual DerivativeRequest derivatives() const { return {}; }

  /// Residuals on the tape: x holds raw (unnormalized) inputs, y the
  /// prediction jet. Result is N x K.
  ad::Var residual(const Matrix& x, const Jet& y) const {
    if (x.cols() != input_dim())
      throw ValidationError(name() + ": expected " + std::to_string(input_dim()) + " input columns, got " +
                            std::to_string(x.cols()));
    if (y.value.cols() != output_dim() || y.value.rows() != x.rows())
      throw ValidationError(name() + ": prediction shape does not match inputs");
    ad::Var r = compute(x, y);
    if (r.rows() != x.rows() || r.cols() != residual_count())
      throw std::logic_error(name() + ": residual operator returned the wrong shape");
    return r;
  }

  /// Plain evaluation for derivative-free systems.
  ResidualBatch evaluate(const Matrix& x, const Matrix& y) const {
    if (!derivatives().empty())
      throw ConfigurationError(name() + " needs input derivatives; supply a DerivativeProvider");
    ad::Tape tape;
    Jet jet;
    jet.value = tape.constant(y);
    return {residual(x, jet).value()};
  }

  /// Plain evaluation with derivatives from a provider.
  ResidualBatch evaluate(const Matrix& x, const DerivativeProvider& provider) const {
    ad::Tape tape;
    Jet jet = provider.evaluate(tape, x, derivatives());
    return {residual(x, jet).value()};
  }

 protected:
  virtual ad::Var compute(const Matrix& x, const Jet& y) const = 0;
};

}  // namespace pidgan::physics
