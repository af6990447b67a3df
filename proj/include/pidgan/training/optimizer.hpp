#pragma once

#include "pidgan/ad/tape.hpp"

#include <cmath>
#include <vector>

namespace pidgan::training {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam over a fixed list of parameters. Moment buffers are indexed by
/// position in the list, so the list must not change between steps.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<ad::Parameter*> params, AdamOptions opt) : params_(std::move(params)), opt_(opt) {
    if (!(opt_.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
    for (auto* p : params_) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }

  const AdamOptions& options() const { return opt_; }
  long steps() const { return t_; }

  /// One update from the gradients left on `tape` by the last backward().
  void step(const ad::Tape& tape) {
    std::vector<Matrix> grads;
    grads.reserve(params_.size());
    for (auto* p : params_) grads.push_back(tape.gradient(*p));
    step(grads);
  }

  void step(const std::vector<Matrix>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const Matrix& g = grads[i];
      m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * g;
      v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * g.cwiseProduct(g);
      params_[i]->value.array() -=
          opt_.learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + opt_.epsilon);
    }
  }

 private:
  std::vector<ad::Parameter*> params_;
  AdamOptions opt_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

}  // namespace pidgan::training
