#pragma once

#include "pidgan/networks/mlp.hpp"
#include "pidgan/physics/consistency.hpp"

#include <optional>

namespace pidgan::networks {

/// Per-column affine standardisation: (x - mean) / scale.
struct Normalizer {
  RowVector mean;
  RowVector scale;

  static Normalizer identity(int dim) { return {RowVector::Zero(dim), RowVector::Ones(dim)}; }

  static Normalizer fit(const Matrix& data) {
    if (data.rows() == 0) throw ValidationError("cannot fit a normalizer on zero rows");
    Normalizer n;
    n.mean = data.colwise().mean();
    const Matrix centered = data.rowwise() - n.mean;
    n.scale = (centered.array().square().colwise().sum() / static_cast<double>(data.rows())).sqrt();
    for (Eigen::Index j = 0; j < n.scale.size(); ++j)
      if (!(n.scale(j) > 1e-12)) n.scale(j) = 1.0;
    return n;
  }

  Eigen::Index dim() const { return mean.size(); }
  Matrix apply(const Matrix& x) const { return (x.rowwise() - mean).array().rowwise() / scale.array(); }
  Matrix invert(const Matrix& xn) const { return (xn.array().rowwise() * scale.array()).matrix().rowwise() + mean; }
};

/// Generator layout: body maps [normalize(x), z] to normalized outputs, which
/// are mapped back with the output normalizer. An optional coefficient
/// network k = softplus(C(u)) appends a state-dependent coefficient column.
struct GeneratorSpec {
  NetworkSpec body;  // input_dim = d_x + d_z
  int latent_dim = 0;
  std::optional<NetworkSpec> coefficient;  // 1 -> 1
};

class Generator {
 public:
  Generator() = default;
  Generator(GeneratorSpec spec, Normalizer x_norm, Normalizer y_norm, Rng& rng)
      : spec_(std::move(spec)), x_norm_(std::move(x_norm)), y_norm_(std::move(y_norm)) {
    if (spec_.latent_dim < 0) throw ValidationError("latent dimension must be non-negative");
    if (spec_.body.input_dim != x_norm_.dim() + spec_.latent_dim)
      throw ValidationError("generator body input must equal input dimension plus latent dimension");
    if (y_norm_.dim() != spec_.body.output_dim) throw ValidationError("output normalizer dimension mismatch");
    body_ = Mlp(spec_.body, rng, "generator");
    if (spec_.coefficient) coefficient_ = Mlp(*spec_.coefficient, rng, "coefficient");
  }

  const GeneratorSpec& spec() const { return spec_; }
  int input_dim() const { return static_cast<int>(x_norm_.dim()); }
  int latent_dim() const { return spec_.latent_dim; }
  int output_dim() const { return spec_.body.output_dim + (coefficient_ ? 1 : 0); }
  double dropout() const { return spec_.body.dropout; }
  const Normalizer& input_normalizer() const { return x_norm_; }
  const Normalizer& output_normalizer() const { return y_norm_; }
  Mlp& body() { return body_; }
  const Mlp& body() const { return body_; }
  std::optional<Mlp>& coefficient() { return coefficient_; }
  const std::optional<Mlp>& coefficient() const { return coefficient_; }

  std::vector<ad::Parameter*> parameters() {
    auto p = body_.parameters();
    if (coefficient_)
      for (auto* q : coefficient_->parameters()) p.push_back(q);
    return p;
  }
  std::vector<const ad::Parameter*> parameters() const {
    auto p = body_.parameters();
    if (coefficient_)
      for (auto* q : coefficient_->parameters()) p.push_back(q);
    return p;
  }

  Matrix sample_latent(Eigen::Index n, Rng& rng) const { return standard_normal(n, spec_.latent_dim, rng); }

  /// Prediction jet in raw output units with derivatives with respect to raw inputs.
  Jet forward(ad::Tape& tape, const Matrix& x, const Matrix& z, const DerivativeRequest& request, bool trainable,
              Rng* dropout_rng = nullptr) const {
    if (x.cols() != input_dim()) throw ValidationError("generator: input dimension mismatch");
    if (z.rows() != x.rows() || z.cols() != spec_.latent_dim)
      throw ValidationError("generator: latent batch must be N x " + std::to_string(spec_.latent_dim));
    const DerivativeRequest req = request.normalized();
    const Eigen::Index n = x.rows();
    Matrix in(n, spec_.body.input_dim);
    in.leftCols(x.cols()) = x_norm_.apply(x);
    if (spec_.latent_dim > 0) in.rightCols(spec_.latent_dim) = z;
    std::vector<Matrix> tangents;
    for (int c : req.first) {
      if (c < 0 || c >= input_dim()) throw ValidationError("generator: derivative coordinate out of range");
      Matrix t = Matrix::Zero(n, spec_.body.input_dim);
      t.col(c).setConstant(1.0 / x_norm_.scale(c));
      tangents.push_back(std::move(t));
    }
    Jet out = body_.forward(tape, seed_jet(tape, in, req, tangents), trainable, dropout_rng);
    // Undo output normalisation: y = mean + scale * y_n.
    out = scale_jet(out, y_norm_.scale.replicate(n, 1));
    out.value = ad::add_row(out.value, tape.constant(y_norm_.mean));
    if (!coefficient_) return out;
    Jet u = jet_column(out, 0);
    Jet k = apply_activation(coefficient_->forward(tape, u, trainable), Activation::softplus);
    return concat_jets({out, k});
  }

  Matrix predict(const Matrix& x, const Matrix& z, Rng* dropout_rng = nullptr) const {
    ad::Tape tape;
    return forward(tape, x, z, {}, false, dropout_rng).value.value();
  }

 private:
  GeneratorSpec spec_;
  Normalizer x_norm_, y_norm_;
  Mlp body_;
  std::optional<Mlp> coefficient_;
};

/// MC-dropout predictors share the generator layout with no latent input.
using DropoutNet = Generator;

/// D(x, y[, eta]) -> Omega in (0, 1), the probability that a sample is fake.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(NetworkSpec spec, Normalizer x_norm, Normalizer y_norm, int eta_dim, Rng& rng)
      : x_norm_(std::move(x_norm)), y_norm_(std::move(y_norm)), eta_dim_(eta_dim) {
    if (spec.input_dim != x_norm_.dim() + y_norm_.dim() + eta_dim)
      throw ValidationError("discriminator input must equal d_x + d_y + eta dimension");
    if (spec.output_dim != 1) throw ValidationError("discriminator has a single output");
    net_ = Mlp(std::move(spec), rng, "discriminator");
  }

  bool physics_informed() const { return eta_dim_ > 0; }
  int eta_dim() const { return eta_dim_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  const Normalizer& input_normalizer() const { return x_norm_; }
  const Normalizer& output_normalizer() const { return y_norm_; }
  std::vector<ad::Parameter*> parameters() { return net_.parameters(); }
  std::vector<const ad::Parameter*> parameters() const { return net_.parameters(); }

  ad::Var forward(ad::Tape& tape, const Matrix& x, const ad::Var& y, const std::optional<ad::Var>& eta,
                  bool trainable) const {
    if (eta.has_value() != physics_informed())
      throw std::logic_error(physics_informed() ? "physics-informed discriminator requires eta"
                                                : "eta passed to a discriminator that is not physics-informed");
    if (y.rows() != x.rows() || y.cols() != y_norm_.dim()) throw ValidationError("discriminator: y shape mismatch");
    std::vector<ad::Var> parts{tape.constant(x_norm_.apply(x))};
    const Eigen::Index n = x.rows();
    parts.push_back(scale_columns(tape, y, n));
    if (eta) {
      if (eta->cols() != eta_dim_ || eta->rows() != n) throw ValidationError("discriminator: eta shape mismatch");
      parts.push_back(*eta);
    }
    return ad::sigmoid(net_.forward(tape, ad::concat_cols(parts), trainable));
  }

  Matrix discriminate(const Matrix& x, const Matrix& y, const std::optional<Matrix>& eta = std::nullopt) const {
    ad::Tape tape;
    std::optional<ad::Var> e;
    if (eta) {
      physics::require_valid_eta(*eta);
      e = tape.constant(*eta);
    }
    return forward(tape, x, tape.constant(y), e, false).value();
  }

 private:
  ad::Var scale_columns(ad::Tape& tape, const ad::Var& y, Eigen::Index n) const {
    const ad::Var centered = ad::add_row(y, tape.constant(-y_norm_.mean));
    return centered * tape.constant(y_norm_.scale.cwiseInverse().replicate(n, 1));
  }

  Normalizer x_norm_, y_norm_;
  int eta_dim_ = 0;
  Mlp net_;
};

/// Q(x, y_hat) -> z_hat.
class InferenceNet {
 public:
  InferenceNet() = default;
  InferenceNet(NetworkSpec spec, Normalizer x_norm, Normalizer y_norm, Rng& rng)
      : x_norm_(std::move(x_norm)), y_norm_(std::move(y_norm)) {
    if (spec.input_dim != x_norm_.dim() + y_norm_.dim())
      throw ValidationError("inference network input must equal d_x + d_y");
    net_ = Mlp(std::move(spec), rng, "inference");
  }

  int latent_dim() const { return net_.spec().output_dim; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  const Normalizer& input_normalizer() const { return x_norm_; }
  const Normalizer& output_normalizer() const { return y_norm_; }
  std::vector<ad::Parameter*> parameters() { return net_.parameters(); }
  std::vector<const ad::Parameter*> parameters() const { return net_.parameters(); }

  ad::Var forward(ad::Tape& tape, const Matrix& x, const ad::Var& y_hat, bool trainable) const {
    if (y_hat.cols() != y_norm_.dim() || y_hat.rows() != x.rows())
      throw ValidationError("inference network: prediction dimension " + std::to_string(y_hat.cols()) +
                            " does not match generator output " + std::to_string(y_norm_.dim()));
    const Eigen::Index n = x.rows();
    const ad::Var yn = ad::add_row(y_hat, tape.constant(-y_norm_.mean)) *
                       tape.constant(y_norm_.scale.cwiseInverse().replicate(n, 1));
    return net_.forward(tape, ad::concat_cols({tape.constant(x_norm_.apply(x)), yn}), trainable);
  }

  /// infer_latent: z_hat for a batch of (x, y_hat) pairs.
  Matrix infer(const Matrix& x, const Matrix& y_hat) const {
    ad::Tape tape;
    return forward(tape, x, tape.constant(y_hat), false).value();
  }

 private:
  Normalizer x_norm_, y_norm_;
  Mlp net_;
};

}  // namespace pidgan::networks
