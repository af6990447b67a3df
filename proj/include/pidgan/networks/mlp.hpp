#pragma once

// Fully connected networks that propagate input-derivative jets.

#include "pidgan/physics/jet.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pidgan::networks {

using physics::DerivativeRequest;
using physics::Jet;

enum class Activation { tanh, sigmoid, softplus };

inline Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "softplus") return Activation::softplus;
  if (name == "relu" || name == "leaky_relu" || name == "elu" || name == "hardtanh")
    throw ValidationError("activation '" + name +
                          "' is not twice differentiable; PDE residuals need second input derivatives");
  throw ValidationError("unknown activation '" + name + "'; valid: tanh, sigmoid, softplus");
}

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softplus: return "softplus";
  }
  return "tanh";
}

struct NetworkSpec {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden{32, 32};
  std::string activation = "tanh";
  double dropout = 0.0;

  void validate() const {
    if (input_dim < 1 || output_dim < 1) throw ValidationError("network dimensions must be positive");
    if (hidden.empty()) throw ValidationError("network needs at least one hidden layer");
    for (int w : hidden)
      if (w < 1) throw ValidationError("layer widths must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout rate must lie in [0, 1)");
    parse_activation(activation);
  }
};

/// Applies f elementwise to a jet: value f(h), first f'(h) h_i,
/// second f'(h) h_ij + f''(h) h_i h_j.
inline Jet apply_activation(const Jet& h, Activation act) {
  Jet out;
  out.request = h.request;
  ad::Var s1, s2;
  const bool need = !h.request.empty();
  switch (act) {
    case Activation::tanh:
      out.value = ad::tanh(h.value);
      if (need) {
        s1 = ad::add_scalar(-ad::square(out.value), 1.0);
        s2 = -2.0 * (out.value * s1);
      }
      break;
    case Activation::sigmoid:
      out.value = ad::sigmoid(h.value);
      if (need) {
        s1 = out.value - ad::square(out.value);
        s2 = s1 - 2.0 * (s1 * out.value);
      }
      break;
    case Activation::softplus: {
      out.value = ad::softplus(h.value);
      if (need) {
        s1 = ad::sigmoid(h.value);
        s2 = s1 - ad::square(s1);
      }
      break;
    }
  }
  for (const auto& f : h.first) out.first.push_back(f.valid() ? s1 * f : ad::Var{});
  for (std::size_t p = 0; p < h.request.second.size(); ++p) {
    const auto [i, j] = h.request.second[p];
    const ad::Var& fi = h.first[static_cast<std::size_t>(h.request.first_index(i))];
    const ad::Var& fj = h.first[static_cast<std::size_t>(h.request.first_index(j))];
    ad::Var term;
    if (fi.valid() && fj.valid()) term = s2 * (fi * fj);
    const ad::Var& hij = h.second[p];
    if (hij.valid()) term = term.valid() ? term + s1 * hij : s1 * hij;
    out.second.push_back(term);
  }
  return out;
}

/// Multiplies every stream by the same constant matrix (dropout masks, scalings).
inline Jet scale_jet(const Jet& in, const Matrix& factor) {
  Jet out;
  out.request = in.request;
  ad::Tape& t = in.value.tape();
  const ad::Var f = t.constant(factor);
  out.value = in.value * f;
  for (const auto& v : in.first) out.first.push_back(v.valid() ? v * f : ad::Var{});
  for (const auto& v : in.second) out.second.push_back(v.valid() ? v * f : ad::Var{});
  return out;
}

/// Column-wise concatenation of jets with the same request and rows.
inline Jet concat_jets(const std::vector<Jet>& parts) {
  Jet out;
  out.request = parts.front().request;
  auto zeros_like = [](const Jet& j) { return j.value.tape().constant(Matrix::Zero(j.rows(), j.value.cols())); };
  std::vector<ad::Var> vals;
  for (const auto& p : parts) vals.push_back(p.value);
  out.value = ad::concat_cols(vals);
  for (std::size_t s = 0; s < out.request.first.size(); ++s) {
    std::vector<ad::Var> cols;
    for (const auto& p : parts) cols.push_back(p.first[s].valid() ? p.first[s] : zeros_like(p));
    out.first.push_back(ad::concat_cols(cols));
  }
  for (std::size_t s = 0; s < out.request.second.size(); ++s) {
    std::vector<ad::Var> cols;
    for (const auto& p : parts) cols.push_back(p.second[s].valid() ? p.second[s] : zeros_like(p));
    out.second.push_back(ad::concat_cols(cols));
  }
  return out;
}

/// Single-column slice of a jet.
inline Jet jet_column(const Jet& in, Eigen::Index c) {
  Jet out;
  out.request = in.request;
  out.value = ad::col(in.value, c);
  for (const auto& v : in.first) out.first.push_back(v.valid() ? ad::col(v, c) : ad::Var{});
  for (const auto& v : in.second) out.second.push_back(v.valid() ? ad::col(v, c) : ad::Var{});
  return out;
}

/// Jet of constant inputs: streams for coordinate c are `tangents[c]`
/// (N x d_in constant), second derivatives structurally zero.
inline Jet seed_jet(ad::Tape& tape, const Matrix& value, const DerivativeRequest& request,
                    const std::vector<Matrix>& tangents) {
  Jet jet;
  jet.request = request;
  jet.value = tape.constant(value);
  for (const auto& t : tangents) jet.first.push_back(tape.constant(t));
  jet.second.assign(request.second.size(), ad::Var{});
  return jet;
}

struct Dense {
  ad::Parameter weight;  // in x out
  ad::Parameter bias;    // 1 x out
};

/// Tanh-family MLP with a linear output layer. Dropout (when enabled and an
/// Rng is passed) masks every hidden activation, identically across streams.
class Mlp {
 public:
  Mlp() = default;

  Mlp(NetworkSpec spec, Rng& rng, const std::string& name) : spec_(std::move(spec)) {
    spec_.validate();
    activation_ = parse_activation(spec_.activation);
    int in = spec_.input_dim;
    std::vector<int> widths = spec_.hidden;
    widths.push_back(spec_.output_dim);
    for (std::size_t l = 0; l < widths.size(); ++l) {
      const int out = widths[l];
      // Glorot normal initialisation, zero biases.
      const double sd = std::sqrt(2.0 / (in + out));
      Dense d;
      d.weight = {name + "/layer" + std::to_string(l) + "/weight", sd * standard_normal(in, out, rng)};
      d.bias = {name + "/layer" + std::to_string(l) + "/bias", Matrix::Zero(1, out)};
      layers_.push_back(std::move(d));
      in = out;
    }
  }

  const NetworkSpec& spec() const { return spec_; }
  std::size_t layer_count() const { return layers_.size(); }
  const Dense& layer(std::size_t l) const { return layers_[l]; }
  Dense& layer(std::size_t l) { return layers_[l]; }

  std::vector<ad::Parameter*> parameters() {
    std::vector<ad::Parameter*> out;
    for (auto& l : layers_) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }
  std::vector<const ad::Parameter*> parameters() const {
    std::vector<const ad::Parameter*> out;
    for (const auto& l : layers_) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }

  /// Zeroes the output layer so the network emits exactly its bias (0).
  void zero_output_layer() {
    layers_.back().weight.value.setZero();
    layers_.back().bias.value.setZero();
  }

  Jet forward(ad::Tape& tape, const Jet& input, bool trainable, Rng* dropout_rng = nullptr) const {
    if (input.value.cols() != spec_.input_dim)
      throw ValidationError("network expects " + std::to_string(spec_.input_dim) + " inputs, got " +
                            std::to_string(input.value.cols()));
    Jet a = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const ad::Var w = tape.bind(layers_[l].weight, trainable);
      const ad::Var b = tape.bind(layers_[l].bias, trainable);
      Jet h;
      h.request = a.request;
      h.value = ad::add_row(ad::matmul(a.value, w), b);
      for (const auto& f : a.first) h.first.push_back(f.valid() ? ad::matmul(f, w) : ad::Var{});
      for (const auto& s : a.second) h.second.push_back(s.valid() ? ad::matmul(s, w) : ad::Var{});
      if (l + 1 == layers_.size()) return h;
      a = apply_activation(h, activation_);
      if (dropout_rng && spec_.dropout > 0.0) a = scale_jet(a, dropout_mask(a.rows(), a.value.cols(), *dropout_rng));
    }
    return a;
  }

  ad::Var forward(ad::Tape& tape, const ad::Var& input, bool trainable, Rng* dropout_rng = nullptr) const {
    Jet j;
    j.value = input;
    return forward(tape, j, trainable, dropout_rng).value;
  }

 private:
  Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, Rng& rng) const {
    std::bernoulli_distribution keep(1.0 - spec_.dropout);
    const double scale = 1.0 / (1.0 - spec_.dropout);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = keep(rng) ? scale : 0.0;
    return m;
  }

  NetworkSpec spec_;
  Activation activation_ = Activation::tanh;
  std::vector<Dense> layers_;
};

}  // namespace pidgan::networks
