#pragma once

// Matrix-valued reverse-mode automatic differentiation.
//
// A Tape records every operation applied to Var handles. Calling backward()
// on a 1x1 node walks the record in reverse and accumulates adjoints into
// every node that requires a gradient, including bound Parameters.
// Input-space derivatives (u_x, u_xx, ...) are built by forward propagation
// of tangent streams through the same primitive ops, so their parameter
// gradients fall out of the same backward pass.

#include "pidgan/common.hpp"

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

namespace pidgan::ad {

class Tape;

/// A named trainable array. Gradients live on the Tape that bound it.
struct Parameter {
  std::string name;
  Matrix value;
};

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape& tape() const { return *tape_; }
  const Matrix& value() const;
  bool requires_grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad_out)>;

  Tape() { nodes_.reserve(512); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value) { return push(std::move(value), false, nullptr); }
  Var variable(Matrix value) { return push(std::move(value), true, nullptr); }

  /// Binds a parameter; repeated binds of the same object return the same node.
  Var bind(const Parameter& p, bool trainable = true) {
    if (auto it = bound_.find(&p); it != bound_.end()) return {this, it->second};
    Var v = push(p.value, trainable, nullptr);
    bound_.emplace(&p, v.id());
    return v;
  }

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  /// Records a derived node. backward is dropped when no input needs a gradient.
  Var record(Matrix value, bool requires_grad, Backward backward) {
    return push(std::move(value), requires_grad, requires_grad ? std::move(backward) : nullptr);
  }

  /// Reverse sweep from a scalar root. Clears adjoints from any previous sweep,
  /// so the same recorded graph can be differentiated term by term.
  void backward(Var root, double seed = 1.0) {
    if (root.rows() != 1 || root.cols() != 1)
      throw ValidationError("backward() requires a 1x1 root");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    if (!requires_grad(root.id())) return;
    accumulate(root.id(), Matrix::Constant(1, 1, seed));
    for (int id = root.id(); id >= 0; --id) {
      auto& n = nodes_[static_cast<std::size_t>(id)];
      if (n.grad.size() == 0 || !n.backward) continue;
      // Ops only accumulate into strictly earlier nodes, so n.grad is stable here.
      n.backward(*this, n.grad);
    }
  }

  /// Adjoint of a node after backward(); zeros if it was not reached.
  Matrix gradient(Var v) const {
    const auto& n = nodes_[static_cast<std::size_t>(v.id())];
    if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  Matrix gradient(const Parameter& p) const {
    auto it = bound_.find(&p);
    if (it == bound_.end()) return Matrix::Zero(p.value.rows(), p.value.cols());
    return gradient(Var{const_cast<Tape*>(this), it->second});
  }

  void accumulate(int id, const Matrix& g) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Matrix value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, std::move(backward)});
    return {this, static_cast<int>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> bound_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

namespace detail {

inline void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
}

// Elementwise unary op given f(x) and f'(x) evaluated from (x, f(x)).
template <class F, class DF>
Var unary(const Var& a, F f, DF df) {
  Tape& t = a.tape();
  Matrix out = f(a.value());
  const int ia = a.id();
  const int io = static_cast<int>(t.size());
  return t.record(std::move(out), a.requires_grad(), [ia, io, df](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, (g.array() * df(tp.value(ia), tp.value(io)).array()).matrix());
  });
}

}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "add");
  const int ia = a.id(), ib = b.id();
  return a.tape().record(a.value() + b.value(), a.requires_grad() || b.requires_grad(),
                         [ia, ib](Tape& t, const Matrix& g) {
                           t.accumulate(ia, g);
                           t.accumulate(ib, g);
                         });
}

inline Var operator-(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "sub");
  const int ia = a.id(), ib = b.id();
  return a.tape().record(a.value() - b.value(), a.requires_grad() || b.requires_grad(),
                         [ia, ib](Tape& t, const Matrix& g) {
                           t.accumulate(ia, g);
                           t.accumulate(ib, -g);
                         });
}

/// Elementwise (Hadamard) product.
inline Var operator*(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "mul");
  const int ia = a.id(), ib = b.id();
  return a.tape().record((a.value().array() * b.value().array()).matrix(),
                         a.requires_grad() || b.requires_grad(), [ia, ib](Tape& t, const Matrix& g) {
                           t.accumulate(ia, (g.array() * t.value(ib).array()).matrix());
                           t.accumulate(ib, (g.array() * t.value(ia).array()).matrix());
                         });
}

inline Var operator*(double s, const Var& a) {
  const int ia = a.id();
  return a.tape().record(s * a.value(), a.requires_grad(),
                         [ia, s](Tape& t, const Matrix& g) { t.accumulate(ia, s * g); });
}

inline Var operator-(const Var& a) { return -1.0 * a; }

inline Var add_scalar(const Var& a, double s) {
  const int ia = a.id();
  return a.tape().record((a.value().array() + s).matrix(), a.requires_grad(),
                         [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g); });
}

inline Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    throw ValidationError("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()));
  const int ia = a.id(), ib = b.id();
  return a.tape().record(a.value() * b.value(), a.requires_grad() || b.requires_grad(),
                         [ia, ib](Tape& t, const Matrix& g) {
                           if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
                           if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
                         });
}

/// a (N x m) plus a 1 x m row broadcast over all rows.
inline Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ValidationError("add_row: shape mismatch");
  const int ia = a.id(), ib = row.id();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape().record(std::move(out), a.requires_grad() || row.requires_grad(),
                         [ia, ib](Tape& t, const Matrix& g) {
                           t.accumulate(ia, g);
                           if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
                         });
}

inline Var square(const Var& a) {
  return detail::unary(
      a, [](const Matrix& x) { return x.array().square().matrix(); },
      [](const Matrix& x, const Matrix&) { return (2.0 * x.array()).matrix(); });
}

inline Var tanh(const Var& a) {
  return detail::unary(
      a, [](const Matrix& x) { return x.array().tanh().matrix(); },
      [](const Matrix&, const Matrix& y) { return (1.0 - y.array().square()).matrix(); });
}

inline Var sigmoid(const Var& a) {
  return detail::unary(
      a, [](const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); },
      [](const Matrix&, const Matrix& y) { return (y.array() * (1.0 - y.array())).matrix(); });
}

inline Var exp(const Var& a) {
  return detail::unary(
      a, [](const Matrix& x) { return x.array().exp().matrix(); },
      [](const Matrix&, const Matrix& y) { return y; });
}

inline Var log(const Var& a) {
  return detail::unary(
      a, [](const Matrix& x) { return x.array().log().matrix(); },
      [](const Matrix& x, const Matrix&) { return x.array().inverse().matrix(); });
}

/// log(1 + e^x), evaluated without overflow.
inline Var softplus(const Var& a) {
  return detail::unary(
      a,
      [](const Matrix& x) {
        return (x.array().max(0.0) + (-x.array().abs()).exp().log1p()).matrix();
      },
      [](const Matrix& x, const Matrix&) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); });
}

/// Clamps to [lo, hi]; the gradient is zero where clamping was active.
inline Var clamp(const Var& a, double lo, double hi) {
  return detail::unary(
      a, [lo, hi](const Matrix& x) { return x.array().max(lo).min(hi).matrix(); },
      [lo, hi](const Matrix& x, const Matrix&) {
        return ((x.array() >= lo) && (x.array() <= hi)).cast<double>().matrix();
      });
}

inline Var sum(const Var& a) {
  const int ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return a.tape().record(Matrix::Constant(1, 1, a.value().sum()), a.requires_grad(),
                         [ia, r, c](Tape& t, const Matrix& g) {
                           t.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
                         });
}

inline Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ValidationError("mean of an empty matrix");
  return (1.0 / n) * sum(a);
}

/// Columns [start, start + count).
inline Var cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ValidationError("cols: out of range");
  const int ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return a.tape().record(a.value().middleCols(start, count), a.requires_grad(),
                         [ia, r, c, start, count](Tape& t, const Matrix& g) {
                           Matrix full = Matrix::Zero(r, c);
                           full.middleCols(start, count) = g;
                           t.accumulate(ia, full);
                         });
}

inline Var col(const Var& a, Eigen::Index j) { return cols(a, j, 1); }

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ValidationError("concat_cols: no inputs");
  Tape& t = parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index total = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ValidationError("concat_cols: row mismatch");
    total += p.cols();
    rg = rg || p.requires_grad();
  }
  Matrix out(rows, total);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    layout.emplace_back(p.id(), offset);
    offset += p.cols();
  }
  return t.record(std::move(out), rg, [layout](Tape& tp, const Matrix& g) {
    for (const auto& [id, off] : layout)
      if (tp.requires_grad(id)) tp.accumulate(id, g.middleCols(off, tp.value(id).cols()));
  });
}

}  // namespace pidgan::ad
