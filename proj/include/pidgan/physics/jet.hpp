#pragma once

// Predictions together with their input-space derivatives.

#include "pidgan/ad/tape.hpp"

#include <algorithm>
#include <utility>
#include <vector>

namespace pidgan::physics {

/// Which input derivatives a residual needs. Coordinates index input columns.
struct DerivativeRequest {
  std::vector<int> first;
  std::vector<std::pair<int, int>> second;  // stored with i <= j

  bool empty() const { return first.empty() && second.empty(); }
  int max_order() const { return !second.empty() ? 2 : (!first.empty() ? 1 : 0); }

  int first_index(int coord) const {
    auto it = std::find(first.begin(), first.end(), coord);
    return it == first.end() ? -1 : static_cast<int>(it - first.begin());
  }
  int second_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = std::find(second.begin(), second.end(), std::pair{i, j});
    return it == second.end() ? -1 : static_cast<int>(it - second.begin());
  }

  /// Sorted, deduplicated, and closed: every coordinate of a pair also has a
  /// first-order entry (forward propagation of second derivatives needs it).
  DerivativeRequest normalized() const {
    DerivativeRequest out = *this;
    for (auto& p : out.second)
      if (p.first > p.second) std::swap(p.first, p.second);
    for (const auto& [i, j] : out.second) {
      out.first.push_back(i);
      out.first.push_back(j);
    }
    std::sort(out.first.begin(), out.first.end());
    out.first.erase(std::unique(out.first.begin(), out.first.end()), out.first.end());
    std::sort(out.second.begin(), out.second.end());
    out.second.erase(std::unique(out.second.begin(), out.second.end()), out.second.end());
    return out;
  }

  DerivativeRequest merged(const DerivativeRequest& other) const {
    DerivativeRequest out = *this;
    out.first.insert(out.first.end(), other.first.begin(), other.first.end());
    out.second.insert(out.second.end(), other.second.begin(), other.second.end());
    return out.normalized();
  }
};

/// Value (N x d_y) plus derivative streams aligned with `request`.
/// An invalid Var in a stream means the derivative is structurally zero.
struct Jet {
  DerivativeRequest request;
  ad::Var value;
  std::vector<ad::Var> first;
  std::vector<ad::Var> second;

  Eigen::Index rows() const { return value.rows(); }

  /// d value / d x_coord, all output channels.
  ad::Var d(int coord) const {
    const int k = request.first_index(coord);
    if (k < 0)
      throw ConfigurationError("derivative provider does not supply first derivatives in input " +
                               std::to_string(coord));
    return materialize(first[static_cast<std::size_t>(k)]);
  }

  /// d^2 value / d x_i d x_j, all output channels.
  ad::Var dd(int i, int j) const {
    const int k = request.second_index(i, j);
    if (k < 0)
      throw ConfigurationError("derivative provider does not supply second derivatives in inputs (" +
                               std::to_string(i) + ", " + std::to_string(j) + ")");
    return materialize(second[static_cast<std::size_t>(k)]);
  }

  ad::Var u(int channel) const { return ad::col(value, channel); }
  ad::Var d(int coord, int channel) const { return ad::col(d(coord), channel); }
  ad::Var dd(int i, int j, int channel) const { return ad::col(dd(i, j), channel); }

 private:
  ad::Var materialize(const ad::Var& v) const {
    if (v.valid()) return v;
    return value.tape().constant(Matrix::Zero(value.rows(), value.cols()));
  }
};

/// Builds a Jet whose streams are constants (no gradient).
inline Jet constant_jet(ad::Tape& tape, const Matrix& value, const DerivativeRequest& request,
                        const std::vector<Matrix>& first, const std::vector<Matrix>& second) {
  if (first.size() != request.first.size() || second.size() != request.second.size())
    throw ValidationError("constant_jet: stream count does not match the request");
  Jet jet;
  jet.request = request;
  jet.value = tape.constant(value);
  for (const auto& m : first) jet.first.push_back(tape.constant(m));
  for (const auto& m : second) jet.second.push_back(tape.constant(m));
  return jet;
}

/// Source of predictions and their input derivatives at a batch of inputs.
/// Implementations must be re-entrant.
class DerivativeProvider {
 public:
  virtual ~DerivativeProvider() = default;
  /// Highest derivative order this provider can supply.
  virtual int max_order() const = 0;
  virtual Jet evaluate(ad::Tape& tape, const Matrix& x, const DerivativeRequest& request) const = 0;

 protected:
  void check_capability(const DerivativeRequest& request) const {
    if (request.max_order() > max_order())
      throw ConfigurationError("derivative provider supports order " + std::to_string(max_order()) +
                               " but order " + std::to_string(request.max_order()) + " was requested");
  }
};

/// Central finite differences of a pointwise function x (N x d_x) -> y (N x d_y).
class FiniteDifferenceProvider : public DerivativeProvider {
 public:
  using Function = std::function<Matrix(const Matrix&)>;

  explicit FiniteDifferenceProvider(Function f, double step1 = 1e-5, double step2 = 1e-4,
                                    int max_order = 2)
      : f_(std::move(f)), h1_(step1), h2_(step2), order_(max_order) {}

  int max_order() const override { return order_; }

  Jet evaluate(ad::Tape& tape, const Matrix& x, const DerivativeRequest& request) const override {
    check_capability(request);
    const Matrix y = f_(x);
    auto shifted = [&](int i, double di, int j, double dj) {
      Matrix xs = x;
      xs.col(i).array() += di;
      if (j >= 0) xs.col(j).array() += dj;
      return f_(xs);
    };
    std::vector<Matrix> first, second;
    for (int c : request.first)
      first.push_back((shifted(c, h1_, -1, 0) - shifted(c, -h1_, -1, 0)) / (2 * h1_));
    for (const auto& [i, j] : request.second) {
      if (i == j) {
        second.push_back((shifted(i, h2_, -1, 0) - 2 * y + shifted(i, -h2_, -1, 0)) / (h2_ * h2_));
      } else {
        second.push_back((shifted(i, h2_, j, h2_) - shifted(i, h2_, j, -h2_) -
                          shifted(i, -h2_, j, h2_) + shifted(i, -h2_, j, -h2_)) /
                         (4 * h2_ * h2_));
      }
    }
    return constant_jet(tape, y, request, first, second);
  }

 private:
  Function f_;
  double h1_, h2_;
  int order_;
};

/// Exact derivatives supplied by the caller (analytic test fields, solver output).
class AnalyticProvider : public DerivativeProvider {
 public:
  struct Fields {
    Matrix value;
    std::vector<Matrix> first;   // aligned with request.first
    std::vector<Matrix> second;  // aligned with request.second
  };
  using Function = std::function<Fields(const Matrix& x, const DerivativeRequest&)>;

  explicit AnalyticProvider(Function f, int max_order = 2) : f_(std::move(f)), order_(max_order) {}

  int max_order() const override { return order_; }

  Jet evaluate(ad::Tape& tape, const Matrix& x, const DerivativeRequest& request) const override {
    check_capability(request);
    Fields fields = f_(x, request);
    return constant_jet(tape, fields.value, request, fields.first, fields.second);
  }

 private:
  Function f_;
  int order_;
};

}  // namespace pidgan::physics
