#pragma once

#include "pidgan/common.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace pidgan::datagen {

/// Gridded field over two axes: value(i, j) sits at (col_axis(j), row_axis(i)).
struct Grid2D {
  Vector col_axis;  // e.g. x
  Vector row_axis;  // e.g. t
  std::vector<Matrix> fields;  // rows = row_axis.size(), cols = col_axis.size()

  Eigen::Index rows() const { return row_axis.size(); }
  Eigen::Index cols() const { return col_axis.size(); }

  /// All grid points, row-major, as [col_coordinate, row_coordinate] pairs.
  Matrix points() const {
    Matrix p(rows() * cols(), 2);
    for (Eigen::Index i = 0; i < rows(); ++i)
      for (Eigen::Index j = 0; j < cols(); ++j) {
        p(i * cols() + j, 0) = col_axis(j);
        p(i * cols() + j, 1) = row_axis(i);
      }
    return p;
  }

  /// Field values in the same order as points(), one column per field.
  Matrix values() const {
    Matrix v(rows() * cols(), static_cast<Eigen::Index>(fields.size()));
    for (std::size_t f = 0; f < fields.size(); ++f)
      for (Eigen::Index i = 0; i < rows(); ++i)
        for (Eigen::Index j = 0; j < cols(); ++j) v(i * cols() + j, static_cast<Eigen::Index>(f)) = fields[f](i, j);
    return v;
  }
};

inline Vector linspace(double lo, double hi, Eigen::Index n) {
  if (n < 2) throw ValidationError("a grid axis needs at least 2 points");
  return Vector::LinSpaced(n, lo, hi);
}

/// n x d Latin hypercube sample. bounds is d x 2 (low, high per dimension).
inline Matrix latin_hypercube(Eigen::Index n, const Matrix& bounds, Rng& rng) {
  if (n < 1) throw ValidationError("latin hypercube needs n >= 1");
  if (bounds.cols() != 2 || bounds.rows() < 1) throw ValidationError("bounds must be d x 2");
  for (Eigen::Index k = 0; k < bounds.rows(); ++k)
    if (!(bounds(k, 1) > bounds(k, 0)) || !std::isfinite(bounds(k, 0)) || !std::isfinite(bounds(k, 1)))
      throw ValidationError("degenerate bounds in dimension " + std::to_string(k));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix out(n, bounds.rows());
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < bounds.rows(); ++k) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const double lo = bounds(k, 0), width = bounds(k, 1) - bounds(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      // Stay strictly inside the stratum so bin counts are exact.
      const double frac = std::clamp(u(rng), 1e-12, 1.0 - 1e-12);
      out(i, k) = lo + width * (static_cast<double>(perm[static_cast<std::size_t>(i)]) + frac) / static_cast<double>(n);
    }
  }
  return out;
}

struct NoiseSpec {
  double level = 0.0;
  /// "std": sigma = level * std(y) per column; "relative": sigma = level * |y| per entry.
  std::string scale = "std";

  void validate() const {
    if (!(level >= 0.0) || !std::isfinite(level)) throw ValidationError("noise level must be non-negative");
    if (scale != "std" && scale != "relative") throw ValidationError("noise scale must be 'std' or 'relative'");
  }
};

/// y + Gaussian noise, i.i.d. per entry.
inline Matrix add_label_noise(const Matrix& y, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.level == 0.0 || y.rows() == 0) return y;
  const Matrix eps = standard_normal(y.rows(), y.cols(), rng);
  Matrix out = y;
  if (spec.scale == "std") {
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      const double mean = y.col(c).mean();
      const double sd = std::sqrt((y.col(c).array() - mean).square().mean());
      out.col(c) += spec.level * sd * eps.col(c);
    }
  } else {
    out.array() += spec.level * y.array().abs() * eps.array();
  }
  return out;
}

/// k distinct indices from [0, n).
inline std::vector<Eigen::Index> choose_indices(Eigen::Index n, Eigen::Index k, Rng& rng, const std::string& what) {
  if (k > n)
    throw ValidationError("requested " + std::to_string(k) + " " + what + " but only " + std::to_string(n) +
                          " are available");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace pidgan::datagen
