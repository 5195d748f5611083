#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pirules/errors.hpp"

namespace pirules {

/// A possibility / necessity / probability degree. Always in [0,1].
using Degree = double;

using DegreeVector = std::vector<Degree>;

inline bool is_degree(double v) noexcept { return v >= 0.0 && v <= 1.0; }

inline void require_degree(double v, const char* what) {
  if (!is_degree(v))
    throw ValidationError(std::string(what) + " = " + std::to_string(v) +
                          " is outside [0,1]");
}

/// x ε y: passes y through when x is strictly below it, kills it otherwise.
/// Strict `<` on the stored values, no fuzz.
inline Degree epsilon_product(Degree x, Degree y) noexcept {
  return x < y ? y : 0.0;
}

inline Degree pos_part(double x) noexcept { return x > 0.0 ? x : 0.0; }

/// Dense row-major matrix of degrees with an explicit shape.
class DegreeMatrix {
 public:
  DegreeMatrix() = default;
  DegreeMatrix(std::size_t rows, std::size_t cols, Degree fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    require_degree(fill, "fill");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  Degree& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Degree operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const Degree> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<Degree> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  /// Appends the rows of `other` (same column count).
  void append_rows(const DegreeMatrix& other) {
    if (rows_ == 0 && cols_ == 0) cols_ = other.cols_;
    if (other.cols_ != cols_)
      throw ValidationError("append_rows: column count mismatch");
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
    rows_ += other.rows_;
  }

  DegreeMatrix transposed() const {
    DegreeMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool operator==(const DegreeMatrix&) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Degree> data_;
};

/// Min-max product: out_i = min_j max(A_ij, x_j).
/// max acts as the product, min as the addition.
inline DegreeVector minmax_product(const DegreeMatrix& a, std::span<const Degree> x) {
  if (a.cols() != x.size())
    throw ValidationError("minmax_product: shape mismatch (" +
                          std::to_string(a.cols()) + " columns vs vector of " +
                          std::to_string(x.size()) + ")");
  DegreeVector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = a.row(i);
    Degree m = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      Degree v = row[j] > x[j] ? row[j] : x[j];
      if (v < m) m = v;
    }
    out[i] = m;
  }
  return out;
}

/// Max-epsilon product: out_l = max_i (At_li ε y_i).
/// `at` is already the transpose of the system matrix.
inline DegreeVector maxeps_product(const DegreeMatrix& at, std::span<const Degree> y) {
  if (at.cols() != y.size())
    throw ValidationError("maxeps_product: shape mismatch (" +
                          std::to_string(at.cols()) + " columns vs vector of " +
                          std::to_string(y.size()) + ")");
  DegreeVector out(at.rows(), 0.0);
  for (std::size_t l = 0; l < at.rows(); ++l) {
    auto row = at.row(l);
    Degree m = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      Degree v = epsilon_product(row[i], y[i]);
      if (v > m) m = v;
    }
    out[l] = m;
  }
  return out;
}

/// Same as maxeps_product(a.transposed(), y) without materializing the transpose.
inline DegreeVector maxeps_product_transpose_of(const DegreeMatrix& a,
                                                std::span<const Degree> y) {
  if (a.rows() != y.size())
    throw ValidationError("maxeps_product_transpose_of: shape mismatch");
  DegreeVector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = a.row(i);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      Degree v = epsilon_product(row[l], y[i]);
      if (v > out[l]) out[l] = v;
    }
  }
  return out;
}

inline Degree linf_distance(std::span<const Degree> a, std::span<const Degree> b) {
  if (a.size() != b.size()) throw ValidationError("linf_distance: size mismatch");
  Degree d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Degree v = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
    if (v > d) d = v;
  }
  return d;
}

}  // namespace pirules
