#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "orbitlab/exact.hpp"

namespace orbitlab {

/// Dense row-major matrix over a ring-like scalar type.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw std::invalid_argument("matrix data size mismatch");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }
  static Matrix diagonal(std::span<const T> entries) {
    Matrix m(entries.size(), entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const T> data() const { return data_; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix shape mismatch");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const T& aik = a(i, k);
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }
  friend std::vector<T> operator*(const Matrix& a, std::span<const T> v) {
    if (a.cols_ != v.size()) throw std::invalid_argument("matrix/vector shape mismatch");
    std::vector<T> out(a.rows_, T(0));
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < a.cols_; ++j) out[i] += a(i, j) * v[j];
    return out;
  }
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

using ExactMatrix = Matrix<ExactScalar>;
using RealMatrix = Matrix<Real>;
using IntMatrix = Matrix<std::int64_t>;

RealMatrix to_real(const ExactMatrix& m);
ExactMatrix to_exact(const IntMatrix& m);

/// Parses a row-major literal of n*n exact rationals separated by commas,
/// semicolons or whitespace, e.g. "1 1/2; 0 1".
ExactMatrix parse_matrix_literal(std::string_view text, std::size_t n);
std::string format_matrix_literal(const ExactMatrix& m);

enum class NormKind { Frobenius, MaxEntry };
NormKind parse_norm_kind(std::string_view text);
std::string to_string(NormKind kind);

/// A norm value that stays exact whenever the inputs were exact. Frobenius
/// norms of rational matrices are carried by their exact square.
class NormValue {
 public:
  static NormValue exact(ExactScalar value);
  static NormValue sqrt_of(ExactScalar square);
  static NormValue real(Real value);

  Real to_real() const { return approx_; }
  /// Exact square of the value, when known.
  const std::optional<ExactScalar>& exact_square() const { return square_; }
  /// Exact value, when it is rational.
  std::optional<ExactScalar> exact_value() const;

  /// value <= r, decided exactly when both sides carry exact squares.
  bool within(const Radius& r) const;
  /// Three-way comparison; exact when both squares are known.
  friend int compare(const NormValue& a, const NormValue& b);

 private:
  std::optional<ExactScalar> square_;
  Real approx_ = 0;
};

NormValue max(const NormValue& a, const NormValue& b);

/// Per-place norm of a matrix component. Frobenius at a finite place is
/// rejected with std::invalid_argument.
NormValue matrix_norm(const ExactMatrix& m, const Place& place, NormKind kind);
NormValue matrix_norm(const RealMatrix& m, const Place& place, NormKind kind);

template <class T>
T det(Matrix<T> m);

ExactMatrix inverse(const ExactMatrix& m);

/// Element of G = prod over places of GL(n, Q_place). Finite components are
/// exact; the archimedean component may be exact or real.
class PlacedMatrix {
 public:
  struct Component {
    Place place;
    std::variant<ExactMatrix, RealMatrix> value;
  };

  explicit PlacedMatrix(std::vector<Component> components);
  /// Diagonal embedding of a rational matrix.
  static PlacedMatrix diagonal(const ExactMatrix& m, std::span<const Place> places);

  std::size_t dim() const { return n_; }
  const std::vector<Component>& components() const { return components_; }
  const Component& at(const Place& place) const;
  bool has(const Place& place) const;

 private:
  std::vector<Component> components_;
  std::size_t n_ = 0;
};

class PlacedVector {
 public:
  struct Component {
    Place place;
    std::variant<std::vector<ExactScalar>, std::vector<Real>> value;
  };

  explicit PlacedVector(std::vector<Component> components);

  std::size_t dim() const { return n_; }
  const std::vector<Component>& components() const { return components_; }
  const Component& at(const Place& place) const;
  bool has(const Place& place) const;

 private:
  std::vector<Component> components_;
  std::size_t n_ = 0;
};

using PlaceNorms = std::vector<std::pair<Place, NormKind>>;

/// D(g) = max over places of |g_place|.
NormValue size_function(const PlacedMatrix& g, const PlaceNorms& kinds);

/// Index subsets of {0..n-1} of size k in lexicographic order.
std::vector<std::vector<std::size_t>> lex_subsets(std::size_t n, std::size_t k);
std::size_t binomial(std::size_t n, std::size_t k);

template <class T>
Matrix<T> wedge_action(const Matrix<T>& m, std::size_t k);
template <class T>
std::vector<T> wedge_point(const Matrix<T>& vectors);

/// Euclidean norm of the wedge of the first k rows of g.
Real vol_first_rows(const RealMatrix& g, std::size_t k);

// ---------------------------------------------------------------------------

template <class T>
T det(Matrix<T> m) {
  if (!m.square()) throw std::invalid_argument("determinant of a non-square matrix");
  const std::size_t n = m.rows();
  if (n == 0) return T(1);
  if constexpr (std::is_integral_v<T>) {
    // Bareiss fraction-free elimination; every division is exact.
    T sign(1), prev(1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (m(k, k) == 0) {
        std::size_t swap = k + 1;
        while (swap < n && m(swap, k) == 0) ++swap;
        if (swap == n) return T(0);
        for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(swap, j));
        sign = -sign;
      }
      for (std::size_t i = k + 1; i < n; ++i)
        for (std::size_t j = k + 1; j < n; ++j)
          m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
      prev = m(k, k);
    }
    return sign * m(n - 1, n - 1);
  }
  T result(1);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = n;
    if constexpr (std::is_floating_point_v<T>) {
      T best(0);
      for (std::size_t r = col; r < n; ++r)
        if (std::abs(m(r, col)) > best) best = std::abs(m(r, col)), pivot = r;
    } else {
      for (std::size_t r = col; r < n && pivot == n; ++r)
        if (!(m(r, col) == T(0))) pivot = r;
    }
    if (pivot == n) return T(0);
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(pivot, j), m(col, j));
      result = -result;
    }
    const T p = m(col, col);
    result *= p;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (m(r, col) == T(0)) continue;
      const T factor = m(r, col) / p;
      for (std::size_t j = col; j < n; ++j) m(r, j) -= factor * m(col, j);
    }
  }
  return result;
}

template <class T>
Matrix<T> wedge_action(const Matrix<T>& m, std::size_t k) {
  if (!m.square()) throw std::invalid_argument("wedge_action needs a square matrix");
  const std::size_t n = m.rows();
  if (k < 1 || k > n) throw std::out_of_range("wedge degree out of range");
  const auto subsets = lex_subsets(n, k);
  Matrix<T> out(subsets.size(), subsets.size());
  Matrix<T> minor(k, k);
  for (std::size_t r = 0; r < subsets.size(); ++r)
    for (std::size_t c = 0; c < subsets.size(); ++c) {
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) minor(i, j) = m(subsets[r][i], subsets[c][j]);
      out(r, c) = det(minor);
    }
  return out;
}

template <class T>
std::vector<T> wedge_point(const Matrix<T>& vectors) {
  const std::size_t k = vectors.rows(), n = vectors.cols();
  if (k < 1 || k > n) throw std::out_of_range("wedge_point needs 1 <= k <= n vectors");
  std::vector<T> out;
  Matrix<T> minor(k, k);
  for (const auto& cols : lex_subsets(n, k)) {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) minor(i, j) = vectors(i, cols[j]);
    out.push_back(det(minor));
  }
  return out;
}

}  // namespace orbitlab
