#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "common.hpp"

namespace protoforge {

/// Dense row-major matrix. The only tensor type in the library; vectors are
/// 1xN or Nx1. Instantiated with float for training and double for gradient
/// checking.
template <typename T>
class Array2 {
 public:
  Array2() : rows_(0), cols_(0) {}
  Array2(int rows, int cols) : rows_(rows), cols_(cols), data_(size_t(rows) * cols, T(0)) {
    if (rows < 0 || cols < 0) throw ShapeError("Array2: negative dimension");
  }
  Array2(int rows, int cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != size_t(rows) * cols)
      throw ShapeError(strfmt("Array2: %d x %d needs %zu values, got %zu", rows, cols,
                              size_t(rows) * cols, data_.size()));
  }

  static Array2 zeros(int rows, int cols) { return Array2(rows, cols); }
  static Array2 filled(int rows, int cols, T value) {
    Array2 a(rows, cols);
    for (T& x : a.data_) x = value;
    return a;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  T& at(int r, int c) { return data_[size_t(r) * cols_ + c]; }
  const T& at(int r, int c) const { return data_[size_t(r) * cols_ + c]; }
  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  T* row(int r) { return data_.data() + size_t(r) * cols_; }
  const T* row(int r) const { return data_.data() + size_t(r) * cols_; }
  std::span<const T> row_span(int r) const { return {row(r), size_t(cols_)}; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  const std::vector<T>& values() const { return data_; }

  void fill(T value) {
    for (T& x : data_) x = value;
  }
  void zero() { fill(T(0)); }

  bool same_shape(const Array2& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const {
    for (T x : data_)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  void check_finite(const char* what) const {
    if (!all_finite()) throw Error(strfmt("non-finite values in %s", what));
  }

  bool operator==(const Array2& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

  template <typename U>
  Array2<U> cast() const {
    Array2<U> out(rows_, cols_);
    for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  int rows_, cols_;
  std::vector<T> data_;
};

template <typename T>
inline void check_same_shape(const Array2<T>& a, const Array2<T>& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(strfmt("%s: shape %d x %d vs %d x %d", what, a.rows(), a.cols(), b.rows(),
                            b.cols()));
}

}  // namespace protoforge
