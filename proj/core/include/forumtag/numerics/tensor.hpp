#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "forumtag/error.hpp"

namespace forumtag::num {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << ']';
  return out.str();
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

// Dense row-major tensor of rank 0..2. Rank-0 tensors hold one value.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

  Tensor(Shape shape, std::vector<T> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_size(shape_)) {
      throw ShapeError("tensor of shape " + shape_str(shape_) + " given " +
                       std::to_string(values_.size()) + " values");
    }
  }

  static Tensor scalar(T v) { return Tensor(Shape{}, std::vector<T>{v}); }
  static Tensor vector(std::vector<T> v) {
    const std::size_t n = v.size();
    return Tensor(Shape{n}, std::move(v));
  }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<T> v) {
    return Tensor(Shape{rows, cols}, std::move(v));
  }
  static Tensor identity(std::size_t n) {
    Tensor t(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = T(1);
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t rows() const noexcept { return shape_.empty() ? 1 : shape_[0]; }
  std::size_t cols() const noexcept { return shape_.size() < 2 ? 1 : shape_[1]; }

  std::span<T> data() noexcept { return values_; }
  std::span<const T> data() const noexcept { return values_; }
  std::vector<T>& storage() noexcept { return values_; }
  const std::vector<T>& storage() const noexcept { return values_; }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols() + c];
  }

  std::span<T> row(std::size_t r) { return data().subspan(r * cols(), cols()); }
  std::span<const T> row(std::size_t r) const {
    return data().subspan(r * cols(), cols());
  }

  void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(values_.begin(), values_.end()));
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<T> values_;
};

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) +
                     " vs " + shape_str(b));
  }
}

// ---------------------------------------------------------------------------
// Plain kernels. The tape ops in ops.hpp reuse the span-level helpers below.

namespace kernel {

// y[m] += W[m x n] * x[n]
template <typename T>
void gemv_acc(std::span<const T> w, std::size_t m, std::size_t n,
              std::span<const T> x, std::span<T> y) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = w.data() + i * n;
    T acc = T(0);
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

// y[n] += W[m x n]^T * x[m]
template <typename T>
void gemv_t_acc(std::span<const T> w, std::size_t m, std::size_t n,
                std::span<const T> x, std::span<T> y) {
  for (std::size_t i = 0; i < m; ++i) {
    const T xi = x[i];
    if (xi == T(0)) continue;
    const T* row = w.data() + i * n;
    T* out = y.data();
    for (std::size_t j = 0; j < n; ++j) out[j] += row[j] * xi;
  }
}

// W[m x n] += a[m] * b[n]^T
template <typename T>
void outer_acc(std::span<const T> a, std::span<const T> b, std::span<T> w) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T ai = a[i];
    if (ai == T(0)) continue;
    T* row = w.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += ai * b[j];
  }
}

template <typename T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// Max-shifted log(sum(exp(x))). All -inf input yields -inf.
template <typename T>
T log_sum_exp(std::span<const T> x) {
  if (x.empty()) return -std::numeric_limits<T>::infinity();
  const T mx = *std::max_element(x.begin(), x.end());
  if (mx == -std::numeric_limits<T>::infinity()) return mx;
  T acc = T(0);
  for (T v : x) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

template <typename T>
void softmax(std::span<const T> x, std::span<T> out) {
  if (x.empty()) return;
  const T mx = *std::max_element(x.begin(), x.end());
  T acc = T(0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    acc += out[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] /= acc;
}

}  // namespace kernel

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2) || a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols();
  if (b.rank() == 1) {
    Tensor<T> out(Shape{m});
    kernel::gemv_acc<T>(a.data(), m, k, b.data(), out.data());
    return out;
  }
  const std::size_t n = b.cols();
  Tensor<T> out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a(i, p);
      for (std::size_t j = 0; j < n; ++j) out(i, j) += aip * b(p, j);
    }
  }
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  Tensor<T> out = a;
  for (T& v : out.storage()) v = std::tanh(v);
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  Tensor<T> out = a;
  for (T& v : out.storage()) v = kernel::sigmoid(v);
  return out;
}

// Row-wise for matrices.
template <typename T>
Tensor<T> softmax(const Tensor<T>& a) {
  Tensor<T> out(a.shape());
  if (a.rank() == 2) {
    for (std::size_t r = 0; r < a.rows(); ++r) kernel::softmax<T>(a.row(r), out.row(r));
  } else {
    kernel::softmax<T>(a.data(), out.data());
  }
  return out;
}

template <typename T>
T log_sum_exp(const Tensor<T>& a) {
  return kernel::log_sum_exp<T>(a.data());
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts) {
  std::vector<T> values;
  for (const auto& p : parts) {
    if (p.rank() != 1) {
      throw ShapeError("concat: expected vectors, got " + shape_str(p.shape()));
    }
    values.insert(values.end(), p.data().begin(), p.data().end());
  }
  return Tensor<T>::vector(std::move(values));
}

}  // namespace forumtag::num
