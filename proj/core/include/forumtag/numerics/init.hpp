#pragma once

#include <cmath>

#include "forumtag/numerics/rng.hpp"
#include "forumtag/numerics/tensor.hpp"

namespace forumtag::num {

// Xavier-uniform for rank-2 shapes (fan_in = cols, fan_out = rows); rank <= 1
// shapes are biases and start at zero.
template <typename T>
Tensor<T> init_params(const Shape& shape, Rng& rng) {
  Tensor<T> t(shape);
  if (shape.size() < 2) return t;
  const double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
  for (T& v : t.storage()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

// Bias for an LSTM whose gate pre-activations are laid out [i, f, g, o];
// the forget block starts at 1.
template <typename T>
Tensor<T> lstm_bias(std::size_t hidden) {
  Tensor<T> b(Shape{4 * hidden});
  for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = T(1);
  return b;
}

}  // namespace forumtag::num
