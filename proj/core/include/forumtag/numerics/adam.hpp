#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "forumtag/numerics/params.hpp"

namespace forumtag::num {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected ADAM. Moments are allocated on the first step and keyed by
// parameter position, so the same ParamSet must be passed every time.
template <typename T>
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return step_; }
  const std::vector<Tensor<T>>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor<T>>& second_moments() const noexcept { return v_; }

  void step(ParamSet<T>& params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
      }
    }
    if (m_.size() != params.size()) {
      throw ShapeError("adam: optimizer tracks " + std::to_string(m_.size()) +
                       " parameters, given " + std::to_string(params.size()));
    }
    ++step_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Parameter<T>& p = params[k];
      require_same_shape(p.value.shape(), m_[k].shape(), "adam");
      require_same_shape(p.value.shape(), p.grad.shape(), "adam");
      update(p.value.data(), p.grad.data(), m_[k].data(), v_[k].data(), c1, c2);
    }
  }

 private:
  void update(std::span<T> theta, std::span<const T> grad, std::span<T> m,
              std::span<T> v, double c1, double c2) const {
    const double b1 = config_.beta1, b2 = config_.beta2;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i];
      const double mi = b1 * m[i] + (1.0 - b1) * g;
      const double vi = b2 * v[i] + (1.0 - b2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      if (mi == 0.0) continue;
      const double delta =
          config_.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + config_.epsilon);
      theta[i] = static_cast<T>(theta[i] - delta);
    }
  }

  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

}  // namespace forumtag::num
