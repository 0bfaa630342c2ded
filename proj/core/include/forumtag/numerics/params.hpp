#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "forumtag/numerics/tensor.hpp"

namespace forumtag::num {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

// Ordered, name-addressable collection of trainable tensors. Parameter
// addresses are stable for the lifetime of the set.
template <typename T>
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(const ParamSet&) = delete;
  ParamSet& operator=(const ParamSet&) = delete;
  ParamSet(ParamSet&&) noexcept = default;
  ParamSet& operator=(ParamSet&&) noexcept = default;

  Parameter<T>& add(std::string name, Tensor<T> value) {
    if (find(name) != nullptr) throw ValidationError("duplicate parameter " + name);
    auto p = std::make_unique<Parameter<T>>();
    p->name = std::move(name);
    p->grad = Tensor<T>(value.shape());
    p->value = std::move(value);
    params_.push_back(std::move(p));
    return *params_.back();
  }

  Parameter<T>* find(std::string_view name) {
    for (auto& p : params_) {
      if (p->name == name) return p.get();
    }
    return nullptr;
  }
  const Parameter<T>* find(std::string_view name) const {
    for (const auto& p : params_) {
      if (p->name == name) return p.get();
    }
    return nullptr;
  }
  Parameter<T>& get(std::string_view name) {
    if (auto* p = find(name)) return *p;
    throw ValidationError("unknown parameter " + std::string(name));
  }
  const Parameter<T>& get(std::string_view name) const {
    if (const auto* p = find(name)) return *p;
    throw ValidationError("unknown parameter " + std::string(name));
  }

  std::size_t size() const noexcept { return params_.size(); }
  Parameter<T>& operator[](std::size_t i) { return *params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return *params_[i]; }

  // Total number of scalars.
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p->grad.fill(T(0));
  }

  // Global L2 norm over finite gradient entries.
  double grad_norm() const {
    double acc = 0.0;
    for (const auto& p : params_) {
      for (T g : p->grad.data()) acc += static_cast<double>(g) * g;
    }
    return std::sqrt(acc);
  }

  void scale_grad(T factor) {
    for (auto& p : params_) {
      for (T& g : p->grad.data()) g *= factor;
    }
  }

  // Rescales gradients so their global norm is at most max_norm.
  // Returns the norm before clipping.
  double clip_grad_norm(double max_norm) {
    const double norm = grad_norm();
    if (max_norm > 0.0 && norm > max_norm) scale_grad(static_cast<T>(max_norm / norm));
    return norm;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
};

}  // namespace forumtag::num
