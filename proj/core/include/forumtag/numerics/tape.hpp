#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "forumtag/numerics/params.hpp"
#include "forumtag/numerics/tensor.hpp"

namespace forumtag::num {

template <typename T>
class Tape;

// Handle to a value recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  bool valid() const noexcept { return tape != nullptr && id >= 0; }
  const Shape& shape() const { return tape->shape(id); }
  std::size_t size() const { return tape->value(id).size(); }
  std::span<const T> value() const { return tape->value(id); }
  std::span<const T> grad() const { return tape->grad(id); }
  T item() const { return tape->value(id)[0]; }
  Tensor<T> tensor() const {
    auto v = value();
    return Tensor<T>(shape(), std::vector<T>(v.begin(), v.end()));
  }
};

// Records primitive operations in creation order; backward() replays them
// in reverse, which is a valid topological order because every op's inputs
// were created before it. Parameter leaves alias the parameter's own value
// and gradient buffers, so gradients accumulate in place.
template <typename T>
class Tape {
 public:
  // With grad_enabled = false nothing on the tape requires gradients, so no
  // backward closures are recorded and parameters are only read.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  Var<T> constant(Tensor<T> t) { return push_owned(std::move(t), false); }
  Var<T> leaf(Tensor<T> t) { return push_owned(std::move(t), grad_enabled_); }

  Var<T> param(Parameter<T>& p) {
    if (auto it = param_ids_.find(&p); it != param_ids_.end()) return {this, it->second};
    Node node;
    node.shape = p.value.shape();
    node.value = p.value.data();
    if (grad_enabled_) node.grad = p.grad.data();
    node.requires_grad = grad_enabled_;
    nodes_.push_back(std::move(node));
    const int id = static_cast<int>(nodes_.size()) - 1;
    param_ids_.emplace(&p, id);
    return {this, id};
  }

  // Allocates an output node with zeroed value.
  Var<T> emplace(Shape shape, bool requires_grad) {
    Node node;
    node.shape = std::move(shape);
    const std::size_t n = shape_size(node.shape);
    node.own_value.assign(n, T(0));
    node.value = node.own_value;
    if (requires_grad) {
      node.own_grad.assign(n, T(0));
      node.grad = node.own_grad;
    }
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  void on_backward(Var<T> v, std::function<void()> fn) {
    nodes_[v.id].backward = std::move(fn);
  }

  void backward(Var<T> loss) {
    if (loss.tape != this) throw ValidationError("backward: loss not on this tape");
    if (value(loss.id).size() != 1) {
      throw ValidationError("backward: loss must be scalar, got shape " +
                            shape_str(shape(loss.id)));
    }
    if (!nodes_[loss.id].requires_grad) return;
    nodes_[loss.id].grad[0] += T(1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.requires_grad && n.backward) n.backward();
    }
  }

  void clear() {
    nodes_.clear();
    param_ids_.clear();
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const Shape& shape(int id) const { return nodes_[id].shape; }
  std::span<T> value(int id) { return nodes_[id].value; }
  std::span<const T> value(int id) const { return nodes_[id].value; }
  std::span<T> grad(int id) { return nodes_[id].grad; }
  std::span<const T> grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Shape shape;
    std::vector<T> own_value;
    std::vector<T> own_grad;
    std::span<T> value;
    std::span<T> grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Var<T> push_owned(Tensor<T> t, bool requires_grad) {
    Var<T> v = emplace(t.shape(), requires_grad);
    std::copy(t.data().begin(), t.data().end(), value(v.id).begin());
    return v;
  }

  // Moving a Node keeps its vectors' heap buffers, so the spans stay valid
  // when nodes_ reallocates.
  bool grad_enabled_ = true;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, int> param_ids_;
};

}  // namespace forumtag::num
