#pragma once

#include <cmath>
#include <initializer_list>
#include <span>
#include <vector>

#include "forumtag/numerics/tape.hpp"

// Differentiable primitives. Every op computes its forward value eagerly and
// registers a closure that accumulates into the inputs' gradients.
namespace forumtag::num {

namespace detail {

template <typename T>
bool any_grad(std::initializer_list<Var<T>> vs) {
  for (const auto& v : vs) {
    if (v.tape->requires_grad(v.id)) return true;
  }
  return false;
}

template <typename T>
Tape<T>& same_tape(Var<T> a, Var<T> b) {
  if (a.tape != b.tape) throw ValidationError("operands recorded on different tapes");
  return *a.tape;
}

}  // namespace detail

// W[m x n] * x[n] -> [m]
template <typename T>
Var<T> matvec(Var<T> w, Var<T> x) {
  Tape<T>& tape = detail::same_tape(w, x);
  const Shape ws = w.shape();
  if (ws.size() != 2 || x.shape().size() != 1 || ws[1] != x.shape()[0]) {
    throw ShapeError("matvec: shape mismatch " + shape_str(ws) + " vs " +
                     shape_str(x.shape()));
  }
  const std::size_t m = ws[0], n = ws[1];
  Var<T> out = tape.emplace(Shape{m}, detail::any_grad({w, x}));
  kernel::gemv_acc<T>(tape.value(w.id), m, n, tape.value(x.id), tape.value(out.id));
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, w, x, out, m, n] {
      auto g = tape.grad(out.id);
      if (tape.requires_grad(w.id)) {
        kernel::outer_acc<T>(g, tape.value(x.id), tape.grad(w.id));
      }
      if (tape.requires_grad(x.id)) {
        kernel::gemv_t_acc<T>(tape.value(w.id), m, n, g, tape.grad(x.id));
      }
    });
  }
  return out;
}

// M[m x n]^T * x[m] -> [n]
template <typename T>
Var<T> matvec_t(Var<T> mat, Var<T> x) {
  Tape<T>& tape = detail::same_tape(mat, x);
  const Shape ms = mat.shape();
  if (ms.size() != 2 || x.shape().size() != 1 || ms[0] != x.shape()[0]) {
    throw ShapeError("matvec_t: shape mismatch " + shape_str(ms) + " vs " +
                     shape_str(x.shape()));
  }
  const std::size_t m = ms[0], n = ms[1];
  Var<T> out = tape.emplace(Shape{n}, detail::any_grad({mat, x}));
  kernel::gemv_t_acc<T>(tape.value(mat.id), m, n, tape.value(x.id), tape.value(out.id));
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, mat, x, out, m, n] {
      auto g = tape.grad(out.id);
      if (tape.requires_grad(mat.id)) {
        kernel::outer_acc<T>(tape.value(x.id), g, tape.grad(mat.id));
      }
      if (tape.requires_grad(x.id)) {
        kernel::gemv_acc<T>(tape.value(mat.id), m, n, g, tape.grad(x.id));
      }
    });
  }
  return out;
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T>& tape = detail::same_tape(a, b);
  require_same_shape(a.shape(), b.shape(), "add");
  Var<T> out = tape.emplace(a.shape(), detail::any_grad({a, b}));
  auto va = tape.value(a.id), vb = tape.value(b.id), vo = tape.value(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] + vb[i];
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, b, out] {
      auto g = tape.grad(out.id);
      for (Var<T> in : {a, b}) {
        if (!tape.requires_grad(in.id)) continue;
        auto gi = tape.grad(in.id);
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  Tape<T>& tape = detail::same_tape(a, b);
  require_same_shape(a.shape(), b.shape(), "sub");
  Var<T> out = tape.emplace(a.shape(), detail::any_grad({a, b}));
  auto va = tape.value(a.id), vb = tape.value(b.id), vo = tape.value(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] - vb[i];
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, b, out] {
      auto g = tape.grad(out.id);
      if (tape.requires_grad(a.id)) {
        auto ga = tape.grad(a.id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (tape.requires_grad(b.id)) {
        auto gb = tape.grad(b.id);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

// Elementwise product.
template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  Tape<T>& tape = detail::same_tape(a, b);
  require_same_shape(a.shape(), b.shape(), "mul");
  Var<T> out = tape.emplace(a.shape(), detail::any_grad({a, b}));
  auto va = tape.value(a.id), vb = tape.value(b.id), vo = tape.value(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] * vb[i];
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, b, out] {
      auto g = tape.grad(out.id);
      auto va = tape.value(a.id), vb = tape.value(b.id);
      if (tape.requires_grad(a.id)) {
        auto ga = tape.grad(a.id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
      }
      if (tape.requires_grad(b.id)) {
        auto gb = tape.grad(b.id);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
      }
    });
  }
  return out;
}

template <typename T>
Var<T> scale(Var<T> a, T c) {
  Tape<T>& tape = *a.tape;
  Var<T> out = tape.emplace(a.shape(), tape.requires_grad(a.id));
  auto va = tape.value(a.id), vo = tape.value(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = c * va[i];
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, out, c] {
      auto g = tape.grad(out.id);
      auto ga = tape.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    });
  }
  return out;
}

// 1 - a
template <typename T>
Var<T> one_minus(Var<T> a) {
  Tape<T>& tape = *a.tape;
  Var<T> out = tape.emplace(a.shape(), tape.requires_grad(a.id));
  auto va = tape.value(a.id), vo = tape.value(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = T(1) - va[i];
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, out] {
      auto g = tape.grad(out.id);
      auto ga = tape.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
    });
  }
  return out;
}

template <typename T>
Var<T> tanh(Var<T> a) {
  Tape<T>& tape = *a.tape;
  Var<T> out = tape.emplace(a.shape(), tape.requires_grad(a.id));
  auto va = tape.value(a.id), vo = tape.value(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = std::tanh(va[i]);
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, out] {
      auto g = tape.grad(out.id);
      auto y = tape.value(out.id);
      auto ga = tape.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T(1) - y[i] * y[i]);
    });
  }
  return out;
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  Tape<T>& tape = *a.tape;
  Var<T> out = tape.emplace(a.shape(), tape.requires_grad(a.id));
  auto va = tape.value(a.id), vo = tape.value(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = kernel::sigmoid(va[i]);
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, out] {
      auto g = tape.grad(out.id);
      auto y = tape.value(out.id);
      auto ga = tape.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
    });
  }
  return out;
}

// Concatenation of vectors (scalars count as length 1).
template <typename T>
Var<T> concat(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Tape<T>& tape = *parts[0].tape;
  std::size_t n = 0;
  bool grad = false;
  for (const auto& p : parts) {
    if (p.tape != &tape) throw ValidationError("operands recorded on different tapes");
    if (p.shape().size() > 1) {
      throw ShapeError("concat: expected vectors or scalars, got " + shape_str(p.shape()));
    }
    n += p.size();
    grad = grad || tape.requires_grad(p.id);
  }
  Var<T> out = tape.emplace(Shape{n}, grad);
  auto vo = tape.value(out.id);
  std::size_t off = 0;
  for (const auto& p : parts) {
    auto vp = tape.value(p.id);
    std::copy(vp.begin(), vp.end(), vo.begin() + off);
    off += vp.size();
  }
  if (grad) {
    std::vector<Var<T>> inputs(parts.begin(), parts.end());
    tape.on_backward(out, [&tape, inputs = std::move(inputs), out] {
      auto g = tape.grad(out.id);
      std::size_t off = 0;
      for (const auto& p : inputs) {
        const std::size_t len = tape.value(p.id).size();
        if (tape.requires_grad(p.id)) {
          auto gp = tape.grad(p.id);
          for (std::size_t i = 0; i < len; ++i) gp[i] += g[off + i];
        }
        off += len;
      }
    });
  }
  return out;
}

template <typename T>
Var<T> concat(std::initializer_list<Var<T>> parts) {
  return concat<T>(std::span<const Var<T>>(parts.begin(), parts.size()));
}

// a[offset, offset + len)
template <typename T>
Var<T> slice(Var<T> a, std::size_t offset, std::size_t len) {
  Tape<T>& tape = *a.tape;
  if (offset + len > a.size()) {
    throw ShapeError("slice: range [" + std::to_string(offset) + "," +
                     std::to_string(offset + len) + ") outside " + shape_str(a.shape()));
  }
  Var<T> out = tape.emplace(Shape{len}, tape.requires_grad(a.id));
  auto va = tape.value(a.id);
  std::copy(va.begin() + offset, va.begin() + offset + len, tape.value(out.id).begin());
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, out, offset, len] {
      auto g = tape.grad(out.id);
      auto ga = tape.grad(a.id);
      for (std::size_t i = 0; i < len; ++i) ga[offset + i] += g[i];
    });
  }
  return out;
}

// Row r of a matrix, as a vector. Gradient goes straight into that row.
template <typename T>
Var<T> row(Var<T> mat, std::size_t r) {
  Tape<T>& tape = *mat.tape;
  const Shape ms = mat.shape();
  if (ms.size() != 2 || r >= ms[0]) {
    throw ShapeError("row: index " + std::to_string(r) + " outside " + shape_str(ms));
  }
  const std::size_t n = ms[1];
  Var<T> out = tape.emplace(Shape{n}, tape.requires_grad(mat.id));
  auto vm = tape.value(mat.id);
  std::copy(vm.begin() + r * n, vm.begin() + (r + 1) * n, tape.value(out.id).begin());
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, mat, out, r, n] {
      auto g = tape.grad(out.id);
      auto gm = tape.grad(mat.id);
      for (std::size_t i = 0; i < n; ++i) gm[r * n + i] += g[i];
    });
  }
  return out;
}

// Sum of the selected rows of a matrix (repeats allowed).
template <typename T>
Var<T> gather_sum(Var<T> mat, std::vector<std::size_t> rows) {
  Tape<T>& tape = *mat.tape;
  const Shape ms = mat.shape();
  if (ms.size() != 2) throw ShapeError("gather_sum: expected matrix, got " + shape_str(ms));
  const std::size_t n = ms[1];
  Var<T> out = tape.emplace(Shape{n}, tape.requires_grad(mat.id));
  auto vm = tape.value(mat.id);
  auto vo = tape.value(out.id);
  for (std::size_t r : rows) {
    if (r >= ms[0]) {
      throw ShapeError("gather_sum: row " + std::to_string(r) + " outside " + shape_str(ms));
    }
    for (std::size_t i = 0; i < n; ++i) vo[i] += vm[r * n + i];
  }
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, mat, out, n, rows = std::move(rows)] {
      auto g = tape.grad(out.id);
      auto gm = tape.grad(mat.id);
      for (std::size_t r : rows) {
        for (std::size_t i = 0; i < n; ++i) gm[r * n + i] += g[i];
      }
    });
  }
  return out;
}

// Stacks equal-length vectors as the rows of a matrix.
template <typename T>
Var<T> stack(std::span<const Var<T>> rows) {
  if (rows.empty()) throw ShapeError("stack: no operands");
  Tape<T>& tape = *rows[0].tape;
  const std::size_t n = rows[0].size();
  bool grad = false;
  for (const auto& r : rows) {
    if (r.shape().size() != 1 || r.size() != n) {
      throw ShapeError("stack: shape mismatch " + shape_str(rows[0].shape()) + " vs " +
                       shape_str(r.shape()));
    }
    grad = grad || tape.requires_grad(r.id);
  }
  Var<T> out = tape.emplace(Shape{rows.size(), n}, grad);
  auto vo = tape.value(out.id);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto vr = tape.value(rows[k].id);
    std::copy(vr.begin(), vr.end(), vo.begin() + k * n);
  }
  if (grad) {
    std::vector<Var<T>> inputs(rows.begin(), rows.end());
    tape.on_backward(out, [&tape, inputs = std::move(inputs), out, n] {
      auto g = tape.grad(out.id);
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        if (!tape.requires_grad(inputs[k].id)) continue;
        auto gr = tape.grad(inputs[k].id);
        for (std::size_t i = 0; i < n; ++i) gr[i] += g[k * n + i];
      }
    });
  }
  return out;
}

// Softmax of a vector, or of each row of a matrix.
template <typename T>
Var<T> softmax(Var<T> a) {
  Tape<T>& tape = *a.tape;
  const Shape s = a.shape();
  const std::size_t cols = s.size() == 2 ? s[1] : a.size();
  const std::size_t rows = cols == 0 ? 0 : a.size() / cols;
  Var<T> out = tape.emplace(s, tape.requires_grad(a.id));
  auto va = tape.value(a.id), vo = tape.value(out.id);
  for (std::size_t r = 0; r < rows; ++r) {
    kernel::softmax<T>(va.subspan(r * cols, cols), vo.subspan(r * cols, cols));
  }
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, out, rows, cols] {
      auto g = tape.grad(out.id);
      auto y = tape.value(out.id);
      auto ga = tape.grad(a.id);
      for (std::size_t r = 0; r < rows; ++r) {
        T dot = T(0);
        for (std::size_t i = 0; i < cols; ++i) dot += g[r * cols + i] * y[r * cols + i];
        for (std::size_t i = 0; i < cols; ++i) {
          ga[r * cols + i] += y[r * cols + i] * (g[r * cols + i] - dot);
        }
      }
    });
  }
  return out;
}

// log(sum(exp(a))) over all entries, max-shifted.
template <typename T>
Var<T> log_sum_exp(Var<T> a) {
  Tape<T>& tape = *a.tape;
  Var<T> out = tape.emplace(Shape{}, tape.requires_grad(a.id));
  tape.value(out.id)[0] = kernel::log_sum_exp<T>(tape.value(a.id));
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, out] {
      const T g = tape.grad(out.id)[0];
      const T lse = tape.value(out.id)[0];
      auto va = tape.value(a.id);
      auto ga = tape.grad(a.id);
      for (std::size_t i = 0; i < va.size(); ++i) ga[i] += g * std::exp(va[i] - lse);
    });
  }
  return out;
}

template <typename T>
Var<T> dot(Var<T> a, Var<T> b) {
  Tape<T>& tape = detail::same_tape(a, b);
  require_same_shape(a.shape(), b.shape(), "dot");
  Var<T> out = tape.emplace(Shape{}, detail::any_grad({a, b}));
  auto va = tape.value(a.id), vb = tape.value(b.id);
  T acc = T(0);
  for (std::size_t i = 0; i < va.size(); ++i) acc += va[i] * vb[i];
  tape.value(out.id)[0] = acc;
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, b, out] {
      const T g = tape.grad(out.id)[0];
      auto va = tape.value(a.id), vb = tape.value(b.id);
      if (tape.requires_grad(a.id)) {
        auto ga = tape.grad(a.id);
        for (std::size_t i = 0; i < va.size(); ++i) ga[i] += g * vb[i];
      }
      if (tape.requires_grad(b.id)) {
        auto gb = tape.grad(b.id);
        for (std::size_t i = 0; i < vb.size(); ++i) gb[i] += g * va[i];
      }
    });
  }
  return out;
}

template <typename T>
Var<T> sum(Var<T> a) {
  Tape<T>& tape = *a.tape;
  Var<T> out = tape.emplace(Shape{}, tape.requires_grad(a.id));
  T acc = T(0);
  for (T v : tape.value(a.id)) acc += v;
  tape.value(out.id)[0] = acc;
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, out] {
      const T g = tape.grad(out.id)[0];
      for (T& gi : tape.grad(a.id)) gi += g;
    });
  }
  return out;
}

template <typename T>
Var<T> sum_squares(Var<T> a) {
  Tape<T>& tape = *a.tape;
  Var<T> out = tape.emplace(Shape{}, tape.requires_grad(a.id));
  T acc = T(0);
  for (T v : tape.value(a.id)) {
    if (std::isfinite(v)) acc += v * v;
  }
  tape.value(out.id)[0] = acc;
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, out] {
      const T g = tape.grad(out.id)[0];
      auto va = tape.value(a.id);
      auto ga = tape.grad(a.id);
      for (std::size_t i = 0; i < va.size(); ++i) {
        if (std::isfinite(va[i])) ga[i] += T(2) * g * va[i];
      }
    });
  }
  return out;
}

// Sum of scalars.
template <typename T>
Var<T> add_all(std::span<const Var<T>> terms) {
  if (terms.empty()) throw ShapeError("add_all: no operands");
  Tape<T>& tape = *terms[0].tape;
  bool grad = false;
  T acc = T(0);
  for (const auto& t : terms) {
    if (t.size() != 1) throw ShapeError("add_all: expected scalars, got " + shape_str(t.shape()));
    acc += t.item();
    grad = grad || tape.requires_grad(t.id);
  }
  Var<T> out = tape.emplace(Shape{}, grad);
  tape.value(out.id)[0] = acc;
  if (grad) {
    std::vector<Var<T>> inputs(terms.begin(), terms.end());
    tape.on_backward(out, [&tape, inputs = std::move(inputs), out] {
      const T g = tape.grad(out.id)[0];
      for (const auto& t : inputs) {
        if (tape.requires_grad(t.id)) tape.grad(t.id)[0] += g;
      }
    });
  }
  return out;
}

// -log softmax(a)[target]: per-token cross-entropy on unnormalized scores.
template <typename T>
Var<T> neg_log_softmax(Var<T> a, std::size_t target) {
  Tape<T>& tape = *a.tape;
  if (a.shape().size() != 1 || target >= a.size()) {
    throw ShapeError("neg_log_softmax: target " + std::to_string(target) + " outside " +
                     shape_str(a.shape()));
  }
  Var<T> out = tape.emplace(Shape{}, tape.requires_grad(a.id));
  auto va = tape.value(a.id);
  tape.value(out.id)[0] = kernel::log_sum_exp<T>(va) - va[target];
  if (tape.requires_grad(out.id)) {
    tape.on_backward(out, [&tape, a, out, target] {
      const T g = tape.grad(out.id)[0];
      auto va = tape.value(a.id);
      auto ga = tape.grad(a.id);
      const T lse = kernel::log_sum_exp<T>(va);
      for (std::size_t i = 0; i < va.size(); ++i) {
        ga[i] += g * (std::exp(va[i] - lse) - (i == target ? T(1) : T(0)));
      }
    });
  }
  return out;
}

template <typename T>
Var<T> stack(const std::vector<Var<T>>& rows) {
  return stack(std::span<const Var<T>>(rows));
}

template <typename T>
Var<T> add_all(const std::vector<Var<T>>& terms) {
  return add_all(std::span<const Var<T>>(terms));
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts) {
  return concat(std::span<const Var<T>>(parts));
}

}  // namespace forumtag::num
