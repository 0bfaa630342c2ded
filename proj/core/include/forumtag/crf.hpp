#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "forumtag/numerics/ops.hpp"
#include "forumtag/numerics/tensor.hpp"

// Linear-chain CRF over K tags. Transition matrices are (K+2)x(K+2): rows and
// columns K and K+1 are the synthetic START and STOP states. Entries into
// START and out of STOP are never read; make_transitions() stores them as -inf.
namespace forumtag::crf {

using num::Tensor;

constexpr std::size_t start_state(std::size_t k) { return k; }
constexpr std::size_t stop_state(std::size_t k) { return k + 1; }

template <typename T>
constexpr T neg_inf() {
  return -std::numeric_limits<T>::infinity();
}

template <typename T>
Tensor<T> make_transitions(std::size_t k) {
  Tensor<T> a(num::Shape{k + 2, k + 2});
  for (std::size_t i = 0; i < k + 2; ++i) {
    a(i, start_state(k)) = neg_inf<T>();
    a(stop_state(k), i) = neg_inf<T>();
  }
  return a;
}

template <typename T>
std::size_t check_shapes(const Tensor<T>& e, const Tensor<T>& a) {
  if (e.rank() != 2 || e.rows() == 0) {
    throw ShapeError("crf: emissions must be a non-empty T x K matrix, got " +
                     num::shape_str(e.shape()));
  }
  const std::size_t k = e.cols();
  if (a.rank() != 2 || a.rows() != k + 2 || a.cols() != k + 2) {
    throw ShapeError("crf: transitions " + num::shape_str(a.shape()) +
                     " do not match emissions " + num::shape_str(e.shape()));
  }
  return k;
}

// Sum over t of A[prev, tag_t] + e[t, tag_t], prev_0 = START, plus A[tag_T, STOP].
template <typename T>
T sequence_score(const Tensor<T>& e, const Tensor<T>& a, std::span<const std::size_t> tags) {
  const std::size_t k = check_shapes(e, a);
  if (tags.size() != e.rows()) {
    throw ValidationError("crf: " + std::to_string(tags.size()) + " tags for " +
                          std::to_string(e.rows()) + " positions");
  }
  T score = T(0);
  std::size_t prev = start_state(k);
  for (std::size_t t = 0; t < tags.size(); ++t) {
    if (tags[t] >= k) throw ValidationError("crf: tag index out of range");
    score += a(prev, tags[t]) + e(t, tags[t]);
    prev = tags[t];
  }
  return score + a(prev, stop_state(k));
}

// Forward log-potentials alpha[t][j].
template <typename T>
Tensor<T> forward_scores(const Tensor<T>& e, const Tensor<T>& a) {
  const std::size_t k = check_shapes(e, a);
  const std::size_t len = e.rows();
  Tensor<T> alpha(num::Shape{len, k});
  for (std::size_t j = 0; j < k; ++j) alpha(0, j) = a(start_state(k), j) + e(0, j);
  std::vector<T> buf(k);
  for (std::size_t t = 1; t < len; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) buf[i] = alpha(t - 1, i) + a(i, j);
      alpha(t, j) = e(t, j) + num::kernel::log_sum_exp<T>(buf);
    }
  }
  return alpha;
}

// Backward log-potentials beta[t][i], including the STOP transition.
template <typename T>
Tensor<T> backward_scores(const Tensor<T>& e, const Tensor<T>& a) {
  const std::size_t k = check_shapes(e, a);
  const std::size_t len = e.rows();
  Tensor<T> beta(num::Shape{len, k});
  for (std::size_t i = 0; i < k; ++i) beta(len - 1, i) = a(i, stop_state(k));
  std::vector<T> buf(k);
  for (std::size_t t = len - 1; t-- > 0;) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) buf[j] = a(i, j) + e(t + 1, j) + beta(t + 1, j);
      beta(t, i) = num::kernel::log_sum_exp<T>(buf);
    }
  }
  return beta;
}

// log of the sum over all K^T tag sequences of exp(sequence_score).
template <typename T>
T log_partition(const Tensor<T>& e, const Tensor<T>& a) {
  const std::size_t k = check_shapes(e, a);
  const Tensor<T> alpha = forward_scores(e, a);
  std::vector<T> buf(k);
  for (std::size_t j = 0; j < k; ++j) buf[j] = alpha(e.rows() - 1, j) + a(j, stop_state(k));
  return num::kernel::log_sum_exp<T>(buf);
}

template <typename T>
T nll(const Tensor<T>& e, const Tensor<T>& a, std::span<const std::size_t> gold) {
  const T score = sequence_score(e, a, gold);
  return log_partition(e, a) - score;
}

template <typename T>
struct Decoded {
  std::vector<std::size_t> tags;
  T score = T(0);
};

// Highest-scoring sequence. At every backpointer and at the final step the
// lowest tag index wins ties.
template <typename T>
Decoded<T> viterbi_decode(const Tensor<T>& e, const Tensor<T>& a) {
  const std::size_t k = check_shapes(e, a);
  const std::size_t len = e.rows();
  Tensor<T> best(num::Shape{len, k});
  std::vector<std::size_t> back(len * k, 0);
  for (std::size_t j = 0; j < k; ++j) best(0, j) = a(start_state(k), j) + e(0, j);
  for (std::size_t t = 1; t < len; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t arg = 0;
      T top = best(t - 1, 0) + a(0, j);
      for (std::size_t i = 1; i < k; ++i) {
        const T s = best(t - 1, i) + a(i, j);
        if (s > top) {
          top = s;
          arg = i;
        }
      }
      best(t, j) = top + e(t, j);
      back[t * k + j] = arg;
    }
  }
  std::size_t last = 0;
  T top = best(len - 1, 0) + a(0, stop_state(k));
  for (std::size_t j = 1; j < k; ++j) {
    const T s = best(len - 1, j) + a(j, stop_state(k));
    if (s > top) {
      top = s;
      last = j;
    }
  }
  Decoded<T> out;
  out.tags.assign(len, 0);
  out.tags[len - 1] = last;
  for (std::size_t t = len - 1; t > 0; --t) out.tags[t - 1] = back[t * k + out.tags[t]];
  out.score = sequence_score<T>(e, a, out.tags);
  return out;
}

template <typename T>
struct Marginals {
  Tensor<T> unary;        // T x K posteriors
  Tensor<T> transitions;  // (K+2) x (K+2) expected transition counts
  T log_z = T(0);
};

template <typename T>
Marginals<T> marginals(const Tensor<T>& e, const Tensor<T>& a) {
  const std::size_t k = check_shapes(e, a);
  const std::size_t len = e.rows();
  const Tensor<T> alpha = forward_scores(e, a);
  const Tensor<T> beta = backward_scores(e, a);
  Marginals<T> m;
  std::vector<T> buf(k);
  for (std::size_t j = 0; j < k; ++j) buf[j] = alpha(len - 1, j) + a(j, stop_state(k));
  m.log_z = num::kernel::log_sum_exp<T>(buf);
  m.unary = Tensor<T>(num::Shape{len, k});
  m.transitions = Tensor<T>(num::Shape{k + 2, k + 2});
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      m.unary(t, j) = std::exp(alpha(t, j) + beta(t, j) - m.log_z);
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    m.transitions(start_state(k), j) = m.unary(0, j);
    m.transitions(j, stop_state(k)) = m.unary(len - 1, j);
  }
  for (std::size_t t = 0; t + 1 < len; ++t) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        m.transitions(i, j) +=
            std::exp(alpha(t, i) + a(i, j) + e(t + 1, j) + beta(t + 1, j) - m.log_z);
      }
    }
  }
  return m;
}

// Transitions with -inf on BIO-illegal moves: START -> X_I, and Y -> X_I
// unless Y is X_B or X_I. Tag layout follows forumtag::Tag (O = 0, then B/I
// pairs per type).
template <typename T>
Tensor<T> bio_constrained(const Tensor<T>& a) {
  const std::size_t k = a.rows() - 2;
  Tensor<T> out = a;
  auto is_inside = [](std::size_t tag) { return tag != 0 && tag % 2 == 0; };
  for (std::size_t j = 0; j < k; ++j) {
    if (!is_inside(j)) continue;
    out(start_state(k), j) = neg_inf<T>();
    for (std::size_t i = 0; i < k; ++i) {
      if (i != j && i != j - 1) out(i, j) = neg_inf<T>();
    }
  }
  return out;
}

// Tape op: negative log-likelihood of `gold` under emissions [T x K] and
// transitions [(K+2) x (K+2)]. Gradients are posterior minus empirical counts.
// A non-null `mask` is added to the transitions (use bio_constrained's -inf
// pattern on a zero matrix).
template <typename T>
num::Var<T> nll_op(num::Var<T> emissions, num::Var<T> transitions, std::vector<std::size_t> gold,
                   const Tensor<T>* mask = nullptr) {
  num::Tape<T>& tape = *emissions.tape;
  Tensor<T> e = emissions.tensor();
  Tensor<T> a = transitions.tensor();
  if (mask != nullptr) {
    num::require_same_shape(mask->shape(), a.shape(), "crf mask");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += (*mask)[i];
  }
  const T score = sequence_score<T>(e, a, gold);
  Marginals<T> m = marginals<T>(e, a);
  const bool grad = tape.requires_grad(emissions.id) || tape.requires_grad(transitions.id);
  num::Var<T> out = tape.emplace(num::Shape{}, grad);
  tape.value(out.id)[0] = m.log_z - score;
  if (grad) {
    tape.on_backward(out, [&tape, emissions, transitions, out, gold = std::move(gold),
                           m = std::move(m)] {
      const T g = tape.grad(out.id)[0];
      const std::size_t k = m.unary.cols();
      if (tape.requires_grad(emissions.id)) {
        auto ge = tape.grad(emissions.id);
        for (std::size_t i = 0; i < m.unary.size(); ++i) ge[i] += g * m.unary[i];
        for (std::size_t t = 0; t < gold.size(); ++t) ge[t * k + gold[t]] -= g;
      }
      if (tape.requires_grad(transitions.id)) {
        auto ga = tape.grad(transitions.id);
        for (std::size_t i = 0; i < m.transitions.size(); ++i) ga[i] += g * m.transitions[i];
        const std::size_t w = k + 2;
        std::size_t prev = start_state(k);
        for (std::size_t t = 0; t < gold.size(); ++t) {
          ga[prev * w + gold[t]] -= g;
          prev = gold[t];
        }
        ga[prev * w + stop_state(k)] -= g;
      }
    });
  }
  return out;
}

}  // namespace forumtag::crf
