#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "forumtag/numerics/params.hpp"
#include "forumtag/numerics/rng.hpp"
#include "forumtag/numerics/tape.hpp"

namespace forumtag::num {

struct GradCheckOptions {
  double step = 1e-4;
  // Coordinates checked per parameter tensor; 0 checks all of them.
  std::size_t samples_per_param = 0;
  std::uint64_t seed = 0;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

using LossFn = std::function<Var<double>(Tape<double>&)>;

// Compares tape gradients of `loss` against central differences
// (f(θ+h) - f(θ-h)) / 2h. Non-finite parameter entries (masked transitions)
// are skipped.
inline GradCheckResult grad_check(ParamSet<double>& params, const LossFn& loss,
                                  const GradCheckOptions& options = {}) {
  if (!(options.step > 0.0)) throw ValidationError("grad_check: step must be positive");
  auto evaluate = [&loss] {
    Tape<double> tape;
    const double v = loss(tape).item();
    if (!std::isfinite(v)) throw ValidationError("grad_check: loss is not finite");
    return v;
  };

  params.zero_grad();
  {
    Tape<double> tape;
    Var<double> l = loss(tape);
    if (!std::isfinite(l.item())) throw ValidationError("grad_check: loss is not finite");
    tape.backward(l);
  }
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) {
    analytic.emplace_back(p->grad.data().begin(), p->grad.data().end());
  }

  Rng rng(options.seed);
  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<double>& p = params[k];
    std::vector<std::size_t> coords;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      if (std::isfinite(p.value[i])) coords.push_back(i);
    }
    if (options.samples_per_param > 0 && coords.size() > options.samples_per_param) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(options.samples_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double saved = p.value[i];
      p.value[i] = saved + options.step;
      const double up = evaluate();
      p.value[i] = saved - options.step;
      const double down = evaluate();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (rel > result.max_rel_error || result.worst_param.empty()) {
        if (rel >= result.max_rel_error) {
          result.max_rel_error = rel;
          result.worst_param = p.name;
          result.worst_index = i;
          result.worst_analytic = a;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace forumtag::num
