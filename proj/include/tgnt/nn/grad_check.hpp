#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "tgnt/nn/tensor.hpp"

namespace tgnt::nn {

struct GradCheckFailure {
  std::size_t tensor{};
  std::size_t index{};
  double analytic{};
  double numeric{};
  double rel_error{};
};

struct GradCheckReport {
  double max_rel_error{0.0};
  std::size_t checked{0};
  std::vector<GradCheckFailure> failures;

  [[nodiscard]] auto passed() const -> bool { return failures.empty(); }
};

struct GradCheckOptions {
  double eps{1e-5};
  double tolerance{1e-4};
  // Denominator floor: |a - n| / max(|a|, |n|, floor).
  double floor{1e-6};
};

// Central-difference check of every coordinate of `params`. `backward` must
// fill the grad buffers for the current values (buffers are zeroed first);
// `loss` evaluates the scalar without touching gradients.
inline auto grad_check(const std::function<double()>& loss,
                       const std::function<void()>& backward, const ParamList& params,
                       const GradCheckOptions& opt = {}) -> GradCheckReport {
  zero_grad(params);
  backward();
  GradCheckReport report;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = *params[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + opt.eps;
      const double up = loss();
      p.value[i] = saved - opt.eps;
      const double down = loss();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * opt.eps);
      const double analytic = p.grad[i];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), opt.floor});
      const double rel = std::abs(analytic - numeric) / denom;
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.checked;
      if (!(rel < opt.tolerance)) report.failures.push_back({t, i, analytic, numeric, rel});
    }
  }
  return report;
}

}  // namespace tgnt::nn
