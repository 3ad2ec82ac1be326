#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "hncm/nn/tape.hpp"

namespace hncm::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_param;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckOptions {
  std::size_t samples = 200;
  double step = 1e-4;
  /// Denominator floor for the relative error, so that coordinates whose true
  /// gradient is ~0 are judged on absolute error.
  double floor = 1e-6;
  std::uint64_t seed = 7;
};

/// Builds the scalar loss on the given tape.
using LossFn = std::function<Var(Tape&)>;

/// Central finite differences against the tape's analytic gradient on sampled
/// coordinates, visiting parameters round-robin. Within a parameter a
/// coordinate with a non-zero analytic gradient is preferred when one exists.
inline GradCheckResult grad_check(const LossFn& loss_fn, ParamStore& params,
                                  const GradCheckOptions& opt = {}) {
  params.zero_grad();
  {
    Tape t(true);
    Var loss = loss_fn(t);
    if (!std::isfinite(t.scalar(loss))) throw Error("grad_check: non-finite loss");
    t.backward(loss);
  }
  auto eval = [&] {
    Tape t(false);
    double v = t.scalar(loss_fn(t));
    if (!std::isfinite(v)) throw Error("grad_check: non-finite loss");
    return v;
  };

  GradCheckResult res;
  Rng rng(opt.seed);
  if (params.size() == 0) return res;
  for (std::size_t s = 0; s < opt.samples; ++s) {
    Param& p = params.at(s % params.size());
    if (p.value.size() == 0) continue;
    std::uniform_int_distribution<Eigen::Index> pick(0, p.value.size() - 1);
    Eigen::Index k = pick(rng);
    if (p.grad.cwiseAbs().maxCoeff() > 0.0) {
      for (int tries = 0; tries < 32 && p.grad.data()[k] == 0.0; ++tries) k = pick(rng);
    }
    double analytic = p.grad.data()[k];
    double orig = p.value.data()[k];
    p.value.data()[k] = orig + opt.step;
    double up = eval();
    p.value.data()[k] = orig - opt.step;
    double down = eval();
    p.value.data()[k] = orig;
    double numeric = (up - down) / (2.0 * opt.step);
    double denom = std::max({std::abs(analytic), std::abs(numeric), opt.floor});
    double rel = std::abs(analytic - numeric) / denom;
    ++res.coordinates;
    if (rel > res.max_rel_error || res.worst_param.empty()) {
      res.max_rel_error = std::max(res.max_rel_error, rel);
      res.worst_param = p.name + "[" + std::to_string(k) + "]";
      res.worst_analytic = analytic;
      res.worst_numeric = numeric;
    }
  }
  return res;
}

}  // namespace hncm::nn
