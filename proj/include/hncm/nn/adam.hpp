#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hncm/nn/param.hpp"

namespace hncm::nn {

struct AdamState {
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  AdamState() = default;
  AdamState(const ParamStore& params, double learning_rate) : lr(learning_rate) {
    params.for_each([&](const Param& p) {
      m.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      v.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    });
  }
};

/// One bias-corrected Adam step over every parameter. Non-finite gradients
/// abort before any parameter is touched.
inline void adam_update(AdamState& state, ParamStore& params) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error("adam_update: optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Param& p = params.at(i);
    if (state.m[i].rows() != p.value.rows() || state.m[i].cols() != p.value.cols()) {
      throw Error("adam_update: moment shape mismatch for " + p.name);
    }
    if (!p.grad.allFinite()) throw Error("adam_update: non-finite gradient in parameter " + p.name);
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params.at(i);
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= state.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
    if (!p.value.allFinite()) throw Error("adam_update: parameter " + p.name + " became non-finite");
  }
}

}  // namespace hncm::nn
