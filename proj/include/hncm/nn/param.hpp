#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "hncm/error.hpp"

namespace hncm::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}
};

/// Ordered collection of uniquely named parameters. Addresses are stable for
/// the lifetime of the store, so models may keep raw `Param*` handles.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Param& add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    if (index_.count(name)) throw Error("duplicate parameter name: " + name);
    index_.emplace(name, params_.size());
    params_.push_back(std::make_unique<Param>(name, rows, cols));
    return *params_.back();
  }

  Param* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }
  const Param* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }

  Param& at(std::size_t i) { return *params_[i]; }
  const Param& at(std::size_t i) const { return *params_[i]; }
  std::size_t size() const { return params_.size(); }

  void zero_grad() {
    for (auto& p : params_) p->grad.setZero();
  }

  std::size_t num_values() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
    return n;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& p : params_) s += p->value.squaredNorm();
    return s;
  }

  std::vector<Matrix> snapshot() const {
    std::vector<Matrix> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p->value);
    return out;
  }

  void restore(const std::vector<Matrix>& values) {
    if (values.size() != params_.size()) throw Error("snapshot size mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (values[i].rows() != params_[i]->value.rows() ||
          values[i].cols() != params_[i]->value.cols()) {
        throw Error("snapshot shape mismatch for " + params_[i]->name);
      }
      params_[i]->value = values[i];
    }
  }

  template <class F>
  void for_each(F&& f) {
    for (auto& p : params_) f(*p);
  }
  template <class F>
  void for_each(F&& f) const {
    for (const auto& p : params_) f(static_cast<const Param&>(*p));
  }

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline void init_uniform(Param& p, double scale, Rng& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = dist(rng);
}

inline constexpr double kInitScale = 0.08;

inline void init_all(ParamStore& store, Rng& rng, double scale = kInitScale) {
  store.for_each([&](Param& p) { init_uniform(p, scale, rng); });
}

/// Rescales gradients in place when their global L2 norm exceeds max_norm.
/// Returns the norm before clipping.
inline double clip_grad_norm(ParamStore& store, double max_norm) {
  double sq = 0.0;
  store.for_each([&](const Param& p) { sq += p.grad.squaredNorm(); });
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double s = max_norm / norm;
    store.for_each([&](Param& p) { p.grad *= s; });
  }
  return norm;
}

}  // namespace hncm::nn
