#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hncm/nn/param.hpp"

namespace hncm::nn {

/// Handle to a node on a Tape.
struct Var {
  std::uint32_t id = std::numeric_limits<std::uint32_t>::max();
  bool valid() const { return id != std::numeric_limits<std::uint32_t>::max(); }
};

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, so a reverse sweep from the root is a valid topological order.
///
/// A non-recording tape still evaluates values but keeps no backward closures;
/// it is what inference paths use. `training()` only toggles dropout.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t self)>;

  explicit Tape(bool record = true, bool training = false, Rng* rng = nullptr)
      : record_(record), training_(training), rng_(rng) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  bool training() const { return training_; }
  Rng& rng() {
    if (!rng_) throw Error("tape has no random generator (needed for dropout)");
    return *rng_;
  }

  Var constant(Matrix value) { return append(std::move(value), nullptr, false, nullptr); }

  /// Leaf bound to a model parameter; repeated calls return the same node so
  /// gradients are accumulated once into `p.grad`.
  Var param(Param& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return it->second;
    Var v = append(p.value, nullptr, record_, &p);
    param_nodes_.emplace(&p, v);
    return v;
  }

  /// Appends an op result. `back` is kept only when recording and at least one
  /// input needs a gradient.
  Var push(Matrix value, std::initializer_list<Var> inputs, Backward back) {
    bool needs = false;
    if (record_) {
      for (Var in : inputs) needs = needs || nodes_[in.id].needs_grad;
    }
    return append(std::move(value), needs ? std::move(back) : nullptr, needs, nullptr);
  }

  /// Variant for ops with a runtime-sized input list.
  Var push_n(Matrix value, const std::vector<Var>& inputs, Backward back) {
    bool needs = false;
    if (record_) {
      for (Var in : inputs) needs = needs || nodes_[in.id].needs_grad;
    }
    return append(std::move(value), needs ? std::move(back) : nullptr, needs, nullptr);
  }

  /// Node with no tape inputs whose backward writes straight into parameter
  /// storage (embedding lookups).
  Var push_source(Matrix value, Backward back) {
    return append(std::move(value), record_ ? std::move(back) : nullptr, record_, nullptr);
  }

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  /// Gradient buffer of a node, zero-allocated on first touch.
  Matrix& grad(Var v) { return grad(v.id); }
  Matrix& grad(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0 && n.value.size() != 0) {
      n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    }
    return n.grad;
  }
  bool has_grad(std::uint32_t id) const { return nodes_[id].grad.size() != 0; }

  /// Seeds d(root)/d(root) = 1 for a 1x1 root and sweeps backwards,
  /// accumulating into the bound parameters' `grad` buffers.
  void backward(Var root) {
    if (!record_) throw Error("backward() on a non-recording tape");
    if (value(root).size() != 1) throw Error("backward() root must be a scalar");
    grad(root).setOnes();
    for (std::int64_t i = root.id; i >= 0; --i) {
      auto id = static_cast<std::uint32_t>(i);
      Node& n = nodes_[id];
      if (n.grad.size() == 0) continue;
      if (n.param) {
        n.param->grad += n.grad;
      } else if (n.back) {
        n.back(*this, id);
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward back;
    Param* param = nullptr;
    bool needs_grad = false;
  };

  Var append(Matrix value, Backward back, bool needs, Param* p) {
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    n.needs_grad = needs;
    n.param = p;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  bool record_;
  bool training_;
  Rng* rng_;
  std::vector<Node> nodes_;
  std::unordered_map<const Param*, Var> param_nodes_;
};

}  // namespace hncm::nn
