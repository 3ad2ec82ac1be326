#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hncm/nn/ops.hpp"

namespace hncm::nn {

/// One LSTM layer. Gate pre-activations are W [x; h] + b with the 4H rows
/// ordered input, forget, candidate, output.
struct LstmCell {
  Eigen::Index input_size = 0;
  Eigen::Index hidden_size = 0;
  Param* weight = nullptr;  // 4H x (input + H)
  Param* bias = nullptr;    // 4H x 1

  LstmCell() = default;
  LstmCell(ParamStore& store, const std::string& prefix, Eigen::Index in, Eigen::Index hidden)
      : input_size(in),
        hidden_size(hidden),
        weight(&store.add(prefix + ".weight", 4 * hidden, in + hidden)),
        bias(&store.add(prefix + ".bias", 4 * hidden, 1)) {}
};

struct LstmState {
  Var h;
  Var c;
};

inline LstmState lstm_step(Tape& t, const LstmCell& cell, Var x, const LstmState& prev) {
  const Eigen::Index H = cell.hidden_size;
  if (t.value(x).rows() != cell.input_size || t.value(x).cols() != 1) {
    throw Error("lstm_step: input has " + std::to_string(t.value(x).rows()) + " rows, cell expects " +
                std::to_string(cell.input_size));
  }
  if (t.value(prev.h).rows() != H || t.value(prev.c).rows() != H) {
    throw Error("lstm_step: state size does not match hidden size " + std::to_string(H));
  }
  Var z = linear(t, *cell.weight, *cell.bias, concat_rows(t, {x, prev.h}));
  Var i = sigmoid(t, slice_rows(t, z, 0, H));
  Var f = sigmoid(t, slice_rows(t, z, H, H));
  Var g = tanh(t, slice_rows(t, z, 2 * H, H));
  Var o = sigmoid(t, slice_rows(t, z, 3 * H, H));
  Var c = add(t, mul(t, f, prev.c), mul(t, i, g));
  Var h = mul(t, o, tanh(t, c));
  return {h, c};
}

/// Value-level single step, for inspection and tests.
inline std::pair<Vector, Vector> lstm_step(const LstmCell& cell, const Vector& x, const Vector& h_prev,
                                           const Vector& c_prev) {
  Tape t(false);
  LstmState s = lstm_step(t, cell, t.constant(x), {t.constant(h_prev), t.constant(c_prev)});
  return {t.value(s.h).col(0), t.value(s.c).col(0)};
}

/// Layers of LSTM cells where layer l+1 consumes the hidden output of layer l.
struct StackedLstm {
  std::vector<LstmCell> layers;

  StackedLstm() = default;
  StackedLstm(ParamStore& store, const std::string& prefix, Eigen::Index in, Eigen::Index hidden,
              int num_layers) {
    for (int l = 0; l < num_layers; ++l) {
      layers.emplace_back(store, prefix + ".l" + std::to_string(l), l == 0 ? in : hidden, hidden);
    }
  }

  Eigen::Index hidden_size() const { return layers.back().hidden_size; }

  std::vector<LstmState> zero_state(Tape& t) const {
    std::vector<LstmState> s;
    for (const auto& cell : layers) {
      s.push_back({t.constant(Matrix::Zero(cell.hidden_size, 1)),
                   t.constant(Matrix::Zero(cell.hidden_size, 1))});
    }
    return s;
  }

  /// Advances every layer by one step; `dropout_rate` is applied between layers.
  std::vector<LstmState> step(Tape& t, Var x, const std::vector<LstmState>& prev,
                              double dropout_rate = 0.0) const {
    std::vector<LstmState> next;
    next.reserve(layers.size());
    Var in = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (l > 0) in = dropout(t, in, dropout_rate);
      next.push_back(lstm_step(t, layers[l], in, prev[l]));
      in = next.back().h;
    }
    return next;
  }
};

}  // namespace hncm::nn
