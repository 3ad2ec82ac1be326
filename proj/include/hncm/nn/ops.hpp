#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "hncm/nn/tape.hpp"

namespace hncm::nn {

// Plain (tape-free) helpers.

/// Max-subtracted softmax.
inline Vector softmax(const Vector& v) {
  if (v.size() == 0) throw Error("softmax of an empty vector");
  Vector e = (v.array() - v.maxCoeff()).exp();
  return e / e.sum();
}

inline Vector log_softmax(const Vector& v) {
  if (v.size() == 0) throw Error("log_softmax of an empty vector");
  double m = v.maxCoeff();
  double lse = m + std::log((v.array() - m).exp().sum());
  return v.array() - lse;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {
inline void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()));
  }
}
}  // namespace detail

// Tape ops. Each returns the result node; gradients flow only into inputs that
// need them.

inline Var matmul(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.cols() != B.rows()) {
    throw Error("matmul: inner dimensions differ (" + std::to_string(A.cols()) + " vs " +
                std::to_string(B.rows()) + ")");
  }
  return t.push(A * B, {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(a)) t.grad(a).noalias() += g * t.value(b).transpose();
    if (t.needs_grad(b)) t.grad(b).noalias() += t.value(a).transpose() * g;
  });
}

/// Elementwise sum. A column vector `b` is broadcast across the columns of `a`.
inline Var add(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.rows() == B.rows() && B.cols() == 1 && A.cols() > 1) {
    Matrix out = A.colwise() + B.col(0);
    return t.push(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
      const Matrix& g = t.grad(self);
      if (t.needs_grad(a)) t.grad(a) += g;
      if (t.needs_grad(b)) t.grad(b) += g.rowwise().sum();
    });
  }
  detail::check_same_shape(A, B, "add");
  return t.push(A + B, {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(a)) t.grad(a) += g;
    if (t.needs_grad(b)) t.grad(b) += g;
  });
}

inline Var sub(Tape& t, Var a, Var b) {
  detail::check_same_shape(t.value(a), t.value(b), "sub");
  return t.push(t.value(a) - t.value(b), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(a)) t.grad(a) += g;
    if (t.needs_grad(b)) t.grad(b) -= g;
  });
}

inline Var mul(Tape& t, Var a, Var b) {
  detail::check_same_shape(t.value(a), t.value(b), "mul");
  Matrix out = t.value(a).cwiseProduct(t.value(b));
  return t.push(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(a)) t.grad(a) += g.cwiseProduct(t.value(b));
    if (t.needs_grad(b)) t.grad(b) += g.cwiseProduct(t.value(a));
  });
}

inline Var scale(Tape& t, Var a, double s) {
  return t.push(t.value(a) * s, {a}, [a, s](Tape& t, std::uint32_t self) {
    t.grad(a) += t.grad(self) * s;
  });
}

inline Var tanh(Tape& t, Var a) {
  Matrix out = t.value(a).array().tanh();
  return t.push(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(Var{self});
    t.grad(a).array() += t.grad(self).array() * (1.0 - y.array().square());
  });
}

inline Var sigmoid(Tape& t, Var a) {
  Matrix out = (1.0 + (-t.value(a).array()).exp()).inverse();
  return t.push(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(Var{self});
    t.grad(a).array() += t.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

inline Var relu(Tape& t, Var a) {
  Matrix out = t.value(a).cwiseMax(0.0);
  return t.push(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& x = t.value(a);
    t.grad(a).array() += (x.array() > 0.0).select(t.grad(self).array(), 0.0);
  });
}

/// Stacks column-compatible inputs vertically.
inline Var concat_rows(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw Error("concat_rows: no inputs");
  Eigen::Index cols = t.value(parts[0]).cols();
  Eigen::Index rows = 0;
  for (Var p : parts) {
    if (t.value(p).cols() != cols) throw Error("concat_rows: column mismatch");
    rows += t.value(p).rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    out.middleRows(r, t.value(p).rows()) = t.value(p);
    r += t.value(p).rows();
  }
  return t.push_n(std::move(out), parts, [parts](Tape& t, std::uint32_t self) {
    Eigen::Index r = 0;
    for (Var p : parts) {
      Eigen::Index n = t.value(p).rows();
      if (t.needs_grad(p)) t.grad(p) += t.grad(self).middleRows(r, n);
      r += n;
    }
  });
}

/// Places inputs side by side.
inline Var concat_cols(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw Error("concat_cols: no inputs");
  Eigen::Index rows = t.value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (t.value(p).rows() != rows) throw Error("concat_cols: row mismatch");
    cols += t.value(p).cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, t.value(p).cols()) = t.value(p);
    c += t.value(p).cols();
  }
  return t.push_n(std::move(out), parts, [parts](Tape& t, std::uint32_t self) {
    Eigen::Index c = 0;
    for (Var p : parts) {
      Eigen::Index n = t.value(p).cols();
      if (t.needs_grad(p)) t.grad(p) += t.grad(self).middleCols(c, n);
      c += n;
    }
  });
}

inline Var slice_rows(Tape& t, Var a, Eigen::Index start, Eigen::Index n) {
  const Matrix& A = t.value(a);
  if (start < 0 || n < 0 || start + n > A.rows()) throw Error("slice_rows: out of range");
  return t.push(A.middleRows(start, n), {a}, [a, start, n](Tape& t, std::uint32_t self) {
    t.grad(a).middleRows(start, n) += t.grad(self);
  });
}

inline Var transpose(Tape& t, Var a) {
  return t.push(t.value(a).transpose(), {a}, [a](Tape& t, std::uint32_t self) {
    t.grad(a) += t.grad(self).transpose();
  });
}

/// Column-major reshape.
inline Var reshape(Tape& t, Var a, Eigen::Index rows, Eigen::Index cols) {
  const Matrix& A = t.value(a);
  if (rows * cols != A.size()) throw Error("reshape: size mismatch");
  Matrix out = Eigen::Map<const Matrix>(A.data(), rows, cols);
  return t.push(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    Matrix& ga = t.grad(a);
    const Matrix& g = t.grad(self);
    Eigen::Map<Matrix>(ga.data(), g.rows(), g.cols()) += g;
  });
}

/// Mean over columns (n x m -> n x 1).
inline Var mean_cols(Tape& t, Var a) {
  const Matrix& A = t.value(a);
  if (A.cols() == 0) throw Error("mean_cols: no columns");
  Matrix out = A.rowwise().mean();
  return t.push(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    Matrix& ga = t.grad(a);
    ga.colwise() += t.grad(self).col(0) / static_cast<double>(ga.cols());
  });
}

inline Var sum(Tape& t, Var a) {
  Matrix out(1, 1);
  out(0, 0) = t.value(a).sum();
  return t.push(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    t.grad(a).array() += t.grad(self)(0, 0);
  });
}

/// Sum of squares, 1x1.
inline Var squared_norm(Tape& t, Var a) {
  Matrix out(1, 1);
  out(0, 0) = t.value(a).squaredNorm();
  return t.push(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    t.grad(a) += 2.0 * t.grad(self)(0, 0) * t.value(a);
  });
}

/// Softmax over a column vector.
inline Var softmax(Tape& t, Var a) {
  const Matrix& A = t.value(a);
  if (A.cols() != 1) throw Error("softmax: expected a column vector");
  Matrix out = softmax(Vector(A.col(0)));
  return t.push(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& p = t.value(Var{self});
    const Matrix& g = t.grad(self);
    double dot = p.col(0).dot(g.col(0));
    t.grad(a).array() += p.array() * (g.array() - dot);
  });
}

/// -log softmax(logits)[target] as a 1x1 node.
inline Var nll_from_logits(Tape& t, Var logits, std::int32_t target) {
  const Matrix& L = t.value(logits);
  if (L.cols() != 1) throw Error("nll_from_logits: expected a column vector");
  if (target < 0 || target >= L.rows()) throw Error("nll_from_logits: target out of range");
  Vector lp = log_softmax(Vector(L.col(0)));
  Matrix out(1, 1);
  out(0, 0) = -lp(target);
  return t.push(std::move(out), {logits}, [logits, target, lp](Tape& t, std::uint32_t self) {
    double g = t.grad(self)(0, 0);
    Matrix& gl = t.grad(logits);
    gl.col(0).array() += g * lp.array().exp();
    gl(target, 0) -= g;
  });
}

/// Column `id` of an embedding table stored as d x V.
inline Var embed(Tape& t, Param& table, std::int32_t id) {
  if (id < 0 || id >= table.value.cols()) {
    throw Error("embedding id " + std::to_string(id) + " out of range for " + table.name);
  }
  Param* tp = &table;
  return t.push_source(table.value.col(id), [tp, id](Tape& t, std::uint32_t self) {
    tp->grad.col(id) += t.grad(self).col(0);
  });
}

/// d x n matrix of embeddings; PAD positions become zero columns and receive
/// no gradient.
inline Var embed_seq(Tape& t, Param& table, const std::vector<std::int32_t>& ids,
                     std::int32_t pad_id = 0) {
  Matrix out = Matrix::Zero(table.value.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    std::int32_t id = ids[j];
    if (id < 0 || id >= table.value.cols()) {
      throw Error("embedding id " + std::to_string(id) + " out of range for " + table.name);
    }
    if (id != pad_id) out.col(static_cast<Eigen::Index>(j)) = table.value.col(id);
  }
  Param* tp = &table;
  return t.push_source(std::move(out), [tp, ids, pad_id](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (ids[j] != pad_id) tp->grad.col(ids[j]) += g.col(static_cast<Eigen::Index>(j));
    }
  });
}

/// Inverted dropout: identity outside training or at rate 0.
inline Var dropout(Tape& t, Var a, double rate) {
  if (!t.training() || rate <= 0.0) return a;
  if (rate >= 1.0) throw Error("dropout rate must be < 1");
  const Matrix& A = t.value(a);
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(A.rows(), A.cols());
  Rng& rng = t.rng();
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  }
  Matrix out = A.cwiseProduct(mask);
  return t.push(std::move(out), {a}, [a, mask](Tape& t, std::uint32_t self) {
    t.grad(a) += t.grad(self).cwiseProduct(mask);
  });
}

/// Geometry of a stack of 2-D feature maps stored as (height*width) x channels,
/// row-major positions within each column.
struct MapShape {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
};

/// Valid 2-D convolution summing over input channels, plus per-kernel bias.
/// `kernels` is (channels*kh*kw) x K, `bias` is 1 x K.
inline Var conv2d(Tape& t, Var input, MapShape in, Var kernels, Var bias, Eigen::Index kh,
                  Eigen::Index kw) {
  const Matrix& X = t.value(input);
  const Matrix& W = t.value(kernels);
  Eigen::Index channels = X.cols();
  if (X.rows() != in.height * in.width) throw Error("conv2d: input does not match shape");
  if (kh > in.height || kw > in.width) throw Error("conv2d: kernel larger than input");
  if (W.rows() != channels * kh * kw) throw Error("conv2d: kernel rows mismatch");
  if (t.value(bias).rows() != 1 || t.value(bias).cols() != W.cols()) {
    throw Error("conv2d: bias shape mismatch");
  }
  Eigen::Index oh = in.height - kh + 1;
  Eigen::Index ow = in.width - kw + 1;
  Matrix cols(oh * ow, channels * kh * kw);
  for (Eigen::Index ch = 0; ch < channels; ++ch)
    for (Eigen::Index s = 0; s < kh; ++s)
      for (Eigen::Index u = 0; u < kw; ++u) {
        Eigen::Index k = ch * kh * kw + s * kw + u;
        for (Eigen::Index i = 0; i < oh; ++i)
          for (Eigen::Index j = 0; j < ow; ++j) cols(i * ow + j, k) = X((i + s) * in.width + j + u, ch);
      }
  Matrix out = cols * W;
  out.rowwise() += t.value(bias).row(0);
  return t.push(std::move(out), {input, kernels, bias},
                [=, cols = std::move(cols)](Tape& t, std::uint32_t self) {
                  const Matrix& g = t.grad(self);
                  if (t.needs_grad(kernels)) t.grad(kernels).noalias() += cols.transpose() * g;
                  if (t.needs_grad(bias)) t.grad(bias) += g.colwise().sum();
                  if (t.needs_grad(input)) {
                    Matrix dcols = g * t.value(kernels).transpose();
                    Matrix& gx = t.grad(input);
                    for (Eigen::Index ch = 0; ch < channels; ++ch)
                      for (Eigen::Index s = 0; s < kh; ++s)
                        for (Eigen::Index u = 0; u < kw; ++u) {
                          Eigen::Index k = ch * kh * kw + s * kw + u;
                          for (Eigen::Index i = 0; i < oh; ++i)
                            for (Eigen::Index j = 0; j < ow; ++j)
                              gx((i + s) * in.width + j + u, ch) += dcols(i * ow + j, k);
                        }
                  }
                });
}

/// Non-overlapping max pooling; trailing rows/cols that do not fill a window
/// are dropped. Ties resolve to the first position in row-major order.
inline Var max_pool2d(Tape& t, Var input, MapShape in, Eigen::Index ph, Eigen::Index pw) {
  const Matrix& X = t.value(input);
  if (X.rows() != in.height * in.width) throw Error("max_pool2d: input does not match shape");
  Eigen::Index oh = in.height / ph;
  Eigen::Index ow = in.width / pw;
  if (oh == 0 || ow == 0) throw Error("max_pool2d: window larger than input");
  Matrix out(oh * ow, X.cols());
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(out.size()));
  for (Eigen::Index ch = 0; ch < X.cols(); ++ch)
    for (Eigen::Index i = 0; i < oh; ++i)
      for (Eigen::Index j = 0; j < ow; ++j) {
        Eigen::Index best = (i * ph) * in.width + j * pw;
        for (Eigen::Index s = 0; s < ph; ++s)
          for (Eigen::Index u = 0; u < pw; ++u) {
            Eigen::Index pos = (i * ph + s) * in.width + j * pw + u;
            if (X(pos, ch) > X(best, ch)) best = pos;
          }
        out(i * ow + j, ch) = X(best, ch);
        arg[static_cast<std::size_t>(ch * oh * ow + i * ow + j)] = best;
      }
  return t.push(std::move(out), {input}, [input, arg, oh, ow](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad(input);
    for (Eigen::Index ch = 0; ch < g.cols(); ++ch)
      for (Eigen::Index o = 0; o < oh * ow; ++o)
        gx(arg[static_cast<std::size_t>(ch * oh * ow + o)], ch) += g(o, ch);
  });
}

/// max(0, z) for a 1x1 node. Zero gradient at z = 0.
inline Var hinge(Tape& t, Var z_node) {
  double z = t.scalar(z_node);
  Matrix out(1, 1);
  out(0, 0) = std::max(0.0, z);
  Var in = z_node;
  return t.push(std::move(out), {in}, [in, z](Tape& t, std::uint32_t self) {
    if (z > 0.0) t.grad(in) += t.grad(self);
  });
}

inline Var add_scalar(Tape& t, Var a, double c) {
  Matrix out = t.value(a).array() + c;
  return t.push(std::move(out), {a}, [a](Tape& t, std::uint32_t self) { t.grad(a) += t.grad(self); });
}

/// Sum of 1x1 nodes.
inline Var add_all(Tape& t, const std::vector<Var>& terms) {
  if (terms.empty()) return t.constant(Matrix::Zero(1, 1));
  Matrix out = Matrix::Zero(1, 1);
  for (Var v : terms) out(0, 0) += t.scalar(v);
  return t.push_n(std::move(out), terms, [terms](Tape& t, std::uint32_t self) {
    double g = t.grad(self)(0, 0);
    for (Var v : terms)
      if (t.needs_grad(v)) t.grad(v).array() += g;
  });
}

/// Affine map W x + b.
inline Var linear(Tape& t, Param& w, Param& b, Var x) {
  return add(t, matmul(t, t.param(w), x), t.param(b));
}

}  // namespace hncm::nn
