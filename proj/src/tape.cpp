#include "flexembed/tape.hpp"

#include <algorithm>
#include <cmath>

#include "flexembed/error.hpp"
#include "flexembed/kernels.hpp"

namespace flexembed::numeric {

Var Tape::constant(Matrix value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Tape::parameter(const Matrix& value, bool requires_grad) {
  Node n;
  n.external = &value;
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

const Matrix& Tape::value_of(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.owned;
}

const Matrix& Tape::value(Var v) const { return value_of(v.id); }

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (!n.grad.empty()) return n.grad;
  const Matrix& val = value_of(v.id);
  return Matrix(val.rows(), val.cols());
}

Var Tape::record(Matrix value, bool requires_grad, Backward fn) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Matrix& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) {
    const Matrix& val = value_of(id);
    n.grad = Matrix(val.rows(), val.cols());
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + lv.shape_string());
  }
  for (auto& n : nodes_) n.grad = Matrix();
  grad_buffer(loss.id)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
}

namespace {

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible operands " + a.shape_string() + " and " +
                   b.shape_string());
}

bool any_grad(const Tape& t, std::initializer_list<Var> vs) {
  return std::any_of(vs.begin(), vs.end(), [&](Var v) { return t.requires_grad(v); });
}

void accumulate(Matrix& dst, const Matrix& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var matmul(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.cols() != B.rows()) shape_fail("matmul", A, B);
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Matrix out(m, n);
  kernels::gemm_nn(m, n, k, A.values(), B.values(), out.values());
  return t.record(std::move(out), any_grad(t, {a, b}), [a, b, m, n, k](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    if (tp.requires_grad(a)) {
      kernels::gemm_nt(m, k, n, g.values(), tp.value(b).values(), tp.grad_buffer(a.id).values());
    }
    if (tp.requires_grad(b)) {
      kernels::gemm_tn(k, n, m, tp.value(a).values(), g.values(), tp.grad_buffer(b.id).values());
    }
  });
}

Var affine(Tape& t, Var x, Var w, Var b) {
  const Matrix& X = t.value(x);
  const Matrix& W = t.value(w);
  const Matrix& Bv = t.value(b);
  if (X.cols() != W.rows()) shape_fail("affine", X, W);
  if (Bv.rows() != 1 || Bv.cols() != W.cols()) shape_fail("affine(bias)", W, Bv);
  const std::size_t m = X.rows(), k = X.cols(), n = W.cols();
  Matrix out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy(Bv.data(), Bv.data() + n, out.data() + i * n);
  }
  kernels::gemm_nn(m, n, k, X.values(), W.values(), out.values());
  return t.record(std::move(out), any_grad(t, {x, w, b}),
                  [x, w, b, m, n, k](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad_of(self);
                    if (tp.requires_grad(x)) {
                      kernels::gemm_nt(m, k, n, g.values(), tp.value(w).values(),
                                       tp.grad_buffer(x.id).values());
                    }
                    if (tp.requires_grad(w)) {
                      kernels::gemm_tn(k, n, m, tp.value(x).values(), g.values(),
                                       tp.grad_buffer(w.id).values());
                    }
                    if (tp.requires_grad(b)) {
                      Matrix& gb = tp.grad_buffer(b.id);
                      for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t j = 0; j < n; ++j) gb(0, j) += g(i, j);
                      }
                    }
                  });
}

Var add(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (!A.same_shape(B)) shape_fail("add", A, B);
  Matrix out = A;
  accumulate(out, B);
  return t.record(std::move(out), any_grad(t, {a, b}), [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    if (tp.requires_grad(a)) accumulate(tp.grad_buffer(a.id), g);
    if (tp.requires_grad(b)) accumulate(tp.grad_buffer(b.id), g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (!A.same_shape(B)) shape_fail("sub", A, B);
  Matrix out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= B.data()[i];
  return t.record(std::move(out), any_grad(t, {a, b}), [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    if (tp.requires_grad(a)) accumulate(tp.grad_buffer(a.id), g);
    if (tp.requires_grad(b)) {
      Matrix& gb = tp.grad_buffer(b.id);
      for (std::size_t i = 0; i < gb.size(); ++i) gb.data()[i] -= g.data()[i];
    }
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (!A.same_shape(B)) shape_fail("mul", A, B);
  Matrix out(A.rows(), A.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = A.data()[i] * B.data()[i];
  return t.record(std::move(out), any_grad(t, {a, b}), [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    if (tp.requires_grad(a)) {
      const Matrix& Bv = tp.value(b);
      Matrix& ga = tp.grad_buffer(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g.data()[i] * Bv.data()[i];
    }
    if (tp.requires_grad(b)) {
      const Matrix& Av = tp.value(a);
      Matrix& gb = tp.grad_buffer(b.id);
      for (std::size_t i = 0; i < gb.size(); ++i) gb.data()[i] += g.data()[i] * Av.data()[i];
    }
  });
}

Var scale(Tape& t, Var a, double c) {
  Matrix out = t.value(a);
  for (auto& v : out.values()) v *= c;
  return t.record(std::move(out), t.requires_grad(a), [a, c](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    Matrix& ga = tp.grad_buffer(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += c * g.data()[i];
  });
}

Var sigmoid(Tape& t, Var a) {
  Matrix out = t.value(a);
  for (auto& v : out.values()) v = sigmoid(v);
  return t.record(std::move(out), t.requires_grad(a), [a](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    const Matrix& y = tp.value_of(self);
    Matrix& ga = tp.grad_buffer(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double s = y.data()[i];
      ga.data()[i] += g.data()[i] * s * (1.0 - s);
    }
  });
}

Var tanh(Tape& t, Var a) {
  Matrix out = t.value(a);
  for (auto& v : out.values()) v = std::tanh(v);
  return t.record(std::move(out), t.requires_grad(a), [a](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    const Matrix& y = tp.value_of(self);
    Matrix& ga = tp.grad_buffer(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double th = y.data()[i];
      ga.data()[i] += g.data()[i] * (1.0 - th * th);
    }
  });
}

Var slice_cols(Tape& t, Var a, std::size_t begin, std::size_t end) {
  const Matrix& A = t.value(a);
  if (begin > end || end > A.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + A.shape_string());
  }
  const std::size_t w = end - begin;
  Matrix out(A.rows(), w);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    std::copy(A.data() + i * A.cols() + begin, A.data() + i * A.cols() + end, out.data() + i * w);
  }
  return t.record(std::move(out), t.requires_grad(a), [a, begin, w](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    Matrix& ga = tp.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t j = 0; j < w; ++j) ga(i, begin + j) += g(i, j);
    }
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t rows = t.value(parts[0]).rows();
  std::size_t cols = 0;
  bool needs_grad = false;
  for (auto p : parts) {
    const Matrix& P = t.value(p);
    if (P.rows() != rows) shape_fail("concat_cols", t.value(parts[0]), P);
    cols += P.cols();
    needs_grad = needs_grad || t.requires_grad(p);
  }
  Matrix out(rows, cols);
  std::size_t off = 0;
  for (auto p : parts) {
    const Matrix& P = t.value(p);
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(P.row(i).begin(), P.row(i).end(), out.data() + i * cols + off);
    }
    off += P.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return t.record(std::move(out), needs_grad, [ps](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    std::size_t off = 0;
    for (auto p : ps) {
      const std::size_t w = tp.value(p).cols();
      if (tp.requires_grad(p)) {
        Matrix& gp = tp.grad_buffer(p.id);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < w; ++j) gp(i, j) += g(i, off + j);
        }
      }
      off += w;
    }
  });
}

Var lookup_rows(Tape& t, Var table, std::span<const std::size_t> indices) {
  const Matrix& T = t.value(table);
  Matrix out(indices.size(), T.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= T.rows()) {
      throw ShapeError("lookup_rows: index " + std::to_string(indices[r]) + " outside table " +
                       T.shape_string());
    }
    std::copy(T.row(indices[r]).begin(), T.row(indices[r]).end(), out.row(r).begin());
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return t.record(std::move(out), t.requires_grad(table), [table, idx](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    Matrix& gt = tp.grad_buffer(table.id);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t j = 0; j < g.cols(); ++j) gt(idx[r], j) += g(r, j);
    }
  });
}

Var sum(Tape& t, Var a) {
  double s = 0.0;
  for (double v : t.value(a).values()) s += v;
  return t.record(Matrix(1, 1, s), t.requires_grad(a), [a](Tape& tp, std::size_t self) {
    const double g = tp.grad_of(self)(0, 0);
    for (auto& v : tp.grad_buffer(a.id).values()) v += g;
  });
}

Var softmax_cross_entropy(Tape& t, Var logits, std::span<const int> targets) {
  const Matrix& L = t.value(logits);
  if (targets.size() != L.rows()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for logits " + L.shape_string());
  }
  const std::size_t rows = L.rows(), cols = L.cols();
  Matrix probs(rows, cols);
  double loss = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const int y = targets[i];
    if (y < 0 || static_cast<std::size_t>(y) >= cols) {
      throw ShapeError("softmax_cross_entropy: target " + std::to_string(y) + " out of range");
    }
    double mx = L(i, 0);
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, L(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      probs(i, j) = std::exp(L(i, j) - mx);
      z += probs(i, j);
    }
    for (std::size_t j = 0; j < cols; ++j) probs(i, j) /= z;
    loss += std::log(z) - (L(i, static_cast<std::size_t>(y)) - mx);
  }
  const double inv = rows ? 1.0 / static_cast<double>(rows) : 0.0;
  std::vector<int> ys(targets.begin(), targets.end());
  return t.record(Matrix(1, 1, loss * inv), t.requires_grad(logits),
                  [logits, probs = std::move(probs), ys, inv](Tape& tp, std::size_t self) {
                    const double g = tp.grad_of(self)(0, 0) * inv;
                    Matrix& gl = tp.grad_buffer(logits.id);
                    for (std::size_t i = 0; i < probs.rows(); ++i) {
                      for (std::size_t j = 0; j < probs.cols(); ++j) {
                        const double onehot = static_cast<int>(j) == ys[i] ? 1.0 : 0.0;
                        gl(i, j) += g * (probs(i, j) - onehot);
                      }
                    }
                  });
}

}  // namespace flexembed::numeric
