#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every operation in creation order; since an operation can
// only consume nodes created before it, reverse creation order is a valid
// topological order and backward() needs no graph search. Nodes that do not
// depend on a parameter carry no backward closure.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flexembed/matrix.hpp"

namespace flexembed::numeric {

struct Var {
  std::size_t id = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A value that needs no gradient (inputs, targets).
  Var constant(Matrix value);
  /// A leaf that refers to external storage; `value` must outlive the tape.
  /// With requires_grad = false the leaf is a read-only view (inference).
  Var parameter(const Matrix& value, bool requires_grad = true);

  const Matrix& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Gradient of the last backward() target w.r.t. v; zeros if v was not
  /// reached.
  Matrix grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates. Throws ShapeError unless the
  /// loss is 1×1.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // Used by the op implementations.
  Var record(Matrix value, bool requires_grad, Backward fn);
  Matrix& grad_buffer(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }
  const Matrix& grad_of(std::size_t id) const { return nodes_[id].grad; }
  const Matrix& value_of(std::size_t id) const;

 private:
  struct Node {
    Matrix owned;
    const Matrix* external = nullptr;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

/// a·b
Var matmul(Tape& t, Var a, Var b);
/// x·w + b, with b a 1×cols row broadcast over rows.
Var affine(Tape& t, Var x, Var w, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
/// Elementwise product.
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var sigmoid(Tape& t, Var a);
Var tanh(Tape& t, Var a);
/// Columns [begin, end).
Var slice_cols(Tape& t, Var a, std::size_t begin, std::size_t end);
Var concat_cols(Tape& t, std::span<const Var> parts);
/// Row r of the result is row indices[r] of table.
Var lookup_rows(Tape& t, Var table, std::span<const std::size_t> indices);
/// Sum of all entries as a 1×1 value.
Var sum(Tape& t, Var a);
/// Mean over rows of −log softmax(logits)[row, target[row]], computed with
/// max subtraction.
Var softmax_cross_entropy(Tape& t, Var logits, std::span<const int> targets);

double sigmoid(double x);

}  // namespace flexembed::numeric
