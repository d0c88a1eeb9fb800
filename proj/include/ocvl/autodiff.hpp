#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every op of one forward pass; `Tape::backward` replays the
// recorded closures in reverse. Values of op nodes count as activations: the
// tape tracks live and peak activation bytes (values, gradients and cached
// intermediates), which the decoder benchmark reports.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "ocvl/matrix.hpp"

namespace ocvl {

class Tape;

/// Handle to one node of a Tape. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool valid() const noexcept { return tape != nullptr; }
};

class Tape {
 public:
  /// Called with the tape and the id of the node being differentiated.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input or parameter node; receives a gradient iff `requires_grad`.
  Var leaf(Matrix value, bool requires_grad = true);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  /// Appends an op node. `backward` is dropped when no parent needs a gradient.
  /// `cache_bytes` accounts for intermediates the closure keeps alive.
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward,
             std::size_t cache_bytes = 0);
  Var record(Matrix value, const std::vector<Var>& parents, BackwardFn backward,
             std::size_t cache_bytes = 0);

  /// Seeds d(root)/d(root) = 1 for a 1x1 root and runs every closure in
  /// reverse. With `release`, op values and gradients are freed as soon as
  /// they are no longer needed, which is what the peak-memory figure models.
  void backward(Var root, bool release = false);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const;
  /// Gradient buffer for accumulation, allocated on first use.
  Matrix& grad_ref(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool has_grad(std::size_t id) const { return nodes_[id].has_grad; }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t live_activation_bytes() const noexcept { return live_bytes_; }
  std::size_t peak_activation_bytes() const noexcept { return peak_bytes_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    std::size_t cache_bytes = 0;
    bool requires_grad = false;
    bool is_op = false;
    bool has_grad = false;
  };

  void add_live(std::size_t bytes);

  std::vector<Node> nodes_;
  std::size_t live_bytes_ = 0;
  std::size_t peak_bytes_ = 0;
};

// ---- ops -------------------------------------------------------------------

Var matmul(Var a, Var b);     // a * b
Var matmul_nt(Var a, Var b);  // a * b^T
Var matmul_tn(Var a, Var b);  // a^T * b

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var add_n(const std::vector<Var>& terms);
/// a (N x C) + row (1 x C) added to every row.
Var add_row(Var a, Var row);
/// a (N x C) scaled row-wise by col (N x 1).
Var mul_col(Var a, Var col);
/// s * a + shift, elementwise.
Var affine(Var a, double s, double shift = 0.0);
Var scale(Var a, double s);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);

/// Softmax across columns of every row.
Var softmax_rows(Var logits);
/// Per-row layer normalization with learned scale and shift (both 1 x C).
Var layer_norm(Var x, Var gamma, Var beta, double eps);
/// (a + eps) / sum over rows of (a + eps), per column.
Var normalize_cols(Var a, double eps);
/// 1 x C mean over rows.
Var mean_rows(Var a);
/// Mean of the squared difference, 1 x 1. `target` receives no gradient.
Var mse(Var pred, const Matrix& target);
/// Sum of all elements, 1 x 1.
Var sum_all(Var a);

Var slice_rows(Var a, std::size_t start, std::size_t count);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
/// Copies the value; no gradient flows back.
Var stop_gradient(Var a);

}  // namespace ocvl
