#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mstgnn/tensor.hpp"

namespace mstgnn {

/// A named trainable tensor with its accumulated gradient.
///
/// An optional 0/1 mask freezes structurally-zero entries: masked entries of
/// the value are forced to exactly 0 by apply_mask() and their gradient is
/// dropped.
class Parameter {
 public:
  Parameter(std::string name, Tensor value);

  const std::string& name() const noexcept { return name_; }
  const Tensor& value() const noexcept { return value_; }
  Tensor& value() noexcept { return value_; }
  const Tensor& grad() const noexcept { return grad_; }
  Tensor& grad() noexcept { return grad_; }

  bool trainable() const noexcept { return trainable_; }
  void set_trainable(bool on) noexcept { trainable_ = on; }

  const std::optional<Tensor>& mask() const noexcept { return mask_; }
  void set_mask(Tensor mask);

  void zero_grad();
  void apply_mask();

 private:
  std::string name_;
  Tensor value_;
  Tensor grad_;
  std::optional<Tensor> mask_;
  bool trainable_ = true;
};

using ParamId = std::size_t;

/// Owns every parameter of a model. Ids stay valid across copies.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor value);

  Parameter& operator[](ParamId id) { return params_.at(id); }
  const Parameter& operator[](ParamId id) const { return params_.at(id); }
  std::size_t size() const noexcept { return params_.size(); }

  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grads();
  std::size_t scalar_count() const;

 private:
  std::deque<Parameter> params_;
};

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
};

/// Records primitive applications for reverse-mode differentiation.
///
/// Single-writer. Every recorded value is checked for finiteness; a NaN or
/// Inf raises NumericError naming the primitive that produced it.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf whose gradient is kept on the tape (read back with grad()).
  Var variable(Tensor value);
  /// Leaf bound to a parameter; backward() accumulates into Parameter::grad
  /// when the parameter is trainable. The parameter must outlive the tape.
  Var parameter(Parameter& p);

  Var record(const char* op, Tensor value, bool requires_grad, Backward fn);

  /// When disabled, parameter leaves do not track gradients (inference).
  void set_grad_enabled(bool on) noexcept { grad_enabled_ = on; }

  const Tensor& value(std::size_t id) const { return node(id).value_ref(); }
  bool requires_grad(std::size_t id) const { return node(id).requires_grad; }
  /// Gradient buffer of a node, zero-filled on first access.
  Tensor& grad_buffer(std::size_t id);
  const Tensor& grad(Var v) const;

  void backward(Var root);
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* ref = nullptr;
    Tensor grad;
    Tensor* grad_ref = nullptr;
    bool requires_grad = false;
    Backward backward;
    const Tensor& value_ref() const { return ref ? *ref : value; }
  };

  const Node& node(std::size_t id) const { return nodes_.at(id); }
  Node& node(std::size_t id) { return nodes_.at(id); }

  std::deque<Node> nodes_;
  bool grad_enabled_ = true;
};

// Differentiable primitives. Binary operations require equal shapes unless a
// broadcast rule is stated.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// a * x + b, elementwise.
Var affine(Var x, double a, double b);
Var relu(Var x);  ///< relu'(0) := 0
Var sigmoid(Var x);
Var tanh(Var x);
Var abs(Var x);  ///< abs'(0) := 0
Var square(Var x);
/// log(max(x, eps)); gradient is 0 where x <= eps.
Var log_clamped(Var x, double eps);
Var softmax_rows(Var x);
Var sum(Var x);
Var reshape(Var x, Shape shape);

/// [T x M x D] -> [M x T x D].
Var swap_leading(Var x);
/// [T x M x d] -> [M x (d T)] with out[m, t*d + c] = x[t, m, c].
Var merge_dims_13(Var x);
/// Inverse of merge_dims_13 for a known frame count.
Var unmerge_dims_13(Var x, std::size_t frames);

/// Per-frame left product: out[t] = a * x[t] for a [P x M], x [T x M x D].
Var frame_left_mul(Var a, Var x);
/// Mixing along the leading axis: out = a * x viewed as [T x (M D)].
Var time_left_mul(Var a, Var x);
/// Right product over the last axis: x [... x K] * w, where w [... x D'] is
/// read as a [K x D'] matrix (so a [L x D x D'] filter stack needs K = L D).
Var matmul_last(Var x, Var w);
/// Concatenation along the last axis; leading extents must agree.
Var concat_last(const std::vector<Var>& parts);
/// Adds a row vector b [n] or [1 x n] to every row of x [... x n].
Var add_row(Var x, Var b);
/// out[i, j] = s[i] * x[i, j] for x [m x n], s [m x 1].
Var scale_rows(Var x, Var s);
/// x[t] of a tensor with rank >= 2.
Var slice_leading(Var x, std::size_t index);
/// Stacks equally shaped values along a new leading axis.
Var stack_leading(const std::vector<Var>& parts);
/// Mean over the leading axis: [T x ...] -> [...].
Var mean_leading(Var x);
/// Per-row outer product: x [m x c] -> [m x (c c)], out[i, a*c + b] = x[i,a] x[i,b].
Var row_outer(Var x);

}  // namespace mstgnn
