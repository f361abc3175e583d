#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "recnn/tensor.hpp"

namespace recnn {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run reverse-mode autodiff graph. Nodes are appended in
/// topological order; parents of node i always have index < i.
///
/// A tape is confined to one thread. It is neither copyable nor movable
/// because Var handles refer back to it.
class Tape {
 public:
  /// Receives the gradient of the node's output; adds into parent buffers
  /// obtained through grad_buffer().
  using BackwardFn = std::function<void(const Tensor& out_grad, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input (parameters, gradient-checked inputs).
  Var leaf(Tensor value);
  /// Non-differentiable input; gradients are never propagated into it.
  Var constant(Tensor value);
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  std::span<const std::size_t> parents(std::size_t id) const { return nodes_.at(id).parents; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(root)/d(root) = 1 and propagates to every reachable node.
  /// Gradients from earlier calls are discarded.
  void backward(const Var& root);

  bool has_gradients() const { return !grads_.empty(); }
  const Tensor& grad(const Var& v) const;
  /// Mutable gradient buffer, valid only while backward() is running.
  Tensor& grad_buffer(std::size_t id) { return grads_.at(id); }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  void check_owned(const Var& v) const;

  std::deque<Node> nodes_;  // stable addresses: values are referenced while recording
  std::vector<Tensor> grads_;
};

}  // namespace recnn
