#include "recnn/tape.hpp"

#include <cassert>

#include "recnn/error.hpp"

namespace recnn {

const Tensor& Var::value() const {
  if (!tape_) throw ValidationError("access through an unbound Var");
  return tape_->value(id_);
}

const Shape& Var::shape() const { return value().shape(); }

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
  bool needs_grad = false;
  for (auto p : parents) {
    assert(p < nodes_.size());
    needs_grad = needs_grad || nodes_[p].requires_grad;
  }
#ifndef NDEBUG
  // NaN-free inputs must yield NaN-free outputs.
  bool inputs_finite = true;
  for (auto p : parents) inputs_finite = inputs_finite && nodes_[p].value.all_finite();
  assert(!inputs_finite || value.all_finite());
#endif
  nodes_.push_back(Node{std::move(value), std::move(parents),
                        needs_grad ? std::move(backward) : BackwardFn{}, needs_grad});
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(const Var& v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw ValidationError("variable was not recorded on this tape");
  }
}

void Tape::backward(const Var& root) {
  check_owned(root);
  if (nodes_[root.id()].value.size() != 1) {
    throw DimensionError("backward root must be a scalar, got " +
                         to_string(nodes_[root.id()].value.shape()));
  }
  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const auto& n : nodes_) grads_.emplace_back(n.value.shape(), 0.0);

  std::vector<char> reachable(nodes_.size(), 0);
  reachable[root.id()] = 1;
  grads_[root.id()][0] = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    if (!reachable[i]) continue;
    for (auto p : nodes_[i].parents) reachable[p] = 1;
    if (nodes_[i].backward) nodes_[i].backward(grads_[i], *this);
  }
}

const Tensor& Tape::grad(const Var& v) const {
  check_owned(v);
  if (grads_.empty()) throw ValidationError("backward() has not been run on this tape");
  return grads_[v.id()];
}

}  // namespace recnn
