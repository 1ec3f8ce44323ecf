#include "roomlay/nn/graph.hpp"

#include "roomlay/error.hpp"

namespace roomlay::nn {

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(Parameter& p) {
  Node node;
  node.external = &p.value;
  node.param = &p;
  node.needs_grad = p.trainable;
  if (p.trainable && p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Graph::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.external ? *n.external : n.owned;
}

Var Graph::record(const char* op, Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  if (check_finite_ && !value.all_finite()) {
    fail(ErrorCode::kNonFinite, std::string("non-finite value produced by ") + op + " (shape " +
                                    shape_string(value.shape()) + ")");
  }
  Node node;
  node.owned = std::move(value);
  for (Var in : inputs) {
    if (in.graph != this) fail(ErrorCode::kInternal, std::string(op) + ": input from another graph");
    node.needs_grad = node.needs_grad || nodes_[in.id].needs_grad;
  }
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Graph::grad(Var v) {
  Node& n = nodes_[v.id];
  if (n.param) return n.param->grad;
  if (!n.has_grad) {
    n.grad = Tensor(value(v).shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Graph::backward(Var loss) {
  if (value(loss).size() != 1) {
    fail(ErrorCode::kShapeMismatch, "backward() needs a scalar, got " + shape_string(value(loss).shape()));
  }
  if (!nodes_[loss.id].needs_grad) return;
  grad(loss)[0] += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
    // Intermediate gradients are no longer needed once propagated.
    n.grad = Tensor();
    n.has_grad = false;
  }
}

}  // namespace roomlay::nn
