#ifndef ROOMLAY_NN_GRAPH_HPP
#define ROOMLAY_NN_GRAPH_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "roomlay/nn/tensor.hpp"

namespace roomlay::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Single-use reverse-mode tape. Ops append nodes during the forward pass;
// backward() walks them in reverse and accumulates into Parameter::grad.
class Graph {
 public:
  using Backward = std::function<void(Graph& graph, const Tensor& out_grad)>;

  Var constant(Tensor value);
  // The parameter must outlive the graph. Gradients flow into p.grad when
  // p.trainable is set.
  Var param(Parameter& p);

  const Tensor& value(Var v) const;
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Appends an op result. `backward` is dropped when no input needs a
  // gradient. Throws ErrorCode::kNonFinite when finite checks are on.
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, Backward backward);

  // Gradient accumulator of `v`, zero-initialized on first use.
  Tensor& grad(Var v);

  // Seeds d(loss)/d(loss) = 1; `loss` must hold a single element.
  void backward(Var loss);

  void set_check_finite(bool on) { check_finite_ = on; }

  // Kink bookkeeping for gradient checking: relu/clamp/abs push the region
  // code of every element they process while recording is on.
  void set_record_kinks(bool on) { record_kinks_ = on; }
  bool recording_kinks() const { return record_kinks_; }
  std::vector<std::uint8_t>& kink_pattern() { return kinks_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool needs_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };

  std::deque<Node> nodes_;
  bool check_finite_ = true;
  bool record_kinks_ = false;
  std::vector<std::uint8_t> kinks_;
};

}  // namespace roomlay::nn

#endif  // ROOMLAY_NN_GRAPH_HPP
