#ifndef ROOMLAY_NN_ADAM_HPP
#define ROOMLAY_NN_ADAM_HPP

#include <cstdint>
#include <vector>

#include "roomlay/nn/graph.hpp"

namespace roomlay::nn {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options);

  // One bias-corrected update from the gradients currently in Parameter::grad.
  void step();
  void zero_grad();

  std::int64_t steps() const { return step_; }
  AdamOptions& options() { return options_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
  AdamOptions options_;
  std::int64_t step_ = 0;
};

}  // namespace roomlay::nn

#endif  // ROOMLAY_NN_ADAM_HPP
