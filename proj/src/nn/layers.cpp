#include "roomlay/nn/layers.hpp"

#include <cmath>

#include "roomlay/nn/ops.hpp"

namespace roomlay::nn {

void xavier_uniform(Tensor& t, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
}

Dense::Dense(const std::string& name, int in, int out, Rng& rng)
    : weight(name + ".weight", Tensor(Shape{in, out})), bias(name + ".bias", Tensor(Shape{out})) {
  xavier_uniform(weight.value, in, out, rng);
}

Var Dense::forward(Graph& g, Var x) {
  return add_bias(matmul(x, g.param(weight)), g.param(bias));
}

Conv2d::Conv2d(const std::string& name, int in_channels, int out_channels, Rng& rng)
    : weight(name + ".weight", Tensor(Shape{out_channels, in_channels, 3, 3})),
      bias(name + ".bias", Tensor(Shape{out_channels})) {
  xavier_uniform(weight.value, in_channels * 9, out_channels * 9, rng);
}

Var Conv2d::forward(Graph& g, Var x) {
  return add_bias(conv2d(x, g.param(weight)), g.param(bias));
}

}  // namespace roomlay::nn
