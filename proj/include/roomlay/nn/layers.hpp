#ifndef ROOMLAY_NN_LAYERS_HPP
#define ROOMLAY_NN_LAYERS_HPP

#include <string>
#include <vector>

#include "roomlay/nn/graph.hpp"
#include "roomlay/random.hpp"

namespace roomlay::nn {

// Uniform(+-sqrt(6 / (fan_in + fan_out))).
void xavier_uniform(Tensor& t, int fan_in, int fan_out, Rng& rng);

// y = x W + b with W: [in, out].
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, int in, int out, Rng& rng);

  Var forward(Graph& g, Var x);
  void collect(std::vector<Parameter*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Parameter weight;
  Parameter bias;
};

// 3x3 stride-2 convolution plus per-channel bias.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_channels, int out_channels, Rng& rng);

  Var forward(Graph& g, Var x);
  void collect(std::vector<Parameter*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Parameter weight;
  Parameter bias;
};

}  // namespace roomlay::nn

#endif  // ROOMLAY_NN_LAYERS_HPP
