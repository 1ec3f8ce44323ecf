#ifndef ROOMLAY_NN_OPS_HPP
#define ROOMLAY_NN_OPS_HPP

#include "roomlay/nn/graph.hpp"

// Differentiable primitives. Every op checks shapes and throws
// ErrorCode::kShapeMismatch naming both operands on mismatch. Kinks (relu at
// 0, clamp01 at 0 and 1, abs at 0) take subgradient 0.
namespace roomlay::nn {

// [m,k]x[k,n], [B,m,k]x[B,k,n], [m,k]x[B,k,n] (shared left), [B,m,k]x[k,n]
// (shared right). Gradients of a shared operand are summed over the batch.
Var matmul(Var a, Var b);

// Adds bias[c] along axis 1 of x (x rank >= 2).
Var add_bias(Var x, Var bias);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double s);
Var add_scalar(Var x, double s);

Var relu(Var x);
Var sigmoid(Var x);  // clipped so outputs stay strictly inside (0,1)
Var clamp01(Var x);  // min(max(x,0),1)
Var one_minus(Var x);
Var abs(Var x);

// 3x3 convolution, stride 2, zero padding 1, no bias.
// x: [N,C,H,W], w: [O,C,3,3] -> [N,O,ceil(H/2),ceil(W/2)].
Var conv2d(Var x, Var w);

Var global_avg_pool(Var x);  // [N,C,H,W] -> [N,C]
Var flatten(Var x);          // [N,...] -> [N,prod(...)]
Var reshape(Var x, Shape shape);

Var sum(Var x);
Var mean(Var x);
Var mse(Var a, Var b);  // mean squared difference
Var l1(Var a, Var b);   // mean absolute difference

}  // namespace roomlay::nn

#endif  // ROOMLAY_NN_OPS_HPP
