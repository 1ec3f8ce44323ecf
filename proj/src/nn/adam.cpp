#include "roomlay/nn/adam.hpp"

#include <cmath>

#include "roomlay/error.hpp"

namespace roomlay::nn {

Adam::Adam(std::vector<Parameter*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (Parameter* p : params_) {
    first_.emplace_back(p->value.shape());
    second_.emplace_back(p->value.shape());
    if (p->grad.shape() != p->value.shape()) p->grad = Tensor(p->value.shape());
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void Adam::step() {
  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (!p.trainable) continue;
    if (p.grad.size() != p.value.size()) {
      fail(ErrorCode::kShapeMismatch, "adam: gradient buffer of '" + p.name + "' has wrong size");
    }
    double* x = p.value.data();
    const double* g = p.grad.data();
    double* m = first_[i].data();
    double* v = second_[i].data();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      x[j] -= options_.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + options_.epsilon);
    }
  }
}

}  // namespace roomlay::nn
