#ifndef ROOMLAY_NN_GRAD_CHECK_HPP
#define ROOMLAY_NN_GRAD_CHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "roomlay/nn/graph.hpp"

namespace roomlay::nn {

struct GradCheckOptions {
  double step = 1e-5;         // central-difference half step
  double tolerance = 1e-4;    // max relative error per element
  double kink_radius = 1e-4;  // elements whose +-radius perturbation changes a kink region are skipped
  double denominator_floor = 1e-6;
};

struct GradCheckTensor {
  std::string name;
  std::size_t checked = 0;
  std::size_t excluded = 0;
  double max_rel_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckTensor> tensors;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;
  bool passed = true;
};

// Builds a fresh graph per evaluation through `loss`; compares the analytic
// gradient of every element of every trainable parameter against central
// differences. Relative error: |a - n| / max(|a|, |n|, denominator_floor).
GradCheckReport grad_check(const std::function<Var(Graph&)>& loss,
                           const std::vector<Parameter*>& params,
                           const GradCheckOptions& options = {});

}  // namespace roomlay::nn

#endif  // ROOMLAY_NN_GRAD_CHECK_HPP
