#include "roomlay/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace roomlay::nn {

namespace {

struct Evaluation {
  double loss = 0.0;
  std::vector<std::uint8_t> kinks;
};

Evaluation evaluate(const std::function<Var(Graph&)>& loss) {
  Graph g;
  g.set_record_kinks(true);
  const Var out = loss(g);
  return {out.value().item(), std::move(g.kink_pattern())};
}

}  // namespace

GradCheckReport grad_check(const std::function<Var(Graph&)>& loss,
                           const std::vector<Parameter*>& params,
                           const GradCheckOptions& options) {
  for (Parameter* p : params) {
    if (p->trainable) p->grad = Tensor(p->value.shape());
  }
  std::vector<std::uint8_t> base_kinks;
  {
    Graph g;
    g.set_record_kinks(true);
    const Var out = loss(g);
    base_kinks = g.kink_pattern();
    g.backward(out);
  }

  GradCheckReport report;
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    GradCheckTensor entry;
    entry.name = p->name;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double& x = p->value[i];
      const double original = x;
      bool near_kink = false;
      for (double r : {options.kink_radius, -options.kink_radius}) {
        x = original + r;
        near_kink = near_kink || evaluate(loss).kinks != base_kinks;
      }
      x = original + options.step;
      const Evaluation plus = evaluate(loss);
      x = original - options.step;
      const Evaluation minus = evaluate(loss);
      x = original;
      near_kink = near_kink || plus.kinks != base_kinks || minus.kinks != base_kinks;
      if (near_kink) {
        ++entry.excluded;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * options.step);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      entry.max_rel_error = std::max(entry.max_rel_error, rel);
      ++entry.checked;
    }
    entry.passed = entry.max_rel_error <= options.tolerance;
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.checked += entry.checked;
    report.excluded += entry.excluded;
    report.passed = report.passed && entry.passed;
    report.tensors.push_back(std::move(entry));
  }
  return report;
}

}  // namespace roomlay::nn
