#include <doctest.h>

#include <cmath>
#include <functional>

#include "roomlay/error.hpp"
#include "roomlay/nn/adam.hpp"
#include "roomlay/nn/grad_check.hpp"
#include "roomlay/nn/layers.hpp"
#include "roomlay/nn/ops.hpp"
#include "roomlay/random.hpp"

using namespace roomlay;
using namespace roomlay::nn;

namespace {

Parameter random_param(const std::string& name, Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return Parameter(name, t);
}

// Pushes an op's output through a random cotangent so the check covers the
// whole vector-Jacobian product.
double vjp_error(const std::function<Var(Graph&)>& op, std::vector<Parameter*> params, Rng& rng) {
  Tensor probe;
  {
    Graph g;
    probe = Tensor(op(g).shape());
  }
  for (double& v : probe.values()) v = rng.uniform(-1, 1);
  auto loss = [&](Graph& g) { return sum(mul(op(g), g.constant(probe))); };
  GradCheckOptions o;
  o.tolerance = 1e-6;
  const GradCheckReport r = grad_check(loss, params, o);
  CHECK(r.passed);
  CHECK(r.checked > 0);
  return r.max_rel_error;
}

}  // namespace

TEST_CASE("forward values of simple primitives") {
  Graph g;
  Var x = g.constant(Tensor(Shape{3}, {-1.0, 0.0, 2.0}));
  CHECK(relu(x).value().storage() == std::vector<double>{0, 0, 2});
  Var c = g.constant(Tensor(Shape{2}, {1.7, 0.3}));
  CHECK(clamp01(c).value().storage() == std::vector<double>{1.0, 0.3});
  CHECK(one_minus(c).value()[1] == doctest::Approx(0.7));
  CHECK(sum(x).value().item() == 1.0);
  CHECK(mean(x).value().item() == doctest::Approx(1.0 / 3));
  Var big = g.constant(Tensor(Shape{4}, {-800.0, -40.0, 40.0, 800.0}));
  for (double v : sigmoid(big).value().values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  Var a = g.constant(Tensor(Shape{2}, {1.0, 2.0}));
  Var b = g.constant(Tensor(Shape{2}, {1.5, 1.0}));
  CHECK(mse(a, b).value().item() == doctest::Approx((0.25 + 1.0) / 2));
  CHECK(l1(a, b).value().item() == doctest::Approx(0.75));
}

TEST_CASE("clamp01 subgradient convention") {
  Parameter p("p", Tensor(Shape{3}, {1.7, 0.3, -0.2}));
  Graph g;
  Var y = sum(clamp01(g.param(p)));
  p.zero_grad();
  g.backward(y);
  CHECK(p.grad.storage() == std::vector<double>{0.0, 1.0, 0.0});
  Parameter q("q", Tensor(Shape{3}, {0.0, 1.0, 0.5}));
  Graph h;
  q.zero_grad();
  h.backward(sum(relu(h.param(q))));
  CHECK(q.grad[0] == 0.0);
  CHECK(q.grad[1] == 1.0);
}

TEST_CASE("shape errors name both shapes") {
  Graph g;
  Var a = g.constant(Tensor(Shape{2, 3}));
  Var b = g.constant(Tensor(Shape{2, 3}));
  try {
    matmul(a, b);
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
    CHECK(std::string(e.what()).find("[2,3]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, g.constant(Tensor(Shape{3, 2}))), Error);
  CHECK_THROWS_AS(conv2d(a, b), Error);
}

TEST_CASE("non-finite values are detected") {
  Graph g;
  Var x = g.constant(Tensor(Shape{1}, 1e308));
  try {
    scale(x, 1e10);
    FAIL("expected non-finite error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFinite);
    CHECK(std::string(e.what()).find("scale") != std::string::npos);
  }
}

TEST_CASE("conv2d matches a direct loop") {
  Rng rng(2);
  Parameter x = random_param("x", {2, 3, 7, 6}, rng);
  Parameter w = random_param("w", {4, 3, 3, 3}, rng);
  Graph g;
  const Tensor& y = conv2d(g.param(x), g.param(w)).value();
  REQUIRE(y.shape() == Shape{2, 4, 4, 3});
  for (int n = 0; n < 2; ++n) {
    for (int o = 0; o < 4; ++o) {
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 3; ++j) {
          double s = 0.0;
          for (int c = 0; c < 3; ++c) {
            for (int di = 0; di < 3; ++di) {
              for (int dj = 0; dj < 3; ++dj) {
                const int r = 2 * i - 1 + di, q = 2 * j - 1 + dj;
                if (r < 0 || r >= 7 || q < 0 || q >= 6) continue;
                s += x.value[((n * 3 + c) * 7 + r) * 6 + q] * w.value[((o * 3 + c) * 3 + di) * 3 + dj];
              }
            }
          }
          CHECK(y[((n * 4 + o) * 4 + i) * 3 + j] == doctest::Approx(s).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("vector-Jacobian products match finite differences") {
  Rng rng(9);
  SUBCASE("matmul variants") {
    Parameter a = random_param("a", {3, 4}, rng), b = random_param("b", {4, 5}, rng);
    Parameter ba = random_param("ba", {2, 3, 4}, rng), bb = random_param("bb", {2, 4, 5}, rng);
    CHECK(vjp_error([&](Graph& g) { return matmul(g.param(a), g.param(b)); }, {&a, &b}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return matmul(g.param(ba), g.param(bb)); }, {&ba, &bb}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return matmul(g.param(a), g.param(bb)); }, {&a, &bb}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return matmul(g.param(ba), g.param(b)); }, {&ba, &b}, rng) <= 1e-6);
  }
  SUBCASE("elementwise") {
    Parameter x = random_param("x", {3, 5}, rng), y = random_param("y", {3, 5}, rng);
    Parameter bias = random_param("bias", {5}, rng);
    CHECK(vjp_error([&](Graph& g) { return add_bias(g.param(x), g.param(bias)); }, {&x, &bias}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return add(g.param(x), g.param(y)); }, {&x, &y}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return sub(g.param(x), g.param(y)); }, {&x, &y}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return mul(g.param(x), g.param(y)); }, {&x, &y}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return scale(g.param(x), -2.5); }, {&x}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return add_scalar(g.param(x), 0.7); }, {&x}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return one_minus(g.param(x)); }, {&x}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return relu(g.param(x)); }, {&x}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return sigmoid(g.param(x)); }, {&x}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return abs(g.param(x)); }, {&x}, rng) <= 1e-6);
    Parameter wide = random_param("wide", {4, 6}, rng, -0.5, 1.5);
    CHECK(vjp_error([&](Graph& g) { return clamp01(g.param(wide)); }, {&wide}, rng) <= 1e-6);
  }
  SUBCASE("convolution and pooling") {
    Parameter x = random_param("x", {2, 3, 6, 5}, rng), w = random_param("w", {4, 3, 3, 3}, rng);
    CHECK(vjp_error([&](Graph& g) { return conv2d(g.param(x), g.param(w)); }, {&x, &w}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return global_avg_pool(g.param(x)); }, {&x}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return flatten(g.param(x)); }, {&x}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return reshape(g.param(x), {6, 30}); }, {&x}, rng) <= 1e-6);
  }
  SUBCASE("reductions and losses") {
    Parameter x = random_param("x", {4, 3}, rng), y = random_param("y", {4, 3}, rng);
    CHECK(vjp_error([&](Graph& g) { return sum(g.param(x)); }, {&x}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return mean(g.param(x)); }, {&x}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return mse(g.param(x), g.param(y)); }, {&x, &y}, rng) <= 1e-6);
    CHECK(vjp_error([&](Graph& g) { return l1(g.param(x), g.param(y)); }, {&x, &y}, rng) <= 1e-6);
  }
}

TEST_CASE("dense and conv layers: composite graph") {
  Rng rng(4);
  Conv2d conv("c", 2, 3, rng);
  Dense dense("d", 3, 2, rng);
  for (double& v : conv.bias.value.values()) v = rng.uniform(-0.1, 0.1);
  const Tensor input = random_param("in", {2, 2, 8, 8}, rng).value;
  auto loss = [&](Graph& g) {
    Var h = relu(conv.forward(g, g.constant(input)));
    return mean(sigmoid(dense.forward(g, global_avg_pool(h))));
  };
  std::vector<Parameter*> params;
  conv.collect(params);
  dense.collect(params);
  GradCheckOptions o;
  o.tolerance = 1e-6;
  const GradCheckReport r = grad_check(loss, params, o);
  CHECK(r.passed);
  CHECK(r.max_rel_error <= 1e-6);
}

TEST_CASE("identity layer has zero gradient error") {
  Parameter p("p", Tensor(Shape{5}, {0.1, -0.2, 0.3, 0.5, 2.0}));
  const GradCheckReport r = grad_check([&](Graph& g) { return sum(g.param(p)); }, {&p});
  CHECK(r.passed);
  CHECK(r.max_rel_error == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("parameters pinned at a kink are excluded") {
  Parameter p("p", Tensor(Shape{3}, {1.0, 0.5, 0.0}));
  const GradCheckReport r = grad_check([&](Graph& g) { return sum(clamp01(g.param(p))); }, {&p});
  CHECK(r.passed);
  CHECK(r.excluded == 2);
  CHECK(r.checked == 1);
}

TEST_CASE("xavier init range") {
  Rng rng(1);
  Dense d("d", 30, 20, rng);
  const double bound = std::sqrt(6.0 / 50.0);
  for (double v : d.weight.value.values()) CHECK(std::fabs(v) <= bound);
  for (double v : d.bias.value.values()) CHECK(v == 0.0);
}

TEST_CASE("forward pass is bit-deterministic") {
  auto run = [] {
    Rng rng(3);
    Conv2d conv("c", 1, 4, rng);
    Tensor in(Shape{1, 1, 16, 16});
    Rng data(8);
    for (double& v : in.values()) v = data.uniform();
    Graph g;
    return relu(conv.forward(g, g.constant(in))).value().storage();
  };
  CHECK(run() == run());
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Parameter p("p", Tensor(Shape{3}, {1.0, -2.0, 3.0}));
    Adam adam({&p}, {});
    p.zero_grad();
    for (int i = 0; i < 10; ++i) adam.step();
    CHECK(p.value.storage() == std::vector<double>{1.0, -2.0, 3.0});
  }
  SUBCASE("constant positive gradient strictly decreases") {
    Parameter p("p", Tensor(Shape{1}, 0.0));
    Adam adam({&p}, {});
    double last = p.value[0];
    for (int i = 0; i < 20; ++i) {
      p.grad[0] = 1.0;
      adam.step();
      CHECK(p.value[0] < last);
      last = p.value[0];
    }
  }
  SUBCASE("convex quadratic converges to the closed-form minimizer") {
    // f(x) = 1/2 x^T A x - b^T x, minimizer A^{-1} b.
    const double a11 = 3.0, a12 = 1.0, a22 = 2.0, b1 = 1.0, b2 = -2.0;
    const double det = a11 * a22 - a12 * a12;
    const double x1 = (a22 * b1 - a12 * b2) / det, x2 = (a11 * b2 - a12 * b1) / det;
    Parameter p("p", Tensor(Shape{2}, {5.0, 5.0}));
    Adam adam({&p}, {0.05});
    int steps = 0;
    for (; steps < 5000; ++steps) {
      const double u = p.value[0], v = p.value[1];
      p.grad[0] = a11 * u + a12 * v - b1;
      p.grad[1] = a12 * u + a22 * v - b2;
      adam.step();
      if (std::hypot(p.value[0] - x1, p.value[1] - x2) < 1e-4 && steps > 100) break;
    }
    CHECK(steps < 5000);
    CHECK(std::fabs(p.value[0] - x1) < 1e-4);
    CHECK(std::fabs(p.value[1] - x2) < 1e-4);
  }
  SUBCASE("matches the textbook update") {
    Parameter p("p", Tensor(Shape{1}, 1.0));
    Adam adam({&p}, {0.1});
    double m = 0, v = 0, x = 1.0;
    for (int t = 1; t <= 5; ++t) {
      const double grad = 2 * x;
      p.grad[0] = grad;
      adam.step();
      m = 0.9 * m + 0.1 * grad;
      v = 0.999 * v + 0.001 * grad * grad;
      x -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
      CHECK(p.value[0] == doctest::Approx(x).epsilon(1e-12));
    }
  }
}
