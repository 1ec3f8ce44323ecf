#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "roomlay/error.hpp"
#include "roomlay/implicit.hpp"
#include "roomlay/nn/grad_check.hpp"
#include "roomlay/nn/ops.hpp"
#include "roomlay/roomgen.hpp"

using namespace roomlay;
using nn::Graph;
using nn::Shape;
using nn::Tensor;
using nn::Var;

namespace {

Tensor coords_of(const std::vector<Vec2>& pts) {
  Tensor c(Shape{3, static_cast<int>(pts.size())}, 1.0);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    c[k] = pts[k].x;
    c[pts.size() + k] = pts[k].y;
  }
  return c;
}

Tensor square_planes() {
  return Tensor(Shape{1, 4, 3}, {1, 0, -0.5, -1, 0, -0.5, 0, 1, -0.5, 0, -1, -0.5});
}

struct Rendered {
  std::vector<double> o1, o2, o3;
};

Rendered run_render(const Tensor& planes, const Tensor& wg, const Tensor& wc, const Tensor& coords) {
  Graph g;
  RenderResult r = render(g.constant(planes), g.constant(wg), g.constant(wc), g.constant(coords));
  return {r.o1.value().storage(), r.o2.value().storage(), r.o3.value().storage()};
}

ImplicitConfig small_config() {
  ImplicitConfig c;
  c.resolution = 16;
  c.code_dim = 8;
  c.num_planes = 8;
  c.num_primitives = 2;
  c.encoder_channels = {4, 8, 8, 8};
  c.generator_widths = {16, 16};
  return c;
}

}  // namespace

TEST_CASE("render: hand-built square") {
  const Tensor wg(Shape{1, 4}, 1.0), wc(Shape{1, 1}, 1.0);
  const Rendered r = run_render(square_planes(), wg, wc, coords_of({{0, 0}, {1, 0}, {2, 0}}));
  // o1 is [1,4,3]: plane-major.
  for (int p = 0; p < 4; ++p) CHECK(r.o1[p * 3 + 0] == 0.0);
  CHECK(r.o1[0 * 3 + 1] == 0.5);
  CHECK(r.o1[0 * 3 + 2] == 1.5);
  CHECK(r.o2 == std::vector<double>{1.0, 0.5, 0.0});
  CHECK(r.o3 == std::vector<double>{1.0, 0.5, 0.0});
}

TEST_CASE("render: zero planes give clamp(sum W_c)") {
  const Tensor planes(Shape{1, 5, 3});
  const Tensor wg(Shape{2, 5}, 0.3);
  for (double s : {0.2, 0.45, 0.8}) {
    const Tensor wc(Shape{1, 2}, s);
    const Rendered r = run_render(planes, wg, wc, coords_of({{0.1, 0.2}, {-0.7, 0.9}}));
    for (double v : r.o3) CHECK(v == doctest::Approx(std::min(1.0, 2 * s)));
  }
}

TEST_CASE("render: union of two primitives matches the point-in-polygon oracle") {
  // Primitive 0: [-0.8,-0.2] x [-0.8,0.8]; primitive 1: [0.1,0.7] x [-0.3,0.6].
  auto box = [](double x0, double x1, double y0, double y1) {
    return std::vector<double>{1, 0, -x1, -1, 0, x0, 0, 1, -y1, 0, -1, y0};
  };
  std::vector<double> planes = box(-0.8, -0.2, -0.8, 0.8);
  const std::vector<double> second = box(0.1, 0.7, -0.3, 0.6);
  planes.insert(planes.end(), second.begin(), second.end());
  // Steep planes: scale so the soft band is narrow.
  for (double& v : planes) v *= 50.0;
  Tensor wg(Shape{2, 8});
  for (int p = 0; p < 4; ++p) {
    wg[p] = 1.0;
    wg[8 + 4 + p] = 1.0;
  }
  const Tensor wc(Shape{1, 2}, 1.0);
  const std::vector<Vec2> r0 = {{-0.8, -0.8}, {-0.2, -0.8}, {-0.2, 0.8}, {-0.8, 0.8}};
  const std::vector<Vec2> r1 = {{0.1, -0.3}, {0.7, -0.3}, {0.7, 0.6}, {0.1, 0.6}};
  Rng rng(3);
  std::vector<Vec2> pts;
  while (pts.size() < 1000) {
    const Vec2 p{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    if (oracle::dist_to_boundary(p, r0) < 0.02 || oracle::dist_to_boundary(p, r1) < 0.02) continue;
    pts.push_back(p);
  }
  const Rendered r = run_render(Tensor(Shape{1, 8, 3}, planes), wg, wc, coords_of(pts));
  int mismatches = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const bool inside = oracle::winding_number(pts[k], r0) != 0 || oracle::winding_number(pts[k], r1) != 0;
    mismatches += (r.o3[k] >= kOccupancyThreshold) != inside;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("render: range, monotonicity, closed form and affine equivariance") {
  Rng rng(12);
  const int np = 6, ns = 3, nc = 40;
  Tensor planes(Shape{1, np, 3}), wg(Shape{ns, np}), wc(Shape{1, ns}), coords(Shape{3, nc}, 1.0);
  for (double& v : planes.values()) v = rng.uniform(-2, 2);
  for (double& v : wg.values()) v = rng.uniform(0, 1);
  for (double& v : wc.values()) v = rng.uniform(0, 1.2);
  for (int k = 0; k < 2 * nc; ++k) coords[k] = rng.uniform(-1, 1);
  const Rendered r = run_render(planes, wg, wc, coords);
  for (double v : r.o1) CHECK(v >= 0.0);
  for (double v : r.o2) CHECK((v >= 0.0 && v <= 1.0));
  for (double v : r.o3) CHECK((v >= 0.0 && v <= 1.0));

  // Shifting every plane offset up raises o1 and cannot raise o2.
  Tensor raised = planes;
  for (int p = 0; p < np; ++p) raised[p * 3 + 2] += 0.3;
  const Rendered up = run_render(raised, wg, wc, coords);
  for (std::size_t k = 0; k < r.o2.size(); ++k) CHECK(up.o2[k] <= r.o2[k]);

  // Single primitive with unit combining weight: closed form.
  const Tensor wg1(Shape{1, np}, 0.4), wc1(Shape{1, 1}, 1.0);
  const Rendered single = run_render(planes, wg1, wc1, coords);
  for (int k = 0; k < nc; ++k) {
    double s = 0.0;
    for (int p = 0; p < np; ++p) {
      s += 0.4 * std::max(0.0, planes[p * 3] * coords[k] + planes[p * 3 + 1] * coords[nc + k] + planes[p * 3 + 2]);
    }
    CHECK(single.o3[k] == doctest::Approx(std::clamp(1.0 - s, 0.0, 1.0)).epsilon(1e-12));
  }

  // A = [[2,0,0.5],[0,0.5,-1],[0,0,1]]: planes P A^{-1}, coords A c. The map
  // uses powers of two so every product is exact.
  Tensor coords_a(Shape{3, nc}, 1.0), planes_a(Shape{1, np, 3});
  for (int k = 0; k < nc; ++k) {
    coords_a[k] = 2 * coords[k] + 0.5;
    coords_a[nc + k] = 0.5 * coords[nc + k] - 1;
  }
  for (int p = 0; p < np; ++p) {
    const double a = planes[p * 3], b = planes[p * 3 + 1], c = planes[p * 3 + 2];
    planes_a[p * 3] = a / 2;
    planes_a[p * 3 + 1] = b * 2;
    planes_a[p * 3 + 2] = c - a / 2 * 0.5 + b * 2 * 1;
  }
  const Rendered eq = run_render(planes_a, wg, wc, coords_a);
  for (std::size_t k = 0; k < r.o3.size(); ++k) CHECK(eq.o3[k] == doctest::Approx(r.o3[k]).epsilon(1e-12));
}

TEST_CASE("loss unit cases") {
  Graph g;
  Var truth = g.constant(Tensor(Shape{2, 1, 3}, {0, 1, 0.5, 1, 1, 0}));
  CHECK(loss_occupancy(truth, truth).value().item() == 0.0);
  Tensor shifted(Shape{1, 1, 100}, 0.1);
  CHECK(loss_occupancy(g.constant(shifted), g.constant(Tensor(Shape{1, 1, 100}))).value().item() ==
        doctest::Approx(0.01));
  CHECK(loss_grouping(g.constant(Tensor(Shape{2, 2}, {0, 1, 0.5, 0.25}))).value().item() == 0.0);
  CHECK(loss_grouping(g.constant(Tensor(Shape{1, 2}, {1.5, 0.5}))).value().item() == doctest::Approx(0.5));
  CHECK(loss_grouping(g.constant(Tensor(Shape{1, 2}, {-0.3, 0.5}))).value().item() == doctest::Approx(0.3));
  CHECK(loss_combining(g.constant(Tensor(Shape{1, 2}, 1.0))).value().item() == 0.0);
  CHECK(loss_combining(g.constant(Tensor(Shape{1, 2}, {0.4, 0.7}))).value().item() == doctest::Approx(0.9));

  nn::Parameter wc("wc", Tensor(Shape{1, 3}, {0.4, 1.7, 1.0}));
  Graph h;
  wc.zero_grad();
  h.backward(loss_combining(h.param(wc)));
  CHECK(wc.grad.storage() == std::vector<double>{-1.0, 1.0, 0.0});

  Rng rng(4);
  Tensor a(Shape{3, 1, 7}), b(Shape{3, 1, 7});
  for (double& v : a.values()) v = rng.uniform();
  for (double& v : b.values()) v = rng.uniform();
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  CHECK(loss_occupancy(h.constant(a), h.constant(b)).value().item() == doctest::Approx(s / 21.0).epsilon(1e-14));

  const Objective obj = total_objective(h.constant(a), h.constant(b), h.constant(Tensor(Shape{1, 2}, {1.5, 0.5})),
                                        h.constant(Tensor(Shape{1, 2}, {0.4, 0.7})));
  CHECK(obj.total.value().item() == doctest::Approx(s / 21.0 + 0.5 + 0.9).epsilon(1e-14));
}

TEST_CASE("total objective gradient equals the sum of part gradients") {
  Rng rng(6);
  nn::Parameter wg("wg", Tensor(Shape{2, 4})), wc("wc", Tensor(Shape{1, 2}));
  for (double& v : wg.value.values()) v = rng.uniform(-0.5, 1.5);
  for (double& v : wc.value.values()) v = rng.uniform(0, 2);
  Tensor planes(Shape{1, 4, 3}), coords(Shape{3, 20}, 1.0), truth(Shape{1, 1, 20});
  for (double& v : planes.values()) v = rng.uniform(-1, 1);
  for (int k = 0; k < 40; ++k) coords[k] = rng.uniform(-1, 1);
  for (double& v : truth.values()) v = rng.below(2);
  auto grads = [&](int which) {
    wg.zero_grad();
    wc.zero_grad();
    Graph g;
    RenderResult r = render(g.constant(planes), g.param(wg), g.param(wc), g.constant(coords));
    Objective o = total_objective(r.o3, g.constant(truth), g.param(wg), g.param(wc));
    g.backward(which == 0 ? o.occupancy : which == 1 ? o.grouping : which == 2 ? o.combining : o.total);
    std::vector<double> out = wg.grad.storage();
    out.insert(out.end(), wc.grad.storage().begin(), wc.grad.storage().end());
    return out;
  };
  const auto lo = grads(0), lg = grads(1), lc = grads(2), total = grads(3);
  for (std::size_t k = 0; k < total.size(); ++k) CHECK(total[k] == doctest::Approx(lo[k] + lg[k] + lc[k]).epsilon(1e-12));
  auto loss = [&](Graph& g) {
    RenderResult r = render(g.constant(planes), g.param(wg), g.param(wc), g.constant(coords));
    return total_objective(r.o3, g.constant(truth), g.param(wg), g.param(wc)).total;
  };
  CHECK(nn::grad_check(loss, {&wg, &wc}).passed);
}

TEST_CASE("manhattan planes are orthogonal or parallel") {
  Rng rng(10);
  Tensor raw(Shape{2, 1 + 3 * 6});
  for (double& v : raw.values()) v = rng.uniform(-2, 2);
  Graph g;
  const Tensor& p = manhattan_planes(g.constant(raw), 6).value();
  REQUIRE(p.shape() == Shape{2, 6, 3});
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        const double* u = p.data() + (b * 6 + i) * 3;
        const double* v = p.data() + (b * 6 + j) * 3;
        const double nu = std::hypot(u[0], u[1]), nv = std::hypot(v[0], v[1]);
        const double c = (u[0] * v[0] + u[1] * v[1]) / (nu * nv);
        CHECK(std::min({std::fabs(c), std::fabs(c - 1), std::fabs(c + 1)}) <= 1e-9);
      }
    }
  }
  nn::Parameter rp("raw", raw);
  Tensor weights(Shape{2, 6, 3});
  for (double& v : weights.values()) v = rng.uniform(-1, 1);
  auto loss = [&](Graph& h) {
    Var planes = manhattan_planes(h.param(rp), 6);
    return nn::sum(nn::mul(planes, h.constant(weights)));
  };
  const nn::GradCheckReport r = nn::grad_check(loss, {&rp});
  CHECK(r.passed);
}

TEST_CASE("model: codes in (0,1), deterministic, zero generator gives zero planes") {
  const ImplicitConfig cfg = small_config();
  ImplicitModel model(cfg, 3);
  const OccupancyGrid grid = rasterize(generate_anchor(1, 6), 16);
  const ShapeCode a = model.encode(grid), b = model.encode(grid);
  CHECK(a.values == b.values);
  REQUIRE(a.values.size() == 8);
  for (double v : a.values) CHECK((v > 0.0 && v < 1.0));
  const HyperplaneSet p1 = model.generate_planes(a), p2 = model.generate_planes(a);
  CHECK(p1.coefficients == p2.coefficients);
  CHECK(p1.count == 8);

  for (nn::Parameter* p : model.parameters()) {
    if (p->name.rfind("hg.", 0) == 0) p->value.fill(0.0);
  }
  for (double v : model.generate_planes(a).coefficients) CHECK(v == 0.0);

  ImplicitModel other(cfg, 3);
  CHECK_THROWS_AS(other.encode(rasterize(generate_anchor(1, 6), 32)), Error);
  CHECK(other.grouping().value.shape() == Shape{2, 8});
  for (double v : other.grouping().value.values()) CHECK((v >= 0.0 && v <= 0.02));
  for (double v : other.combining().value.values()) CHECK(v == 0.5);
}

TEST_CASE("model: batched encode matches single encode; FC head and manhattan build") {
  ImplicitConfig cfg = small_config();
  cfg.head = EncoderHead::kFC;
  cfg.manhattan = true;
  ImplicitModel model(cfg, 5);
  std::vector<OccupancyGrid> grids;
  for (std::uint64_t s = 0; s < 3; ++s) grids.push_back(rasterize(generate_anchor(s, 8), 16));
  const auto batch = model.encode(grids);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const ShapeCode one = model.encode(grids[i]);
    for (std::size_t k = 0; k < one.values.size(); ++k) CHECK(one.values[k] == doctest::Approx(batch[i].values[k]).epsilon(1e-14));
  }
  const OccupancyGrid recon = model.reconstruct(model.generate_planes(batch[0]));
  CHECK(recon.resolution() == 16);
}

TEST_CASE("regressor: codes in (0,1), input type checked, perfect L2 loss is zero") {
  RegressorConfig rc;
  rc.image_width = 32;
  rc.image_height = 16;
  rc.code_dim = 8;
  rc.channels = {4, 8};
  CodeRegressor reg(rc, 1);
  const BoundaryMap m = render_boundaries(generate_anchor(2, 6), 32, 16, 1.5);
  const ShapeCode c = reg.regress(m);
  REQUIRE(c.values.size() == 8);
  for (double v : c.values) CHECK((v > 0.0 && v < 1.0));
  CHECK_THROWS_AS(reg.regress(rasterize(generate_anchor(2, 6), 64)), Error);
  Graph g;
  Var t = g.constant(Tensor(Shape{1, 8}, c.values));
  CHECK(regression_loss(t, t, RegressionLoss::kL2).value().item() == 0.0);
  CHECK(regression_loss(t, t, RegressionLoss::kL1).value().item() == 0.0);
  CHECK(parse_regression_loss("L1") == RegressionLoss::kL1);
  CHECK_THROWS_AS(parse_regression_loss("L3"), Error);
}
