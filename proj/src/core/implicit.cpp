#include "roomlay/implicit.hpp"

#include <cmath>

#include "roomlay/error.hpp"
#include "roomlay/nn/ops.hpp"

namespace roomlay {

using nn::Graph;
using nn::Parameter;
using nn::Shape;
using nn::Tensor;
using nn::Var;

EncoderHead parse_encoder_head(const std::string& name) {
  if (name == "GAP" || name == "gap") return EncoderHead::kGAP;
  if (name == "FC" || name == "fc") return EncoderHead::kFC;
  fail(ErrorCode::kConfig, "unknown encoder head '" + name + "' (expected GAP or FC)");
}

const char* encoder_head_name(EncoderHead head) { return head == EncoderHead::kGAP ? "GAP" : "FC"; }

void validate(const ImplicitConfig& c) {
  if (c.resolution < kMinGridResolution) fail(ErrorCode::kConfig, "resolution must be >= 8");
  if (c.code_dim < 1 || c.num_planes < 1 || c.num_primitives < 1) {
    fail(ErrorCode::kConfig, "code_dim, num_planes and num_primitives must be positive");
  }
  if (c.encoder_channels.empty() || c.generator_widths.empty()) {
    fail(ErrorCode::kConfig, "encoder_channels and generator_widths must be non-empty");
  }
  for (int v : c.encoder_channels) if (v < 1) fail(ErrorCode::kConfig, "encoder channel count must be positive");
  for (int v : c.generator_widths) if (v < 1) fail(ErrorCode::kConfig, "generator width must be positive");
}

namespace {

int halvings(int size, int times) {
  for (int i = 0; i < times; ++i) size = (size + 1) / 2;
  return size;
}

}  // namespace

ConvEncoder::ConvEncoder(const std::string& prefix, int in_channels, int height, int width,
                         const std::vector<int>& channels, EncoderHead head, int code_dim, Rng& rng)
    : in_channels_(in_channels), height_(height), width_(width), head_(head) {
  int prev = in_channels;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    convs_.emplace_back(prefix + ".conv" + std::to_string(i), prev, channels[i], rng);
    prev = channels[i];
  }
  const int levels = static_cast<int>(channels.size());
  const int features = head == EncoderHead::kGAP
                           ? prev
                           : prev * halvings(height, levels) * halvings(width, levels);
  dense_ = nn::Dense(prefix + ".head", features, code_dim, rng);
}

Var ConvEncoder::forward(Graph& g, Var images) {
  const Shape& s = images.shape();
  if (s.size() != 4 || s[1] != in_channels_ || s[2] != height_ || s[3] != width_) {
    fail(ErrorCode::kShapeMismatch, "encoder expects [B," + std::to_string(in_channels_) + "," +
                                        std::to_string(height_) + "," + std::to_string(width_) +
                                        "], got " + nn::shape_string(s));
  }
  Var x = images;
  for (nn::Conv2d& conv : convs_) x = nn::relu(conv.forward(g, x));
  x = head_ == EncoderHead::kGAP ? nn::global_avg_pool(x) : nn::flatten(x);
  return nn::sigmoid(dense_.forward(g, x));
}

void ConvEncoder::collect(std::vector<Parameter*>& out) {
  for (nn::Conv2d& conv : convs_) conv.collect(out);
  dense_.collect(out);
}

PlaneGenerator::PlaneGenerator(const std::string& prefix, int code_dim, const std::vector<int>& widths,
                               int num_planes, bool manhattan, Rng& rng)
    : num_planes_(num_planes), manhattan_(manhattan) {
  int prev = code_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    layers_.emplace_back(prefix + ".fc" + std::to_string(i), prev, widths[i], rng);
    prev = widths[i];
  }
  const int out = manhattan ? 1 + 3 * num_planes : 3 * num_planes;
  layers_.emplace_back(prefix + ".fc" + std::to_string(widths.size()), prev, out, rng);
}

Var PlaneGenerator::forward(Graph& g, Var codes) {
  Var x = codes;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].forward(g, x);
    if (i + 1 < layers_.size()) x = nn::relu(x);
  }
  const int batch = codes.shape()[0];
  if (manhattan_) return manhattan_planes(x, num_planes_);
  return nn::reshape(x, Shape{batch, num_planes_, 3});
}

void PlaneGenerator::collect(std::vector<Parameter*>& out) {
  for (nn::Dense& d : layers_) d.collect(out);
}

Var manhattan_planes(Var raw, int num_planes) {
  const Tensor& R = raw.value();
  if (R.rank() != 2 || R.dim(1) != 1 + 3 * num_planes) {
    fail(ErrorCode::kShapeMismatch, "manhattan_planes: expected [B," + std::to_string(1 + 3 * num_planes) +
                                        "], got " + nn::shape_string(R.shape()));
  }
  const int batch = R.dim(0);
  const int stride = R.dim(1);
  Tensor out(Shape{batch, num_planes, 3});
  for (int b = 0; b < batch; ++b) {
    const double* r = R.data() + static_cast<std::size_t>(b) * stride;
    const double ct = std::cos(r[0]), st = std::sin(r[0]);
    for (int p = 0; p < num_planes; ++p) {
      const double logit = r[1 + 3 * p], s = r[2 + 3 * p], c = r[3 + 3 * p];
      double* o = out.data() + (static_cast<std::size_t>(b) * num_planes + p) * 3;
      if (logit >= 0.0) {
        o[0] = s * ct;
        o[1] = s * st;
      } else {
        o[0] = -s * st;
        o[1] = s * ct;
      }
      o[2] = c;
    }
  }
  return raw.graph->record("manhattan_planes", std::move(out), {raw},
                           [raw, batch, stride, num_planes](Graph& g, const Tensor& d) {
                             const Tensor& R = g.value(raw);
                             Tensor& dr = g.grad(raw);
                             for (int b = 0; b < batch; ++b) {
                               const double* r = R.data() + static_cast<std::size_t>(b) * stride;
                               double* gr = dr.data() + static_cast<std::size_t>(b) * stride;
                               const double ct = std::cos(r[0]), st = std::sin(r[0]);
                               for (int p = 0; p < num_planes; ++p) {
                                 const double* gd = d.data() + (static_cast<std::size_t>(b) * num_planes + p) * 3;
                                 const double s = r[2 + 3 * p];
                                 if (r[1 + 3 * p] >= 0.0) {
                                   gr[0] += s * (-st * gd[0] + ct * gd[1]);
                                   gr[2 + 3 * p] += ct * gd[0] + st * gd[1];
                                 } else {
                                   gr[0] += s * (-ct * gd[0] - st * gd[1]);
                                   gr[2 + 3 * p] += -st * gd[0] + ct * gd[1];
                                 }
                                 gr[3 + 3 * p] += gd[2];
                               }
                             }
                           });
}

RenderResult render(Var planes, Var grouping, Var combining, Var coords) {
  const Shape& ps = planes.shape();
  const Shape& gs = grouping.shape();
  const Shape& cs = combining.shape();
  const Shape& xs = coords.shape();
  if (ps.size() != 3 || ps[2] != 3) {
    fail(ErrorCode::kShapeMismatch, "render: planes must be [B,N_p,3], got " + nn::shape_string(ps));
  }
  if (gs.size() != 2 || gs[1] != ps[1]) {
    fail(ErrorCode::kShapeMismatch, "render: grouping " + nn::shape_string(gs) + " vs planes " +
                                        nn::shape_string(ps));
  }
  if (cs.size() != 2 || cs[0] != 1 || cs[1] != gs[0]) {
    fail(ErrorCode::kShapeMismatch, "render: combining " + nn::shape_string(cs) + " vs grouping " +
                                        nn::shape_string(gs));
  }
  const bool shared = xs.size() == 2 && xs[0] == 3;
  const bool per_sample = xs.size() == 3 && xs[0] == ps[0] && xs[1] == 3;
  if (!shared && !per_sample) {
    fail(ErrorCode::kShapeMismatch, "render: coords " + nn::shape_string(xs) + " vs planes " +
                                        nn::shape_string(ps));
  }
  RenderResult r;
  r.o1 = nn::relu(nn::matmul(planes, coords));
  r.o2 = nn::clamp01(nn::one_minus(nn::matmul(grouping, r.o1)));
  r.o3 = nn::clamp01(nn::matmul(combining, r.o2));
  return r;
}

Var loss_occupancy(Var o3, Var truth) { return nn::mse(o3, truth); }

Var loss_grouping(Var grouping) {
  Var above = nn::relu(nn::add_scalar(grouping, -1.0));
  Var below = nn::relu(nn::scale(grouping, -1.0));
  return nn::add(nn::sum(above), nn::sum(below));
}

Var loss_combining(Var combining) { return nn::sum(nn::abs(nn::add_scalar(combining, -1.0))); }

Objective total_objective(Var o3, Var truth, Var grouping, Var combining) {
  Objective obj;
  obj.occupancy = loss_occupancy(o3, truth);
  obj.grouping = loss_grouping(grouping);
  obj.combining = loss_combining(combining);
  obj.total = nn::add(nn::add(obj.occupancy, obj.grouping), obj.combining);
  return obj;
}

ImplicitModel::ImplicitModel(const ImplicitConfig& config, std::uint64_t seed) : config_(config) {
  validate(config_);
  Rng enc_rng(derive_seed(seed, 1));
  encoder_ = ConvEncoder("se", 1, config_.resolution, config_.resolution, config_.encoder_channels,
                         config_.head, config_.code_dim, enc_rng);
  Rng gen_rng(derive_seed(seed, 2));
  generator_ = PlaneGenerator("hg", config_.code_dim, config_.generator_widths, config_.num_planes,
                              config_.manhattan, gen_rng);
  Rng w_rng(derive_seed(seed, 3));
  grouping_ = Parameter("render.grouping", Tensor(Shape{config_.num_primitives, config_.num_planes}));
  for (double& v : grouping_.value.values()) v = w_rng.uniform(0.0, 0.02);
  combining_ = Parameter("render.combining",
                         Tensor(Shape{1, config_.num_primitives}, 1.0 / config_.num_primitives));
}

std::vector<Parameter*> ImplicitModel::parameters() {
  std::vector<Parameter*> out;
  encoder_.collect(out);
  generator_.collect(out);
  out.push_back(&grouping_);
  out.push_back(&combining_);
  return out;
}

Var ImplicitModel::encode(Graph& g, Var grids) { return encoder_.forward(g, grids); }

Var ImplicitModel::generate(Graph& g, Var codes) {
  if (codes.shape().size() != 2 || codes.shape()[1] != config_.code_dim) {
    fail(ErrorCode::kShapeMismatch, "plane generator expects [B," + std::to_string(config_.code_dim) +
                                        "] codes, got " + nn::shape_string(codes.shape()));
  }
  return generator_.forward(g, codes);
}

RenderResult ImplicitModel::render(Graph& g, Var planes, Var coords) {
  return roomlay::render(planes, g.param(grouping_), g.param(combining_), coords);
}

Tensor grid_tensor(std::span<const OccupancyGrid> grids) {
  if (grids.empty()) fail(ErrorCode::kInvalidArgument, "empty grid batch");
  const int res = grids[0].resolution();
  Tensor t(Shape{static_cast<int>(grids.size()), 1, res, res});
  std::size_t k = 0;
  for (const OccupancyGrid& grid : grids) {
    if (grid.resolution() != res) fail(ErrorCode::kShapeMismatch, "grid batch with mixed resolutions");
    for (std::uint8_t v : grid.values()) t[k++] = v;
  }
  return t;
}

Tensor boundary_tensor(std::span<const BoundaryMap> maps) {
  if (maps.empty()) fail(ErrorCode::kInvalidArgument, "empty boundary map batch");
  const int h = maps[0].height(), w = maps[0].width();
  Tensor t(Shape{static_cast<int>(maps.size()), 3, h, w});
  std::size_t k = 0;
  for (const BoundaryMap& m : maps) {
    if (m.height() != h || m.width() != w) fail(ErrorCode::kShapeMismatch, "boundary maps of mixed size");
    for (double v : m.data()) t[k++] = v;
  }
  return t;
}

Tensor pixel_center_coords(int resolution) {
  const int n = resolution * resolution;
  Tensor t(Shape{3, n}, 1.0);
  for (int r = 0; r < resolution; ++r) {
    for (int c = 0; c < resolution; ++c) {
      const Vec2 p = pixel_center(r, c, resolution);
      t[r * resolution + c] = p.x;
      t[n + r * resolution + c] = p.y;
    }
  }
  return t;
}

ShapeCode ImplicitModel::encode(const OccupancyGrid& grid) {
  return encode(std::span<const OccupancyGrid>(&grid, 1)).front();
}

std::vector<ShapeCode> ImplicitModel::encode(std::span<const OccupancyGrid> grids) {
  for (const OccupancyGrid& grid : grids) {
    if (grid.resolution() != config_.resolution) {
      fail(ErrorCode::kShapeMismatch, "grid resolution " + std::to_string(grid.resolution()) +
                                          " does not match model resolution " +
                                          std::to_string(config_.resolution));
    }
  }
  std::vector<ShapeCode> codes;
  constexpr std::size_t kChunk = 32;
  for (std::size_t start = 0; start < grids.size(); start += kChunk) {
    const auto chunk = grids.subspan(start, std::min(kChunk, grids.size() - start));
    Graph g;
    const Tensor& out = encoder_.forward(g, g.constant(grid_tensor(chunk))).value();
    const int d = config_.code_dim;
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      codes.push_back({std::vector<double>(out.data() + i * d, out.data() + (i + 1) * d)});
    }
  }
  return codes;
}

HyperplaneSet ImplicitModel::generate_planes(const ShapeCode& code) {
  if (static_cast<int>(code.values.size()) != config_.code_dim) {
    fail(ErrorCode::kShapeMismatch, "code has " + std::to_string(code.values.size()) +
                                        " entries, model expects " + std::to_string(config_.code_dim));
  }
  Graph g;
  const Tensor& out = generator_.forward(g, g.constant(Tensor(Shape{1, config_.code_dim}, code.values))).value();
  return {config_.num_planes, out.storage()};
}

std::vector<double> ImplicitModel::occupancy(const HyperplaneSet& planes, const CoordBatch& coords) {
  if (planes.count != config_.num_planes) {
    fail(ErrorCode::kShapeMismatch, "plane set size does not match model");
  }
  Graph g;
  Var p = g.constant(Tensor(Shape{1, planes.count, 3}, planes.coefficients));
  Var c = g.constant(Tensor(Shape{3, coords.count()},
                            std::vector<double>(coords.data().begin(), coords.data().end())));
  const RenderResult r = render(g, p, c);
  return r.o3.value().storage();
}

OccupancyGrid ImplicitModel::reconstruct(const HyperplaneSet& planes) {
  const int res = config_.resolution;
  Graph g;
  Var p = g.constant(Tensor(Shape{1, planes.count, 3}, planes.coefficients));
  Var c = g.constant(pixel_center_coords(res));
  const RenderResult r = render(g, p, c);
  const Tensor& o3 = r.o3.value();
  std::vector<std::uint8_t> values(o3.size());
  for (std::size_t i = 0; i < o3.size(); ++i) values[i] = o3[i] >= kOccupancyThreshold ? 1 : 0;
  return OccupancyGrid(res, GridFrame{}, std::move(values));
}

RegressorInput parse_regressor_input(const std::string& name) {
  if (name == "boundary-map" || name == "sbm") return RegressorInput::kBoundaryMap;
  if (name == "occupancy-grid" || name == "grid") return RegressorInput::kOccupancyGrid;
  fail(ErrorCode::kConfig, "unknown regressor input '" + name + "'");
}

const char* regressor_input_name(RegressorInput input) {
  return input == RegressorInput::kBoundaryMap ? "boundary-map" : "occupancy-grid";
}

RegressionLoss parse_regression_loss(const std::string& name) {
  if (name == "L1" || name == "l1") return RegressionLoss::kL1;
  if (name == "L2" || name == "l2") return RegressionLoss::kL2;
  fail(ErrorCode::kConfig, "unknown regression loss '" + name + "' (expected L1 or L2)");
}

const char* regression_loss_name(RegressionLoss loss) { return loss == RegressionLoss::kL1 ? "L1" : "L2"; }

void validate(const RegressorConfig& c) {
  if (c.code_dim < 1 || c.channels.empty()) fail(ErrorCode::kConfig, "regressor needs code_dim and channels");
  if (c.input == RegressorInput::kBoundaryMap && (c.image_width < 2 || c.image_height < 1)) {
    fail(ErrorCode::kConfig, "regressor image size must be positive");
  }
  if (c.input == RegressorInput::kOccupancyGrid && c.resolution < kMinGridResolution) {
    fail(ErrorCode::kConfig, "regressor resolution must be >= 8");
  }
}

CodeRegressor::CodeRegressor(const RegressorConfig& config, std::uint64_t seed) : config_(config) {
  validate(config_);
  Rng rng(derive_seed(seed, 11));
  if (config_.input == RegressorInput::kBoundaryMap) {
    encoder_ = ConvEncoder("ie", 3, config_.image_height, config_.image_width, config_.channels,
                           config_.head, config_.code_dim, rng);
  } else {
    encoder_ = ConvEncoder("ie", 1, config_.resolution, config_.resolution, config_.channels,
                           config_.head, config_.code_dim, rng);
  }
}

std::vector<Parameter*> CodeRegressor::parameters() {
  std::vector<Parameter*> out;
  encoder_.collect(out);
  return out;
}

Var CodeRegressor::forward(Graph& g, Var images) { return encoder_.forward(g, images); }

ShapeCode CodeRegressor::run(Tensor input) {
  Graph g;
  const Tensor& out = encoder_.forward(g, g.constant(std::move(input))).value();
  return {out.storage()};
}

ShapeCode CodeRegressor::regress(const BoundaryMap& map) {
  if (config_.input != RegressorInput::kBoundaryMap) {
    fail(ErrorCode::kShapeMismatch, "regressor was built for occupancy-grid input");
  }
  return run(boundary_tensor(std::span<const BoundaryMap>(&map, 1)));
}

ShapeCode CodeRegressor::regress(const OccupancyGrid& grid) {
  if (config_.input != RegressorInput::kOccupancyGrid) {
    fail(ErrorCode::kShapeMismatch, "regressor was built for boundary-map input");
  }
  return run(grid_tensor(std::span<const OccupancyGrid>(&grid, 1)));
}

Var regression_loss(Var predicted, Var target, RegressionLoss loss) {
  return loss == RegressionLoss::kL1 ? nn::l1(predicted, target) : nn::mse(predicted, target);
}

}  // namespace roomlay
