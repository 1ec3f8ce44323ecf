#include "roomlay/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "roomlay/error.hpp"
#include "roomlay/hash.hpp"
#include "roomlay/nn/adam.hpp"
#include "roomlay/nn/ops.hpp"
#include "roomlay/roomgen.hpp"

namespace roomlay {

using nlohmann::json;
using nn::Graph;
using nn::Shape;
using nn::Tensor;
using nn::Var;

void validate(const TrainConfig& c) {
  validate(c.model);
  if (c.coord_samples < 1 || c.batch_size < 1 || c.epochs < 0 || c.max_steps < 0) {
    fail(ErrorCode::kConfig, "coord_samples and batch_size must be positive, epochs and max_steps >= 0");
  }
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    fail(ErrorCode::kConfig, "learning_rate must be positive");
  }
  if (!(c.sigma_px > 0.0)) fail(ErrorCode::kConfig, "sigma_px must be positive");
  if (c.image_width != 2 * c.image_height || c.image_height < 1) {
    fail(ErrorCode::kConfig, "image_width must equal 2 * image_height");
  }
  if (c.regressor_channels.empty()) fail(ErrorCode::kConfig, "regressor_channels must be non-empty");
  for (int v : c.regressor_channels) if (v < 1) fail(ErrorCode::kConfig, "regressor channel count must be positive");
}

std::string config_to_json(const TrainConfig& c) {
  json j;
  j["resolution"] = c.model.resolution;
  j["code_dim"] = c.model.code_dim;
  j["num_planes"] = c.model.num_planes;
  j["num_primitives"] = c.model.num_primitives;
  j["encoder_mode"] = encoder_head_name(c.model.head);
  j["manhattan"] = c.model.manhattan;
  j["encoder_channels"] = c.model.encoder_channels;
  j["generator_widths"] = c.model.generator_widths;
  j["coord_samples"] = c.coord_samples;
  j["sample_mode"] = sample_mode_name(c.sample_mode);
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["epochs"] = c.epochs;
  j["max_steps"] = c.max_steps;
  j["seed"] = c.seed;
  j["regression_loss"] = regression_loss_name(c.regression_loss);
  j["regressor_input"] = regressor_input_name(c.regressor_input);
  j["regressor_head"] = encoder_head_name(c.regressor_head);
  j["regressor_channels"] = c.regressor_channels;
  j["sigma_px"] = c.sigma_px;
  j["image_width"] = c.image_width;
  j["image_height"] = c.image_height;
  j["cache_codes"] = c.cache_codes;
  j["train_split"] = c.train_split;
  j["eval_split"] = c.eval_split;
  return j.dump();
}

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("config key \"") + key + "\": " + e.what());
  }
}

}  // namespace

TrainConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, "config JSON malformed at offset " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::kConfig, "config JSON must be an object");
  static const std::set<std::string> known = {
      "resolution", "code_dim", "num_planes", "num_primitives", "encoder_mode", "manhattan",
      "encoder_channels", "generator_widths", "coord_samples", "sample_mode", "batch_size",
      "learning_rate", "epochs", "max_steps", "seed", "regression_loss", "regressor_input",
      "regressor_head", "regressor_channels", "sigma_px", "image_width", "image_height",
      "cache_codes", "train_split", "eval_split"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) fail(ErrorCode::kConfig, "unknown config key \"" + it.key() + "\"");
  }
  TrainConfig c;
  read_key(j, "resolution", c.model.resolution);
  read_key(j, "code_dim", c.model.code_dim);
  read_key(j, "num_planes", c.model.num_planes);
  read_key(j, "num_primitives", c.model.num_primitives);
  read_key(j, "manhattan", c.model.manhattan);
  read_key(j, "encoder_channels", c.model.encoder_channels);
  read_key(j, "generator_widths", c.model.generator_widths);
  read_key(j, "coord_samples", c.coord_samples);
  read_key(j, "batch_size", c.batch_size);
  read_key(j, "learning_rate", c.learning_rate);
  read_key(j, "epochs", c.epochs);
  read_key(j, "max_steps", c.max_steps);
  read_key(j, "seed", c.seed);
  read_key(j, "regressor_channels", c.regressor_channels);
  read_key(j, "sigma_px", c.sigma_px);
  read_key(j, "image_width", c.image_width);
  read_key(j, "image_height", c.image_height);
  read_key(j, "cache_codes", c.cache_codes);
  read_key(j, "train_split", c.train_split);
  read_key(j, "eval_split", c.eval_split);
  std::string s;
  if (j.contains("encoder_mode")) {
    read_key(j, "encoder_mode", s);
    c.model.head = parse_encoder_head(s);
  }
  if (j.contains("sample_mode")) {
    read_key(j, "sample_mode", s);
    c.sample_mode = parse_sample_mode(s);
  }
  if (j.contains("regression_loss")) {
    read_key(j, "regression_loss", s);
    c.regression_loss = parse_regression_loss(s);
  }
  if (j.contains("regressor_input")) {
    read_key(j, "regressor_input", s);
    c.regressor_input = parse_regressor_input(s);
  }
  if (j.contains("regressor_head")) {
    read_key(j, "regressor_head", s);
    c.regressor_head = parse_encoder_head(s);
  }
  validate(c);
  return c;
}

std::string config_hash(const TrainConfig& config) { return hex64(fnv1a64(config_to_json(config))); }

std::string TrainOutcome::log_json() const {
  json j = json::array();
  const bool ie = checkpoint_info(checkpoint).kind == "ie";
  for (const EpochStats& e : epochs) {
    json row = {{"epoch", e.epoch}, {"steps", e.steps}, {"objective", e.objective}};
    if (ie) {
      row["occupancy"] = e.occupancy;
      row["grouping"] = e.grouping;
      row["combining"] = e.combining;
    }
    j.push_back(row);
  }
  return json{{"epochs", j}}.dump(2) + "\n";
}

namespace {

std::string checkpoint_config(const std::string& kind, const TrainConfig& config,
                              const std::string& ie_hash = {}) {
  json j = {{"kind", kind}, {"config", json::parse(config_to_json(config))}};
  if (!ie_hash.empty()) j["ie_checkpoint_hash"] = ie_hash;
  return j.dump();
}

std::vector<OccupancyGrid> rasterize_all(const Dataset& ds, const std::vector<std::size_t>& idx, int res) {
  std::vector<OccupancyGrid> grids;
  grids.reserve(idx.size());
  for (std::size_t i : idx) grids.push_back(rasterize(ds.layouts[i], res));
  return grids;
}

void shuffle(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
}

void check_model_config(const TrainConfig& a, const TrainConfig& b) {
  if (config_to_json(TrainConfig{a.model}) != config_to_json(TrainConfig{b.model})) {
    fail(ErrorCode::kCheckpoint, "init checkpoint model configuration differs from the training config");
  }
}

[[noreturn]] void training_diverged(int epoch, int batch, const Error& e) {
  fail(ErrorCode::kNonFinite, "training diverged at epoch " + std::to_string(epoch) + ", batch " +
                                  std::to_string(batch) + ": " + e.what());
}

double finite_term(const char* name, double v) {
  if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, std::string("non-finite ") + name + " loss term");
  return v;
}

// Number of steps an epoch may still run when max_steps caps the run.
int steps_allowed(const TrainConfig& c, int done, int per_epoch) {
  if (c.max_steps <= 0) return per_epoch;
  return std::max(0, std::min(per_epoch, c.max_steps - done));
}

std::vector<std::uint8_t> quantize_map(const BoundaryMap& m) {
  std::vector<std::uint8_t> out(m.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(m.data()[i], 0.0, 1.0) * 255.0));
  }
  return out;
}

}  // namespace

CheckpointInfo checkpoint_info(const Checkpoint& checkpoint) {
  json j;
  try {
    j = json::parse(checkpoint.config_json);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kCheckpoint, std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j.contains("config") || !j["kind"].is_string()) {
    fail(ErrorCode::kCheckpoint, "checkpoint config lacks \"kind\"/\"config\"");
  }
  CheckpointInfo info;
  info.kind = j["kind"].get<std::string>();
  if (info.kind != "ie" && info.kind != "sr") fail(ErrorCode::kCheckpoint, "unknown checkpoint kind " + info.kind);
  info.config = config_from_json(j["config"].dump());
  return info;
}

ImplicitModel load_implicit_model(const Checkpoint& ie) {
  const CheckpointInfo info = checkpoint_info(ie);
  if (info.kind != "ie") fail(ErrorCode::kCheckpoint, "expected an implicit-encoder checkpoint, got " + info.kind);
  ImplicitModel model(info.config.model, info.config.seed);
  restore(model.parameters(), ie);
  return model;
}

namespace {

RegressorConfig regressor_config(const TrainConfig& sr, const TrainConfig& ie) {
  RegressorConfig rc;
  rc.input = sr.regressor_input;
  rc.image_width = sr.image_width;
  rc.image_height = sr.image_height;
  rc.resolution = ie.model.resolution;
  rc.code_dim = ie.model.code_dim;
  rc.head = sr.regressor_head;
  rc.channels = sr.regressor_channels;
  return rc;
}

std::string checkpoint_hash(const Checkpoint& ck) { return hex64(fnv1a64(encode_checkpoint(ck))); }

}  // namespace

CodeRegressor load_regressor(const Checkpoint& sr, const Checkpoint& ie) {
  const CheckpointInfo s = checkpoint_info(sr);
  const CheckpointInfo i = checkpoint_info(ie);
  if (s.kind != "sr") fail(ErrorCode::kCheckpoint, "expected a regressor checkpoint, got " + s.kind);
  if (i.kind != "ie") fail(ErrorCode::kCheckpoint, "expected an implicit-encoder checkpoint, got " + i.kind);
  if (s.config.model.code_dim != i.config.model.code_dim) {
    fail(ErrorCode::kCheckpoint, "regressor code dimension " + std::to_string(s.config.model.code_dim) +
                                     " does not match implicit encoder " + std::to_string(i.config.model.code_dim));
  }
  CodeRegressor reg(regressor_config(s.config, i.config), s.config.seed);
  restore(reg.parameters(), sr);
  return reg;
}

TrainOutcome train_ie(const Dataset& dataset, const TrainConfig& config, const Checkpoint* init,
                      const ProgressFn& progress) {
  validate(config);
  ImplicitModel model(config.model, config.seed);
  std::vector<nn::Parameter*> params = model.parameters();
  if (init) {
    const CheckpointInfo info = checkpoint_info(*init);
    if (info.kind != "ie") fail(ErrorCode::kCheckpoint, "--init-from expects an implicit-encoder checkpoint");
    check_model_config(info.config, config);
    restore(params, *init);
  }
  const std::vector<std::size_t> idx = select_split(dataset, config.train_split);
  if (idx.empty() && config.epochs > 0) {
    fail(ErrorCode::kInvalidArgument, "split '" + config.train_split + "' is empty");
  }
  const int res = config.model.resolution;
  const std::vector<OccupancyGrid> grids = rasterize_all(dataset, idx, res);
  const bool centers = config.sample_mode == SampleMode::kPixelCenters;
  const int n_c = centers ? res * res : config.coord_samples;
  const Tensor center_coords = centers ? pixel_center_coords(res) : Tensor();

  nn::Adam adam(params, {config.learning_rate});
  TrainOutcome out;
  std::vector<std::size_t> order(grids.size());
  int total_steps = 0;
  const int per_epoch = static_cast<int>((grids.size() + config.batch_size - 1) / config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const int allowed = steps_allowed(config, total_steps, per_epoch);
    if (allowed == 0) break;
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng order_rng(derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    shuffle(order, order_rng);
    EpochStats stats;
    stats.epoch = epoch;
    for (int b = 0; b < allowed; ++b) {
      const std::size_t start = static_cast<std::size_t>(b) * config.batch_size;
      const std::size_t count = std::min<std::size_t>(config.batch_size, grids.size() - start);
      std::vector<OccupancyGrid> batch;
      Tensor coords = centers ? center_coords : Tensor(Shape{static_cast<int>(count), 3, n_c});
      Tensor truth(Shape{static_cast<int>(count), 1, n_c});
      for (std::size_t k = 0; k < count; ++k) {
        const OccupancyGrid& grid = grids[order[start + k]];
        batch.push_back(grid);
        const std::uint64_t sample_seed =
            derive_seed(config.seed, (static_cast<std::uint64_t>(total_steps) << 16) + k + 7);
        const CoordSample s = sample_coords(grid, n_c, config.sample_mode, sample_seed);
        std::copy(s.truth.begin(), s.truth.end(), truth.data() + k * n_c);
        if (!centers) {
          std::copy(s.coords.data().begin(), s.coords.data().end(), coords.data() + k * 3 * n_c);
        }
      }
      try {
        Graph g;
        Var codes = model.encode(g, g.constant(grid_tensor(batch)));
        Var planes = model.generate(g, codes);
        RenderResult r = model.render(g, planes, g.constant(std::move(coords)));
        Objective obj = total_objective(r.o3, g.constant(std::move(truth)), g.param(model.grouping()),
                                        g.param(model.combining()));
        stats.occupancy += finite_term("occupancy", obj.occupancy.value().item());
        stats.grouping += finite_term("grouping", obj.grouping.value().item());
        stats.combining += finite_term("combining", obj.combining.value().item());
        stats.objective += obj.total.value().item();
        adam.zero_grad();
        g.backward(obj.total);
        adam.step();
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kNonFinite) training_diverged(epoch, b, e);
        throw;
      }
      ++stats.steps;
      ++total_steps;
    }
    const double n = stats.steps;
    stats.objective /= n;
    stats.occupancy /= n;
    stats.grouping /= n;
    stats.combining /= n;
    out.epochs.push_back(stats);
    if (progress) progress(stats);
  }
  out.checkpoint = capture(params, checkpoint_config("ie", config));
  return out;
}

TrainOutcome train_sr(const Dataset& dataset, const Checkpoint& ie, const TrainConfig& config,
                      const Checkpoint* init, const ProgressFn& progress) {
  validate(config);
  ImplicitModel teacher = load_implicit_model(ie);
  const TrainConfig ie_config = checkpoint_info(ie).config;
  TrainConfig cfg = config;
  cfg.model = ie_config.model;
  CodeRegressor reg(regressor_config(cfg, ie_config), cfg.seed);
  std::vector<nn::Parameter*> params = reg.parameters();
  if (init) {
    const CheckpointInfo info = checkpoint_info(*init);
    if (info.kind != "sr") fail(ErrorCode::kCheckpoint, "--init-from expects a regressor checkpoint");
    restore(params, *init);
  }
  const std::vector<std::size_t> idx = select_split(dataset, cfg.train_split);
  if (idx.empty() && cfg.epochs > 0) fail(ErrorCode::kInvalidArgument, "split '" + cfg.train_split + "' is empty");
  const int res = ie_config.model.resolution;
  const int d = ie_config.model.code_dim;
  const std::vector<OccupancyGrid> grids = rasterize_all(dataset, idx, res);

  const bool sbm = cfg.regressor_input == RegressorInput::kBoundaryMap;
  std::vector<std::vector<std::uint8_t>> maps;
  if (sbm) {
    maps.reserve(idx.size());
    for (std::size_t i : idx) {
      const BoundaryMap m = load_boundary_map(dataset, i);
      if (m.width() != cfg.image_width || m.height() != cfg.image_height) {
        fail(ErrorCode::kShapeMismatch, "boundary map of '" + dataset.layouts[i].id + "' is " +
                                            std::to_string(m.width()) + "x" + std::to_string(m.height()) +
                                            ", config expects " + std::to_string(cfg.image_width) + "x" +
                                            std::to_string(cfg.image_height));
      }
      maps.push_back(quantize_map(m));
    }
  }
  std::vector<ShapeCode> cached;
  if (cfg.cache_codes) cached = teacher.encode(grids);

  nn::Adam adam(params, {cfg.learning_rate});
  TrainOutcome out;
  std::vector<std::size_t> order(grids.size());
  int total_steps = 0;
  const int per_epoch = static_cast<int>((grids.size() + cfg.batch_size - 1) / cfg.batch_size);
  const int h = cfg.image_height, w = cfg.image_width;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const int allowed = steps_allowed(cfg, total_steps, per_epoch);
    if (allowed == 0) break;
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng order_rng(derive_seed(cfg.seed, 2000 + static_cast<std::uint64_t>(epoch)));
    shuffle(order, order_rng);
    EpochStats stats;
    stats.epoch = epoch;
    for (int b = 0; b < allowed; ++b) {
      const std::size_t start = static_cast<std::size_t>(b) * cfg.batch_size;
      const int count = static_cast<int>(std::min<std::size_t>(cfg.batch_size, grids.size() - start));
      std::vector<OccupancyGrid> batch;
      for (int k = 0; k < count; ++k) batch.push_back(grids[order[start + k]]);
      Tensor target(Shape{count, d});
      const std::vector<ShapeCode> codes = cfg.cache_codes ? std::vector<ShapeCode>() : teacher.encode(batch);
      for (int k = 0; k < count; ++k) {
        const ShapeCode& c = cfg.cache_codes ? cached[order[start + k]] : codes[k];
        std::copy(c.values.begin(), c.values.end(), target.data() + static_cast<std::size_t>(k) * d);
      }
      Tensor input;
      if (sbm) {
        input = Tensor(Shape{count, 3, h, w});
        const std::size_t per = static_cast<std::size_t>(3) * h * w;
        for (int k = 0; k < count; ++k) {
          const std::vector<std::uint8_t>& m = maps[order[start + k]];
          for (std::size_t q = 0; q < per; ++q) input[k * per + q] = m[q] / 255.0;
        }
      } else {
        input = grid_tensor(batch);
      }
      try {
        Graph g;
        Var pred = reg.forward(g, g.constant(std::move(input)));
        Var loss = regression_loss(pred, g.constant(std::move(target)), cfg.regression_loss);
        stats.objective += finite_term("regression", loss.value().item());
        adam.zero_grad();
        g.backward(loss);
        adam.step();
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kNonFinite) training_diverged(epoch, b, e);
        throw;
      }
      ++stats.steps;
      ++total_steps;
    }
    stats.objective /= stats.steps;
    out.epochs.push_back(stats);
    if (progress) progress(stats);
  }
  out.checkpoint = capture(params, checkpoint_config("sr", cfg, checkpoint_hash(ie)));
  return out;
}

std::string report_to_json(const EvalReport& r) {
  json samples = json::array();
  for (const SampleScore& s : r.samples) {
    samples.push_back({{"id", s.id},
                       {"iou_ie", s.iou_ie},
                       {"iou_le", s.iou_le ? json(*s.iou_le) : json(nullptr)}});
  }
  json j = {{"mean_iou_ie", r.mean_iou_ie},
            {"mean_iou_le", r.mean_iou_le ? json(*r.mean_iou_le) : json(nullptr)},
            {"samples", samples},
            {"config_hash", r.config_hash},
            {"manifest_hash", r.manifest_hash}};
  return j.dump(2) + "\n";
}

namespace {

EvalReport evaluate(ImplicitModel& model, CodeRegressor* reg, const TrainConfig* sr_config,
                    const Dataset& dataset, const std::vector<std::size_t>& idx) {
  const int res = model.config().resolution;
  EvalReport report;
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < idx.size(); start += kChunk) {
    const std::vector<std::size_t> part(idx.begin() + start, idx.begin() + std::min(idx.size(), start + kChunk));
    const std::vector<OccupancyGrid> grids = rasterize_all(dataset, part, res);
    const std::vector<ShapeCode> codes = model.encode(grids);
    for (std::size_t k = 0; k < part.size(); ++k) {
      SampleScore s;
      s.id = dataset.layouts[part[k]].id;
      s.iou_ie = compute_iou(model.reconstruct(model.generate_planes(codes[k])), grids[k]).iou;
      if (reg) {
        ShapeCode code;
        if (sr_config->regressor_input == RegressorInput::kBoundaryMap) {
          BoundaryMap m = load_boundary_map(dataset, part[k]);
          if (m.width() != sr_config->image_width || m.height() != sr_config->image_height) {
            fail(ErrorCode::kShapeMismatch, "boundary map of '" + s.id + "' does not match the regressor input size");
          }
          code = reg->regress(m);
        } else {
          code = reg->regress(grids[k]);
        }
        s.iou_le = compute_iou(model.reconstruct(model.generate_planes(code)), grids[k]).iou;
      }
      report.samples.push_back(std::move(s));
    }
  }
  std::sort(report.samples.begin(), report.samples.end(),
            [](const SampleScore& a, const SampleScore& b) { return a.id < b.id; });
  if (!report.samples.empty()) {
    double ie = 0.0, le = 0.0;
    for (const SampleScore& s : report.samples) {
      ie += s.iou_ie;
      if (s.iou_le) le += *s.iou_le;
    }
    report.mean_iou_ie = ie / report.samples.size();
    if (reg) report.mean_iou_le = le / report.samples.size();
  }
  report.manifest_hash = dataset.manifest_hash();
  return report;
}

std::vector<std::size_t> eval_indices(const Dataset& dataset, const std::string& split, const TrainConfig& c) {
  std::vector<std::size_t> idx = select_split(dataset, split.empty() ? c.eval_split : split);
  if (idx.empty()) fail(ErrorCode::kInvalidArgument, "evaluation split is empty");
  return idx;
}

}  // namespace

EvalReport eval_ie(const Checkpoint& ie, const Dataset& dataset, const std::string& split) {
  ImplicitModel model = load_implicit_model(ie);
  const TrainConfig cfg = checkpoint_info(ie).config;
  EvalReport r = evaluate(model, nullptr, nullptr, dataset, eval_indices(dataset, split, cfg));
  r.config_hash = config_hash(cfg);
  return r;
}

EvalReport eval_le(const Checkpoint& sr, const Checkpoint& ie, const Dataset& dataset, const std::string& split) {
  ImplicitModel model = load_implicit_model(ie);
  CodeRegressor reg = load_regressor(sr, ie);
  const TrainConfig sr_cfg = checkpoint_info(sr).config;
  const TrainConfig ie_cfg = checkpoint_info(ie).config;
  EvalReport r = evaluate(model, &reg, &sr_cfg, dataset, eval_indices(dataset, split, sr_cfg));
  r.config_hash = hex64(fnv1a64(config_to_json(ie_cfg) + config_to_json(sr_cfg)));
  return r;
}

PipelineGradCheck small_grad_check_setup() {
  PipelineGradCheck setup;
  setup.model.resolution = 16;
  setup.model.code_dim = 8;
  setup.model.num_planes = 8;
  setup.model.num_primitives = 2;
  setup.model.encoder_channels = {4, 8, 8, 8};
  setup.model.generator_widths = {16, 16};
  setup.batch = 2;
  setup.coord_samples = 16;
  return setup;
}

PipelineGradCheck grad_check_setup_from_json(const std::string& text) {
  PipelineGradCheck setup = small_grad_check_setup();
  TrainConfig base;
  base.model = setup.model;
  base.batch_size = setup.batch;
  base.coord_samples = setup.coord_samples;
  json merged = json::parse(config_to_json(base));
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, "config JSON malformed at offset " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!user.is_object()) fail(ErrorCode::kConfig, "config JSON must be an object");
  merged.update(user);
  const TrainConfig c = config_from_json(merged.dump());
  setup.model = c.model;
  setup.batch = c.batch_size;
  setup.coord_samples = c.coord_samples;
  setup.seed = c.seed;
  return setup;
}

nn::GradCheckReport check_pipeline_gradients(const PipelineGradCheck& setup) {
  validate(setup.model);
  if (setup.batch < 1 || setup.coord_samples < 1) fail(ErrorCode::kConfig, "batch and coord_samples must be positive");
  ImplicitModel model(setup.model, setup.seed);
  const int res = setup.model.resolution;
  const int n_c = setup.coord_samples;
  std::vector<OccupancyGrid> grids;
  Tensor coords(Shape{setup.batch, 3, n_c});
  Tensor truth(Shape{setup.batch, 1, n_c});
  for (int b = 0; b < setup.batch; ++b) {
    const RoomLayout room = generate_anchor(derive_seed(setup.seed, 50 + b), 4 + 2 * (b % 4));
    grids.push_back(rasterize(room, res));
    const CoordSample s = sample_coords(grids.back(), n_c, SampleMode::kUniformRandom, derive_seed(setup.seed, 90 + b));
    std::copy(s.coords.data().begin(), s.coords.data().end(), coords.data() + static_cast<std::size_t>(b) * 3 * n_c);
    std::copy(s.truth.begin(), s.truth.end(), truth.data() + static_cast<std::size_t>(b) * n_c);
  }
  const Tensor images = grid_tensor(grids);
  // Random W_g, W_c and biases: every loss term gets a nonzero gradient and
  // no activation sits exactly on a kink.
  Rng rng(derive_seed(setup.seed, 77));
  for (double& v : model.grouping().value.values()) v = rng.uniform(-0.3, 1.3);
  for (double& v : model.combining().value.values()) v = rng.uniform(0.2, 1.6);
  for (nn::Parameter* p : model.parameters()) {
    if (p->name.ends_with(".bias")) {
      for (double& v : p->value.values()) v = rng.uniform(-0.1, 0.1);
    }
  }
  auto loss = [&](Graph& g) {
    Var codes = model.encode(g, g.constant(images));
    Var planes = model.generate(g, codes);
    RenderResult r = model.render(g, planes, g.constant(coords));
    return total_objective(r.o3, g.constant(truth), g.param(model.grouping()), g.param(model.combining())).total;
  };
  return nn::grad_check(loss, model.parameters(), setup.options);
}

std::string grad_check_to_json(const nn::GradCheckReport& report) {
  json tensors = json::array();
  for (const nn::GradCheckTensor& t : report.tensors) {
    tensors.push_back({{"name", t.name},
                       {"checked", t.checked},
                       {"excluded", t.excluded},
                       {"max_rel_error", t.max_rel_error},
                       {"passed", t.passed}});
  }
  return json{{"passed", report.passed},
              {"max_rel_error", report.max_rel_error},
              {"checked", report.checked},
              {"excluded", report.excluded},
              {"tensors", tensors}}
             .dump(2) + "\n";
}

}  // namespace roomlay
