#include <doctest.h>

#include <filesystem>

#include <json.hpp>

#include "roomlay/dataset.hpp"
#include "roomlay/error.hpp"
#include "roomlay/harness.hpp"
#include "roomlay/layout_io.hpp"

using namespace roomlay;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("roomlay_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.model.resolution = 16;
  c.model.code_dim = 8;
  c.model.num_planes = 16;
  c.model.num_primitives = 4;
  c.model.encoder_channels = {4, 8, 8};
  c.model.generator_widths = {16, 32};
  c.coord_samples = 64;
  c.batch_size = 4;
  c.learning_rate = 1e-3;
  c.epochs = 2;
  c.regressor_channels = {4, 8, 8};
  c.image_width = 32;
  c.image_height = 16;
  c.train_split = "all";
  c.eval_split = "all";
  return c;
}

Dataset tiny_dataset(const std::filesystem::path& dir) {
  DatasetOptions o;
  o.anchors = 10;
  o.augment_factor = 1;
  o.seed = 4;
  build_dataset(o, dir);
  return load_dataset(dir);
}

}  // namespace

TEST_CASE("train config JSON") {
  const TrainConfig d;
  CHECK(d.model.resolution == 64);
  CHECK(d.model.num_planes == 128);
  CHECK(d.model.num_primitives == 16);
  CHECK(d.model.code_dim == 128);
  CHECK(d.learning_rate == 1e-4);
  CHECK(d.batch_size == 16);
  const TrainConfig c = tiny_config();
  CHECK(config_to_json(config_from_json(config_to_json(c))) == config_to_json(c));
  CHECK(config_hash(c) == config_hash(config_from_json(config_to_json(c))));
  CHECK(config_hash(c) != config_hash(d));
  const TrainConfig partial = config_from_json(R"({"num_planes": 256, "num_primitives": 32, "encoder_mode": "FC"})");
  CHECK(partial.model.num_planes == 256);
  CHECK(partial.model.head == EncoderHead::kFC);
  CHECK(partial.model.code_dim == 128);
  CHECK_THROWS_AS(config_from_json(R"({"num_plane": 3})"), Error);
  CHECK_THROWS_AS(config_from_json(R"({"batch_size": 0})"), Error);
  CHECK_THROWS_AS(config_from_json(R"({"image_width": 100})"), Error);
  CHECK_THROWS_AS(config_from_json("{"), Error);
}

TEST_CASE("dataset directory round trip and splits") {
  const auto dir = fresh_dir("ds");
  const Dataset ds = tiny_dataset(dir);
  CHECK(ds.size() == 20);
  CHECK(select_split(ds, "all").size() == 20);
  CHECK(select_split(ds, "train").size() + select_split(ds, "val").size() + select_split(ds, "test").size() == 20);
  CHECK_THROWS_AS(select_split(ds, "dev"), Error);
  CHECK(ds.manifest_hash() == load_dataset(dir).manifest_hash());
  CHECK_THROWS_AS(load_boundary_map(ds, 0), Error);
  CHECK(render_dataset_boundaries(ds, 32, 16, 1.5) == 20);
  CHECK(load_boundary_map(ds, 3).width() == 32);
  std::filesystem::remove_all(dir);
}

TEST_CASE("zero epochs returns the initialization") {
  const auto dir = fresh_dir("zero");
  const Dataset ds = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  c.epochs = 0;
  const TrainOutcome out = train_ie(ds, c);
  ImplicitModel init(c.model, c.seed);
  const Checkpoint expected = capture(init.parameters(), out.checkpoint.config_json);
  CHECK(encode_checkpoint(out.checkpoint) == encode_checkpoint(expected));
  CHECK(out.epochs.empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("training and evaluation are deterministic") {
  const auto dir = fresh_dir("det");
  const Dataset ds = tiny_dataset(dir);
  const TrainConfig c = tiny_config();
  const TrainOutcome a = train_ie(ds, c);
  const TrainOutcome b = train_ie(ds, c);
  CHECK(a.log_json() == b.log_json());
  CHECK(encode_checkpoint(a.checkpoint) == encode_checkpoint(b.checkpoint));
  const std::string ra = report_to_json(eval_ie(a.checkpoint, ds));
  CHECK(ra == report_to_json(eval_ie(b.checkpoint, ds)));
  CHECK(ra == report_to_json(eval_ie(decode_checkpoint(encode_checkpoint(a.checkpoint)), ds)));

  const auto j = nlohmann::json::parse(ra);
  CHECK(j["mean_iou_le"].is_null());
  CHECK(j["samples"].size() == 20);
  double sum = 0.0;
  std::string last;
  for (const auto& s : j["samples"]) {
    CHECK(s["id"].get<std::string>() > last);
    last = s["id"].get<std::string>();
    sum += s["iou_ie"].get<double>();
    CHECK(s["iou_le"].is_null());
  }
  CHECK(j["mean_iou_ie"].get<double>() == doctest::Approx(sum / 20).epsilon(1e-12));
  CHECK(j["manifest_hash"].get<std::string>() == ds.manifest_hash());
  CHECK(j["config_hash"].get<std::string>() == config_hash(c));

  TrainConfig other = c;
  other.seed = 1;
  CHECK(train_ie(ds, other).log_json() != a.log_json());
  std::filesystem::remove_all(dir);
}

TEST_CASE("objective decreases on a small run") {
  const auto dir = fresh_dir("dec");
  const Dataset ds = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  c.epochs = 6;
  const TrainOutcome out = train_ie(ds, c);
  REQUIRE(out.epochs.size() == 6);
  CHECK(out.epochs.back().objective <= out.epochs.front().objective);
  c.max_steps = 7;
  const TrainOutcome capped = train_ie(ds, c);
  int steps = 0;
  for (const EpochStats& e : capped.epochs) steps += e.steps;
  CHECK(steps == 7);
  std::filesystem::remove_all(dir);
}

TEST_CASE("init-from continues from a checkpoint") {
  const auto dir = fresh_dir("init");
  const Dataset ds = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  const TrainOutcome first = train_ie(ds, c);
  c.epochs = 0;
  const TrainOutcome resumed = train_ie(ds, c, &first.checkpoint);
  CHECK(resumed.checkpoint.arrays.size() == first.checkpoint.arrays.size());
  for (std::size_t i = 0; i < first.checkpoint.arrays.size(); ++i) {
    CHECK(resumed.checkpoint.arrays[i].value.storage() == first.checkpoint.arrays[i].value.storage());
  }
  TrainConfig bigger = tiny_config();
  bigger.model.num_planes = 32;
  CHECK_THROWS_AS(train_ie(ds, bigger, &first.checkpoint), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("divergence aborts with a diagnostic") {
  const auto dir = fresh_dir("nan");
  const Dataset ds = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  c.learning_rate = 1e300;
  try {
    train_ie(ds, c);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFinite);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("shape-code regression end to end") {
  const auto dir = fresh_dir("sr");
  const Dataset ds = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  const TrainOutcome ie = train_ie(ds, c);
  CHECK_THROWS_AS(train_sr(ds, ie.checkpoint, c), Error);  // no boundary maps yet
  render_dataset_boundaries(ds, 32, 16, 1.5);
  const TrainOutcome sr = train_sr(ds, ie.checkpoint, c);
  REQUIRE(sr.epochs.size() == 2);
  TrainConfig cached = c;
  cached.cache_codes = true;
  CHECK(train_sr(ds, ie.checkpoint, cached).epochs.back().objective ==
        doctest::Approx(sr.epochs.back().objective).epsilon(1e-12));

  const EvalReport r = eval_le(sr.checkpoint, ie.checkpoint, ds);
  REQUIRE(r.mean_iou_le.has_value());
  const EvalReport ie_only = eval_ie(ie.checkpoint, ds);
  double sum = 0.0;
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    CHECK(r.samples[i].iou_ie == ie_only.samples[i].iou_ie);
    sum += *r.samples[i].iou_le;
  }
  CHECK(*r.mean_iou_le == doctest::Approx(sum / r.samples.size()).epsilon(1e-12));
  CHECK(report_to_json(r) == report_to_json(eval_le(sr.checkpoint, ie.checkpoint, ds)));

  // Zeroed regressor: sigmoid(0) everywhere.
  CodeRegressor reg = load_regressor(sr.checkpoint, ie.checkpoint);
  for (nn::Parameter* p : reg.parameters()) p->value.fill(0.0);
  for (double v : reg.regress(load_boundary_map(ds, 0)).values) CHECK(v == 0.5);

  TrainConfig l1 = c;
  l1.regression_loss = RegressionLoss::kL1;
  const TrainOutcome sr1 = train_sr(ds, ie.checkpoint, l1);
  CHECK(checkpoint_info(sr1.checkpoint).config.regression_loss == RegressionLoss::kL1);

  TrainConfig grid_input = c;
  grid_input.regressor_input = RegressorInput::kOccupancyGrid;
  const TrainOutcome sr_grid = train_sr(ds, ie.checkpoint, grid_input);
  CHECK(eval_le(sr_grid.checkpoint, ie.checkpoint, ds).mean_iou_le.has_value());

  // Regressor paired with an encoder of another code size.
  TrainConfig wide = c;
  wide.model.code_dim = 12;
  const TrainOutcome ie_wide = train_ie(ds, wide);
  CHECK_THROWS_AS(eval_le(sr.checkpoint, ie_wide.checkpoint, ds), Error);
  CHECK_THROWS_AS(eval_ie(sr.checkpoint, ds), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline gradient check on the small setup") {
  const nn::GradCheckReport r = check_pipeline_gradients(small_grad_check_setup());
  CHECK(r.passed);
  CHECK(r.max_rel_error <= 1e-4);
  const PipelineGradCheck s = grad_check_setup_from_json(R"({"seed": 3, "num_planes": 4})");
  CHECK(s.seed == 3);
  CHECK(s.model.num_planes == 4);
  CHECK(s.model.code_dim == 8);
}
