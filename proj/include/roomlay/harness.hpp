#ifndef ROOMLAY_HARNESS_HPP
#define ROOMLAY_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roomlay/checkpoint.hpp"
#include "roomlay/dataset.hpp"
#include "roomlay/implicit.hpp"
#include "roomlay/nn/grad_check.hpp"

namespace roomlay {

struct TrainConfig {
  ImplicitConfig model;
  int coord_samples = 1024;
  SampleMode sample_mode = SampleMode::kBoundaryBiased;
  int batch_size = 16;
  double learning_rate = 1e-4;
  int epochs = 10;
  // Caps the total number of optimizer steps when > 0.
  int max_steps = 0;
  std::uint64_t seed = 0;

  RegressionLoss regression_loss = RegressionLoss::kL2;
  RegressorInput regressor_input = RegressorInput::kBoundaryMap;
  EncoderHead regressor_head = EncoderHead::kGAP;
  std::vector<int> regressor_channels = {16, 32, 64, 128, 256};
  double sigma_px = 1.5;
  int image_width = 128;
  int image_height = 64;
  bool cache_codes = false;

  std::string train_split = "train";
  std::string eval_split = "test";
};

void validate(const TrainConfig& config);
// Canonical JSON (sorted keys); the config hash is FNV-1a of these bytes.
std::string config_to_json(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig config_from_json(const std::string& text);
std::string config_hash(const TrainConfig& config);

struct EpochStats {
  int epoch = 0;
  int steps = 0;
  double objective = 0.0;
  // Implicit-encoder runs only.
  double occupancy = 0.0;
  double grouping = 0.0;
  double combining = 0.0;
};

struct TrainOutcome {
  Checkpoint checkpoint;
  std::vector<EpochStats> epochs;
  std::string log_json() const;
};

using ProgressFn = std::function<void(const EpochStats&)>;

// Joint optimization of the self-encoder, plane generator, W_g and W_c on the
// config's train split. `init` restores all parameters before training.
TrainOutcome train_ie(const Dataset& dataset, const TrainConfig& config,
                      const Checkpoint* init = nullptr, const ProgressFn& progress = {});

// Trains the code regressor against codes of the frozen self-encoder in `ie`.
TrainOutcome train_sr(const Dataset& dataset, const Checkpoint& ie, const TrainConfig& config,
                      const Checkpoint* init = nullptr, const ProgressFn& progress = {});

struct SampleScore {
  std::string id;
  double iou_ie = 0.0;
  std::optional<double> iou_le;
};

struct EvalReport {
  double mean_iou_ie = 0.0;
  std::optional<double> mean_iou_le;
  std::vector<SampleScore> samples;  // sorted by id
  std::string config_hash;
  std::string manifest_hash;
};

std::string report_to_json(const EvalReport& report);

// Empty `split` uses the eval_split stored in the checkpoint config.
EvalReport eval_ie(const Checkpoint& ie, const Dataset& dataset, const std::string& split = {});
EvalReport eval_le(const Checkpoint& sr, const Checkpoint& ie, const Dataset& dataset,
                   const std::string& split = {});

// Kind ("ie" or "sr") and training config stored in a checkpoint.
struct CheckpointInfo {
  std::string kind;
  TrainConfig config;
};

CheckpointInfo checkpoint_info(const Checkpoint& checkpoint);
ImplicitModel load_implicit_model(const Checkpoint& ie);
CodeRegressor load_regressor(const Checkpoint& sr, const Checkpoint& ie);

struct PipelineGradCheck {
  ImplicitConfig model;
  int batch = 2;
  int coord_samples = 16;
  std::uint64_t seed = 0;
  nn::GradCheckOptions options;
};

// Finite-difference check of the full objective (encoder, generator, W_g, W_c)
// on generated rooms with random query coordinates.
// Small default setup (R=16, D=8, N_p=8, N_s=2, N_c=16, narrow layers) that
// keeps the parameter count under 10^4.
PipelineGradCheck small_grad_check_setup();
// Overlays training-config keys (model fields, coord_samples, batch_size,
// seed) onto the small setup.
PipelineGradCheck grad_check_setup_from_json(const std::string& text);

nn::GradCheckReport check_pipeline_gradients(const PipelineGradCheck& setup);
std::string grad_check_to_json(const nn::GradCheckReport& report);

}  // namespace roomlay

#endif  // ROOMLAY_HARNESS_HPP
