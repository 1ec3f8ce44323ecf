#ifndef ROOMLAY_IMPLICIT_HPP
#define ROOMLAY_IMPLICIT_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "roomlay/layout.hpp"
#include "roomlay/nn/graph.hpp"
#include "roomlay/nn/layers.hpp"
#include "roomlay/panorama.hpp"

namespace roomlay {

enum class EncoderHead { kGAP, kFC };
EncoderHead parse_encoder_head(const std::string& name);
const char* encoder_head_name(EncoderHead head);

struct ImplicitConfig {
  int resolution = 64;
  int code_dim = 128;
  int num_planes = 128;
  int num_primitives = 16;
  EncoderHead head = EncoderHead::kGAP;
  bool manhattan = false;
  std::vector<int> encoder_channels = {16, 32, 64, 128, 256};
  std::vector<int> generator_widths = {256, 512};
};

void validate(const ImplicitConfig& config);

// Latent code, every entry in (0,1).
struct ShapeCode {
  std::vector<double> values;
};

// N_p planes a*x + b*y + c = 0 in normalized grid coordinates, row-major N_p x 3.
struct HyperplaneSet {
  int count = 0;
  std::vector<double> coefficients;

  std::array<double, 3> plane(int i) const {
    return {coefficients[3 * i], coefficients[3 * i + 1], coefficients[3 * i + 2]};
  }
};

// Stride-2 conv stack with ReLU, then a GAP or flatten head, a dense layer and
// a Sigmoid: images [B,C,H,W] -> codes [B,D].
class ConvEncoder {
 public:
  ConvEncoder() = default;
  ConvEncoder(const std::string& prefix, int in_channels, int height, int width,
              const std::vector<int>& channels, EncoderHead head, int code_dim, Rng& rng);

  nn::Var forward(nn::Graph& g, nn::Var images);
  void collect(std::vector<nn::Parameter*>& out);

  int in_channels() const { return in_channels_; }
  int height() const { return height_; }
  int width() const { return width_; }

 private:
  int in_channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  EncoderHead head_ = EncoderHead::kGAP;
  std::vector<nn::Conv2d> convs_;
  nn::Dense dense_;
};

// MLP codes [B,D] -> planes [B,N_p,3]. In Manhattan mode the MLP emits one
// global angle plus (axis logit, signed scale, offset) per plane.
class PlaneGenerator {
 public:
  PlaneGenerator() = default;
  PlaneGenerator(const std::string& prefix, int code_dim, const std::vector<int>& widths,
                 int num_planes, bool manhattan, Rng& rng);

  nn::Var forward(nn::Graph& g, nn::Var codes);
  void collect(std::vector<nn::Parameter*>& out);

 private:
  int num_planes_ = 0;
  bool manhattan_ = false;
  std::vector<nn::Dense> layers_;
};

// raw [B, 1 + 3*N_p] -> planes [B,N_p,3]. Plane p uses normal
// s*(cos t, sin t) when its logit is >= 0, else s*(-sin t, cos t). The axis
// choice is piecewise constant, so logits receive no gradient.
nn::Var manhattan_planes(nn::Var raw, int num_planes);

struct RenderResult {
  nn::Var o1;  // [B,N_p,N_c] = ReLU(P c)
  nn::Var o2;  // [B,N_s,N_c] = clamp01(1 - W_g o1)
  nn::Var o3;  // [B,1,N_c]   = clamp01(W_c o2)
};

// coords: [3,N_c] shared by the batch or [B,3,N_c] per sample.
RenderResult render(nn::Var planes, nn::Var grouping, nn::Var combining, nn::Var coords);

// Mean squared occupancy error over batch and samples.
nn::Var loss_occupancy(nn::Var o3, nn::Var truth);
// Sum of max(t-1,0) + max(-t,0) over W_g.
nn::Var loss_grouping(nn::Var grouping);
// Sum of |t-1| over W_c.
nn::Var loss_combining(nn::Var combining);

struct Objective {
  nn::Var occupancy;
  nn::Var grouping;
  nn::Var combining;
  nn::Var total;
};

Objective total_objective(nn::Var o3, nn::Var truth, nn::Var grouping, nn::Var combining);

// Self-encoder + hyperplane generator + grouping/combining weights.
class ImplicitModel {
 public:
  ImplicitModel(const ImplicitConfig& config, std::uint64_t seed);

  const ImplicitConfig& config() const { return config_; }
  std::vector<nn::Parameter*> parameters();

  nn::Var encode(nn::Graph& g, nn::Var grids);
  nn::Var generate(nn::Graph& g, nn::Var codes);
  RenderResult render(nn::Graph& g, nn::Var planes, nn::Var coords);

  nn::Parameter& grouping() { return grouping_; }
  nn::Parameter& combining() { return combining_; }

  ShapeCode encode(const OccupancyGrid& grid);
  std::vector<ShapeCode> encode(std::span<const OccupancyGrid> grids);
  HyperplaneSet generate_planes(const ShapeCode& code);
  // o3 at arbitrary coordinates.
  std::vector<double> occupancy(const HyperplaneSet& planes, const CoordBatch& coords);
  // o3 at all pixel centers, thresholded at 0.5.
  OccupancyGrid reconstruct(const HyperplaneSet& planes);

 private:
  ImplicitConfig config_;
  ConvEncoder encoder_;
  PlaneGenerator generator_;
  nn::Parameter grouping_;
  nn::Parameter combining_;
};

// Fixed threshold applied to o3 for all reported reconstructions.
inline constexpr double kOccupancyThreshold = 0.5;

nn::Tensor grid_tensor(std::span<const OccupancyGrid> grids);
nn::Tensor boundary_tensor(std::span<const BoundaryMap> maps);
nn::Tensor pixel_center_coords(int resolution);

enum class RegressorInput { kBoundaryMap, kOccupancyGrid };
enum class RegressionLoss { kL1, kL2 };

RegressorInput parse_regressor_input(const std::string& name);
const char* regressor_input_name(RegressorInput input);
RegressionLoss parse_regression_loss(const std::string& name);
const char* regression_loss_name(RegressionLoss loss);

struct RegressorConfig {
  RegressorInput input = RegressorInput::kBoundaryMap;
  int image_width = 128;   // boundary-map input
  int image_height = 64;
  int resolution = 64;     // occupancy-grid input
  int code_dim = 128;
  EncoderHead head = EncoderHead::kGAP;
  std::vector<int> channels = {16, 32, 64, 128, 256};
};

void validate(const RegressorConfig& config);

// Image encoder mapping a boundary map (or, for the ablation, the occupancy
// grid) to a shape code.
class CodeRegressor {
 public:
  CodeRegressor(const RegressorConfig& config, std::uint64_t seed);

  const RegressorConfig& config() const { return config_; }
  std::vector<nn::Parameter*> parameters();

  nn::Var forward(nn::Graph& g, nn::Var images);
  ShapeCode regress(const BoundaryMap& map);
  ShapeCode regress(const OccupancyGrid& grid);

 private:
  ShapeCode run(nn::Tensor input);

  RegressorConfig config_;
  ConvEncoder encoder_;
};

// L2: mean squared difference; L1: mean absolute difference.
nn::Var regression_loss(nn::Var predicted, nn::Var target, RegressionLoss loss);

}  // namespace roomlay

#endif  // ROOMLAY_IMPLICIT_HPP
