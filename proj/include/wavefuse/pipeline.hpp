#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "wavefuse/feature_map.hpp"
#include "wavefuse/fusion.hpp"
#include "wavefuse/nn.hpp"

namespace wavefuse {

inline constexpr std::size_t kStageCount = 5;
inline constexpr std::size_t kFusionLevels = 3;

enum class HeadAggregate { sum, concat };
enum class HeadUpsample { idwt, nearest };

struct PipelineConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t rgb_channels = 3;
  std::size_t ir_channels = 1;
  std::array<std::size_t, kStageCount> stage_channels = {8, 16, 32, 32, 32};
  // 1-based stage indices, strictly increasing.
  std::array<std::size_t, kFusionLevels> wmfb_stages = {2, 3, 5};
  std::uint64_t seed = 0;
  std::size_t expand = 2;
  std::size_t d_state = 16;
  bool shared_scan = false;
  double swap_fraction = 0.5;
  FusionOptions fusion;
  Aggregation ss2d_aggregation = Aggregation::sum;
  HeadAggregate head_aggregate = HeadAggregate::sum;
  HeadUpsample head_upsample = HeadUpsample::idwt;
};

// Every tensor shape the forward pass will produce. Stage k runs at
// height / 2^k: a plain stage halves with a stride-2 conv, while the stage
// right after a fusion block is fed the half-resolution low band and runs at
// stride 1. Stages after the last fusion block are not evaluated.
struct ShapePlan {
  std::size_t evaluated_stages = 0;
  std::array<bool, kStageCount> stride_one{};
  std::array<Shape, kStageCount> stage_rgb{};
  std::array<Shape, kStageCount> stage_ir{};
  std::array<Shape, kFusionLevels> level_bands{};
  std::array<Shape, kFusionLevels> pyramid{};
};

// Validates the config and computes the shape chain; throws Error naming the
// violated constraint (odd size, bad stage order, non-integral swap split...).
ShapePlan plan_shapes(const PipelineConfig& cfg);

struct BackboneStage {
  DepthwiseConv3x3 depthwise;
  Linear pointwise;
};

struct BackboneWeights {
  std::array<BackboneStage, kStageCount> rgb;
  std::array<BackboneStage, kStageCount> ir;

  static BackboneWeights random(const PipelineConfig& cfg, Rng& rng);
  static BackboneWeights zeros(const PipelineConfig& cfg);
};

// SiLU(pointwise(depthwise(x, stride))).
FeatureMap backbone_stage(const FeatureMap& x, const BackboneStage& s,
                          std::size_t stride);

// Plain two-stream stub: every stage halves the resolution. Returns the
// (rgb, ir) features after each of the first `stages` stages.
std::vector<std::pair<FeatureMap, FeatureMap>> backbone_forward(
    const FeatureMap& img_rgb, const FeatureMap& img_ir,
    const BackboneWeights& w, std::size_t stages = kStageCount);

struct HeadWeights {
  // concat aggregation only: 2C -> C per level.
  std::array<Linear, kFusionLevels> aggregate;
  // Level i (fine to coarse) maps concat(reconstructed_i, upsampled p_{i+1})
  // to C_i; the coarsest level maps C_2 -> C_2.
  std::array<Linear, kFusionLevels> lateral;

  static HeadWeights random(const std::array<std::size_t, kFusionLevels>& channels,
                            Rng& rng);
  static HeadWeights zeros(const std::array<std::size_t, kFusionLevels>& channels);
};

struct HeadOptions {
  HeadAggregate aggregate = HeadAggregate::sum;
  HeadUpsample upsample = HeadUpsample::idwt;
};

struct PyramidOutput {
  std::array<FeatureMap, kFusionLevels> maps;           // fine to coarse
  std::array<FeatureMap, kFusionLevels> reconstructed;  // before the neck
  std::vector<FusedLevel> levels;
};

struct PipelineWeights {
  BackboneWeights backbone;
  std::array<WmfbWeights, kFusionLevels> wmfb;
  HeadWeights head;

  // Deterministic in cfg.seed.
  static PipelineWeights random(const PipelineConfig& cfg);
  static PipelineWeights zeros(const PipelineConfig& cfg);
};

// Upsamples by 2^times through the inverse transform with zero detail bands.
FeatureMap upsample_zero_detail(const FeatureMap& x, std::size_t times);

// Nearest-neighbour 2x upsample with the orthonormal gain of 1/2, so it equals
// the inverse transform whenever the detail bands are zero.
FeatureMap upsample_nearest(const FeatureMap& x);

// Combines the two fused low bands of one level.
FeatureMap aggregate_low(const FusedLevel& level, HeadAggregate mode,
                         const Linear& projection);

// Fine-to-coarse fused levels in; each coarser level must be smaller by a
// power of two in both dimensions.
PyramidOutput head_forward(std::vector<FusedLevel> levels, const HeadWeights& w,
                           const HeadOptions& opts = {});

PyramidOutput wave_forward(const FeatureMap& img_rgb, const FeatureMap& img_ir,
                           const PipelineWeights& w, const PipelineConfig& cfg);

}  // namespace wavefuse
