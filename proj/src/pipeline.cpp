#include "wavefuse/pipeline.hpp"

#include <cmath>
#include <string>

#include "wavefuse/parallel.hpp"
#include "wavefuse/wavelet.hpp"

namespace wavefuse {

namespace {

std::array<std::size_t, kFusionLevels> level_channels(const PipelineConfig& cfg) {
  std::array<std::size_t, kFusionLevels> c{};
  for (std::size_t i = 0; i < kFusionLevels; ++i) {
    c[i] = cfg.stage_channels[cfg.wmfb_stages[i] - 1];
  }
  return c;
}

std::size_t stage_input_channels(const PipelineConfig& cfg, std::size_t k,
                                 bool rgb) {
  if (k == 0) return rgb ? cfg.rgb_channels : cfg.ir_channels;
  return cfg.stage_channels[k - 1];
}

// log2 of the exact power-of-two ratio fine/coarse, or 0 when there is none.
std::size_t power_of_two_ratio(std::size_t fine, std::size_t coarse) {
  if (coarse == 0 || fine % coarse != 0) return 0;
  std::size_t ratio = fine / coarse;
  std::size_t log2 = 0;
  while (ratio > 1) {
    if (ratio % 2 != 0) return 0;
    ratio /= 2;
    ++log2;
  }
  return log2;
}

void require_even(std::size_t h, std::size_t w, const std::string& where) {
  if (h % 2 != 0 || w % 2 != 0 || h == 0 || w == 0) {
    throw Error("pipeline config: " + where + " has odd size " +
                std::to_string(h) + "x" + std::to_string(w));
  }
}

}  // namespace

ShapePlan plan_shapes(const PipelineConfig& cfg) {
  if (cfg.height == 0 || cfg.width == 0) {
    throw Error("pipeline config: height and width must be positive");
  }
  if (cfg.rgb_channels == 0 || cfg.ir_channels == 0) {
    throw Error("pipeline config: input channel counts must be positive");
  }
  for (std::size_t k = 0; k < kStageCount; ++k) {
    if (cfg.stage_channels[k] == 0) {
      throw Error("pipeline config: stage_channels[" + std::to_string(k) +
                  "] must be positive");
    }
  }
  for (std::size_t i = 0; i < kFusionLevels; ++i) {
    const std::size_t s = cfg.wmfb_stages[i];
    if (s < 1 || s > kStageCount) {
      throw Error("pipeline config: wmfb stage " + std::to_string(s) +
                  " outside [1, 5]");
    }
    if (i > 0 && s <= cfg.wmfb_stages[i - 1]) {
      throw Error("pipeline config: wmfb_stages must be strictly increasing");
    }
  }
  if (cfg.expand == 0 || cfg.d_state == 0) {
    throw Error("pipeline config: expand and d_state must be positive");
  }
  if (!(cfg.swap_fraction > 0.0 && cfg.swap_fraction < 1.0)) {
    throw Error("pipeline config: swap_fraction must lie in (0, 1)");
  }
  for (std::size_t c : level_channels(cfg)) {
    const double k = cfg.swap_fraction * static_cast<double>(c);
    if (std::abs(k - std::round(k)) > 1e-9) {
      throw Error("pipeline config: swap_fraction " +
                  std::to_string(cfg.swap_fraction) + " does not split " +
                  std::to_string(c) + " channels evenly");
    }
  }

  ShapePlan plan;
  plan.evaluated_stages = cfg.wmfb_stages.back();
  std::size_t h = cfg.height;
  std::size_t w = cfg.width;
  std::size_t level = 0;
  for (std::size_t k = 0; k < plan.evaluated_stages; ++k) {
    if (!plan.stride_one[k]) {
      require_even(h, w, "input of stage " + std::to_string(k + 1));
      h /= 2;
      w /= 2;
    }
    const std::size_t c = cfg.stage_channels[k];
    plan.stage_rgb[k] = Shape{c, h, w};
    plan.stage_ir[k] = Shape{c, h, w};
    if (level < kFusionLevels && cfg.wmfb_stages[level] == k + 1) {
      require_even(h, w, "wavelet input at stage " + std::to_string(k + 1));
      plan.pyramid[level] = Shape{c, h, w};
      h /= 2;
      w /= 2;
      plan.level_bands[level] = Shape{c, h, w};
      if (k + 1 < kStageCount) plan.stride_one[k + 1] = true;
      ++level;
    }
  }
  return plan;
}

BackboneWeights BackboneWeights::random(const PipelineConfig& cfg, Rng& rng) {
  BackboneWeights w;
  for (bool rgb : {true, false}) {
    auto& stream = rgb ? w.rgb : w.ir;
    for (std::size_t k = 0; k < kStageCount; ++k) {
      const std::size_t in = stage_input_channels(cfg, k, rgb);
      stream[k].depthwise = DepthwiseConv3x3::random(in, rng);
      stream[k].pointwise = Linear::random(in, cfg.stage_channels[k], rng);
    }
  }
  return w;
}

BackboneWeights BackboneWeights::zeros(const PipelineConfig& cfg) {
  BackboneWeights w;
  for (bool rgb : {true, false}) {
    auto& stream = rgb ? w.rgb : w.ir;
    for (std::size_t k = 0; k < kStageCount; ++k) {
      const std::size_t in = stage_input_channels(cfg, k, rgb);
      stream[k].depthwise = DepthwiseConv3x3::zeros(in);
      stream[k].pointwise = Linear::zeros(in, cfg.stage_channels[k]);
    }
  }
  return w;
}

FeatureMap backbone_stage(const FeatureMap& x, const BackboneStage& s,
                          std::size_t stride) {
  return silu(apply(s.pointwise, apply(s.depthwise, x, stride)));
}

std::vector<std::pair<FeatureMap, FeatureMap>> backbone_forward(
    const FeatureMap& img_rgb, const FeatureMap& img_ir,
    const BackboneWeights& w, std::size_t stages) {
  if (img_rgb.height() != img_ir.height() || img_rgb.width() != img_ir.width()) {
    throw Error("backbone_forward: RGB " + to_string(img_rgb.shape()) +
                " and IR " + to_string(img_ir.shape()) +
                " differ in spatial size");
  }
  if (stages > kStageCount) throw Error("backbone_forward: at most 5 stages");
  require_finite(img_rgb, "backbone_forward RGB input");
  require_finite(img_ir, "backbone_forward IR input");

  std::vector<std::pair<FeatureMap, FeatureMap>> out;
  FeatureMap rgb = img_rgb;
  FeatureMap ir = img_ir;
  for (std::size_t k = 0; k < stages; ++k) {
    require_even(rgb.height(), rgb.width(), "input of stage " + std::to_string(k + 1));
    std::array<FeatureMap, 2> next;
    parallel_for(2, [&](std::size_t s) {
      next[s] = s == 0 ? backbone_stage(rgb, w.rgb[k], 2)
                       : backbone_stage(ir, w.ir[k], 2);
    });
    rgb = std::move(next[0]);
    ir = std::move(next[1]);
    out.emplace_back(rgb, ir);
  }
  return out;
}

HeadWeights HeadWeights::random(
    const std::array<std::size_t, kFusionLevels>& channels, Rng& rng) {
  HeadWeights w;
  for (std::size_t i = 0; i < kFusionLevels; ++i) {
    const std::size_t c = channels[i];
    w.aggregate[i] = Linear::random(2 * c, c, rng);
    const std::size_t in = i + 1 < kFusionLevels ? c + channels[i + 1] : c;
    w.lateral[i] = Linear::random(in, c, rng);
  }
  return w;
}

HeadWeights HeadWeights::zeros(
    const std::array<std::size_t, kFusionLevels>& channels) {
  HeadWeights w;
  for (std::size_t i = 0; i < kFusionLevels; ++i) {
    const std::size_t c = channels[i];
    w.aggregate[i] = Linear::zeros(2 * c, c);
    const std::size_t in = i + 1 < kFusionLevels ? c + channels[i + 1] : c;
    w.lateral[i] = Linear::zeros(in, c);
  }
  return w;
}

PipelineWeights PipelineWeights::random(const PipelineConfig& cfg) {
  plan_shapes(cfg);
  Rng rng(cfg.seed);
  PipelineWeights w;
  w.backbone = BackboneWeights::random(cfg, rng);
  const auto channels = level_channels(cfg);
  for (std::size_t i = 0; i < kFusionLevels; ++i) {
    w.wmfb[i] = WmfbWeights::random(
        {channels[i], cfg.expand, cfg.d_state, cfg.shared_scan, cfg.swap_fraction},
        rng);
    w.wmfb[i].set_aggregation(cfg.ss2d_aggregation);
  }
  w.head = HeadWeights::random(channels, rng);
  return w;
}

PipelineWeights PipelineWeights::zeros(const PipelineConfig& cfg) {
  plan_shapes(cfg);
  PipelineWeights w;
  w.backbone = BackboneWeights::zeros(cfg);
  const auto channels = level_channels(cfg);
  for (std::size_t i = 0; i < kFusionLevels; ++i) {
    w.wmfb[i] = WmfbWeights::zeros(
        {channels[i], cfg.expand, cfg.d_state, cfg.shared_scan, cfg.swap_fraction});
    w.wmfb[i].set_aggregation(cfg.ss2d_aggregation);
  }
  w.head = HeadWeights::zeros(channels);
  return w;
}

FeatureMap upsample_zero_detail(const FeatureMap& x, std::size_t times) {
  FeatureMap current = x;
  for (std::size_t t = 0; t < times; ++t) {
    const Shape s = current.shape();
    current = idwt2_haar(
        SubBands{std::move(current), FeatureMap(s), FeatureMap(s), FeatureMap(s)});
  }
  return current;
}

FeatureMap upsample_nearest(const FeatureMap& x) {
  FeatureMap out(x.channels(), 2 * x.height(), 2 * x.width());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t y = 0; y < out.height(); ++y) {
      for (std::size_t i = 0; i < out.width(); ++i) {
        out.at(c, y, i) = 0.5f * x.at(c, y / 2, i / 2);
      }
    }
  }
  return out;
}

FeatureMap aggregate_low(const FusedLevel& level, HeadAggregate mode,
                         const Linear& projection) {
  if (mode == HeadAggregate::sum) return add(level.low_rgb, level.low_ir);
  return apply(projection, concat_channels(level.low_rgb, level.low_ir));
}

PyramidOutput head_forward(std::vector<FusedLevel> levels, const HeadWeights& w,
                           const HeadOptions& opts) {
  if (levels.size() != kFusionLevels) {
    throw Error("head_forward: expected 3 fused levels, got " +
                std::to_string(levels.size()));
  }
  for (const auto& lvl : levels) {
    require_same_shape(lvl.low_rgb, lvl.low_ir, "head_forward low bands");
    for (const FeatureMap* band : {&lvl.high.lh, &lvl.high.hl, &lvl.high.hh}) {
      require_same_shape(lvl.low_rgb, *band, "head_forward detail bands");
    }
  }
  std::array<std::size_t, kFusionLevels> steps{};
  for (std::size_t i = 0; i + 1 < kFusionLevels; ++i) {
    const Shape& fine = levels[i].low_rgb.shape();
    const Shape& coarse = levels[i + 1].low_rgb.shape();
    const std::size_t sy = power_of_two_ratio(fine.height, coarse.height);
    const std::size_t sx = power_of_two_ratio(fine.width, coarse.width);
    if (sy == 0 || sy != sx) {
      throw Error("head_forward: level " + std::to_string(i + 1) + " (" +
                  to_string(coarse) + ") is not a power-of-two reduction of " +
                  to_string(fine));
    }
    steps[i] = sy;
  }

  PyramidOutput out;
  for (std::size_t i = 0; i < kFusionLevels; ++i) {
    const FusedLevel& lvl = levels[i];
    FeatureMap final_low = aggregate_low(lvl, opts.aggregate, w.aggregate[i]);
    out.reconstructed[i] =
        opts.upsample == HeadUpsample::idwt
            ? idwt2_haar(SubBands{std::move(final_low), lvl.high.lh,
                                  lvl.high.hl, lvl.high.hh})
            : upsample_nearest(final_low);
  }

  out.maps[kFusionLevels - 1] =
      apply(w.lateral[kFusionLevels - 1], out.reconstructed[kFusionLevels - 1]);
  for (std::size_t i = kFusionLevels - 1; i-- > 0;) {
    const FeatureMap up = upsample_zero_detail(out.maps[i + 1], steps[i]);
    out.maps[i] = apply(w.lateral[i], concat_channels(out.reconstructed[i], up));
  }
  out.levels = std::move(levels);
  return out;
}

PyramidOutput wave_forward(const FeatureMap& img_rgb, const FeatureMap& img_ir,
                           const PipelineWeights& w, const PipelineConfig& cfg) {
  const ShapePlan plan = plan_shapes(cfg);
  const Shape rgb_shape{cfg.rgb_channels, cfg.height, cfg.width};
  const Shape ir_shape{cfg.ir_channels, cfg.height, cfg.width};
  if (img_rgb.shape() != rgb_shape || img_ir.shape() != ir_shape) {
    throw Error("wave_forward: inputs " + to_string(img_rgb.shape()) + " and " +
                to_string(img_ir.shape()) + " do not match config " +
                to_string(rgb_shape) + " and " + to_string(ir_shape));
  }
  require_finite(img_rgb, "wave_forward RGB input");
  require_finite(img_ir, "wave_forward IR input");

  std::vector<FusedLevel> levels;
  FeatureMap rgb = img_rgb;
  FeatureMap ir = img_ir;
  for (std::size_t k = 0; k < plan.evaluated_stages; ++k) {
    const std::size_t stride = plan.stride_one[k] ? 1 : 2;
    std::array<FeatureMap, 2> next;
    parallel_for(2, [&](std::size_t s) {
      next[s] = s == 0 ? backbone_stage(rgb, w.backbone.rgb[k], stride)
                       : backbone_stage(ir, w.backbone.ir[k], stride);
    });
    rgb = std::move(next[0]);
    ir = std::move(next[1]);

    if (levels.size() < kFusionLevels && cfg.wmfb_stages[levels.size()] == k + 1) {
      const SubBands sb_rgb = dwt2_haar(rgb);
      const SubBands sb_ir = dwt2_haar(ir);
      FusedLevel lvl = wmfb(sb_rgb.ll, sb_ir.ll, details(sb_rgb), details(sb_ir),
                            w.wmfb[levels.size()], cfg.fusion);
      rgb = lvl.low_rgb;
      ir = lvl.low_ir;
      levels.push_back(std::move(lvl));
    }
  }
  return head_forward(std::move(levels), w.head,
                      HeadOptions{cfg.head_aggregate, cfg.head_upsample});
}

}  // namespace wavefuse
