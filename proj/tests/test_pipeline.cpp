#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "wavefuse/parallel.hpp"
#include "wavefuse/pipeline.hpp"
#include "wavefuse/wavelet.hpp"

using namespace wavefuse;
using oracle::random_map;

namespace {

std::pair<FeatureMap, FeatureMap> images(const PipelineConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  return {random_map({cfg.rgb_channels, cfg.height, cfg.width}, gen, 0.0f, 1.0f),
          random_map({cfg.ir_channels, cfg.height, cfg.width}, gen, 0.0f, 1.0f)};
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.d_state = 4;
  return cfg;
}

FusedLevel level_with(FeatureMap low, FeatureMap detail) {
  FusedLevel l;
  l.low_ir = FeatureMap(low.shape());
  l.low_rgb = std::move(low);
  l.high = {detail, detail, detail};
  return l;
}

}  // namespace

TEST_CASE("backbone stub") {
  const PipelineConfig cfg = small_config();
  const auto [rgb, ir] = images(cfg, 1);
  Rng rng(1);
  const BackboneWeights w = BackboneWeights::random(cfg, rng);

  SUBCASE("two stride-2 stages reach a quarter of the input") {
    const auto stages = backbone_forward(rgb, ir, w, 2);
    REQUIRE(stages.size() == 2);
    CHECK(stages[1].first.shape() == Shape{cfg.stage_channels[1], 16, 16});
    CHECK(stages[1].second.shape() == Shape{cfg.stage_channels[1], 16, 16});
  }
  SUBCASE("zero images with zero biases give zero features") {
    BackboneWeights nb = w;
    for (auto* streams : {&nb.rgb, &nb.ir})
      for (auto& s : *streams) {
        std::ranges::fill(s.depthwise.bias, 0.0f);
        std::ranges::fill(s.pointwise.bias, 0.0f);
      }
    for (const auto& [a, b] : backbone_forward(FeatureMap(rgb.shape()), FeatureMap(ir.shape()), nb)) {
      for (float v : a.data()) CHECK(v == 0.0f);
      for (float v : b.data()) CHECK(v == 0.0f);
    }
  }
  SUBCASE("deterministic in the seed") {
    Rng r1(7), r2(7);
    const auto a = backbone_forward(rgb, ir, BackboneWeights::random(cfg, r1));
    const auto b = backbone_forward(rgb, ir, BackboneWeights::random(cfg, r2));
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].first == b[k].first);
      CHECK(a[k].second == b[k].second);
    }
  }
  SUBCASE("streams do not mix") {
    const auto base = backbone_forward(rgb, ir, w);
    const auto zeroed = backbone_forward(rgb, FeatureMap(ir.shape()), w);
    bool ir_changed = false;
    for (std::size_t k = 0; k < base.size(); ++k) {
      CHECK(base[k].first == zeroed[k].first);
      ir_changed = ir_changed || !(base[k].second == zeroed[k].second);
    }
    CHECK(ir_changed);
  }
  SUBCASE("mismatched inputs") {
    CHECK_THROWS_AS(backbone_forward(rgb, FeatureMap(Shape{1, 32, 32}), w), Error);
    CHECK_THROWS_AS(backbone_forward(FeatureMap(Shape{1, 64, 64}), ir, w), Error);
  }
}

TEST_CASE("shape plan against the closed-form calculator") {
  SUBCASE("defaults at 64x64") {
    const PipelineConfig cfg;
    const ShapePlan plan = plan_shapes(cfg);
    const auto want = oracle::shape_calculator(cfg);
    REQUIRE(want.valid);
    for (std::size_t i = 0; i < kFusionLevels; ++i) {
      CHECK(plan.level_bands[i] == want.bands[i]);
      CHECK(plan.pyramid[i] == want.pyramid[i]);
    }
    CHECK(plan.level_bands[0] == Shape{16, 8, 8});
    CHECK(plan.level_bands[1] == Shape{32, 4, 4});
    CHECK(plan.level_bands[2] == Shape{32, 1, 1});
  }
  SUBCASE("chains that hit an odd size are rejected") {
    PipelineConfig cfg;
    cfg.height = cfg.width = 96;
    CHECK_FALSE(oracle::shape_calculator(cfg).valid);
    CHECK_THROWS_AS(plan_shapes(cfg), Error);
    cfg.height = 128;
    cfg.width = 80;
    CHECK_THROWS_AS(plan_shapes(cfg), Error);
  }
  SUBCASE("other stage placements") {
    PipelineConfig cfg;
    for (const auto& stages : {std::array<std::size_t, 3>{1, 2, 3}, {1, 3, 4}, {3, 4, 5}}) {
      cfg.wmfb_stages = stages;
      const auto want = oracle::shape_calculator(cfg);
      REQUIRE(want.valid);
      const ShapePlan plan = plan_shapes(cfg);
      for (std::size_t i = 0; i < kFusionLevels; ++i) {
        CHECK(plan.level_bands[i] == want.bands[i]);
        CHECK(plan.pyramid[i] == want.pyramid[i]);
      }
    }
  }
  SUBCASE("invalid configs") {
    PipelineConfig cfg;
    cfg.wmfb_stages = {3, 2, 5};
    CHECK_THROWS_AS(plan_shapes(cfg), Error);
    cfg.wmfb_stages = {0, 2, 5};
    CHECK_THROWS_AS(plan_shapes(cfg), Error);
    cfg.wmfb_stages = {2, 3, 6};
    CHECK_THROWS_AS(plan_shapes(cfg), Error);
    cfg = PipelineConfig{};
    cfg.stage_channels[1] = 0;
    CHECK_THROWS_AS(plan_shapes(cfg), Error);
    cfg = PipelineConfig{};
    cfg.swap_fraction = 0.3;
    CHECK_THROWS_AS(plan_shapes(cfg), Error);
  }
}

TEST_CASE("head") {
  SUBCASE("constant low band over zero detail") {
    const float c = 3.0f;
    const FusedLevel l = level_with(FeatureMap::filled({1, 4, 4}, c), FeatureMap(Shape{1, 4, 4}));
    const PyramidOutput out = head_forward({l, level_with(FeatureMap(Shape{1, 2, 2}), FeatureMap(Shape{1, 2, 2})),
                                            level_with(FeatureMap(Shape{1, 1, 1}), FeatureMap(Shape{1, 1, 1}))},
                                           HeadWeights::zeros({1, 1, 1}));
    // Factor 1/2 from one inverse step on a constant block.
    CHECK(out.reconstructed[0].shape() == Shape{1, 8, 8});
    for (float v : out.reconstructed[0].data()) CHECK(v == doctest::Approx(c / 2.0));
  }
  SUBCASE("reconstruction keeps the sub-band energy") {
    std::mt19937_64 gen(3);
    std::vector<FusedLevel> levels;
    for (std::size_t s : {8u, 4u, 2u}) {
      FusedLevel l;
      l.low_rgb = random_map({2, s, s}, gen);
      l.low_ir = random_map({2, s, s}, gen);
      l.high = {random_map({2, s, s}, gen), random_map(Shape{2, s, s}, gen), random_map(Shape{2, s, s}, gen)};
      levels.push_back(l);
    }
    Rng rng(1);
    const PyramidOutput out = head_forward(levels, HeadWeights::random({2, 2, 2}, rng));
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& l = levels[i];
      const double e = sum_of_squares(add(l.low_rgb, l.low_ir)) + sum_of_squares(l.high.lh) +
                       sum_of_squares(l.high.hl) + sum_of_squares(l.high.hh);
      CHECK(std::abs(sum_of_squares(out.reconstructed[i]) - e) <= 1e-5 * e);
    }
    CHECK(out.maps[0].shape() == Shape{2, 16, 16});
    CHECK(out.maps[1].shape() == Shape{2, 8, 8});
    CHECK(out.maps[2].shape() == Shape{2, 4, 4});
  }
  SUBCASE("zero-detail upsampling equals the scaled nearest neighbour") {
    std::mt19937_64 gen(4);
    const FeatureMap x = random_map({3, 3, 5}, gen);
    CHECK(max_abs_diff(upsample_zero_detail(x, 1), upsample_nearest(x)) <= 1e-6);
    CHECK(upsample_zero_detail(x, 2).shape() == Shape{3, 12, 20});
  }
  SUBCASE("detail content separates the inverse transform from nearest upsampling") {
    std::mt19937_64 gen(5);
    std::vector<FusedLevel> levels;
    for (std::size_t s : {4u, 2u, 1u}) levels.push_back(level_with(random_map({2, s, s}, gen), FeatureMap(Shape{2, s, s})));
    Rng rng(2);
    const HeadWeights w = HeadWeights::random({2, 2, 2}, rng);
    const PyramidOutput a = head_forward(levels, w, {HeadAggregate::sum, HeadUpsample::idwt});
    const PyramidOutput b = head_forward(levels, w, {HeadAggregate::sum, HeadUpsample::nearest});
    for (std::size_t i = 0; i < 3; ++i) CHECK(max_abs_diff(a.maps[i], b.maps[i]) <= 1e-5);

    levels[1].high.hl.at(1, 0, 1) = 0.25f;
    const PyramidOutput c = head_forward(levels, w, {HeadAggregate::sum, HeadUpsample::idwt});
    const PyramidOutput d = head_forward(levels, w, {HeadAggregate::sum, HeadUpsample::nearest});
    CHECK(max_abs_diff(c.reconstructed[1], d.reconstructed[1]) > 0.0);
  }
  SUBCASE("concat aggregation") {
    std::mt19937_64 gen(6);
    std::vector<FusedLevel> levels;
    for (std::size_t s : {4u, 2u, 1u}) {
      FusedLevel l;
      l.low_rgb = random_map({2, s, s}, gen);
      l.low_ir = random_map({2, s, s}, gen);
      l.high = {FeatureMap(Shape{2, s, s}), FeatureMap(Shape{2, s, s}), FeatureMap(Shape{2, s, s})};
      levels.push_back(l);
    }
    Rng rng(3);
    const HeadWeights w = HeadWeights::random({2, 2, 2}, rng);
    const PyramidOutput out = head_forward(levels, w, {HeadAggregate::concat, HeadUpsample::idwt});
    const FeatureMap low = apply(w.aggregate[0], concat_channels(levels[0].low_rgb, levels[0].low_ir));
    const FeatureMap z(low.shape());
    CHECK(max_abs_diff(out.reconstructed[0], idwt2_haar({low, z, z, z})) <= 1e-6);
  }
  SUBCASE("broken chains") {
    const FusedLevel a = level_with(FeatureMap(Shape{1, 4, 4}), FeatureMap(Shape{1, 4, 4}));
    const FusedLevel b = level_with(FeatureMap(Shape{1, 3, 3}), FeatureMap(Shape{1, 3, 3}));
    const FusedLevel c = level_with(FeatureMap(Shape{1, 1, 1}), FeatureMap(Shape{1, 1, 1}));
    CHECK_THROWS_AS(head_forward({a, b, c}, HeadWeights::zeros({1, 1, 1})), Error);
    CHECK_THROWS_AS(head_forward({a, c}, HeadWeights::zeros({1, 1, 1})), Error);
    CHECK_THROWS_AS(head_forward({c, a, a}, HeadWeights::zeros({1, 1, 1})), Error);
  }
}

TEST_CASE("end-to-end forward pass") {
  const PipelineConfig cfg = small_config();
  const auto [rgb, ir] = images(cfg, 2);

  SUBCASE("shapes follow the calculator") {
    const PyramidOutput out = wave_forward(rgb, ir, PipelineWeights::random(cfg), cfg);
    const auto want = oracle::shape_calculator(cfg);
    REQUIRE(out.levels.size() == kFusionLevels);
    for (std::size_t i = 0; i < kFusionLevels; ++i) {
      CHECK(out.levels[i].low_rgb.shape() == want.bands[i]);
      CHECK(out.levels[i].high.hh.shape() == want.bands[i]);
      CHECK(out.maps[i].shape() == want.pyramid[i]);
      CHECK(out.maps[i].all_finite());
    }
  }
  SUBCASE("zero weights give zero outputs") {
    const PyramidOutput out = wave_forward(rgb, ir, PipelineWeights::zeros(cfg), cfg);
    for (const auto& m : out.maps)
      for (float v : m.data()) CHECK(v == 0.0f);
  }
  SUBCASE("averaging in place of both fusion rules") {
    PipelineConfig avg = cfg;
    avg.fusion.high = HighMode::avg;
    avg.fusion.low = LowMode::avg;
    const PyramidOutput out = wave_forward(rgb, ir, PipelineWeights::random(avg), avg);
    for (std::size_t i = 0; i < kFusionLevels; ++i) CHECK(out.maps[i].shape() == plan_shapes(avg).pyramid[i]);
  }
  SUBCASE("bitwise deterministic") {
    const PyramidOutput a = wave_forward(rgb, ir, PipelineWeights::random(cfg), cfg);
    const PyramidOutput b = wave_forward(rgb, ir, PipelineWeights::random(cfg), cfg);
    set_num_threads(3);
    const PyramidOutput c = wave_forward(rgb, ir, PipelineWeights::random(cfg), cfg);
    set_num_threads(1);
    for (std::size_t i = 0; i < kFusionLevels; ++i) {
      CHECK(a.maps[i] == b.maps[i]);
      CHECK(a.maps[i] == c.maps[i]);
    }
  }
  SUBCASE("seed changes the weights") {
    PipelineConfig other = cfg;
    other.seed = 1;
    const PyramidOutput a = wave_forward(rgb, ir, PipelineWeights::random(cfg), cfg);
    const PyramidOutput b = wave_forward(rgb, ir, PipelineWeights::random(other), other);
    CHECK_FALSE(a.maps[0] == b.maps[0]);
  }
  SUBCASE("input shape must match the config") {
    CHECK_THROWS_AS(wave_forward(FeatureMap(Shape{3, 32, 32}), FeatureMap(Shape{1, 32, 32}),
                                 PipelineWeights::random(cfg), cfg),
                    Error);
  }
}
