#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>

#include "wavefuse/feature_map.hpp"

namespace wavefuse {

enum class SynthKind {
  blur_complement,  // uniform-noise texture and its 3x3 box-blurred copy
  checker_smooth,   // pixel-pitch checkerboard and a linear ramp
  noise,            // two independent uniform-noise maps
};

SynthKind parse_synth_kind(const std::string& name);
std::string to_string(SynthKind kind);

// 3x3 (radius 1) or larger box filter with edge clamping.
FeatureMap box_blur(const FeatureMap& x, std::size_t radius = 1);

// Deterministic (rgb, ir) pair. IR channels of blur-complement are the blur of
// the channel mean of the RGB texture.
std::pair<FeatureMap, FeatureMap> synth_pair(SynthKind kind, std::size_t height,
                                             std::size_t width, std::uint64_t seed,
                                             std::size_t rgb_channels = 1,
                                             std::size_t ir_channels = 1);

}  // namespace wavefuse
