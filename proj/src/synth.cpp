#include "wavefuse/synth.hpp"

#include <algorithm>

#include "wavefuse/rng.hpp"

namespace wavefuse {

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "blur-complement") return SynthKind::blur_complement;
  if (name == "checker-smooth") return SynthKind::checker_smooth;
  if (name == "noise") return SynthKind::noise;
  throw Error("unknown synth kind '" + name +
              "' (expected blur-complement, checker-smooth or noise)");
}

std::string to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::blur_complement:
      return "blur-complement";
    case SynthKind::checker_smooth:
      return "checker-smooth";
    case SynthKind::noise:
      return "noise";
  }
  return "unknown";
}

FeatureMap box_blur(const FeatureMap& x, std::size_t radius) {
  const auto h = static_cast<std::ptrdiff_t>(x.height());
  const auto w = static_cast<std::ptrdiff_t>(x.width());
  const auto r = static_cast<std::ptrdiff_t>(radius);
  const float norm = 1.0f / static_cast<float>((2 * r + 1) * (2 * r + 1));
  FeatureMap out(x.shape());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::ptrdiff_t y = 0; y < h; ++y) {
      for (std::ptrdiff_t i = 0; i < w; ++i) {
        float acc = 0.0f;
        for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
          const auto yy = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y + dy, 0, h - 1));
          for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
            const auto xx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i + dx, 0, w - 1));
            acc += x.at(c, yy, xx);
          }
        }
        out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(i)) = acc * norm;
      }
    }
  }
  return out;
}

std::pair<FeatureMap, FeatureMap> synth_pair(SynthKind kind, std::size_t height,
                                             std::size_t width, std::uint64_t seed,
                                             std::size_t rgb_channels,
                                             std::size_t ir_channels) {
  if (height == 0 || width == 0) throw Error("synth_pair: zero size");
  if (rgb_channels == 0 || ir_channels == 0) throw Error("synth_pair: zero channels");

  Rng rng(seed);
  FeatureMap rgb(rgb_channels, height, width);
  FeatureMap ir(ir_channels, height, width);

  switch (kind) {
    case SynthKind::blur_complement: {
      for (float& v : rgb.data()) v = rng.uniform();
      FeatureMap mean(1, height, width);
      for (std::size_t c = 0; c < rgb_channels; ++c) {
        for (std::size_t p = 0; p < mean.size(); ++p) mean.data()[p] += rgb.channel(c)[p];
      }
      for (float& v : mean.data()) v /= static_cast<float>(rgb_channels);
      const FeatureMap blurred = box_blur(mean, 1);
      for (std::size_t c = 0; c < ir_channels; ++c) {
        std::copy(blurred.data().begin(), blurred.data().end(), ir.channel(c).begin());
      }
      break;
    }
    case SynthKind::checker_smooth: {
      const std::size_t phase = seed % 2;
      const bool vertical_ramp = (seed / 2) % 2 == 1;
      const float span = static_cast<float>(std::max<std::size_t>(
          1, vertical_ramp ? height - 1 : width - 1));
      for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
          const float checker = (x + y + phase) % 2 == 0 ? 1.0f : 0.0f;
          const float ramp = static_cast<float>(vertical_ramp ? y : x) / span;
          for (std::size_t c = 0; c < rgb_channels; ++c) rgb.at(c, y, x) = checker;
          for (std::size_t c = 0; c < ir_channels; ++c) ir.at(c, y, x) = ramp;
        }
      }
      break;
    }
    case SynthKind::noise:
      for (float& v : rgb.data()) v = rng.uniform();
      for (float& v : ir.data()) v = rng.uniform();
      break;
  }
  return {std::move(rgb), std::move(ir)};
}

}  // namespace wavefuse
