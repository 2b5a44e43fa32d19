#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "wavefuse/feature_map.hpp"
#include "wavefuse/rng.hpp"

namespace wavefuse {

inline float silu(float v) { return v / (1.0f + std::exp(-v)); }

// Numerically stable log(1 + exp(v)).
inline float softplus(float v) {
  return v > 20.0f ? v : std::log1p(std::exp(v));
}

// Dense map applied independently at every spatial position (a 1x1 conv).
// weight is out x in, row-major; bias is empty or has `out` entries.
struct Linear {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<float> weight;
  std::vector<float> bias;

  static Linear zeros(std::size_t in, std::size_t out, bool with_bias = true);
  // Uniform in +-1/sqrt(in); bias drawn the same way when requested.
  static Linear random(std::size_t in, std::size_t out, Rng& rng,
                       bool with_bias = true);
  void validate(const char* what) const;
};

// Per-position normalization over channels with learnable scale and offset.
struct LayerNorm {
  std::vector<float> scale;
  std::vector<float> offset;
  float eps = 1e-5f;

  static LayerNorm identity(std::size_t channels);
  static LayerNorm zeros(std::size_t channels);
  std::size_t channels() const { return scale.size(); }
  void validate(const char* what) const;
};

// Depthwise 3x3 kernel, zero padding of one pixel.
struct DepthwiseConv3x3 {
  std::size_t channels = 0;
  std::vector<float> kernel;  // channels x 9, row-major taps
  std::vector<float> bias;    // empty or channels

  static DepthwiseConv3x3 zeros(std::size_t channels, bool with_bias = true);
  static DepthwiseConv3x3 random(std::size_t channels, Rng& rng,
                                 bool with_bias = true);
  void validate(const char* what) const;
};

FeatureMap apply(const Linear& layer, const FeatureMap& x);
FeatureMap apply(const LayerNorm& norm, const FeatureMap& x);
// stride 1 keeps the spatial size, stride 2 yields ceil(h/2) x ceil(w/2).
FeatureMap apply(const DepthwiseConv3x3& conv, const FeatureMap& x,
                 std::size_t stride = 1);

FeatureMap silu(const FeatureMap& x);
FeatureMap multiply(const FeatureMap& a, const FeatureMap& b);

}  // namespace wavefuse
