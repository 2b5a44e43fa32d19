#include "wavefuse/nn.hpp"

#include <algorithm>
#include <string>

namespace wavefuse {

namespace {

void require_len(const std::vector<float>& v, std::size_t n, const char* what,
                 const char* field) {
  if (v.size() != n) {
    throw Error(std::string(what) + "." + field + " has " +
                std::to_string(v.size()) + " values, expected " +
                std::to_string(n));
  }
  for (float f : v) {
    if (!std::isfinite(f)) {
      throw Error(std::string(what) + "." + field + " is not finite");
    }
  }
}

void fill_uniform(std::vector<float>& v, float bound, Rng& rng) {
  for (float& f : v) f = rng.uniform(-bound, bound);
}

}  // namespace

Linear Linear::zeros(std::size_t in, std::size_t out, bool with_bias) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight.assign(in * out, 0.0f);
  if (with_bias) l.bias.assign(out, 0.0f);
  return l;
}

Linear Linear::random(std::size_t in, std::size_t out, Rng& rng,
                      bool with_bias) {
  Linear l = zeros(in, out, with_bias);
  const float bound = 1.0f / std::sqrt(static_cast<float>(in));
  fill_uniform(l.weight, bound, rng);
  fill_uniform(l.bias, bound, rng);
  return l;
}

void Linear::validate(const char* what) const {
  if (in == 0 || out == 0) throw Error(std::string(what) + ": empty linear layer");
  require_len(weight, in * out, what, "weight");
  if (!bias.empty()) require_len(bias, out, what, "bias");
}

LayerNorm LayerNorm::identity(std::size_t channels) {
  return LayerNorm{std::vector<float>(channels, 1.0f),
                   std::vector<float>(channels, 0.0f)};
}

LayerNorm LayerNorm::zeros(std::size_t channels) {
  return LayerNorm{std::vector<float>(channels, 0.0f),
                   std::vector<float>(channels, 0.0f)};
}

void LayerNorm::validate(const char* what) const {
  if (scale.empty()) throw Error(std::string(what) + ": empty layer norm");
  require_len(offset, scale.size(), what, "offset");
  require_len(scale, scale.size(), what, "scale");
}

DepthwiseConv3x3 DepthwiseConv3x3::zeros(std::size_t channels, bool with_bias) {
  DepthwiseConv3x3 c;
  c.channels = channels;
  c.kernel.assign(channels * 9, 0.0f);
  if (with_bias) c.bias.assign(channels, 0.0f);
  return c;
}

DepthwiseConv3x3 DepthwiseConv3x3::random(std::size_t channels, Rng& rng,
                                          bool with_bias) {
  DepthwiseConv3x3 c = zeros(channels, with_bias);
  fill_uniform(c.kernel, 1.0f / 3.0f, rng);
  fill_uniform(c.bias, 1.0f / 3.0f, rng);
  return c;
}

void DepthwiseConv3x3::validate(const char* what) const {
  if (channels == 0) throw Error(std::string(what) + ": empty depthwise conv");
  require_len(kernel, channels * 9, what, "kernel");
  if (!bias.empty()) require_len(bias, channels, what, "bias");
}

FeatureMap apply(const Linear& layer, const FeatureMap& x) {
  if (x.channels() != layer.in) {
    throw Error("linear layer expects " + std::to_string(layer.in) +
                " channels, got " + std::to_string(x.channels()));
  }
  const std::size_t plane = x.shape().plane();
  FeatureMap y(layer.out, x.height(), x.width());
  for (std::size_t o = 0; o < layer.out; ++o) {
    auto dst = y.channel(o);
    const float b = layer.bias.empty() ? 0.0f : layer.bias[o];
    std::fill(dst.begin(), dst.end(), b);
    for (std::size_t i = 0; i < layer.in; ++i) {
      const float w = layer.weight[o * layer.in + i];
      if (w == 0.0f) continue;
      auto src = x.channel(i);
      for (std::size_t p = 0; p < plane; ++p) dst[p] += w * src[p];
    }
  }
  return y;
}

FeatureMap apply(const LayerNorm& norm, const FeatureMap& x) {
  const std::size_t channels = x.channels();
  if (channels != norm.channels()) {
    throw Error("layer norm expects " + std::to_string(norm.channels()) +
                " channels, got " + std::to_string(channels));
  }
  const std::size_t plane = x.shape().plane();
  FeatureMap y(x.shape());
  const auto src = x.data();
  auto dst = y.data();
  for (std::size_t p = 0; p < plane; ++p) {
    double mean = 0.0;
    for (std::size_t c = 0; c < channels; ++c) mean += src[c * plane + p];
    mean /= static_cast<double>(channels);
    double var = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const double d = src[c * plane + p] - mean;
      var += d * d;
    }
    var /= static_cast<double>(channels);
    const double inv = 1.0 / std::sqrt(var + norm.eps);
    for (std::size_t c = 0; c < channels; ++c) {
      const double n = (src[c * plane + p] - mean) * inv;
      dst[c * plane + p] = static_cast<float>(n * norm.scale[c] + norm.offset[c]);
    }
  }
  return y;
}

FeatureMap apply(const DepthwiseConv3x3& conv, const FeatureMap& x,
                 std::size_t stride) {
  if (x.channels() != conv.channels) {
    throw Error("depthwise conv expects " + std::to_string(conv.channels) +
                " channels, got " + std::to_string(x.channels()));
  }
  if (stride != 1 && stride != 2) throw Error("depthwise conv: stride must be 1 or 2");
  const auto h = static_cast<std::ptrdiff_t>(x.height());
  const auto w = static_cast<std::ptrdiff_t>(x.width());
  const std::size_t oh = (x.height() + stride - 1) / stride;
  const std::size_t ow = (x.width() + stride - 1) / stride;
  FeatureMap y(x.channels(), oh, ow);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const float* k = conv.kernel.data() + c * 9;
    const float b = conv.bias.empty() ? 0.0f : conv.bias[c];
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const auto cy = static_cast<std::ptrdiff_t>(oy * stride);
        const auto cx = static_cast<std::ptrdiff_t>(ox * stride);
        float acc = b;
        for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
          const std::ptrdiff_t iy = cy + dy;
          if (iy < 0 || iy >= h) continue;
          for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
            const std::ptrdiff_t ix = cx + dx;
            if (ix < 0 || ix >= w) continue;
            acc += k[(dy + 1) * 3 + (dx + 1)] *
                   x.at(c, static_cast<std::size_t>(iy),
                        static_cast<std::size_t>(ix));
          }
        }
        y.at(c, oy, ox) = acc;
      }
    }
  }
  return y;
}

FeatureMap silu(const FeatureMap& x) {
  FeatureMap y(x.shape());
  std::transform(x.data().begin(), x.data().end(), y.data().begin(),
                 [](float v) { return silu(v); });
  return y;
}

FeatureMap multiply(const FeatureMap& a, const FeatureMap& b) {
  require_same_shape(a, b, "multiply");
  FeatureMap y(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) y.data()[i] = a.data()[i] * b.data()[i];
  return y;
}

}  // namespace wavefuse
