#include "wavefuse/ssm.hpp"

#include <cmath>
#include <string>

#include "wavefuse/parallel.hpp"

namespace wavefuse {

namespace {

void check_param(const std::vector<float>& v, std::size_t n, const char* field) {
  if (v.size() != n) {
    throw Error(std::string("scan params: ") + field + " has " +
                std::to_string(v.size()) + " values, expected " +
                std::to_string(n));
  }
  for (float f : v) {
    if (!std::isfinite(f)) {
      throw Error(std::string("scan params: ") + field + " is not finite");
    }
  }
}

}  // namespace

ScanParams ScanParams::zeros(std::size_t d_model, std::size_t d_state) {
  ScanParams p;
  p.d_model = d_model;
  p.d_state = d_state;
  p.a_log.assign(d_model * d_state, 0.0f);
  p.d_skip.assign(d_model, 0.0f);
  p.proj_b.assign(d_state * d_model, 0.0f);
  p.proj_c.assign(d_state * d_model, 0.0f);
  p.proj_delta.assign(d_model * d_model, 0.0f);
  p.delta_bias.assign(d_model, 0.0f);
  return p;
}

ScanParams ScanParams::random(std::size_t d_model, std::size_t d_state,
                              Rng& rng) {
  ScanParams p = zeros(d_model, d_state);
  const float bound = 1.0f / std::sqrt(static_cast<float>(d_model));
  const float log_min_a = std::log(1e-3f);
  for (float& v : p.a_log) v = log_min_a * rng.uniform();
  for (float& v : p.d_skip) v = 1.0f;
  for (float& v : p.proj_b) v = rng.uniform(-bound, bound);
  for (float& v : p.proj_c) v = rng.uniform(-bound, bound);
  for (float& v : p.proj_delta) v = rng.uniform(-bound, bound);
  const float log_dt_min = std::log(1e-3f);
  const float log_dt_max = std::log(1e-1f);
  for (float& v : p.delta_bias) {
    const float dt = std::exp(rng.uniform(log_dt_min, log_dt_max));
    v = dt + std::log(-std::expm1(-dt));  // inverse softplus
  }
  return p;
}

void ScanParams::validate() const {
  if (d_model == 0 || d_state == 0) {
    throw Error("scan params: d_model and d_state must be positive");
  }
  check_param(a_log, d_model * d_state, "a_log");
  check_param(d_skip, d_model, "d_skip");
  check_param(proj_b, d_state * d_model, "proj_b");
  check_param(proj_c, d_state * d_model, "proj_c");
  check_param(proj_delta, d_model * d_model, "proj_delta");
  check_param(delta_bias, d_model, "delta_bias");
}

Sequence::Sequence(std::size_t length, std::size_t dim, std::vector<float> data)
    : length_(length), dim_(dim), data_(std::move(data)) {
  if (data_.size() != length_ * dim_) {
    throw Error("sequence data length " + std::to_string(data_.size()) +
                " does not match " + std::to_string(length_) + "x" +
                std::to_string(dim_));
  }
}

Sequence selective_scan(const Sequence& seq, const ScanParams& p) {
  if (seq.length() == 0) throw Error("selective_scan: empty sequence");
  p.validate();
  if (seq.dim() != p.d_model) {
    throw Error("selective_scan: sequence dim " + std::to_string(seq.dim()) +
                " != d_model " + std::to_string(p.d_model));
  }

  const std::size_t dm = p.d_model;
  const std::size_t ds = p.d_state;
  std::vector<float> a(dm * ds);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = -std::exp(p.a_log[i]);

  std::vector<float> state(dm * ds, 0.0f);
  std::vector<float> b(ds), c(ds), delta(dm);
  Sequence y(seq.length(), dm);

  for (std::size_t t = 0; t < seq.length(); ++t) {
    const auto x = seq.step(t);
    for (std::size_t n = 0; n < ds; ++n) {
      float bn = 0.0f, cn = 0.0f;
      for (std::size_t j = 0; j < dm; ++j) {
        bn += p.proj_b[n * dm + j] * x[j];
        cn += p.proj_c[n * dm + j] * x[j];
      }
      b[n] = bn;
      c[n] = cn;
    }
    for (std::size_t ch = 0; ch < dm; ++ch) {
      float pre = p.delta_bias[ch];
      for (std::size_t j = 0; j < dm; ++j) pre += p.proj_delta[ch * dm + j] * x[j];
      delta[ch] = softplus(pre);
    }

    auto out = y.step(t);
    for (std::size_t ch = 0; ch < dm; ++ch) {
      float* h = state.data() + ch * ds;
      const float* a_ch = a.data() + ch * ds;
      const float dt = delta[ch];
      const float drive = dt * x[ch];
      float acc = 0.0f;
      for (std::size_t n = 0; n < ds; ++n) {
        h[n] = std::exp(dt * a_ch[n]) * h[n] + b[n] * drive;
        acc += c[n] * h[n];
      }
      out[ch] = acc + p.d_skip[ch] * x[ch];
    }
  }
  return y;
}

std::vector<std::size_t> traversal(ScanOrder order, std::size_t height,
                                   std::size_t width) {
  const std::size_t n = height * width;
  std::vector<std::size_t> idx(n);
  for (std::size_t t = 0; t < n; ++t) {
    switch (order) {
      case ScanOrder::row_forward:
        idx[t] = t;
        break;
      case ScanOrder::row_reverse:
        idx[t] = n - 1 - t;
        break;
      case ScanOrder::col_forward:
        idx[t] = (t % height) * width + t / height;
        break;
      case ScanOrder::col_reverse: {
        const std::size_t r = n - 1 - t;
        idx[t] = (r % height) * width + r / height;
        break;
      }
    }
  }
  return idx;
}

Ss2dParams Ss2dParams::zeros(std::size_t d_model, std::size_t d_state,
                             bool shared) {
  Ss2dParams p;
  p.directions.assign(shared ? 1 : 4, ScanParams::zeros(d_model, d_state));
  return p;
}

Ss2dParams Ss2dParams::random(std::size_t d_model, std::size_t d_state,
                              Rng& rng, bool shared) {
  Ss2dParams p;
  const std::size_t n = shared ? 1 : 4;
  for (std::size_t k = 0; k < n; ++k) {
    p.directions.push_back(ScanParams::random(d_model, d_state, rng));
  }
  return p;
}

void Ss2dParams::validate() const {
  if (directions.size() != 1 && directions.size() != 4) {
    throw Error("ss2d params: expected 1 or 4 direction parameter sets, got " +
                std::to_string(directions.size()));
  }
  for (const auto& d : directions) {
    d.validate();
    if (d.d_model != directions[0].d_model) {
      throw Error("ss2d params: directions disagree on d_model");
    }
  }
}

FeatureMap ss2d(const FeatureMap& x, const Ss2dParams& p) {
  p.validate();
  if (x.channels() != p.d_model()) {
    throw Error("ss2d: input has " + std::to_string(x.channels()) +
                " channels, params expect " + std::to_string(p.d_model()));
  }
  const std::size_t plane = x.shape().plane();
  const std::size_t channels = x.channels();

  std::array<FeatureMap, 4> partial;
  parallel_for(kScanOrders.size(), [&](std::size_t k) {
    const auto order = traversal(kScanOrders[k], x.height(), x.width());
    Sequence seq(plane, channels);
    for (std::size_t t = 0; t < plane; ++t) {
      auto step = seq.step(t);
      for (std::size_t c = 0; c < channels; ++c) step[c] = x.channel(c)[order[t]];
    }
    const Sequence y = selective_scan(seq, p.direction(k));
    FeatureMap out(x.shape());
    for (std::size_t t = 0; t < plane; ++t) {
      auto step = y.step(t);
      for (std::size_t c = 0; c < channels; ++c) out.channel(c)[order[t]] = step[c];
    }
    partial[k] = std::move(out);
  });

  FeatureMap sum = std::move(partial[0]);
  for (std::size_t k = 1; k < partial.size(); ++k) {
    auto dst = sum.data();
    const auto src = partial[k].data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  if (p.aggregation == Aggregation::mean) {
    for (float& v : sum.data()) v *= 0.25f;
  }
  return sum;
}

ScanBranch ScanBranch::zeros(std::size_t channels, std::size_t expand,
                             std::size_t d_state, bool shared_scan) {
  const std::size_t inner = channels * expand;
  return ScanBranch{Linear::zeros(channels, inner),
                    DepthwiseConv3x3::zeros(inner),
                    Ss2dParams::zeros(inner, d_state, shared_scan),
                    LayerNorm::identity(inner)};
}

ScanBranch ScanBranch::random(std::size_t channels, std::size_t expand,
                              std::size_t d_state, Rng& rng, bool shared_scan) {
  const std::size_t inner = channels * expand;
  ScanBranch b;
  b.embed = Linear::random(channels, inner, rng);
  b.conv = DepthwiseConv3x3::random(inner, rng);
  b.scan = Ss2dParams::random(inner, d_state, rng, shared_scan);
  b.norm = LayerNorm::identity(inner);
  return b;
}

void ScanBranch::validate(const char* what) const {
  embed.validate(what);
  conv.validate(what);
  scan.validate();
  norm.validate(what);
  if (conv.channels != embed.out || scan.d_model() != embed.out ||
      norm.channels() != embed.out) {
    throw Error(std::string(what) + ": inner channel counts disagree");
  }
}

FeatureMap scan_branch(const FeatureMap& x, const ScanBranch& b) {
  FeatureMap e = apply(b.embed, x);
  FeatureMap s = ss2d(silu(apply(b.conv, e)), b.scan);
  return apply(b.norm, s);
}

VssWeights VssWeights::identity(std::size_t channels, std::size_t expand,
                                std::size_t d_state, bool shared_scan) {
  const std::size_t inner = channels * expand;
  return VssWeights{LayerNorm::identity(channels),
                    ScanBranch::zeros(channels, expand, d_state, shared_scan),
                    Linear::zeros(channels, inner),
                    Linear::zeros(inner, channels)};
}

VssWeights VssWeights::random(std::size_t channels, std::size_t expand,
                              std::size_t d_state, Rng& rng, bool shared_scan) {
  const std::size_t inner = channels * expand;
  VssWeights w;
  w.norm_in = LayerNorm::identity(channels);
  w.main = ScanBranch::random(channels, expand, d_state, rng, shared_scan);
  w.gate_proj = Linear::random(channels, inner, rng);
  w.embed_out = Linear::random(inner, channels, rng);
  return w;
}

void VssWeights::validate() const {
  norm_in.validate("vss.norm_in");
  main.validate("vss.main");
  gate_proj.validate("vss.gate_proj");
  embed_out.validate("vss.embed_out");
  const std::size_t c = norm_in.channels();
  const std::size_t inner = main.inner_channels();
  if (main.in_channels() != c || gate_proj.in != c || gate_proj.out != inner ||
      embed_out.in != inner || embed_out.out != c) {
    throw Error("vss weights: projection shapes disagree");
  }
}

FeatureMap vss_block(const FeatureMap& x, const VssWeights& w) {
  w.validate();
  if (x.channels() != w.d_model()) {
    throw Error("vss_block: input has " + std::to_string(x.channels()) +
                " channels, weights expect " + std::to_string(w.d_model()));
  }
  const FeatureMap u = apply(w.norm_in, x);
  const FeatureMap v = scan_branch(u, w.main);
  const FeatureMap g = silu(apply(w.gate_proj, u));
  return add(x, apply(w.embed_out, multiply(v, g)));
}

}  // namespace wavefuse
