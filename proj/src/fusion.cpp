#include "wavefuse/fusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <tuple>

#include "wavefuse/parallel.hpp"

namespace wavefuse {

namespace {

std::size_t swap_count(double fraction, std::size_t channels) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error("channel_swap: fraction must lie in [0, 1], got " +
                std::to_string(fraction));
  }
  const double k = fraction * static_cast<double>(channels);
  const double rounded = std::round(k);
  if (std::abs(k - rounded) > 1e-9) {
    throw Error("channel_swap: fraction " + std::to_string(fraction) +
                " of " + std::to_string(channels) +
                " channels is not an integer split");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

DfmWeights DfmWeights::zeros(std::size_t channels, std::size_t expand,
                             std::size_t d_state, bool shared_scan) {
  const std::size_t inner = channels * expand;
  return DfmWeights{ScanBranch::zeros(channels, expand, d_state, shared_scan),
                    ScanBranch::zeros(channels, expand, d_state, shared_scan),
                    Linear::zeros(channels, inner),
                    Linear::zeros(inner, channels, /*with_bias=*/false)};
}

DfmWeights DfmWeights::random(std::size_t channels, std::size_t expand,
                              std::size_t d_state, Rng& rng, bool shared_scan) {
  const std::size_t inner = channels * expand;
  DfmWeights w;
  w.primary = ScanBranch::random(channels, expand, d_state, rng, shared_scan);
  w.auxiliary = ScanBranch::random(channels, expand, d_state, rng, shared_scan);
  w.gate = Linear::random(channels, inner, rng);
  w.proj_out = Linear::random(inner, channels, rng, /*with_bias=*/false);
  return w;
}

void DfmWeights::set_aggregation(Aggregation a) {
  primary.scan.aggregation = a;
  auxiliary.scan.aggregation = a;
}

void DfmWeights::validate() const {
  primary.validate("dfm.primary");
  auxiliary.validate("dfm.auxiliary");
  gate.validate("dfm.gate");
  proj_out.validate("dfm.proj_out");
  const std::size_t c = primary.in_channels();
  const std::size_t inner = primary.inner_channels();
  if (auxiliary.in_channels() != c || auxiliary.inner_channels() != inner ||
      gate.in != c || gate.out != inner || proj_out.in != inner ||
      proj_out.out != c) {
    throw Error("dfm weights: projection shapes disagree");
  }
  if (!proj_out.bias.empty()) throw Error("dfm weights: proj_out must be bias-free");
}

WmfbWeights WmfbWeights::random(const Dims& d, Rng& rng) {
  WmfbWeights w;
  w.sfm_vss_rgb = VssWeights::random(d.channels, d.expand, d.d_state, rng, d.shared_scan);
  w.sfm_vss_ir = VssWeights::random(d.channels, d.expand, d.d_state, rng, d.shared_scan);
  w.role_rgb_primary = DfmWeights::random(d.channels, d.expand, d.d_state, rng, d.shared_scan);
  w.role_ir_primary = DfmWeights::random(d.channels, d.expand, d.d_state, rng, d.shared_scan);
  w.swap_fraction = d.swap_fraction;
  w.validate();
  return w;
}

WmfbWeights WmfbWeights::zeros(const Dims& d) {
  WmfbWeights w;
  w.sfm_vss_rgb = VssWeights::identity(d.channels, d.expand, d.d_state, d.shared_scan);
  w.sfm_vss_ir = VssWeights::identity(d.channels, d.expand, d.d_state, d.shared_scan);
  w.role_rgb_primary = DfmWeights::zeros(d.channels, d.expand, d.d_state, d.shared_scan);
  w.role_ir_primary = DfmWeights::zeros(d.channels, d.expand, d.d_state, d.shared_scan);
  w.swap_fraction = d.swap_fraction;
  w.validate();
  return w;
}

void WmfbWeights::set_aggregation(Aggregation a) {
  sfm_vss_rgb.set_aggregation(a);
  sfm_vss_ir.set_aggregation(a);
  role_rgb_primary.set_aggregation(a);
  role_ir_primary.set_aggregation(a);
}

void WmfbWeights::validate() const {
  sfm_vss_rgb.validate();
  sfm_vss_ir.validate();
  role_rgb_primary.validate();
  role_ir_primary.validate();
  const std::size_t c = sfm_vss_rgb.d_model();
  if (sfm_vss_ir.d_model() != c || role_rgb_primary.channels() != c ||
      role_ir_primary.channels() != c) {
    throw Error("wmfb weights: sub-blocks disagree on channel count");
  }
  if (!(swap_fraction > 0.0 && swap_fraction < 1.0)) {
    throw Error("wmfb weights: swap_fraction must lie in (0, 1)");
  }
  swap_count(swap_fraction, c);
}

std::pair<FeatureMap, FeatureMap> channel_swap(const FeatureMap& a,
                                               const FeatureMap& b,
                                               double fraction) {
  require_same_shape(a, b, "channel_swap");
  const std::size_t k = swap_count(fraction, a.channels());
  const auto split = static_cast<std::ptrdiff_t>(k * a.shape().plane());
  FeatureMap out_a = a;
  FeatureMap out_b = b;
  std::copy(b.data().begin(), b.data().begin() + split, out_a.data().begin());
  std::copy(a.data().begin(), a.data().begin() + split, out_b.data().begin());
  return {std::move(out_a), std::move(out_b)};
}

std::pair<FeatureMap, FeatureMap> sfm(const FeatureMap& low_rgb,
                                      const FeatureMap& low_ir,
                                      const WmfbWeights& w) {
  auto [t_rgb, t_ir] = channel_swap(low_rgb, low_ir, w.swap_fraction);
  return {vss_block(t_rgb, w.sfm_vss_rgb), vss_block(t_ir, w.sfm_vss_ir)};
}

FeatureMap dfm_directional(const FeatureMap& primary,
                           const FeatureMap& auxiliary, const DfmWeights& w) {
  require_same_shape(primary, auxiliary, "dfm_directional");
  w.validate();
  const FeatureMap z_p = scan_branch(primary, w.primary);
  const FeatureMap z_a = scan_branch(auxiliary, w.auxiliary);
  const FeatureMap g = silu(apply(w.gate, primary));
  return apply(w.proj_out, add(multiply(g, z_p), multiply(g, z_a)));
}

std::pair<FeatureMap, FeatureMap> dfm(const FeatureMap& f_rgb,
                                      const FeatureMap& f_ir,
                                      const WmfbWeights& w) {
  std::array<FeatureMap, 2> out;
  parallel_for(2, [&](std::size_t role) {
    out[role] = role == 0 ? dfm_directional(f_rgb, f_ir, w.role_rgb_primary)
                          : dfm_directional(f_ir, f_rgb, w.role_ir_primary);
  });
  return {std::move(out[0]), std::move(out[1])};
}

float hfe_select(float rgb, float ir, TieMode tie) {
  const float ar = std::abs(rgb);
  const float ai = std::abs(ir);
  if (ar > ai) return rgb;
  if (ai > ar) return ir;
  return tie == TieMode::inclusive ? rgb : 0.0f;
}

FeatureMap hfe(const FeatureMap& rgb, const FeatureMap& ir, TieMode tie) {
  require_same_shape(rgb, ir, "hfe");
  FeatureMap out(rgb.shape());
  const auto r = rgb.data();
  const auto i = ir.data();
  auto o = out.data();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = hfe_select(r[k], i[k], tie);
  return out;
}

DetailBands hfe(const DetailBands& rgb, const DetailBands& ir, TieMode tie) {
  return {hfe(rgb.lh, ir.lh, tie), hfe(rgb.hl, ir.hl, tie),
          hfe(rgb.hh, ir.hh, tie)};
}

DetailBands average(const DetailBands& a, const DetailBands& b) {
  return {average(a.lh, b.lh), average(a.hl, b.hl), average(a.hh, b.hh)};
}

FusedLevel wmfb(const FeatureMap& low_rgb, const FeatureMap& low_ir,
                const DetailBands& high_rgb, const DetailBands& high_ir,
                const WmfbWeights& w, const FusionOptions& opts) {
  require_same_shape(low_rgb, low_ir, "wmfb low bands");
  for (const FeatureMap* band : {&high_rgb.lh, &high_rgb.hl, &high_rgb.hh,
                                 &high_ir.lh, &high_ir.hl, &high_ir.hh}) {
    require_same_shape(low_rgb, *band, "wmfb detail bands");
  }

  FusedLevel out;
  if (opts.low == LowMode::lmfb) {
    auto [s_rgb, s_ir] = sfm(low_rgb, low_ir, w);
    std::tie(out.low_rgb, out.low_ir) = dfm(s_rgb, s_ir, w);
  } else {
    out.low_rgb = average(low_rgb, low_ir);
    out.low_ir = out.low_rgb;
  }
  out.high = opts.high == HighMode::hfe ? hfe(high_rgb, high_ir, opts.tie)
                                        : average(high_rgb, high_ir);
  return out;
}

}  // namespace wavefuse
