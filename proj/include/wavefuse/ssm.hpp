#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "wavefuse/feature_map.hpp"
#include "wavefuse/nn.hpp"
#include "wavefuse/rng.hpp"

namespace wavefuse {

/// Parameters of one selective-scan (S6) layer with diagonal state matrix.
///
/// For channel c the recurrence is
///   delta_t = softplus(proj_delta x_t + delta_bias)_c
///   h_t     = exp(delta_t A_c) * h_{t-1} + delta_t B_t x_{t,c}
///   y_{t,c} = <C_t, h_t> + d_skip_c x_{t,c}
/// with A = -exp(a_log), B_t = proj_b x_t and C_t = proj_c x_t.
struct ScanParams {
  std::size_t d_model = 0;
  std::size_t d_state = 0;
  std::vector<float> a_log;       // d_model x d_state
  std::vector<float> d_skip;      // d_model
  std::vector<float> proj_b;      // d_state x d_model
  std::vector<float> proj_c;      // d_state x d_model
  std::vector<float> proj_delta;  // d_model x d_model
  std::vector<float> delta_bias;  // d_model

  static ScanParams zeros(std::size_t d_model, std::size_t d_state);
  // A in [-1, -1e-3] (log-uniform), step size softplus(bias) in [1e-3, 1e-1].
  static ScanParams random(std::size_t d_model, std::size_t d_state, Rng& rng);
  void validate() const;
};

// T x d_model sequence, row-major by time step.
class Sequence {
 public:
  Sequence() = default;
  Sequence(std::size_t length, std::size_t dim)
      : length_(length), dim_(dim), data_(length * dim, 0.0f) {}
  Sequence(std::size_t length, std::size_t dim, std::vector<float> data);

  std::size_t length() const { return length_; }
  std::size_t dim() const { return dim_; }
  std::span<float> step(std::size_t t) {
    return std::span<float>(data_).subspan(t * dim_, dim_);
  }
  std::span<const float> step(std::size_t t) const {
    return std::span<const float>(data_).subspan(t * dim_, dim_);
  }
  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

 private:
  std::size_t length_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

Sequence selective_scan(const Sequence& seq, const ScanParams& p);

enum class Aggregation { sum, mean };

// Traversal orders of the 2D scan, in the order their outputs are summed.
enum class ScanOrder { row_forward, row_reverse, col_forward, col_reverse };
inline constexpr std::array<ScanOrder, 4> kScanOrders = {
    ScanOrder::row_forward, ScanOrder::row_reverse, ScanOrder::col_forward,
    ScanOrder::col_reverse};

// Flat pixel index (y * width + x) visited at each step of `order`.
std::vector<std::size_t> traversal(ScanOrder order, std::size_t height,
                                   std::size_t width);

struct Ss2dParams {
  // Either four entries (one per ScanOrder) or a single shared entry.
  std::vector<ScanParams> directions;
  Aggregation aggregation = Aggregation::sum;

  static Ss2dParams zeros(std::size_t d_model, std::size_t d_state,
                          bool shared = false);
  static Ss2dParams random(std::size_t d_model, std::size_t d_state, Rng& rng,
                           bool shared = false);
  const ScanParams& direction(std::size_t k) const {
    return directions.size() == 1 ? directions[0] : directions.at(k);
  }
  std::size_t d_model() const { return directions.at(0).d_model; }
  void validate() const;
};

// Four directional selective scans over the flattened map, each result folded
// back to its pixel positions and combined (sum by default).
FeatureMap ss2d(const FeatureMap& x, const Ss2dParams& p);

// embed -> depthwise 3x3 -> SiLU -> SS2D -> layer norm. Shared by the VSS
// block main path and both DFM streams.
struct ScanBranch {
  Linear embed;
  DepthwiseConv3x3 conv;
  Ss2dParams scan;
  LayerNorm norm;

  static ScanBranch zeros(std::size_t channels, std::size_t expand,
                          std::size_t d_state, bool shared_scan = false);
  static ScanBranch random(std::size_t channels, std::size_t expand,
                           std::size_t d_state, Rng& rng,
                           bool shared_scan = false);
  std::size_t in_channels() const { return embed.in; }
  std::size_t inner_channels() const { return embed.out; }
  void validate(const char* what) const;
};

FeatureMap scan_branch(const FeatureMap& x, const ScanBranch& b);

struct VssWeights {
  LayerNorm norm_in;
  ScanBranch main;  // embed_in, dwconv3x3, scan, norm_out
  Linear gate_proj;
  Linear embed_out;

  // Zero weights with unit layer-norm scales: the block is the identity.
  static VssWeights identity(std::size_t channels, std::size_t expand = 2,
                             std::size_t d_state = 16, bool shared_scan = false);
  static VssWeights random(std::size_t channels, std::size_t expand,
                           std::size_t d_state, Rng& rng,
                           bool shared_scan = false);
  std::size_t d_model() const { return norm_in.channels(); }
  void set_aggregation(Aggregation a) { main.scan.aggregation = a; }
  void validate() const;
};

// out = x + embed_out(main(norm_in(x)) * SiLU(gate_proj(norm_in(x))))
FeatureMap vss_block(const FeatureMap& x, const VssWeights& w);

}  // namespace wavefuse
