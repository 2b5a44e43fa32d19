#pragma once

#include <cstddef>
#include <utility>

#include "wavefuse/feature_map.hpp"
#include "wavefuse/rng.hpp"
#include "wavefuse/ssm.hpp"
#include "wavefuse/wavelet.hpp"

namespace wavefuse {

// How hfe treats |rgb| == |ir|. `inclusive` keeps the RGB coefficient;
// `strict` applies two strict "> 0" masks and therefore emits 0.
enum class TieMode { inclusive, strict };

enum class HighMode { avg, hfe };
enum class LowMode { avg, lmfb };

struct FusionOptions {
  TieMode tie = TieMode::inclusive;
  HighMode high = HighMode::hfe;
  LowMode low = LowMode::lmfb;
};

// Weights of one dual-role evaluation of the deep fusion module. The primary
// and auxiliary streams have their own scan branches; tie them by copying.
struct DfmWeights {
  ScanBranch primary;
  ScanBranch auxiliary;
  Linear gate;      // channels -> inner, with bias
  Linear proj_out;  // inner -> channels, bias-free

  static DfmWeights zeros(std::size_t channels, std::size_t expand,
                          std::size_t d_state, bool shared_scan = false);
  static DfmWeights random(std::size_t channels, std::size_t expand,
                           std::size_t d_state, Rng& rng,
                           bool shared_scan = false);
  std::size_t channels() const { return primary.in_channels(); }
  void set_aggregation(Aggregation a);
  void validate() const;
};

struct WmfbWeights {
  VssWeights sfm_vss_rgb;
  VssWeights sfm_vss_ir;
  DfmWeights role_rgb_primary;
  DfmWeights role_ir_primary;
  double swap_fraction = 0.5;

  struct Dims {
    std::size_t channels = 0;
    std::size_t expand = 2;
    std::size_t d_state = 16;
    bool shared_scan = false;
    double swap_fraction = 0.5;
  };

  static WmfbWeights random(const Dims& dims, Rng& rng);
  // SFM blocks are identities and DFM output projections are zero.
  static WmfbWeights zeros(const Dims& dims);
  std::size_t channels() const { return sfm_vss_rgb.d_model(); }
  void set_aggregation(Aggregation a);
  void validate() const;
};

struct FusedLevel {
  FeatureMap low_rgb;
  FeatureMap low_ir;
  DetailBands high;
};

// Exchanges the first fraction*C channels of a and b. fraction*C must be an
// integer; fraction 0 and 1 are accepted as degenerate cases.
std::pair<FeatureMap, FeatureMap> channel_swap(const FeatureMap& a,
                                               const FeatureMap& b,
                                               double fraction);

// Shallow fusion: channel swap, then one VSS block per modality.
std::pair<FeatureMap, FeatureMap> sfm(const FeatureMap& low_rgb,
                                      const FeatureMap& low_ir,
                                      const WmfbWeights& w);

// proj_out(g * z_primary + g * z_auxiliary), g = SiLU(gate(primary)).
FeatureMap dfm_directional(const FeatureMap& primary,
                           const FeatureMap& auxiliary, const DfmWeights& w);

// Each modality serves once as primary.
std::pair<FeatureMap, FeatureMap> dfm(const FeatureMap& f_rgb,
                                      const FeatureMap& f_ir,
                                      const WmfbWeights& w);

float hfe_select(float rgb, float ir, TieMode tie);
FeatureMap hfe(const FeatureMap& rgb, const FeatureMap& ir,
               TieMode tie = TieMode::inclusive);
DetailBands hfe(const DetailBands& rgb, const DetailBands& ir,
                TieMode tie = TieMode::inclusive);

DetailBands average(const DetailBands& a, const DetailBands& b);

FusedLevel wmfb(const FeatureMap& low_rgb, const FeatureMap& low_ir,
                const DetailBands& high_rgb, const DetailBands& high_ir,
                const WmfbWeights& w, const FusionOptions& opts = {});

}  // namespace wavefuse
