#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wavefuse/feature_map.hpp"
#include "wavefuse/fusion.hpp"
#include "wavefuse/wavelet.hpp"

namespace wavefuse {

inline constexpr std::array<const char*, 4> kBandNames = {"LL", "LH", "HL", "HH"};

// Shannon entropy of a `bins`-bin histogram of the min-max normalized values,
// divided by ln(bins). A constant band has entropy 0.
double normalized_entropy(std::span<const float> values, std::size_t bins = 256);
double normalized_entropy(const FeatureMap& band, std::size_t bins = 256);

struct EntropyReport {
  std::array<double, 4> entropy{};       // LL, LH, HL, HH
  std::array<double, 4> energy_share{};  // sums to 1
  std::size_t samples = 0;               // coefficients per sub-band
  std::size_t bins = 0;

  double low_entropy() const { return entropy[0]; }
  double mean_high_entropy() const {
    return (entropy[1] + entropy[2] + entropy[3]) / 3.0;
  }
  double low_energy_share() const { return energy_share[0]; }
};

// One-level decomposition of x, then per-band entropy and energy share. An
// all-zero input reports its (zero) energy entirely in LL.
EntropyReport entropy_report(const FeatureMap& x, std::size_t bins = 256);

// One row of the fusion-strategy comparison: either the no-wavelet baseline
// (plain averaging of the two maps) or a (high, low) fusion pair.
struct Strategy {
  bool baseline = false;
  HighMode high = HighMode::hfe;
  LowMode low = LowMode::lmfb;

  std::string key() const;    // "baseline", "hfe-lmfb", ...
  std::string label() const;  // "baseline", "(HFE, LMFB)", ...
  bool operator==(const Strategy&) const = default;
};

// Baseline followed by (Avg, Avg), (Avg, LMFB), (HFE, Avg), (HFE, LMFB).
std::vector<Strategy> all_strategies();
Strategy parse_strategy(const std::string& key);

struct StrategyMetrics {
  double high_entropy = 0.0;      // mean normalized entropy of fused details
  double high_energy = 0.0;       // sum of squares of fused details
  double low_energy = 0.0;        // mean sum of squares of the two low maps
  double detail_retention = 0.0;  // exact-match fraction vs abs-max selection
};

struct StrategyRow {
  Strategy strategy;
  StrategyMetrics mean;
  std::vector<StrategyMetrics> per_pair;  // input order
};

struct StrategyMatrix {
  std::vector<StrategyRow> rows;
  std::size_t pairs = 0;

  const StrategyRow& row(const Strategy& s) const;
};

struct CompareConfig {
  std::vector<Strategy> strategies = all_strategies();
  std::size_t bins = 256;
  TieMode tie = TieMode::inclusive;
};

// Fraction of fused detail coefficients equal to the abs-max selection of
// the two inputs under `tie`.
double detail_retention(const DetailBands& fused, const DetailBands& rgb,
                        const DetailBands& ir, TieMode tie);

// Runs one fusion level per strategy on every (rgb, ir) pair. Means are
// accumulated over sorted per-pair values, so they do not depend on the
// order of `pairs`.
StrategyMatrix compare_strategies(
    const std::vector<std::pair<FeatureMap, FeatureMap>>& pairs,
    const WmfbWeights& weights, const CompareConfig& cfg = {});

// Line-delimited JSON, one record per sub-band / strategy row.
std::string to_jsonl(const EntropyReport& report);
std::string to_jsonl(const StrategyMatrix& matrix);

}  // namespace wavefuse
