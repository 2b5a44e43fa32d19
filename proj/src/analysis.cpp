#include "wavefuse/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "wavefuse/parallel.hpp"

namespace wavefuse {

namespace {

double ordered_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

double detail_energy(const DetailBands& d) {
  return sum_of_squares(d.lh) + sum_of_squares(d.hl) + sum_of_squares(d.hh);
}

StrategyMetrics evaluate(const Strategy& s, const FeatureMap& rgb,
                         const FeatureMap& ir, const SubBands& sb_rgb,
                         const SubBands& sb_ir, const WmfbWeights& weights,
                         const CompareConfig& cfg) {
  FusedLevel fused;
  if (s.baseline) {
    const SubBands sb = dwt2_haar(average(rgb, ir));
    fused = FusedLevel{sb.ll, sb.ll, details(sb)};
  } else {
    fused = wmfb(sb_rgb.ll, sb_ir.ll, details(sb_rgb), details(sb_ir), weights,
                 FusionOptions{cfg.tie, s.high, s.low});
  }
  StrategyMetrics m;
  m.high_entropy = (normalized_entropy(fused.high.lh, cfg.bins) +
                    normalized_entropy(fused.high.hl, cfg.bins) +
                    normalized_entropy(fused.high.hh, cfg.bins)) /
                   3.0;
  m.high_energy = detail_energy(fused.high);
  m.low_energy = 0.5 * (sum_of_squares(fused.low_rgb) + sum_of_squares(fused.low_ir));
  m.detail_retention =
      detail_retention(fused.high, details(sb_rgb), details(sb_ir), cfg.tie);
  return m;
}

}  // namespace

double normalized_entropy(std::span<const float> values, std::size_t bins) {
  if (values.empty()) throw Error("normalized_entropy: empty band");
  if (bins < 2) throw Error("normalized_entropy: bins must be at least 2");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error("normalized_entropy: non-finite values");
  }
  if (hi == lo) return 0.0;

  std::vector<std::size_t> counts(bins, 0);
  const double range = hi - lo;
  for (float v : values) {
    const double n = (static_cast<double>(v) - lo) / range;
    const auto b = std::min(bins - 1, static_cast<std::size_t>(n * bins));
    ++counts[b];
  }
  const double total = static_cast<double>(values.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(bins)), 0.0, 1.0);
}

double normalized_entropy(const FeatureMap& band, std::size_t bins) {
  return normalized_entropy(band.data(), bins);
}

EntropyReport entropy_report(const FeatureMap& x, std::size_t bins) {
  const SubBands sb = dwt2_haar(x);
  const std::array<const FeatureMap*, 4> bands = {&sb.ll, &sb.lh, &sb.hl, &sb.hh};
  EntropyReport r;
  r.bins = bins;
  r.samples = sb.ll.size();
  std::array<double, 4> energy{};
  for (std::size_t i = 0; i < 4; ++i) {
    r.entropy[i] = normalized_entropy(*bands[i], bins);
    energy[i] = sum_of_squares(*bands[i]);
  }
  const double total = energy[0] + energy[1] + energy[2] + energy[3];
  if (total == 0.0) {
    r.energy_share = {1.0, 0.0, 0.0, 0.0};
  } else {
    for (std::size_t i = 0; i < 4; ++i) r.energy_share[i] = energy[i] / total;
  }
  return r;
}

std::string Strategy::key() const {
  if (baseline) return "baseline";
  return std::string(high == HighMode::hfe ? "hfe" : "avg") + "-" +
         (low == LowMode::lmfb ? "lmfb" : "avg");
}

std::string Strategy::label() const {
  if (baseline) return "baseline";
  return std::string("(") + (high == HighMode::hfe ? "HFE" : "Avg") + ", " +
         (low == LowMode::lmfb ? "LMFB" : "Avg") + ")";
}

std::vector<Strategy> all_strategies() {
  return {Strategy{true, HighMode::avg, LowMode::avg},
          Strategy{false, HighMode::avg, LowMode::avg},
          Strategy{false, HighMode::avg, LowMode::lmfb},
          Strategy{false, HighMode::hfe, LowMode::avg},
          Strategy{false, HighMode::hfe, LowMode::lmfb}};
}

Strategy parse_strategy(const std::string& key) {
  for (const Strategy& s : all_strategies()) {
    if (s.key() == key) return s;
  }
  throw Error("unknown strategy '" + key +
              "' (expected baseline, avg-avg, avg-lmfb, hfe-avg or hfe-lmfb)");
}

const StrategyRow& StrategyMatrix::row(const Strategy& s) const {
  for (const auto& r : rows) {
    if (r.strategy == s) return r;
  }
  throw Error("strategy " + s.label() + " was not evaluated");
}

double detail_retention(const DetailBands& fused, const DetailBands& rgb,
                        const DetailBands& ir, TieMode tie) {
  std::size_t match = 0;
  std::size_t total = 0;
  const std::array<std::array<const FeatureMap*, 3>, 3> bands = {{
      {&fused.lh, &rgb.lh, &ir.lh},
      {&fused.hl, &rgb.hl, &ir.hl},
      {&fused.hh, &rgb.hh, &ir.hh},
  }};
  for (const auto& [f, r, i] : bands) {
    require_same_shape(*f, *r, "detail_retention");
    require_same_shape(*f, *i, "detail_retention");
    for (std::size_t k = 0; k < f->size(); ++k) {
      match += f->data()[k] == hfe_select(r->data()[k], i->data()[k], tie);
    }
    total += f->size();
  }
  return total == 0 ? 0.0 : static_cast<double>(match) / static_cast<double>(total);
}

StrategyMatrix compare_strategies(
    const std::vector<std::pair<FeatureMap, FeatureMap>>& pairs,
    const WmfbWeights& weights, const CompareConfig& cfg) {
  if (pairs.empty()) throw Error("compare_strategies: no input pairs");
  if (cfg.strategies.empty()) throw Error("compare_strategies: no strategies");

  const std::size_t n = pairs.size();
  std::vector<std::vector<StrategyMetrics>> per_pair(n);
  parallel_for(n, [&](std::size_t p) {
    const auto& [rgb, ir] = pairs[p];
    require_same_shape(rgb, ir, "compare_strategies pair");
    const SubBands sb_rgb = dwt2_haar(rgb);
    const SubBands sb_ir = dwt2_haar(ir);
    for (const Strategy& s : cfg.strategies) {
      per_pair[p].push_back(evaluate(s, rgb, ir, sb_rgb, sb_ir, weights, cfg));
    }
  });

  StrategyMatrix out;
  out.pairs = n;
  for (std::size_t k = 0; k < cfg.strategies.size(); ++k) {
    StrategyRow row;
    row.strategy = cfg.strategies[k];
    std::vector<double> he, hn, le, dr;
    for (std::size_t p = 0; p < n; ++p) {
      const StrategyMetrics& m = per_pair[p][k];
      row.per_pair.push_back(m);
      he.push_back(m.high_entropy);
      hn.push_back(m.high_energy);
      le.push_back(m.low_energy);
      dr.push_back(m.detail_retention);
    }
    row.mean = StrategyMetrics{ordered_mean(std::move(he)), ordered_mean(std::move(hn)),
                               ordered_mean(std::move(le)), ordered_mean(std::move(dr))};
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string to_jsonl(const EntropyReport& report) {
  std::string out;
  for (std::size_t i = 0; i < 4; ++i) {
    nlohmann::json rec = {{"band", kBandNames[i]},
                          {"normalized_entropy", report.entropy[i]},
                          {"energy_share", report.energy_share[i]},
                          {"samples", report.samples},
                          {"bins", report.bins}};
    out += rec.dump() + "\n";
  }
  return out;
}

std::string to_jsonl(const StrategyMatrix& matrix) {
  std::string out;
  for (const auto& row : matrix.rows) {
    nlohmann::json rec = {
        {"strategy", row.strategy.label()},
        {"key", row.strategy.key()},
        {"pairs", matrix.pairs},
        {"high_entropy", row.mean.high_entropy},
        {"high_energy", row.mean.high_energy},
        {"low_energy", row.mean.low_energy},
        {"detail_retention", row.mean.detail_retention},
        {"detail_retention_kind",
         "proxy: exact-match fraction against abs-max selection"}};
    out += rec.dump() + "\n";
  }
  return out;
}

}  // namespace wavefuse
