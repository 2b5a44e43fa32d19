// wavefuse: command-line front end for the wavelet/selective-scan fusion
// library. Exit codes: 0 ok, 1 usage or config error, 2 data error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wavefuse/analysis.hpp"
#include "wavefuse/config.hpp"
#include "wavefuse/fusion.hpp"
#include "wavefuse/io.hpp"
#include "wavefuse/parallel.hpp"
#include "wavefuse/pipeline.hpp"
#include "wavefuse/ssm.hpp"
#include "wavefuse/synth.hpp"
#include "wavefuse/wavelet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wavefuse;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Size2 {
  std::size_t height = 64;
  std::size_t width = 64;
};

Size2 parse_size(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t used = 0;
    const std::string hs = s.substr(0, x);
    const std::string ws = s.substr(x + 1);
    Size2 out{std::stoul(hs, &used), 0};
    if (used != hs.size()) throw std::invalid_argument(s);
    out.width = std::stoul(ws, &used);
    if (used != ws.size()) throw std::invalid_argument(s);
    if (out.height == 0 || out.width == 0) throw UsageError("size must be positive: " + s);
    return out;
  } catch (const std::logic_error&) {
    throw UsageError("size must look like HxW, got '" + s + "'");
  }
}

json shape_json(const Shape& s) { return json::array({s.channels, s.height, s.width}); }

std::string band_path(const std::string& prefix, std::size_t level, const char* band) {
  return prefix + ".l" + std::to_string(level) + "." + band + ".wmt";
}

void write_output(const fs::path& path, const FeatureMap& x) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm" || ext == ".ppm") {
    save_pnm(path, x);
  } else {
    write_feature_map(path, x);
  }
}

int cmd_dwt(const std::string& in, const std::string& prefix, std::size_t levels) {
  const FeatureMap x = load_input(in);
  const auto bands = dwt2_multilevel(x, levels);
  json files = json::array();
  for (std::size_t k = 0; k < bands.size(); ++k) {
    const std::array<std::pair<const char*, const FeatureMap*>, 4> named = {{
        {"ll", &bands[k].ll}, {"lh", &bands[k].lh}, {"hl", &bands[k].hl}, {"hh", &bands[k].hh}}};
    for (const auto& [name, map] : named) {
      const std::string path = band_path(prefix, k + 1, name);
      write_feature_map(path, *map);
      files.push_back(path);
    }
  }
  std::cout << json{{"command", "dwt"}, {"levels", levels}, {"input", shape_json(x.shape())},
                    {"files", files}}.dump()
            << "\n";
  return 0;
}

int cmd_idwt(const std::string& prefix, const std::string& out) {
  std::vector<SubBands> levels;
  for (std::size_t k = 1; fs::exists(band_path(prefix, k, "lh")); ++k) {
    SubBands s;
    s.lh = read_feature_map(band_path(prefix, k, "lh"));
    s.hl = read_feature_map(band_path(prefix, k, "hl"));
    s.hh = read_feature_map(band_path(prefix, k, "hh"));
    levels.push_back(std::move(s));
  }
  if (levels.empty()) {
    throw Error("no sub-band files found for prefix '" + prefix + "' (expected " +
                band_path(prefix, 1, "lh") + ")");
  }
  levels.back().ll = read_feature_map(band_path(prefix, levels.size(), "ll"));
  const FeatureMap x = idwt2_multilevel(levels);
  write_output(out, x);
  std::cout << json{{"command", "idwt"}, {"levels", levels.size()},
                    {"output", shape_json(x.shape())}}.dump()
            << "\n";
  return 0;
}

FeatureMap replicate_channels(const FeatureMap& x, std::size_t channels) {
  FeatureMap out(channels, x.height(), x.width());
  for (std::size_t c = 0; c < channels; ++c) {
    std::ranges::copy(x.channel(0), out.channel(c).begin());
  }
  return out;
}

// fuse/compare run one block directly on the inputs, so a single-channel
// map is repeated to match the other modality's channel count.
std::pair<FeatureMap, FeatureMap> load_pair(const InputPair& p) {
  FeatureMap rgb = load_input(p.rgb);
  FeatureMap ir = load_input(p.ir);
  if (ir.channels() == 1 && rgb.channels() > 1) ir = replicate_channels(ir, rgb.channels());
  if (rgb.channels() == 1 && ir.channels() > 1) rgb = replicate_channels(rgb, ir.channels());
  return {std::move(rgb), std::move(ir)};
}

const InputPair& single_input(const RunConfig& cfg) {
  if (cfg.inputs.empty()) throw ConfigError("rgb", "an input pair is required");
  if (cfg.inputs.size() > 1) throw ConfigError("pairs", "exactly one input pair is expected");
  return cfg.inputs.front();
}

WmfbWeights seeded_wmfb(const PipelineConfig& p, std::size_t channels) {
  const double k = p.swap_fraction * static_cast<double>(channels);
  if (std::abs(k - std::round(k)) > 1e-9) {
    throw ConfigError("swap_fraction", "does not split the " + std::to_string(channels) +
                                           " input channels evenly");
  }
  Rng rng(p.seed);
  WmfbWeights w = WmfbWeights::random(
      {channels, p.expand, p.d_state, p.shared_scan, p.swap_fraction}, rng);
  w.set_aggregation(p.ss2d_aggregation);
  return w;
}

int cmd_fuse(const RunConfig& cfg) {
  const auto [rgb, ir] = load_pair(single_input(cfg));
  require_same_shape(rgb, ir, "fuse inputs");
  const WmfbWeights w = seeded_wmfb(cfg.pipeline, rgb.channels());
  const SubBands sb_rgb = dwt2_haar(rgb);
  const SubBands sb_ir = dwt2_haar(ir);
  const FusedLevel fused = wmfb(sb_rgb.ll, sb_ir.ll, details(sb_rgb), details(sb_ir), w,
                                cfg.pipeline.fusion);
  const FeatureMap recon = idwt2_haar(
      SubBands{add(fused.low_rgb, fused.low_ir), fused.high.lh, fused.high.hl, fused.high.hh});

  fs::create_directories(cfg.output_dir);
  write_feature_map(cfg.output_dir / "low_rgb.wmt", fused.low_rgb);
  write_feature_map(cfg.output_dir / "low_ir.wmt", fused.low_ir);
  write_feature_map(cfg.output_dir / "high_lh.wmt", fused.high.lh);
  write_feature_map(cfg.output_dir / "high_hl.wmt", fused.high.hl);
  write_feature_map(cfg.output_dir / "high_hh.wmt", fused.high.hh);
  write_feature_map(cfg.output_dir / "fused.wmt", recon);
  std::cout << json{{"command", "fuse"}, {"low", shape_json(fused.low_rgb.shape())},
                    {"fused", shape_json(recon.shape())},
                    {"output_dir", cfg.output_dir.string()}}.dump()
            << "\n";
  return 0;
}

int cmd_entropy(const std::string& in, std::size_t bins) {
  std::cout << to_jsonl(entropy_report(load_input(in), bins));
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  if (cfg.inputs.empty()) throw ConfigError("pairs", "at least one input pair is required");
  std::vector<std::pair<FeatureMap, FeatureMap>> pairs;
  for (const auto& p : cfg.inputs) pairs.push_back(load_pair(p));
  const std::size_t channels = pairs.front().first.channels();
  for (const auto& [rgb, ir] : pairs) {
    require_same_shape(rgb, ir, "compare pair");
    if (rgb.channels() != channels) throw Error("compare: all pairs must share a channel count");
  }
  const WmfbWeights w = seeded_wmfb(cfg.pipeline, channels);
  const StrategyMatrix m =
      compare_strategies(pairs, w, CompareConfig{cfg.strategies, cfg.bins, cfg.pipeline.fusion.tie});
  std::cout << to_jsonl(m);
  return 0;
}

int cmd_pipeline(const RunConfig& cfg) {
  const InputPair& in = single_input(cfg);
  const FeatureMap rgb = load_input(in.rgb);
  const FeatureMap ir = load_input(in.ir);
  const PipelineWeights w = PipelineWeights::random(cfg.pipeline);
  const PyramidOutput out = wave_forward(rgb, ir, w, cfg.pipeline);

  fs::create_directories(cfg.output_dir);
  json pyramid = json::array();
  for (std::size_t i = 0; i < out.maps.size(); ++i) {
    write_feature_map(cfg.output_dir / ("pyramid_p" + std::to_string(i) + ".wmt"), out.maps[i]);
    pyramid.push_back(shape_json(out.maps[i].shape()));
  }
  for (std::size_t i = 0; i < out.levels.size(); ++i) {
    const FusedLevel& l = out.levels[i];
    const std::string stem = "level" + std::to_string(i) + "_";
    write_feature_map(cfg.output_dir / (stem + "low_rgb.wmt"), l.low_rgb);
    write_feature_map(cfg.output_dir / (stem + "low_ir.wmt"), l.low_ir);
    write_feature_map(cfg.output_dir / (stem + "high_lh.wmt"), l.high.lh);
    write_feature_map(cfg.output_dir / (stem + "high_hl.wmt"), l.high.hl);
    write_feature_map(cfg.output_dir / (stem + "high_hh.wmt"), l.high.hh);
  }
  std::cout << json{{"command", "pipeline"}, {"pyramid", pyramid},
                    {"output_dir", cfg.output_dir.string()}}.dump()
            << "\n";
  return 0;
}

json time_op(const char* name, std::size_t iters, json extra,
            const std::function<void()>& op) {
  std::vector<double> ms;
  ms.reserve(iters);
  for (std::size_t i = 0; i < iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    op();
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  const auto pick = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(ms.size()))) - 1;
    return ms[std::min(idx, ms.size() - 1)];
  };
  json out{{"op", name}, {"iters", iters}, {"median_ms", pick(0.5)}, {"p95_ms", pick(0.95)}};
  out.update(extra);
  return out;
}

int cmd_bench(const Size2& size, std::size_t iters) {
  if (iters == 0) throw UsageError("--iters must be positive");
  auto [img, ir] = synth_pair(SynthKind::noise, size.height, size.width, 7, 3, 1);

  std::cout << time_op("dwt2_haar", iters, {{"shape", shape_json(img.shape())}},
                       [&] { (void)dwt2_haar(img); })
                   .dump()
            << "\n";

  const std::size_t sh = std::max<std::size_t>(1, size.height / 4);
  const std::size_t sw = std::max<std::size_t>(1, size.width / 4);
  Rng rng(11);
  const Ss2dParams params = Ss2dParams::random(16, 16, rng);
  FeatureMap feat(16, sh, sw);
  for (float& v : feat.data()) v = rng.uniform(-1.0f, 1.0f);
  std::cout << time_op("ss2d", iters, {{"shape", shape_json(feat.shape())}, {"d_state", 16}},
                       [&] { (void)ss2d(feat, params); })
                   .dump()
            << "\n";

  PipelineConfig cfg;
  cfg.height = size.height;
  cfg.width = size.width;
  try {
    plan_shapes(cfg);
  } catch (const Error& e) {
    std::cout << json{{"op", "wave_forward"}, {"skipped", e.what()}}.dump() << "\n";
    return 0;
  }
  const PipelineWeights w = PipelineWeights::random(cfg);
  std::cout << time_op("wave_forward", iters, {{"shape", json::array({size.height, size.width})}},
                       [&] { (void)wave_forward(img, ir, w, cfg); })
                   .dump()
            << "\n";
  return 0;
}

int cmd_synth(const std::string& kind, const Size2& size, std::uint64_t seed,
              const std::string& out, std::size_t rgb_channels, std::size_t ir_channels) {
  const auto [rgb, ir] =
      synth_pair(parse_synth_kind(kind), size.height, size.width, seed, rgb_channels, ir_channels);
  fs::create_directories(out);
  write_feature_map(fs::path(out) / "rgb.wmt", rgb);
  write_feature_map(fs::path(out) / "ir.wmt", ir);
  std::cout << json{{"command", "synth"}, {"kind", kind}, {"seed", seed},
                    {"rgb", shape_json(rgb.shape())}, {"ir", shape_json(ir.shape())},
                    {"output_dir", out}}.dump()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet-domain RGB/IR feature fusion with selective scans", "wavefuse"};
  app.require_subcommand(1);
  std::size_t threads = 1;
  app.add_option("--threads", threads, "Worker threads for data-parallel loops")
      ->check(CLI::PositiveNumber);

  std::function<int()> action;

  auto* dwt = app.add_subcommand("dwt", "Multi-level Haar decomposition into sub-band files");
  std::string dwt_in, dwt_prefix;
  std::size_t dwt_levels = 1;
  dwt->add_option("in", dwt_in, "Input tensor or image")->required();
  dwt->add_option("out-prefix", dwt_prefix, "Output prefix")->required();
  dwt->add_option("--levels", dwt_levels, "Decomposition levels")->check(CLI::PositiveNumber);
  dwt->callback([&] { action = [&] { return cmd_dwt(dwt_in, dwt_prefix, dwt_levels); }; });

  auto* idwt = app.add_subcommand("idwt", "Reconstruct from sub-band files written by dwt");
  std::string idwt_prefix, idwt_out;
  idwt->add_option("prefix", idwt_prefix, "Prefix given to dwt")->required();
  idwt->add_option("out", idwt_out, "Output tensor (.wmt) or image (.pgm/.ppm)")->required();
  idwt->callback([&] { action = [&] { return cmd_idwt(idwt_prefix, idwt_out); }; });

  std::string config_path;
  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
  };
  const auto with_config = [&](int (*fn)(const RunConfig&), bool check_chain) {
    return [&, fn, check_chain] {
      const RunConfig cfg = load_run_config(config_path, check_chain);
      set_num_threads(std::max(threads, cfg.threads));
      return fn(cfg);
    };
  };

  auto* fuse = app.add_subcommand("fuse", "Fuse one RGB/IR pair with a single fusion block");
  add_config(fuse);
  fuse->callback([&] { action = with_config(cmd_fuse, false); });

  auto* entropy = app.add_subcommand("entropy", "Per-sub-band normalized entropy report");
  std::string entropy_in;
  std::size_t bins = 256;
  entropy->add_option("in", entropy_in, "Input tensor or image")->required();
  entropy->add_option("--bins", bins, "Histogram bins")->check(CLI::Range(2, 1 << 24));
  entropy->callback([&] { action = [&] { return cmd_entropy(entropy_in, bins); }; });

  auto* compare = app.add_subcommand("compare", "Frequency metrics per fusion strategy");
  add_config(compare);
  compare->callback([&] { action = with_config(cmd_compare, false); });

  auto* pipeline = app.add_subcommand("pipeline", "Full forward pass to pyramid feature maps");
  add_config(pipeline);
  pipeline->callback([&] { action = with_config(cmd_pipeline, true); });

  auto* bench = app.add_subcommand("bench", "Median and p95 wall time of the core operations");
  std::string bench_size = "64x64";
  std::size_t iters = 20;
  bench->add_option("--size", bench_size, "Image size HxW");
  bench->add_option("--iters", iters, "Iterations per operation");
  bench->callback([&] { action = [&] { return cmd_bench(parse_size(bench_size), iters); }; });

  auto* synth = app.add_subcommand("synth", "Write a synthetic RGB/IR pair");
  std::string synth_kind, synth_size = "64x64", synth_out;
  std::uint64_t synth_seed = 0;
  std::size_t rgb_channels = 3, ir_channels = 1;
  synth->add_option("--kind", synth_kind, "Pair kind")
      ->required()
      ->check(CLI::IsMember({"blur-complement", "checker-smooth", "noise"}));
  synth->add_option("--size", synth_size, "Image size HxW");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--rgb-channels", rgb_channels)->check(CLI::PositiveNumber);
  synth->add_option("--ir-channels", ir_channels)->check(CLI::PositiveNumber);
  synth->callback([&] {
    action = [&] {
      return cmd_synth(synth_kind, parse_size(synth_size), synth_seed, synth_out, rgb_channels,
                       ir_channels);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "wavefuse: " << e.what() << "\n";
    return kUsageError;
  }

  set_num_threads(threads);
  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "wavefuse: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    std::cerr << "wavefuse: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "wavefuse: " << msg << "\n";
    return kDataError;
  }
}
