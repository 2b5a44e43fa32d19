#include "wavefuse/config.hpp"

#include <fstream>
#include <set>
#include <string_view>

namespace wavefuse {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "height",         "width",       "rgb_channels",     "ir_channels",
      "stage_channels", "wmfb_stages", "seed",             "expand",
      "d_state",        "shared_scan", "swap_fraction",    "hfe_tie",
      "high_mode",      "low_mode",    "ss2d_aggregation", "head_aggregate",
      "head_upsample",  "rgb",         "ir",               "pairs",
      "output_dir",     "bins",        "strategies",       "threads"};
  return keys;
}

std::size_t get_count(const json& v, const std::string& key, bool allow_zero = false) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError(key, "expected a non-negative integer");
  }
  const auto n = v.get<std::size_t>();
  if (n == 0 && !allow_zero) throw ConfigError(key, "must be positive");
  return n;
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

template <typename Enum>
Enum get_choice(const json& v, const std::string& key,
                std::initializer_list<std::pair<const char*, Enum>> choices) {
  const std::string s = get_string(v, key);
  std::string expected;
  for (const auto& [name, value] : choices) {
    if (s == name) return value;
    expected += expected.empty() ? name : std::string(" | ") + name;
  }
  throw ConfigError(key, "unknown value '" + s + "' (expected " + expected + ")");
}

template <std::size_t N>
std::array<std::size_t, N> get_counts(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != N) {
    throw ConfigError(key, "expected an array of " + std::to_string(N) + " integers");
  }
  std::array<std::size_t, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = get_count(v[i], key + "[" + std::to_string(i) + "]");
  }
  return out;
}

std::filesystem::path existing_path(const json& v, const std::string& key,
                                    const std::filesystem::path& base) {
  std::filesystem::path p = get_string(v, key);
  if (p.is_relative() && !base.empty()) p = base / p;
  if (!std::filesystem::exists(p)) {
    throw ConfigError(key, "path does not exist: " + p.string());
  }
  return p;
}

// Best guess at which key a shape-chain failure should be reported against.
std::string chain_key(std::string_view msg) {
  for (const char* key : {"swap_fraction", "stage_channels", "wmfb_stages", "expand", "d_state"}) {
    if (msg.find(key) != std::string_view::npos) return key;
  }
  if (msg.find("wmfb stage") != std::string_view::npos) return "wmfb_stages";
  if (msg.find("channel counts") != std::string_view::npos) return "rgb_channels";
  return "height";
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base,
                           bool check_chain) {
  if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known_keys().contains(key)) throw ConfigError(key, "unknown key");
  }

  RunConfig cfg;
  PipelineConfig& p = cfg.pipeline;
  const auto has = [&](const char* k) { return doc.contains(k); };

  if (has("height")) p.height = get_count(doc["height"], "height");
  if (has("width")) p.width = get_count(doc["width"], "width");
  if (has("rgb_channels")) p.rgb_channels = get_count(doc["rgb_channels"], "rgb_channels");
  if (has("ir_channels")) p.ir_channels = get_count(doc["ir_channels"], "ir_channels");
  if (has("stage_channels")) {
    p.stage_channels = get_counts<kStageCount>(doc["stage_channels"], "stage_channels");
  }
  if (has("wmfb_stages")) {
    p.wmfb_stages = get_counts<kFusionLevels>(doc["wmfb_stages"], "wmfb_stages");
  }
  if (has("seed")) p.seed = get_count(doc["seed"], "seed", /*allow_zero=*/true);
  if (has("expand")) p.expand = get_count(doc["expand"], "expand");
  if (has("d_state")) p.d_state = get_count(doc["d_state"], "d_state");
  if (has("shared_scan")) {
    if (!doc["shared_scan"].is_boolean()) throw ConfigError("shared_scan", "expected a boolean");
    p.shared_scan = doc["shared_scan"].get<bool>();
  }
  if (has("swap_fraction")) {
    if (!doc["swap_fraction"].is_number()) throw ConfigError("swap_fraction", "expected a number");
    p.swap_fraction = doc["swap_fraction"].get<double>();
  }
  if (has("hfe_tie")) {
    p.fusion.tie = get_choice<TieMode>(doc["hfe_tie"], "hfe_tie",
                                       {{"inclusive", TieMode::inclusive},
                                        {"strict", TieMode::strict}});
  }
  if (has("high_mode")) {
    p.fusion.high = get_choice<HighMode>(doc["high_mode"], "high_mode",
                                         {{"hfe", HighMode::hfe}, {"avg", HighMode::avg}});
  }
  if (has("low_mode")) {
    p.fusion.low = get_choice<LowMode>(doc["low_mode"], "low_mode",
                                       {{"lmfb", LowMode::lmfb}, {"avg", LowMode::avg}});
  }
  if (has("ss2d_aggregation")) {
    p.ss2d_aggregation = get_choice<Aggregation>(
        doc["ss2d_aggregation"], "ss2d_aggregation",
        {{"sum", Aggregation::sum}, {"mean", Aggregation::mean}});
  }
  if (has("head_aggregate")) {
    p.head_aggregate = get_choice<HeadAggregate>(
        doc["head_aggregate"], "head_aggregate",
        {{"sum", HeadAggregate::sum}, {"concat", HeadAggregate::concat}});
  }
  if (has("head_upsample")) {
    p.head_upsample = get_choice<HeadUpsample>(
        doc["head_upsample"], "head_upsample",
        {{"idwt", HeadUpsample::idwt}, {"nearest", HeadUpsample::nearest}});
  }

  if (has("rgb") != has("ir")) {
    throw ConfigError(has("rgb") ? "ir" : "rgb", "'rgb' and 'ir' must be given together");
  }
  if (has("rgb")) {
    cfg.inputs.push_back({existing_path(doc["rgb"], "rgb", base),
                          existing_path(doc["ir"], "ir", base)});
  }
  if (has("pairs")) {
    const json& pairs = doc["pairs"];
    if (!pairs.is_array()) throw ConfigError("pairs", "expected an array");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string key = "pairs[" + std::to_string(i) + "]";
      const json& entry = pairs[i];
      if (!entry.is_object() || entry.size() != 2 || !entry.contains("rgb") ||
          !entry.contains("ir")) {
        throw ConfigError(key, "expected an object with exactly 'rgb' and 'ir'");
      }
      cfg.inputs.push_back({existing_path(entry["rgb"], key + ".rgb", base),
                            existing_path(entry["ir"], key + ".ir", base)});
    }
  }

  if (has("output_dir")) {
    std::filesystem::path out = get_string(doc["output_dir"], "output_dir");
    if (out.empty()) throw ConfigError("output_dir", "must not be empty");
    cfg.output_dir = out.is_relative() && !base.empty() ? base / out : out;
  }
  if (has("bins")) {
    cfg.bins = get_count(doc["bins"], "bins");
    if (cfg.bins < 2) throw ConfigError("bins", "must be at least 2");
  }
  if (has("strategies")) {
    const json& list = doc["strategies"];
    if (!list.is_array() || list.empty()) {
      throw ConfigError("strategies", "expected a non-empty array of names");
    }
    cfg.strategies.clear();
    for (const json& s : list) {
      try {
        cfg.strategies.push_back(parse_strategy(get_string(s, "strategies")));
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError("strategies", e.what());
      }
    }
  }
  if (has("threads")) cfg.threads = get_count(doc["threads"], "threads");

  if (check_chain) {
    try {
      plan_shapes(p);
    } catch (const Error& e) {
      throw ConfigError(chain_key(e.what()), e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, bool check_chain) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_run_config(doc, path.parent_path(), check_chain);
}

}  // namespace wavefuse
