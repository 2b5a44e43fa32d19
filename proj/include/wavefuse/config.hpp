#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavefuse/analysis.hpp"
#include "wavefuse/pipeline.hpp"

namespace wavefuse {

// Configuration problems; the message always names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& why)
      : Error("config key '" + key + "': " + why), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct InputPair {
  std::filesystem::path rgb;
  std::filesystem::path ir;
};

struct RunConfig {
  PipelineConfig pipeline;
  std::vector<InputPair> inputs;  // from "rgb"/"ir" and/or "pairs"
  std::filesystem::path output_dir = "wavefuse-out";
  std::size_t bins = 256;
  std::vector<Strategy> strategies = all_strategies();
  std::size_t threads = 1;
};

// Relative paths resolve against `base_dir`. Unknown keys, wrong types and
// missing input files are rejected with ConfigError. With `check_chain` the
// backbone shape chain is validated too (commands that only run one fusion
// block on the raw inputs skip it).
RunConfig parse_run_config(const nlohmann::json& doc,
                           const std::filesystem::path& base_dir = {},
                           bool check_chain = true);
RunConfig load_run_config(const std::filesystem::path& path, bool check_chain = true);

}  // namespace wavefuse
