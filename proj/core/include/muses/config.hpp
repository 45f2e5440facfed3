#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "muses/gateway.hpp"
#include "muses/region_mapper.hpp"
#include "muses/skeleton.hpp"
#include "muses/voxel.hpp"

namespace muses {

struct PipelineConfig {
  std::string prompt;
  // "fixture:<template>", a bundle file path, or a text prompt for the generation backend.
  std::vector<std::string> sources;
  std::string planner = "rule";  // "rule" or "llm"
  BackendConfig llm{"fixture:rule", "MUSES_LLM_API_KEY"};
  BackendConfig gen3d;
  BackendConfig rig;
  BackendConfig imgedit;
  BackendConfig regen;
  CleanOptions clean;
  ClassifyOptions classify;
  TransferOptions transfer;
  ComposeOptions compose;
  std::filesystem::path output_dir = "muses-out";
  std::optional<std::string> style_prompt;
  std::string negative_prompt = "blurry, low quality, inconsistent style";
  int preview_size = 128;

  void validate() const;  // ConfigError
};

// Applies one "section.key" = value setting. Values use TOML spelling: quoted strings,
// numbers, true/false, or ["a", "b"] arrays.
void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value);

// Parses TOML-style text ([section] headers, key = value lines, # comments) onto `cfg`.
void apply_config_text(PipelineConfig& cfg, std::string_view text);

// Endpoint overrides from MUSES_LLM_ENDPOINT, MUSES_GEN3D_ENDPOINT, MUSES_IMGEDIT_ENDPOINT.
void apply_environment(PipelineConfig& cfg);

// Defaults, then environment, then the file.
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace muses
