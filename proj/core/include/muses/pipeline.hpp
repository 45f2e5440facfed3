#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "muses/codec.hpp"
#include "muses/config.hpp"
#include "muses/error.hpp"
#include "muses/gateway.hpp"
#include "muses/session.hpp"
#include "muses/voxel.hpp"

namespace muses {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitStage1 = 10;
inline constexpr int kExitStage2 = 20;
inline constexpr int kExitStage3 = 30;

enum class StageStatus { NotRun, Ok, Skipped, Failed };
std::string_view to_string(StageStatus status);

struct PipelineResult {
  int exit_code = kExitOk;
  int failed_stage = 0;  // 0 for config failures or success
  std::optional<Errc> error_code;
  std::string error;
  std::vector<std::string> error_details;
  StageStatus stages[3] = {StageStatus::NotRun, StageStatus::NotRun, StageStatus::NotRun};
  std::vector<std::filesystem::path> files;  // relative to the output dir, sorted

  [[nodiscard]] bool ok() const { return exit_code == kExitOk; }
};

// Stage I-III end to end. Never throws for engine failures: the error is tagged with its
// stage, files written so far stay on disk, and manifest.json is always written.
PipelineResult run_pipeline(const PipelineConfig& cfg, std::shared_ptr<const ModelGateway> gateway);

// Side view (looking down -z) colored by the first three feature channels.
Image render_preview(const SparseLatent& latent, int size);

struct StyleResult {
  Image reference;
  Image edited;
  SparseLatent styled;
};

bool style_backends_configured(const PipelineConfig& cfg);
// Stage III: render, edit the reference image, regenerate features on the same voxels.
StyleResult run_style(const ModelGateway& gateway, const PipelineConfig& cfg, const SparseLatent& composed,
                      const std::string& style_prompt);

// {"regions": [{"key", "voxels"}], "voxels", "seam_voxels", "seams": [[x, y, z], ...]}
std::string provenance_to_json(const ComposedLatent& composed);

}  // namespace muses
