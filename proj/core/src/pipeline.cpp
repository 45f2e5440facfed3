#include "muses/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "json_detail.hpp"
#include "log_detail.hpp"
#include "muses/bundle_io.hpp"
#include "muses/plan_io.hpp"
#include "muses/skeleton_io.hpp"
#include "muses/slat_io.hpp"

namespace muses {

namespace {

using detail::ojson;

std::uint8_t channel_byte(float v) {
  double t = std::clamp((static_cast<double>(v) + 1.0) * 0.5, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(t * 255.0));
}

class Writer {
 public:
  explicit Writer(std::filesystem::path root) : root_(std::move(root)) {}

  void put(const std::filesystem::path& rel, std::string_view bytes) {
    write_file(root_ / rel, bytes);
    files_.push_back(rel);
  }

  void manifest(const PipelineResult& r) const {
    ojson j;
    ojson stages = ojson::object();
    const char* names[3] = {"I", "II", "III"};
    for (int i = 0; i < 3; ++i) stages[names[i]] = std::string(to_string(r.stages[i]));
    j["stages"] = std::move(stages);
    j["exit_code"] = r.exit_code;
    if (r.error_code) {
      j["error"] = {{"stage", r.failed_stage},
                    {"code", std::string(to_string(*r.error_code))},
                    {"message", r.error},
                    {"details", r.error_details}};
    }
    j["files"] = ojson::array();
    for (const auto& rel : r.files) {
      std::string bytes = read_file(root_ / rel);
      j["files"].push_back({{"path", rel.generic_string()}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    }
    write_file(root_ / "manifest.json", j.dump(2) + "\n");
  }

  [[nodiscard]] const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::filesystem::path root_;
  std::vector<std::filesystem::path> files_;
};

}  // namespace

std::string_view to_string(StageStatus status) {
  switch (status) {
    case StageStatus::NotRun: return "not_run";
    case StageStatus::Ok: return "ok";
    case StageStatus::Skipped: return "skipped";
    case StageStatus::Failed: return "failed";
  }
  return "?";
}

Image render_preview(const SparseLatent& latent, int size) {
  if (size < 1) throw Error(Errc::InvalidInput, "preview size must be >= 1");
  const int n = latent.resolution;
  Image img{size, size, std::vector<std::uint8_t>(static_cast<std::size_t>(size) * size * 4, 255)};
  // Front-most voxel per (x, y) column.
  std::vector<int> front(static_cast<std::size_t>(n) * n, -1);
  for (int i = 0; i < latent.size(); ++i) {
    const auto& p = latent.positions[i];
    int& f = front[static_cast<std::size_t>(p[0]) * n + p[1]];
    if (f < 0 || latent.positions[f][2] < p[2]) f = i;
  }
  for (int v = 0; v < size; ++v) {
    int y = n - 1 - static_cast<int>(static_cast<long long>(v) * n / size);
    for (int u = 0; u < size; ++u) {
      int x = static_cast<int>(static_cast<long long>(u) * n / size);
      int f = front[static_cast<std::size_t>(x) * n + y];
      if (f < 0) continue;
      auto feat = latent.feature(f);
      std::uint8_t* px = &img.rgba[(static_cast<std::size_t>(v) * size + u) * 4];
      for (int c = 0; c < 3; ++c) px[c] = c < latent.channels ? channel_byte(feat[c]) : 0;
      px[3] = 255;
    }
  }
  return img;
}

bool style_backends_configured(const PipelineConfig& cfg) {
  return !cfg.imgedit.is_fixture() && !cfg.regen.is_fixture();
}

StyleResult run_style(const ModelGateway& gateway, const PipelineConfig& cfg, const SparseLatent& composed,
                      const std::string& style_prompt) {
  StyleResult r;
  r.reference = render_preview(composed, cfg.preview_size);
  EditRequest req{r.reference, style_prompt, cfg.negative_prompt, {}};
  r.edited = gateway.edit_image(req, cfg.imgedit);
  r.styled = gateway.regenerate_features(r.edited, composed.positions, composed.resolution, composed.channels, cfg.regen);
  r.styled.sort();
  return r;
}

std::string provenance_to_json(const ComposedLatent& composed) {
  std::vector<int> counts(composed.regions.size(), 0);
  for (int p : composed.provenance) ++counts[static_cast<std::size_t>(p)];
  ojson j;
  j["regions"] = ojson::array();
  for (std::size_t r = 0; r < composed.regions.size(); ++r) {
    j["regions"].push_back({{"key", composed.regions[r].key()}, {"voxels", counts[r]}});
  }
  j["voxels"] = composed.latent.size();
  j["seam_voxels"] = composed.seam_mask.size();
  j["seams"] = ojson::array();
  for (const auto& c : composed.seam_mask) j["seams"].push_back({c[0], c[1], c[2]});
  return j.dump() + "\n";
}

PipelineResult run_pipeline(const PipelineConfig& cfg, std::shared_ptr<const ModelGateway> gateway) {
  PipelineResult result;
  auto fail = [&](int stage, int code, const std::string& what, std::optional<Errc> errc,
                  std::vector<std::string> details) {
    result.exit_code = code;
    result.failed_stage = stage;
    result.error_code = errc;
    result.error = what;
    result.error_details = std::move(details);
    if (stage > 0) result.stages[stage - 1] = StageStatus::Failed;
    detail::log().error("stage {} failed: {}", stage, what);
  };
  // Runs one stage body, converting any failure into a stage-tagged result.
  auto stage = [&](int n, int code, const std::function<void()>& body) {
    try {
      body();
      result.stages[n - 1] = StageStatus::Ok;
      return true;
    } catch (const Error& e) {
      fail(n, code, e.what(), e.code(), e.details());
    } catch (const std::exception& e) {
      fail(n, code, e.what(), std::nullopt, {});
    }
    return false;
  };

  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(0, kExitConfig, e.what(), e.code(), e.details());
    return result;
  }

  Writer out(cfg.output_dir);
  Session session(cfg, std::move(gateway));

  bool ok = stage(1, kExitStage1, [&] {
    for (const auto& source : cfg.sources) session.add_asset(session.load_source(source));
    session.classify();
    for (const auto& a : session.assets()) {
      out.put("stage1/" + a.id + ".bundle.json", bundle_to_json(a.bundle));
      out.put("stage1/" + a.id + ".classification.json", classification_to_json(a.clean, *a.classification));
    }
  });

  ok = ok && stage(2, kExitStage2, [&] {
    const AssemblyPlan& plan = session.plan(cfg.prompt);
    out.put("stage2/plan.json", plan_to_json(plan));
    out.put("stage2/assembled.json", assembled_to_json(*session.assembled()));
    const ComposedLatent& composed = session.compose();
    out.put("stage2/composed.slat", encode_slat(composed.latent));
    out.put("stage2/provenance.json", provenance_to_json(composed));
  });

  if (ok) {
    if (cfg.style_prompt && style_backends_configured(cfg)) {
      stage(3, kExitStage3, [&] {
        StyleResult s = run_style(session.gateway(), cfg, session.composed()->latent, *cfg.style_prompt);
        out.put("stage3/reference.png", encode_png(s.reference));
        out.put("stage3/edited.png", encode_png(s.edited));
        out.put("stage3/styled.slat", encode_slat(s.styled));
      });
    } else {
      result.stages[2] = StageStatus::Skipped;
    }
  }

  result.files = out.files();
  std::sort(result.files.begin(), result.files.end());
  try {
    out.manifest(result);
  } catch (const std::exception& e) {
    detail::log().error("could not write manifest: {}", e.what());
    if (result.ok()) fail(result.failed_stage, kExitStage2, e.what(), std::nullopt, {});
  }
  return result;
}

}  // namespace muses
