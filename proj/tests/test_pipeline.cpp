#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <functional>

#include "muses/bundle_io.hpp"
#include "muses/fixtures.hpp"
#include "muses/pipeline.hpp"
#include "muses/plan_io.hpp"
#include "muses/slat_io.hpp"

#include <nlohmann/json.hpp>

using namespace muses;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("muses_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

PipelineConfig wings_config(const fs::path& out) {
  PipelineConfig cfg;
  cfg.sources = {"fixture:quadruped", "fixture:winged"};
  cfg.prompt = "a quadruped with wings";
  cfg.output_dir = out;
  return cfg;
}

class ScriptedTransport final : public Transport {
 public:
  std::function<HttpResponse(const json&)> reply;
  int calls = 0;

  HttpResponse post(const std::string&, const std::string& body, const std::vector<std::pair<std::string, std::string>>&,
                    double) override {
    ++calls;
    return reply(json::parse(body));
  }
};

// Answers edit_image with a tinted copy and regenerate_features with features derived from
// the requested voxel set.
HttpResponse style_backend(const json& req, bool add_voxel) {
  const std::string op = req.at("op");
  if (op == "edit_image") {
    Image img = decode_png(base64_decode(req.at("image").get<std::string>()));
    for (std::size_t i = 0; i < img.rgba.size(); i += 4) img.rgba[i] = 200;
    return {200, json{{"image", base64_encode(encode_png(img))}}.dump()};
  }
  SparseLatent s = decode_slat(base64_decode(req.at("slat").get<std::string>()));
  for (std::size_t i = 0; i < s.features.size(); ++i) s.features[i] = static_cast<float>(i % 7) * 0.125f;
  if (add_voxel) {
    Coord extra{0, 0, 0};
    while (std::find(s.positions.begin(), s.positions.end(), extra) != s.positions.end()) ++extra[0];
    s.positions.push_back(extra);
    s.features.resize(s.features.size() + s.channels, 0.0f);
  }
  return {200, json{{"slat", base64_encode(encode_slat(s))}}.dump()};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("fixture pipeline writes every stage artifact") {
  fs::path out = scratch("wings");
  auto start = std::chrono::steady_clock::now();
  PipelineResult r = run_pipeline(wings_config(out), std::make_shared<ModelGateway>());
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  INFO(r.error);
  REQUIRE(r.ok());
  CHECK(seconds < 5.0);
  CHECK(r.stages[0] == StageStatus::Ok);
  CHECK(r.stages[1] == StageStatus::Ok);
  CHECK(r.stages[2] == StageStatus::Skipped);

  std::vector<fs::path> expected{"stage1/a0.bundle.json", "stage1/a0.classification.json",
                                 "stage1/a1.bundle.json", "stage1/a1.classification.json",
                                 "stage2/assembled.json", "stage2/composed.slat",
                                 "stage2/plan.json",      "stage2/provenance.json"};
  CHECK(r.files == expected);

  AssemblyPlan plan = plan_from_json(read_file(out / "stage2/plan.json"));
  int wings = 0;
  for (const auto& p : plan.parts) wings += p.ref.label == RegionLabel::Wing;
  CHECK(wings == 2);
  CHECK(plan.parts.front().ref.label == RegionLabel::Body);

  SparseLatent composed = decode_slat(read_file(out / "stage2/composed.slat"));
  CHECK(composed.size() > 0);
  CHECK(composed.size() <= 100000);
  CHECK_NOTHROW(composed.validate());

  json prov = json::parse(read_file(out / "stage2/provenance.json"));
  CHECK(prov.at("voxels") == composed.size());
  int total = 0;
  for (const auto& reg : prov.at("regions")) total += reg.at("voxels").get<int>();
  CHECK(total == composed.size());

  json manifest = json::parse(read_file(out / "manifest.json"));
  CHECK(manifest.at("exit_code") == 0);
  CHECK(manifest.at("stages").at("III") == "skipped");
  REQUIRE(manifest.at("files").size() == expected.size());
  for (const auto& f : manifest.at("files")) {
    std::string bytes = read_file(out / f.at("path").get<std::string>());
    CHECK(f.at("sha256") == sha256_hex(bytes));
    CHECK(f.at("bytes") == bytes.size());
  }

  AssetBundle a1 = bundle_from_json(read_file(out / "stage1/a1.bundle.json"));
  CHECK(a1.slat == make_fixture_bundle(TemplateKind::Winged).slat);
  fs::remove_all(out);
}

TEST_CASE("fixture pipeline is byte-deterministic") {
  fs::path a = scratch("det_a"), b = scratch("det_b");
  auto g = std::make_shared<ModelGateway>();
  REQUIRE(run_pipeline(wings_config(a), g).ok());
  REQUIRE(run_pipeline(wings_config(b), g).ok());
  auto ta = tree(a), tb = tree(b);
  CHECK(ta.size() == 9);
  CHECK(ta == tb);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("single asset with an empty plan reproduces its latent") {
  for (const char* kind : {"quadruped", "winged", "fish"}) {
    fs::path out = scratch(std::string("identity_") + kind);
    PipelineConfig cfg;
    cfg.sources = {std::string("fixture:") + kind};
    cfg.output_dir = out;
    PipelineResult r = run_pipeline(cfg, std::make_shared<ModelGateway>());
    INFO(kind, " ", r.error);
    REQUIRE(r.ok());
    CHECK(read_file(out / "stage2/composed.slat") == encode_slat(make_fixture_bundle(*fixture_kind(kind)).slat));
    json prov = json::parse(read_file(out / "stage2/provenance.json"));
    CHECK(prov.at("seam_voxels") == 0);
    fs::remove_all(out);
  }
}

TEST_CASE("bundle files are accepted as sources") {
  fs::path out = scratch("bundle_src");
  fs::create_directories(out);
  write_file(out / "quad.json", bundle_to_json(make_fixture_bundle(TemplateKind::Quadruped)));
  PipelineConfig cfg;
  cfg.sources = {(out / "quad.json").string()};
  cfg.output_dir = out / "run";
  PipelineResult r = run_pipeline(cfg, std::make_shared<ModelGateway>());
  REQUIRE(r.ok());
  CHECK(read_file(out / "run/stage2/composed.slat") == encode_slat(make_fixture_bundle(TemplateKind::Quadruped).slat));
  fs::remove_all(out);
}

TEST_CASE("failures carry stage-specific exit codes") {
  auto g = std::make_shared<ModelGateway>();

  SUBCASE("invalid config") {
    PipelineConfig cfg;
    cfg.output_dir = scratch("cfg");
    PipelineResult r = run_pipeline(cfg, g);
    CHECK(r.exit_code == kExitConfig);
    CHECK(r.error_code == Errc::ConfigError);
    CHECK(r.failed_stage == 0);
  }

  SUBCASE("missing source file is a stage I error") {
    fs::path out = scratch("missing");
    PipelineConfig cfg = wings_config(out);
    cfg.sources = {"fixture:quadruped", "/nonexistent/creature.json"};
    PipelineResult r = run_pipeline(cfg, g);
    CHECK(r.exit_code == kExitStage1);
    CHECK(r.failed_stage == 1);
    CHECK(r.stages[0] == StageStatus::Failed);
    CHECK(r.stages[1] == StageStatus::NotRun);
    json manifest = json::parse(read_file(out / "manifest.json"));
    CHECK(manifest.at("exit_code") == kExitStage1);
    CHECK(manifest.at("error").at("stage") == 1);
    fs::remove_all(out);
  }

  SUBCASE("rejected plan is a stage II error") {
    fs::path out = scratch("rejected");
    auto t = std::make_shared<ScriptedTransport>();
    t->reply = [](const json&) {
      return HttpResponse{200, R"({"parts":[{"asset":"a0","region":"body","instance":1,"copies":1,"symmetric":false},
        {"asset":"a7","region":"wing","instance":1,"copies":1,"symmetric":false}],"ops":[],"attach":[]})"};
    };
    PipelineConfig cfg = wings_config(out);
    cfg.planner = "llm";
    cfg.llm.endpoint = "http://planner.invalid/plan";
    PipelineResult r = run_pipeline(cfg, std::make_shared<ModelGateway>(t));
    CHECK(r.exit_code == kExitStage2);
    CHECK(r.error_code == Errc::PlanRejected);
    CHECK_FALSE(r.error_details.empty());
    CHECK(r.stages[0] == StageStatus::Ok);
    json manifest = json::parse(read_file(out / "manifest.json"));
    CHECK(manifest.at("error").at("code") == "PlanRejected");
    CHECK(manifest.at("error").at("details").size() == r.error_details.size());
    fs::remove_all(out);
  }

  CHECK(kExitStage1 != kExitStage2);
}

TEST_CASE("stage III styles the composed voxels through the backends") {
  fs::path out = scratch("style");
  auto t = std::make_shared<ScriptedTransport>();
  t->reply = [](const json& req) { return style_backend(req, false); };
  PipelineConfig cfg = wings_config(out);
  cfg.style_prompt = "bronze statue";
  cfg.imgedit.endpoint = "http://edit.invalid/";
  cfg.regen.endpoint = "http://regen.invalid/";
  PipelineResult r = run_pipeline(cfg, std::make_shared<ModelGateway>(t));
  INFO(r.error);
  REQUIRE(r.ok());
  CHECK(r.stages[2] == StageStatus::Ok);
  CHECK(t->calls == 2);
  SparseLatent composed = decode_slat(read_file(out / "stage2/composed.slat"));
  SparseLatent styled = decode_slat(read_file(out / "stage3/styled.slat"));
  CHECK(styled.positions == composed.positions);
  CHECK(styled.features != composed.features);
  Image ref = decode_png(read_file(out / "stage3/reference.png"));
  CHECK(ref.width == cfg.preview_size);
  Image edited = decode_png(read_file(out / "stage3/edited.png"));
  CHECK(edited.rgba[0] == 200);
  fs::remove_all(out);

  fs::path bad = scratch("style_bad");
  t->reply = [](const json& req) { return style_backend(req, true); };
  cfg.output_dir = bad;
  PipelineResult f = run_pipeline(cfg, std::make_shared<ModelGateway>(t));
  CHECK(f.exit_code == kExitStage3);
  CHECK(f.error_code == Errc::StructureViolation);
  CHECK(fs::exists(bad / "stage2/composed.slat"));
  CHECK_FALSE(fs::exists(bad / "stage3/styled.slat"));
  fs::remove_all(bad);
}

TEST_CASE("preview rendering") {
  SparseLatent l{4, 3, {{0, 3, 0}, {0, 3, 2}, {3, 0, 1}}, {-1, -1, -1, 1, 1, 1, 0, 0, 0}};
  Image img = render_preview(l, 4);
  REQUIRE(img.width == 4);
  // Column x = 0, y = 3 is the top-left pixel; the voxel at z = 2 is in front.
  CHECK(img.rgba[0] == 255);
  CHECK(img.rgba[1] == 255);
  // x = 3, y = 0 is the bottom-right pixel with mid-grey features.
  std::size_t br = (3 * 4 + 3) * 4;
  CHECK(img.rgba[br] == 128);
  // Empty columns stay white.
  CHECK(img.rgba[(1 * 4 + 1) * 4] == 255);
  CHECK(render_preview(l, 8).width == 8);
}
