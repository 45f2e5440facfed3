#include <cstdio>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "muses/bundle_io.hpp"
#include "muses/config.hpp"
#include "muses/error.hpp"
#include "muses/log.hpp"
#include "muses/pipeline.hpp"
#include "muses/plan_io.hpp"
#include "muses/service.hpp"
#include "muses/session.hpp"
#include "muses/skeleton_io.hpp"
#include "muses/slat_io.hpp"

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> settings;
  std::string log_level = "warn";
};

muses::PipelineConfig build_config(const Common& c, const std::vector<std::string>& sources) {
  muses::PipelineConfig cfg = c.config_path.empty() ? muses::PipelineConfig{} : muses::load_config(c.config_path);
  if (c.config_path.empty()) muses::apply_environment(cfg);
  for (const auto& s : c.settings) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw muses::Error(muses::Errc::ConfigError, "--set expects key=value, got '" + s + "'");
    std::string value = s.substr(eq + 1);
    // Bare words are taken as strings so `--set planner=llm` works without quoting.
    bool bare = !value.empty() && value.front() != '"' && value.front() != '[' && value != "true" &&
                value != "false" && value.find_first_not_of("0123456789+-.eE") != std::string::npos;
    muses::apply_setting(cfg, s.substr(0, eq), bare ? "\"" + value + "\"" : value);
  }
  if (!sources.empty()) cfg.sources = sources;
  return cfg;
}

std::shared_ptr<const muses::ModelGateway> default_gateway() { return std::make_shared<muses::ModelGateway>(); }

void emit(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::fwrite(bytes.data(), 1, bytes.size(), stdout);
  } else {
    muses::write_file(path, bytes);
  }
}

// Loads and classifies every source; failures here are stage-I errors.
void load(muses::Session& s, const muses::PipelineConfig& cfg) {
  if (cfg.sources.empty()) throw muses::Error(muses::Errc::ConfigError, "no asset sources given");
  for (const auto& src : cfg.sources) s.add_asset(s.load_source(src));
  s.classify();
}

void make_plan(muses::Session& s, const std::string& plan_path, const std::string& request) {
  if (!plan_path.empty()) {
    s.set_plan(muses::plan_from_json(muses::read_file(plan_path)));
  } else {
    s.plan(request);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skeleton-guided creature composition: classify, plan, compose, pipeline, serve"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "TOML-style config file")->check(CLI::ExistingFile);
  app.add_option("--set", common.settings, "Override one setting, e.g. --set compose.fill_passes=3");
  app.add_option("--log-level", common.log_level, "trace, debug, info, warn, error or off");

  std::vector<std::string> sources;
  std::string out, plan_path, request, provenance_path, host = "127.0.0.1";
  int port = 8080;

  auto* classify = app.add_subcommand("classify", "Clean and classify skeletons; prints partition JSON");
  classify->add_option("sources", sources, "fixture:<name>, bundle file or prompt")->required();
  classify->add_option("-o,--out", out, "Output directory (default: stdout)");

  auto* plan = app.add_subcommand("plan", "Plan an assembly; prints plan JSON");
  plan->add_option("sources", sources, "Asset sources, base creature first")->required();
  plan->add_option("-r,--request", request, "Text request, e.g. \"a quadruped with wings\"");
  plan->add_option("-p,--plan", plan_path, "Explicit plan JSON to validate and execute")->check(CLI::ExistingFile);
  plan->add_option("-o,--out", out, "Plan JSON output (default: stdout)");
  std::string assembled_path;
  plan->add_option("--assembled", assembled_path, "Also write the assembled skeleton JSON here");

  auto* compose = app.add_subcommand("compose", "Plan, execute and compose; writes a SLAT file");
  compose->add_option("sources", sources, "Asset sources, base creature first")->required();
  compose->add_option("-r,--request", request, "Text request");
  compose->add_option("-p,--plan", plan_path, "Explicit plan JSON")->check(CLI::ExistingFile);
  compose->add_option("-o,--out", out, "Composed SLAT output")->required();
  compose->add_option("--provenance", provenance_path, "Provenance report JSON output");

  auto* pipeline = app.add_subcommand("pipeline", "Run stages I-III and write the output bundle");
  pipeline->add_option("sources", sources, "Asset sources (overrides the config)");
  std::string prompt, style;
  pipeline->add_option("--prompt", prompt, "Text request (overrides the config)");
  pipeline->add_option("--style", style, "Style prompt for stage III");
  pipeline->add_option("-o,--out", out, "Output directory (overrides the config)");

  auto* serve = app.add_subcommand("serve", "Serve the REST API for the composer UI");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");

  CLI11_PARSE(app, argc, argv);

  int stage_code = muses::kExitConfig;
  try {
    muses::set_log_level(common.log_level);
    muses::PipelineConfig cfg = build_config(common, sources);

    if (*pipeline) {
      if (!prompt.empty()) cfg.prompt = prompt;
      if (!style.empty()) cfg.style_prompt = style;
      if (!out.empty()) cfg.output_dir = out;
      muses::PipelineResult r = muses::run_pipeline(cfg, default_gateway());
      for (int i = 0; i < 3; ++i) std::cerr << "stage " << (i + 1) << ": " << muses::to_string(r.stages[i]) << "\n";
      if (!r.ok()) {
        std::cerr << "error: " << r.error << "\n";
        for (const auto& d : r.error_details) std::cerr << "  " << d << "\n";
      }
      std::cerr << "output: " << cfg.output_dir.string() << "\n";
      return r.exit_code;
    }

    if (*serve) {
      muses::Service service(cfg, default_gateway());
      std::cerr << "listening on http://" << host << ":" << port << "\n";
      service.run(host, port);
      return 0;
    }

    muses::Session session(cfg, default_gateway());
    stage_code = muses::kExitStage1;
    load(session, cfg);

    if (*classify) {
      for (const auto& a : session.assets()) {
        std::string json = muses::classification_to_json(a.clean, *a.classification);
        if (out.empty()) {
          std::cout << json;
        } else {
          muses::write_file(std::filesystem::path(out) / (a.id + ".classification.json"), json);
        }
      }
      return 0;
    }

    stage_code = muses::kExitStage2;
    if (plan_path.empty() && request.empty()) request = cfg.prompt;
    make_plan(session, plan_path, request);

    if (*plan) {
      emit(out, muses::plan_to_json(*session.current_plan()));
      if (!assembled_path.empty()) muses::write_file(assembled_path, muses::assembled_to_json(*session.assembled()));
      return 0;
    }

    const muses::ComposedLatent& c = session.compose();
    muses::write_file(out, muses::encode_slat(c.latent));
    if (!provenance_path.empty()) muses::write_file(provenance_path, muses::provenance_to_json(c));
    std::cerr << c.latent.size() << " voxels, " << c.seam_mask.size() << " seam voxels\n";
    return 0;
  } catch (const muses::Error& e) {
    std::cerr << "error [" << muses::to_string(e.code()) << "]: " << e.what() << "\n";
    for (const auto& d : e.details()) std::cerr << "  " << d << "\n";
    return e.code() == muses::Errc::ConfigError ? muses::kExitConfig : stage_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return stage_code;
  }
}
