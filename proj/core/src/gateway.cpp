#include "muses/gateway.hpp"

#include <algorithm>
#include <cstdlib>

#include "json_detail.hpp"
#include "log_detail.hpp"
#include "muses/bundle_io.hpp"
#include "muses/error.hpp"
#include "muses/fixtures.hpp"
#include "muses/plan_io.hpp"
#include "muses/skinning_io.hpp"
#include "muses/slat_io.hpp"

namespace muses {

namespace {

using detail::ojson;

constexpr std::string_view kFixturePrefix = "fixture:";

ojson parse_response(const HttpResponse& r, std::string_view op) {
  try {
    auto j = ojson::parse(r.body);
    if (!j.is_object()) throw Error(Errc::MalformedResponse, std::string(op) + ": response is not a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedResponse, std::string(op) + ": response is not JSON: " + e.what());
  }
}

std::string field(const ojson& j, const char* key, std::string_view op) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(Errc::MalformedResponse, std::string(op) + ": response lacks string field '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

// Runs a decoder over backend data, turning format failures into MalformedResponse.
template <typename F>
auto decode(std::string_view op, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::FormatError || e.code() == Errc::InvalidInput) {
      throw Error(Errc::MalformedResponse, std::string(op) + ": " + e.what());
    }
    throw;
  }
}

void require_positions(std::span<const Coord> positions, int resolution) {
  SparseLatent probe{resolution, 1, {positions.begin(), positions.end()},
                     std::vector<float>(positions.size(), 0.0f)};
  probe.validate();
}

std::vector<Coord> sorted_positions(std::vector<Coord> p) {
  std::sort(p.begin(), p.end());
  return p;
}

}  // namespace

void AssetBundle::validate() const {
  skeleton.validate();
  skinning.validate();
  slat.validate();
  if (skinning.weights.rows() != static_cast<Eigen::Index>(mesh.vertices.size())) {
    throw Error(Errc::InvalidInput, "skinning rows must match the mesh vertex count");
  }
  if (skinning.weights.cols() != skeleton.joint_count()) {
    throw Error(Errc::InvalidInput, "skinning columns must match the skeleton joint count");
  }
}

bool BackendConfig::is_fixture() const { return endpoint.starts_with(kFixturePrefix); }

std::string BackendConfig::fixture_name() const {
  return is_fixture() ? endpoint.substr(kFixturePrefix.size()) : std::string();
}

void BackendConfig::validate() const {
  if (endpoint.empty()) throw Error(Errc::ConfigError, "backend endpoint is empty");
  if (!is_fixture() && !endpoint.starts_with("http://") && !endpoint.starts_with("https://")) {
    throw Error(Errc::ConfigError, "backend endpoint must be an http(s) URL or fixture:<name>");
  }
  if (!(timeout_s > 0.0)) throw Error(Errc::ConfigError, "backend timeout must be positive");
  if (!(guidance_scale > 0.0)) throw Error(Errc::ConfigError, "guidance scale must be positive");
  if (sampling_steps < 1) throw Error(Errc::ConfigError, "sampling steps must be >= 1");
}

ModelGateway::ModelGateway(std::shared_ptr<Transport> transport) : transport_(std::move(transport)) {
  if (!transport_) throw Error(Errc::InvalidInput, "gateway needs a transport");
}

HttpResponse ModelGateway::call(const BackendConfig& cfg, const std::string& op, const std::string& body) const {
  std::vector<std::pair<std::string, std::string>> headers;
  if (!cfg.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
      headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
  }
  detail::log().info("gateway {} -> {} ({} bytes, auth from {})", op, cfg.endpoint, body.size(),
                     cfg.api_key_env.empty() ? "none" : cfg.api_key_env);
  HttpResponse r = transport_->post(cfg.endpoint, body, headers, cfg.timeout_s);
  detail::log().debug("gateway {} <- status {} ({} bytes)", op, r.status, r.body.size());
  if (r.status == 408 || r.status == 504) {
    throw Error(Errc::BackendTimeout, op + ": backend timed out (status " + std::to_string(r.status) + ")");
  }
  if (r.status < 200 || r.status >= 300) {
    throw Error(Errc::BackendUnavailable, op + ": backend returned status " + std::to_string(r.status));
  }
  return r;
}

AssetBundle ModelGateway::generate_asset(const std::string& prompt, const BackendConfig& cfg) const {
  if (prompt.empty()) throw Error(Errc::InvalidInput, "generate_asset needs a prompt");
  cfg.validate();
  if (cfg.is_fixture()) {
    auto name = cfg.fixture_name();
    auto kind = fixture_kind(name);
    if (!kind && name != "auto") throw Error(Errc::ConfigError, "unknown asset fixture '" + name + "'");
    AssetBundle b = make_fixture_bundle(kind ? *kind : guess_fixture_kind(prompt));
    b.prompt = prompt;
    return b;
  }
  ojson req{{"op", "generate"},
            {"prompt", prompt},
            {"guidance_scale", cfg.guidance_scale},
            {"sampling_steps", cfg.sampling_steps}};
  auto r = call(cfg, "generate", req.dump());
  AssetBundle b = decode("generate", [&] { return bundle_from_json(r.body); });
  b.skinning.normalize_rows();
  return b;
}

std::pair<Skeleton, SkinningMatrix> ModelGateway::rig_asset(const Mesh& mesh, const BackendConfig& cfg) const {
  if (mesh.vertices.empty()) throw Error(Errc::EmptyMesh, "rig_asset needs mesh vertices");
  cfg.validate();
  Skeleton skeleton;
  SkinningMatrix skinning;
  if (cfg.is_fixture()) {
    auto name = cfg.fixture_name();
    auto kind = fixture_kind(name);
    if (!kind) throw Error(Errc::ConfigError, "rig fixture must name a template, got '" + name + "'");
    AssetBundle b = make_fixture_bundle(*kind);
    skeleton = std::move(b.skeleton);
    skinning = std::move(b.skinning);
  } else {
    ojson req{{"op", "rig"}, {"mesh", detail::mesh_json(mesh)}};
    auto r = call(cfg, "rig", req.dump());
    auto j = parse_response(r, "rig");
    skeleton = decode("rig", [&] {
      if (!j.contains("skeleton")) throw Error(Errc::FormatError, "missing key 'skeleton'");
      return detail::skeleton_from(j.at("skeleton"));
    });
    skinning = decode("rig", [&] { return decode_skinning(base64_decode(field(j, "skinning", "rig"))); });
  }
  if (skinning.weights.rows() != static_cast<Eigen::Index>(mesh.vertices.size())) {
    throw Error(Errc::MalformedResponse, "rig: skinning has " + std::to_string(skinning.weights.rows()) +
                                             " rows for a mesh of " + std::to_string(mesh.vertices.size()) +
                                             " vertices");
  }
  if (skinning.weights.cols() != skeleton.joint_count()) {
    throw Error(Errc::MalformedResponse, "rig: skinning columns do not match the skeleton");
  }
  skinning.normalize_rows();
  return {std::move(skeleton), std::move(skinning)};
}

AssemblyPlan ModelGateway::plan_ops(const PlanRequest& request, const BackendConfig& cfg) const {
  cfg.validate();
  AssemblyPlan plan;
  if (cfg.is_fixture()) {
    auto name = cfg.fixture_name();
    if (name == "rule" || name == "auto") {
      RulePlanner rule;
      plan = rule.plan(request);
    } else if (name == "body") {
      // Recorded reply that keeps the base body untouched.
      for (const auto& p : request.parts) {
        if (p.geometry.ref.label == RegionLabel::Body) plan.parts.push_back({p.geometry.ref, 1, false});
      }
    } else if (name.starts_with("@")) {
      std::string text;
      try {
        text = read_file(name.substr(1));
      } catch (const Error& e) {
        throw Error(Errc::ConfigError, std::string("recorded plan fixture: ") + e.what());
      }
      plan = decode("plan", [&] { return plan_from_json(text); });
    } else {
      throw Error(Errc::ConfigError, "unknown plan fixture '" + name + "'");
    }
  } else {
    auto r = call(cfg, "plan", plan_request_json(request));
    auto j = parse_response(r, "plan");
    for (const char* key : {"parts", "ops"}) {
      if (!j.contains(key) || !j.at(key).is_array()) {
        throw Error(Errc::MalformedResponse, std::string("plan: response lacks array '") + key + "'");
      }
    }
    plan = decode("plan", [&] { return plan_from_json(r.body); });
  }
  auto violations = validate_plan(plan, geometry_of(request.parts));
  if (!violations.empty()) throw Error(Errc::PlanRejected, "plan rejected: " + violations.front(), violations);
  return plan;
}

Image ModelGateway::edit_image(const EditRequest& request, const BackendConfig& cfg) const {
  if (request.image.width <= 0 || request.image.height <= 0 || request.image.rgba.empty()) {
    throw Error(Errc::InvalidInput, "edit_image needs a non-empty image");
  }
  cfg.validate();
  if (cfg.is_fixture()) return request.image;
  ojson params = ojson::object();
  for (const auto& [k, v] : request.extra_params) params[k] = v;
  ojson req{{"op", "edit_image"},
            {"image", base64_encode(encode_png(request.image))},
            {"positive_prompt", request.positive_prompt},
            {"negative_prompt", request.negative_prompt},
            {"params", std::move(params)},
            {"guidance_scale", cfg.guidance_scale},
            {"sampling_steps", cfg.sampling_steps}};
  auto r = call(cfg, "edit_image", req.dump());
  auto j = parse_response(r, "edit_image");
  return decode("edit_image", [&] { return decode_png(base64_decode(field(j, "image", "edit_image"))); });
}

SparseLatent ModelGateway::regenerate_features(const Image& image, std::span<const Coord> positions, int resolution,
                                               int channels, const BackendConfig& cfg) const {
  require_positions(positions, resolution);
  if (channels < 1) throw Error(Errc::InvalidInput, "channels must be >= 1");
  cfg.validate();
  if (cfg.is_fixture()) {
    return {resolution, channels, {positions.begin(), positions.end()}, fixture_features(positions, channels)};
  }
  SparseLatent structure{resolution, channels, {positions.begin(), positions.end()},
                         std::vector<float>(positions.size() * static_cast<std::size_t>(channels), 0.0f)};
  ojson req{{"op", "regenerate_features"},
            {"image", base64_encode(encode_png(image))},
            {"slat", base64_encode(encode_slat(structure))},
            {"guidance_scale", cfg.guidance_scale},
            {"sampling_steps", cfg.sampling_steps}};
  auto r = call(cfg, "regenerate_features", req.dump());
  auto j = parse_response(r, "regenerate_features");
  SparseLatent out = decode("regenerate_features", [&] {
    return decode_slat(base64_decode(field(j, "slat", "regenerate_features")));
  });
  if (out.resolution != resolution || out.channels != channels) {
    throw Error(Errc::MalformedResponse, "regenerate_features: resolution or channel count changed");
  }
  if (sorted_positions(out.positions) != sorted_positions(structure.positions)) {
    throw Error(Errc::StructureViolation, "regenerate_features: backend changed the voxel structure");
  }
  return out;
}

AssemblyPlan GatewayPlanner::plan(const PlanRequest& request) { return gateway_.plan_ops(request, cfg_); }

}  // namespace muses
