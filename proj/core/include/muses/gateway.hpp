#pragma once

#include <array>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "muses/codec.hpp"
#include "muses/layout.hpp"
#include "muses/region_mapper.hpp"
#include "muses/skeleton.hpp"
#include "muses/voxel.hpp"

namespace muses {

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;

  friend bool operator==(const Mesh&, const Mesh&) = default;
};

struct AssetBundle {
  Mesh mesh;
  Skeleton skeleton;
  SkinningMatrix skinning;
  SparseLatent slat;
  std::string prompt;

  // Throws InvalidInput when mesh, skinning and skeleton disagree in size.
  void validate() const;
};

struct BackendConfig {
  std::string endpoint = "fixture:auto";  // URL, or "fixture:<name>"
  std::string api_key_env;                // name of the variable holding the key
  double timeout_s = 30.0;
  double guidance_scale = 5.0;
  int sampling_steps = 25;

  [[nodiscard]] bool is_fixture() const;
  [[nodiscard]] std::string fixture_name() const;
  void validate() const;  // ConfigError
};

struct EditRequest {
  Image image;
  std::string positive_prompt;
  std::string negative_prompt;
  std::map<std::string, std::string> extra_params;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Carries one JSON POST. Implementations map connection failures to BackendUnavailable
// and expired deadlines to BackendTimeout.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& json_body,
                            const std::vector<std::pair<std::string, std::string>>& headers, double timeout_s) = 0;
};

class HttpTransport final : public Transport {
 public:
  HttpResponse post(const std::string& url, const std::string& json_body,
                    const std::vector<std::pair<std::string, std::string>>& headers, double timeout_s) override;
};

class ModelGateway {
 public:
  explicit ModelGateway(std::shared_ptr<Transport> transport = std::make_shared<HttpTransport>());

  AssetBundle generate_asset(const std::string& prompt, const BackendConfig& cfg) const;
  std::pair<Skeleton, SkinningMatrix> rig_asset(const Mesh& mesh, const BackendConfig& cfg) const;
  // Validated against the request's parts; PlanRejected lists every violation.
  AssemblyPlan plan_ops(const PlanRequest& request, const BackendConfig& cfg) const;
  Image edit_image(const EditRequest& request, const BackendConfig& cfg) const;
  SparseLatent regenerate_features(const Image& image, std::span<const Coord> positions, int resolution,
                                   int channels, const BackendConfig& cfg) const;

 private:
  HttpResponse call(const BackendConfig& cfg, const std::string& op, const std::string& body) const;

  std::shared_ptr<Transport> transport_;
};

// Planner backend that forwards to plan_ops.
class GatewayPlanner final : public PlannerBackend {
 public:
  GatewayPlanner(const ModelGateway& gateway, BackendConfig cfg) : gateway_(gateway), cfg_(std::move(cfg)) {}
  AssemblyPlan plan(const PlanRequest& request) override;

 private:
  const ModelGateway& gateway_;
  BackendConfig cfg_;
};

}  // namespace muses
