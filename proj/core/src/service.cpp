// Eigen-based muses headers must come before httplib: it pulls in <resolv.h>, whose
// _res macro breaks Eigen's declarations.
#include "muses/service.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include "json_detail.hpp"
#include "log_detail.hpp"
#include "muses/bundle_io.hpp"
#include "muses/pipeline.hpp"
#include "muses/plan_io.hpp"
#include "muses/session.hpp"
#include "muses/skeleton_io.hpp"
#include "muses/slat_io.hpp"

#include <httplib.h>

namespace muses {

namespace {

using detail::ojson;

struct UnknownSession {
  std::string id;
};

struct Entry {
  Entry(PipelineConfig cfg, std::shared_ptr<const ModelGateway> gw) : session(std::move(cfg), std::move(gw)) {}
  std::shared_mutex mu;
  Session session;
};

struct Artifact {
  std::string bytes;
  std::string content_type;
};

int http_status(Errc code) {
  switch (code) {
    case Errc::BackendUnavailable:
    case Errc::MalformedResponse:
    case Errc::StructureViolation: return 502;
    case Errc::BackendTimeout: return 504;
    default: return 400;
  }
}

void send_json(httplib::Response& res, const ojson& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const std::vector<std::string>& violations = {}) {
  send_json(res, {{"error", message}, {"code", code}, {"violations", violations}}, status);
}

ojson body_of(const httplib::Request& req) {
  if (req.body.empty()) return ojson::object();
  ojson j = detail::parse(req.body);
  if (!j.is_object()) throw Error(Errc::InvalidInput, "request body must be a JSON object");
  return j;
}

}  // namespace

struct Service::Impl {
  PipelineConfig cfg;
  std::shared_ptr<const ModelGateway> gateway;
  httplib::Server server;
  std::thread thread;

  std::mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Entry>> sessions;
  std::uint64_t next_session = 1;

  std::mutex artifacts_mu;
  std::map<std::string, Artifact> artifacts;

  Impl(PipelineConfig c, std::shared_ptr<const ModelGateway> g) : cfg(std::move(c)), gateway(std::move(g)) {
    routes();
  }

  std::shared_ptr<Entry> entry(const std::string& id) {
    std::lock_guard lock(sessions_mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw UnknownSession{id};
    return it->second;
  }

  std::string store(std::string bytes, std::string content_type) {
    std::string hash = sha256_hex(bytes);
    std::lock_guard lock(artifacts_mu);
    artifacts.try_emplace(hash, Artifact{std::move(bytes), std::move(content_type)});
    return hash;
  }

  static ojson artifact_ref(const std::string& hash) { return {{"sha256", hash}, {"url", "/artifacts/" + hash}}; }

  // Runs a handler, mapping engine failures onto HTTP statuses.
  template <typename F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const UnknownSession& e) {
      send_error(res, 404, "NotFound", "unknown session '" + e.id + "'");
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what(), e.details());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, to_string(Errc::FormatError), e.what());
    } catch (const std::exception& e) {
      detail::log().error("request failed: {}", e.what());
      send_error(res, 500, "Internal", e.what());
    }
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&, Entry&)>;

  // Mutating session route: exclusive lock.
  void post_session(const std::string& verb, Handler h) {
    server.Post("/sessions/([^/]+)/" + verb, [this, h](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto e = entry(req.matches[1]);
        std::unique_lock lock(e->mu);
        h(req, res, *e);
      });
    });
  }

  void routes() {
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        ojson body = body_of(req);
        PipelineConfig c = cfg;
        if (body.contains("settings")) {
          for (const auto& [k, v] : body.at("settings").items()) apply_setting(c, k, v.dump());
        }
        auto e = std::make_shared<Entry>(std::move(c), gateway);
        std::string id;
        {
          std::lock_guard lock(sessions_mu);
          id = "s" + std::to_string(next_session++);
          sessions.emplace(id, e);
        }
        send_json(res, {{"id", id}, {"revision", e->session.revision()}}, 201);
      });
    });

    post_session("assets", [](const httplib::Request& req, httplib::Response& res, Entry& e) {
      ojson body = body_of(req);
      AssetBundle bundle;
      if (body.contains("fixture")) {
        bundle = e.session.load_source("fixture:" + body.at("fixture").get<std::string>());
      } else if (body.contains("bundle")) {
        bundle = bundle_from_json(body.at("bundle").dump());
      } else if (body.contains("source")) {
        bundle = e.session.load_source(body.at("source").get<std::string>());
      } else {
        throw Error(Errc::InvalidInput, "asset upload needs 'fixture', 'source' or 'bundle'");
      }
      const LoadedAsset& a = e.session.add_asset(std::move(bundle));
      send_json(res, {{"asset", a.id},
                      {"revision", e.session.revision()},
                      {"joints", a.clean.skeleton.joint_count()},
                      {"voxels", a.bundle.slat.size()}},
                201);
    });

    post_session("classify", [](const httplib::Request&, httplib::Response& res, Entry& e) {
      e.session.classify();
      ojson assets = ojson::array();
      for (const auto& a : e.session.assets()) {
        assets.push_back({{"id", a.id}, {"partition", ojson::parse(classification_to_json(a.clean, *a.classification))}});
      }
      send_json(res, {{"revision", e.session.revision()}, {"assets", std::move(assets)}});
    });

    post_session("plan", [](const httplib::Request& req, httplib::Response& res, Entry& e) {
      ojson body = body_of(req);
      if (body.contains("plan")) {
        e.session.set_plan(plan_from_json(body.at("plan").dump()));
      } else if (body.contains("request")) {
        e.session.plan(body.at("request").get<std::string>());
      } else {
        throw Error(Errc::InvalidInput, "plan needs 'request' text or an explicit 'plan'");
      }
      send_json(res, {{"revision", e.session.revision()},
                      {"plan", ojson::parse(plan_to_json(*e.session.current_plan()))},
                      {"assembled", ojson::parse(assembled_to_json(*e.session.assembled()))}});
    });

    post_session("ops", [](const httplib::Request& req, httplib::Response& res, Entry& e) {
      if (!e.session.current_plan()) throw Error(Errc::InvalidInput, "session has no plan to edit");
      EditOp op = op_from_json(req.body, e.session.current_plan()->parts);
      const AssembledSkeleton& assembled = e.session.apply_op(op);
      send_json(res, {{"revision", e.session.revision()}, {"assembled", ojson::parse(assembled_to_json(assembled))}});
    });

    server.Get("/sessions/([^/]+)/preview", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto e = entry(req.matches[1]);
        std::shared_lock lock(e->mu);
        const Session& s = e->session;
        if (!s.assembled()) throw Error(Errc::InvalidInput, "session has no assembled skeleton yet");
        ComposedLatent c = s.composed() ? *s.composed() : s.composition();
        DenseCoarseGrid grid = coarse_occupancy(c.latent, 16);
        send_json(res, {{"revision", s.revision()},
                        {"assembled", ojson::parse(assembled_to_json(*s.assembled()))},
                        {"occupancy", {{"resolution", grid.resolution}, {"rle", occupancy_rle(grid)}}}});
      });
    });

    post_session("compose", [this](const httplib::Request&, httplib::Response& res, Entry& e) {
      const ComposedLatent& c = e.session.compose();
      std::string hash = store(encode_slat(c.latent), "application/octet-stream");
      std::string prov = store(provenance_to_json(c), "application/json");
      send_json(res, {{"revision", e.session.revision()},
                      {"artifact", artifact_ref(hash)},
                      {"provenance", artifact_ref(prov)},
                      {"voxels", c.latent.size()},
                      {"seam_voxels", c.seam_mask.size()}});
    });

    server.Post("/sessions/([^/]+)/style", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto e = entry(req.matches[1]);
        ojson body = body_of(req);
        std::shared_lock lock(e->mu);
        const Session& s = e->session;
        if (!style_backends_configured(s.config())) {
          throw Error(Errc::ConfigError, "style needs remote image-edit and regeneration backends");
        }
        std::optional<std::string> prompt = s.config().style_prompt;
        if (body.contains("prompt")) prompt = body.at("prompt").get<std::string>();
        if (!prompt || prompt->empty()) throw Error(Errc::InvalidInput, "style needs a prompt");
        if (!s.composed()) throw Error(Errc::InvalidInput, "compose the session before styling it");
        StyleResult r = run_style(s.gateway(), s.config(), s.composed()->latent, *prompt);
        send_json(res, {{"revision", s.revision()},
                        {"reference", artifact_ref(store(encode_png(r.reference), "image/png"))},
                        {"edited", artifact_ref(store(encode_png(r.edited), "image/png"))},
                        {"styled", artifact_ref(store(encode_slat(r.styled), "application/octet-stream"))}});
      });
    });

    server.Get("/artifacts/([0-9a-f]+)", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(artifacts_mu);
      auto it = artifacts.find(req.matches[1]);
      if (it == artifacts.end()) {
        send_error(res, 404, "NotFound", "unknown artifact");
        return;
      }
      res.set_content(it->second.bytes, it->second.content_type);
    });
  }
};

Service::Service(PipelineConfig cfg, std::shared_ptr<const ModelGateway> gateway)
    : impl_(std::make_unique<Impl>(std::move(cfg), std::move(gateway))) {}

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::ConfigError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  detail::log().info("serving on {}:{}", host, bound);
  return bound;
}

void Service::run(const std::string& host, int port) {
  detail::log().info("serving on {}:{}", host, port);
  if (!impl_->server.listen(host, port)) {
    throw Error(Errc::ConfigError, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace muses
