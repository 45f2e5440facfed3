#include <doctest.h>

#include <algorithm>
#include <set>
#include <thread>

#include "muses/fixtures.hpp"
#include "muses/service.hpp"
#include "muses/slat_io.hpp"
#include "muses/voxel.hpp"

#include <nlohmann/json.hpp>

// httplib last: <resolv.h> defines _res, which collides with Eigen.
#include <httplib.h>

using namespace muses;
using json = nlohmann::json;

namespace {

struct Server {
  explicit Server(PipelineConfig cfg = {}, std::shared_ptr<const ModelGateway> g = std::make_shared<ModelGateway>())
      : service(std::move(cfg), std::move(g)) {
    port = service.start("127.0.0.1", 0);
  }
  Service service;
  int port = 0;

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    return c;
  }

  std::pair<int, json> post(const std::string& path, const json& body = json::object()) const {
    auto c = client();
    auto r = c.Post(path, body.dump(), "application/json");
    REQUIRE(r);
    return {r->status, r->body.empty() ? json() : json::parse(r->body)};
  }

  std::pair<int, json> get(const std::string& path) const {
    auto c = client();
    auto r = c.Get(path);
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
  }

  std::string create() const {
    auto [status, body] = post("/sessions");
    REQUIRE(status == 201);
    return body.at("id");
  }

  // Session with the quadruped base and the winged donor, planned for wings.
  std::string wings_session() const {
    std::string id = create();
    REQUIRE(post("/sessions/" + id + "/assets", {{"fixture", "quadruped"}}).first == 201);
    REQUIRE(post("/sessions/" + id + "/assets", {{"fixture", "winged"}}).first == 201);
    REQUIRE(post("/sessions/" + id + "/classify").first == 200);
    auto [status, body] = post("/sessions/" + id + "/plan", {{"request", "a quadruped with wings"}});
    REQUIRE(status == 200);
    return id;
  }
};

json nudge(double dist) {
  return {{"type", "translate"}, {"target", "a1/wing/1"}, {"dir", {0.0, 1.0, 0.0}}, {"dist", dist}};
}

}  // namespace

TEST_CASE("session lifecycle over HTTP") {
  Server s;
  std::string id = s.create();
  CHECK(id == "s1");

  auto [st, added] = s.post("/sessions/" + id + "/assets", {{"fixture", "quadruped"}});
  CHECK(st == 201);
  CHECK(added.at("asset") == "a0");
  CHECK(added.at("voxels").get<int>() == static_cast<int>(make_fixture_bundle(TemplateKind::Quadruped).slat.size()));

  auto [cst, classified] = s.post("/sessions/" + id + "/classify");
  REQUIRE(cst == 200);
  const json& regions = classified.at("assets").at(0).at("partition").at("regions");
  CHECK(regions.size() == 7);
  std::multiset<std::string> labels;
  for (const auto& r : regions) labels.insert(r.at("label").get<std::string>());
  CHECK(labels.count("leg") == 4);
  CHECK(labels.count("head") == 1);
  CHECK(labels.count("tail") == 1);
  CHECK(labels.count("body") == 1);

  CHECK(s.post("/sessions/" + id + "/assets", {{"fixture", "winged"}}).first == 201);
  CHECK(s.post("/sessions/" + id + "/classify").first == 200);
  auto [pst, planned] = s.post("/sessions/" + id + "/plan", {{"request", "a quadruped with wings"}});
  REQUIRE(pst == 200);
  CHECK(planned.at("plan").at("parts").size() >= 3);
  CHECK(planned.at("assembled").at("skeleton").contains("joints"));
  CHECK(planned.at("assembled").at("instances").size() >= 3);

  // The plan can be sent back verbatim.
  auto [rst, replanned] = s.post("/sessions/" + id + "/plan", {{"plan", planned.at("plan")}});
  CHECK(rst == 200);
  CHECK(replanned.at("plan") == planned.at("plan"));
  CHECK(replanned.at("revision").get<int>() > planned.at("revision").get<int>());
}

TEST_CASE("invalid requests map to 400 and 404") {
  Server s;
  std::string id = s.wings_session();

  auto [st, err] = s.post("/sessions/" + id + "/ops", nudge(5.0));
  CHECK(st == 400);
  CHECK(err.at("code") == "PlanRejected");
  REQUIRE(err.at("violations").size() >= 1);
  CHECK(err.at("violations").at(0).get<std::string>().find("a1/wing/1") != std::string::npos);

  CHECK(s.post("/sessions/" + id + "/ops", {{"type", "scale"}, {"target", "a1/tail/1"}, {"factor", 2}}).first == 400);
  CHECK(s.post("/sessions/" + id + "/ops", {{"type", "spin"}, {"target", "a1/wing/1"}}).first == 400);
  CHECK(s.post("/sessions/" + id + "/assets", json::object()).first == 400);
  CHECK(s.post("/sessions/" + id + "/plan", json::object()).first == 400);

  auto c = s.client();
  auto raw = c.Post("/sessions/" + id + "/ops", "{not json", "application/json");
  REQUIRE(raw);
  CHECK(raw->status == 400);

  auto [nst, nf] = s.post("/sessions/s999/classify");
  CHECK(nst == 404);
  CHECK(nf.at("code") == "NotFound");
  CHECK(s.get("/sessions/s999/preview").first == 404);
  CHECK(s.get("/artifacts/00ff").first == 404);

  // A session without assets cannot classify or preview.
  std::string empty = s.create();
  CHECK(s.get("/sessions/" + empty + "/preview").first == 400);
  CHECK(s.post("/sessions/" + empty + "/ops", nudge(0.01)).first == 400);

  // Bad settings at creation are rejected.
  CHECK(s.post("/sessions", {{"settings", {{"transfer.nope", 1}}}}).first == 400);
}

TEST_CASE("rejected ops leave the revision alone") {
  Server s;
  std::string id = s.wings_session();
  auto before = s.get("/sessions/" + id + "/preview").second;
  CHECK(s.post("/sessions/" + id + "/ops", nudge(5.0)).first == 400);
  auto after = s.get("/sessions/" + id + "/preview").second;
  CHECK(before == after);

  auto [st, ok] = s.post("/sessions/" + id + "/ops", nudge(0.02));
  REQUIRE(st == 200);
  CHECK(ok.at("revision").get<int>() == before.at("revision").get<int>() + 1);
  CHECK(ok.at("assembled") != before.at("assembled"));
}

TEST_CASE("sessions are isolated") {
  Server s;
  std::string a = s.wings_session();
  std::string b = s.wings_session();
  CHECK(a != b);
  auto pb = s.get("/sessions/" + b + "/preview").second;
  for (int i = 0; i < 3; ++i) REQUIRE(s.post("/sessions/" + a + "/ops", nudge(0.01)).first == 200);
  CHECK(s.get("/sessions/" + b + "/preview").second == pb);
  CHECK(s.get("/sessions/" + a + "/preview").second.at("revision").get<int>() == pb.at("revision").get<int>() + 3);
}

TEST_CASE("concurrent ops on one session serialize") {
  Server s;
  std::string id = s.wings_session();
  int start = s.get("/sessions/" + id + "/preview").second.at("revision");
  constexpr int kThreads = 4, kEach = 5;
  std::vector<std::vector<int>> seen(kThreads);
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      auto c = s.client();
      for (int i = 0; i < kEach; ++i) {
        auto r = c.Post("/sessions/" + id + "/ops", nudge(0.001).dump(), "application/json");
        if (r && r->status == 200) seen[t].push_back(json::parse(r->body).at("revision"));
      }
    });
  }
  for (auto& th : threads) th.join();

  std::vector<int> all;
  for (const auto& v : seen) {
    CHECK(v.size() == kEach);
    CHECK(std::is_sorted(v.begin(), v.end()));
    all.insert(all.end(), v.begin(), v.end());
  }
  std::sort(all.begin(), all.end());
  std::vector<int> expected(kThreads * kEach);
  for (int i = 0; i < kThreads * kEach; ++i) expected[i] = start + 1 + i;
  CHECK(all == expected);
}

TEST_CASE("preview, compose and artifacts") {
  Server s;
  std::string id = s.wings_session();
  auto [pst, preview] = s.get("/sessions/" + id + "/preview");
  REQUIRE(pst == 200);
  const json& occ = preview.at("occupancy");
  CHECK(occ.at("resolution") == 16);
  long cells = 0;
  for (const auto& run : occ.at("rle")) cells += run.get<long>();
  CHECK(cells == 16 * 16 * 16);

  auto [cst, composed] = s.post("/sessions/" + id + "/compose");
  REQUIRE(cst == 200);
  std::string hash = composed.at("artifact").at("sha256");
  CHECK(composed.at("artifact").at("url") == "/artifacts/" + hash);
  CHECK(composed.at("seam_voxels").get<int>() > 0);

  auto c = s.client();
  auto art = c.Get("/artifacts/" + hash);
  REQUIRE(art);
  CHECK(art->status == 200);
  CHECK(sha256_hex(art->body) == hash);
  SparseLatent latent = decode_slat(art->body);
  CHECK(latent.size() == composed.at("voxels").get<std::size_t>());

  // The preview occupancy after compose is the composed latent's.
  auto after = s.get("/sessions/" + id + "/preview").second;
  CHECK(after.at("occupancy").at("rle") == json(occupancy_rle(coarse_occupancy(latent, 16))));

  // A second session with the same inputs produces the same artifact.
  std::string other = s.wings_session();
  CHECK(s.post("/sessions/" + other + "/compose").second.at("artifact").at("sha256") == hash);

  auto prov = c.Get(composed.at("provenance").at("url").get<std::string>());
  REQUIRE(prov);
  CHECK(json::parse(prov->body).at("voxels") == latent.size());
}

TEST_CASE("style needs configured backends") {
  Server s;
  std::string id = s.wings_session();
  REQUIRE(s.post("/sessions/" + id + "/compose").first == 200);
  auto [st, err] = s.post("/sessions/" + id + "/style", {{"prompt", "bronze"}});
  CHECK(st == 400);
  CHECK(err.at("code") == "ConfigError");
}
