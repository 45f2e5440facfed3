#pragma once

#include <memory>
#include <string>

#include "muses/config.hpp"
#include "muses/gateway.hpp"

namespace muses {

// Local HTTP service for the composer UI:
//   POST /sessions                    {"settings": {"key": value}}? -> {"id", "revision"}
//   POST /sessions/{id}/assets        {"fixture"} | {"source"} | {"bundle"}
//   POST /sessions/{id}/classify      -> partitions
//   POST /sessions/{id}/plan          {"request": text} | {"plan": plan JSON}
//   POST /sessions/{id}/ops           one op in plan JSON form
//   GET  /sessions/{id}/preview       assembled skeleton + 16^3 occupancy RLE
//   POST /sessions/{id}/compose       -> SLAT artifact reference
//   POST /sessions/{id}/style         {"prompt"} -> stage III artifacts
//   GET  /artifacts/{sha256}
// Errors are {"error", "code", "violations"} with 400/404/502/504.
class Service {
 public:
  Service(PipelineConfig cfg, std::shared_ptr<const ModelGateway> gateway);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and serves on a background thread; port 0 picks a free port. Returns the port.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace muses
