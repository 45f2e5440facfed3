#include <chrono>
#include <regex>

// Eigen must come before httplib: <resolv.h> defines a `_res` macro that breaks Eigen.
#include "muses/error.hpp"
#include "muses/gateway.hpp"

#include <httplib.h>

namespace muses {

HttpResponse HttpTransport::post(const std::string& url, const std::string& json_body,
                                 const std::vector<std::pair<std::string, std::string>>& headers, double timeout_s) {
  static const std::regex pattern(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, pattern)) throw Error(Errc::ConfigError, "bad backend URL");
  if (url.starts_with("https://")) {
    throw Error(Errc::BackendUnavailable, "https endpoints need a TLS-terminating proxy; this build speaks plain http");
  }
  std::string path = m[2].matched ? m[2].str() : "/";

  httplib::Client client(m[1].str());
  auto timeout = std::chrono::duration<double>(timeout_s);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);

  auto start = std::chrono::steady_clock::now();
  auto res = client.Post(path, h, json_body, "application/json");
  if (!res) {
    auto err = res.error();
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= 0.9 * timeout_s)) {
      throw Error(Errc::BackendTimeout, "backend did not answer within " + std::to_string(timeout_s) + " s");
    }
    throw Error(Errc::BackendUnavailable, "backend unreachable: " + httplib::to_string(err));
  }
  return {res->status, res->body};
}

}  // namespace muses
