#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "pecs/error.hpp"
#include "pecs/store.hpp"

namespace httplib {
class Server;
}

namespace pecs {

struct Request {
  std::string method;
  std::string path;
  std::multimap<std::string, std::string> query;
  /// Header names lower-cased.
  std::map<std::string, std::string> headers;
  std::string body;

  /// Splits "path?query" and percent-decodes the query.
  static Request make(std::string method, std::string_view target, std::string body = {},
                      std::map<std::string, std::string> headers = {});
  Request& bearer(const std::string& token);
};

struct Response {
  int status = 200;
  std::string body;  // JSON
};

int http_status(ErrorCode code) noexcept;

/// Routes the JSON endpoint table onto a Store. Every endpoint except
/// /register and /login needs `Authorization: Bearer <token>`.
class Service {
 public:
  using SeedSource = std::function<std::int64_t()>;

  explicit Service(Store& store, SeedSource seeds = {});

  Response handle_request(const Request& request);

 private:
  Store& store_;
  SeedSource seeds_;
};

/// Binds a Service to an HTTP server. `assets_dir`, when non-empty, is
/// served under /assets/.
std::unique_ptr<httplib::Server> make_http_server(Service& service,
                                                  const std::string& assets_dir = {});

}  // namespace pecs
