#include <httplib.h>

#include "pecs/service.hpp"

namespace pecs {

std::unique_ptr<httplib::Server> make_http_server(Service& service,
                                                  const std::string& assets_dir) {
  auto server = std::make_unique<httplib::Server>();
  if (!assets_dir.empty() && !server->set_mount_point("/assets", assets_dir)) {
    throw std::runtime_error("assets directory does not exist: " + assets_dir);
  }

  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    Request request;
    request.method = req.method;
    request.path = req.path;
    for (const auto& [k, v] : req.params) request.query.emplace(k, v);
    for (const auto& [k, v] : req.headers) {
      std::string key = k;
      for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      request.headers[key] = v;
    }
    request.body = req.body;

    const Response response = service.handle_request(request);
    res.status = response.status;
    res.set_content(response.body, "application/json");
  };

  server->Get(".*", route);  // mounted assets are matched before handlers
  server->Post(".*", route);
  server->Put(".*", route);
  server->Delete(".*", route);
  return server;
}

}  // namespace pecs
