#include "httplib.h"
#include "wntags/service.hpp"

namespace wntags {

struct HttpServer::Impl {
  explicit Impl(Engine& engine) : api(engine) {}

  void route(const httplib::Request& req, httplib::Response& res) {
    ApiRequest request;
    request.method = req.method;
    request.path = req.path;
    for (const auto& [k, v] : req.params) request.params[k] = v;
    for (const auto& [k, v] : req.headers) request.headers[k] = v;
    request.body = req.body;

    const auto response = api.handle(request);
    res.status = response.status;
    for (const auto& [k, v] : response.headers) res.set_header(k, v);
    res.set_content(response.body, "application/json");
  }

  Api api;
  httplib::Server server;
};

HttpServer::HttpServer(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) { impl_->route(req, res); };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Put(".*", handler);
  impl_->server.Delete(".*", handler);
  impl_->server.Patch(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen_after_bind() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace wntags
