#pragma once

#include <httplib.h>

#include <json.hpp>
#include <string>

#include "forge/service/pipeline.hpp"

namespace forge::service {

// Three-method HTTP API over the pipeline:
//   POST /build          body = container config JSON -> 201 {"job_id": ...}
//   GET  /status/<id>    -> 200 job view JSON
//   GET  /download/<id>  -> 200 image payload bytes
// plus GET /ping for liveness probes.
class HttpServer {
 public:
  explicit HttpServer(Pipeline& pipeline) : pipeline_(pipeline) {
    server_.Post("/build", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        const std::string job_id = pipeline_.submit(req.body);
        res.status = 201;
        res.set_content(nlohmann::json{{"job_id", job_id}}.dump(), "application/json");
      } catch (const Error& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });

    server_.Get("/status/:id", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        JobView view = pipeline_.status(req.path_params.at("id"));
        res.set_content(view.to_json().dump(), "application/json");
      } catch (const Error& e) {
        res.status = 404;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });

    server_.Get("/download/:id", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        auto [record, payload] = pipeline_.download(req.path_params.at("id"));
        res.set_header("X-Image-Id", record.image_id);
        res.set_header("X-Payload-Digest", to_hex(record.payload_digest));
        res.set_content(payload, "application/octet-stream");
      } catch (const Error& e) {
        res.status = e.code() == Errc::not_ready ? 409 : 404;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });

    server_.Get("/ping", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok", "text/plain");
    });
  }

  // Binds and serves; blocks until stop(). Port 0 picks a free port, readable
  // through bound_port() once listening.
  bool listen(const std::string& address, int port) {
    if (port == 0) {
      bound_port_ = server_.bind_to_any_port(address);
      if (bound_port_ < 0) return false;
      return server_.listen_after_bind();
    }
    bound_port_ = port;
    return server_.listen(address.c_str(), port);
  }

  int bound_port() const { return bound_port_; }
  void stop() { server_.stop(); }
  bool is_running() const { return server_.is_running(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  Pipeline& pipeline_;
  httplib::Server server_;
  int bound_port_ = -1;
};

}  // namespace forge::service
