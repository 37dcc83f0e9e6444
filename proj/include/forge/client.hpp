#pragma once

#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <thread>

#include "forge/fsio.hpp"

namespace forge::client {

// Exit codes are a stable, scriptable contract.
enum ExitCode : int {
  exit_ok = 0,
  exit_build_failed = 1,
  exit_validation = 2,
  exit_connection = 3,
  exit_unknown_job = 4,
  exit_not_ready = 5,
  exit_write_error = 6,
  exit_timeout = 7,
};

struct ClientConfig {
  std::string service_url = "http://127.0.0.1:8080";
  std::chrono::milliseconds poll_interval{500};
  std::chrono::milliseconds timeout{120000};

  void validate() const {
    if (poll_interval.count() <= 0)
      throw Error(Errc::config_error, "poll interval must be positive");
    if (timeout < poll_interval)
      throw Error(Errc::config_error, "timeout must be at least the poll interval");
  }
};

namespace detail {

inline std::optional<nlohmann::json> get_json(httplib::Client& http, const std::string& path,
                                              int& status) {
  auto res = http.Get(path);
  if (!res) {
    status = -1;
    return std::nullopt;
  }
  status = res->status;
  auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

}  // namespace detail

// Submit a build; with `wait`, poll until the job is terminal.
inline int cmd_build(const ClientConfig& cfg, const std::filesystem::path& config_path, bool wait,
                     std::ostream& out, std::ostream& err) {
  cfg.validate();
  std::string body;
  try {
    body = read_file(config_path);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_write_error;
  }

  httplib::Client http(cfg.service_url);
  auto res = http.Post("/build", body, "application/json");
  if (!res) {
    err << "cannot reach service at " << cfg.service_url << "\n";
    return exit_connection;
  }
  if (res->status == 400) {
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    err << (j.is_discarded() ? res->body : j.value("error", res->body)) << "\n";
    return exit_validation;
  }
  if (res->status != 201) {
    err << "unexpected status " << res->status << "\n";
    return exit_connection;
  }
  const std::string job_id = nlohmann::json::parse(res->body).at("job_id").get<std::string>();
  out << job_id << "\n";
  if (!wait) return exit_ok;

  const auto deadline = std::chrono::steady_clock::now() + cfg.timeout;
  for (;;) {
    if (std::chrono::steady_clock::now() >= deadline) {
      err << "timed out after " << cfg.timeout.count() << " ms; job " << job_id
          << " is still running server-side\n";
      return exit_timeout;
    }
    int status = 0;
    auto view = detail::get_json(http, "/status/" + job_id, status);
    if (status == -1) {
      err << "lost connection to " << cfg.service_url << "\n";
      return exit_connection;
    }
    if (status != 200 || !view) {
      err << "status query failed with " << status << "\n";
      return exit_unknown_job;
    }
    const std::string state = view->at("state").get<std::string>();
    if (state == "FINISHED") {
      out << "FINISHED " << view->at("image_id").get<std::string>() << "\n";
      return exit_ok;
    }
    if (state == "FAILED") {
      err << "job failed:\n" << view->at("log_tail").get<std::string>() << "\n";
      out << "FAILED\n";
      return exit_build_failed;
    }
    std::this_thread::sleep_for(cfg.poll_interval);
  }
}

// One-line state report: `<job_id> <STATE> reused=<bool>`.
inline int cmd_status(const ClientConfig& cfg, const std::string& job_id, std::ostream& out,
                      std::ostream& err) {
  cfg.validate();
  httplib::Client http(cfg.service_url);
  int status = 0;
  auto view = detail::get_json(http, "/status/" + job_id, status);
  if (status == -1) {
    err << "cannot reach service at " << cfg.service_url << "\n";
    return exit_connection;
  }
  if (status == 404) {
    err << "unknown job " << job_id << "\n";
    return exit_unknown_job;
  }
  if (status != 200 || !view) {
    err << "status query failed with " << status << "\n";
    return exit_connection;
  }
  out << job_id << " " << view->at("state").get<std::string>() << " reused="
      << (view->at("reused").get<bool>() ? "true" : "false") << "\n";
  return exit_ok;
}

// Download the image payload to a file, verifying the advertised length.
inline int cmd_download(const ClientConfig& cfg, const std::string& job_id,
                        const std::filesystem::path& out_path, std::ostream& out,
                        std::ostream& err) {
  cfg.validate();
  httplib::Client http(cfg.service_url);
  auto res = http.Get("/download/" + job_id);
  if (!res) {
    err << "cannot reach service at " << cfg.service_url << "\n";
    return exit_connection;
  }
  if (res->status == 404) {
    err << "unknown job " << job_id << "\n";
    return exit_unknown_job;
  }
  if (res->status == 409) {
    err << "job " << job_id << " is not finished\n";
    return exit_not_ready;
  }
  if (res->status != 200) {
    err << "download failed with " << res->status << "\n";
    return exit_connection;
  }
  if (res->has_header("Content-Length")) {
    const auto advertised = std::stoull(res->get_header_value("Content-Length"));
    if (advertised != res->body.size()) {
      err << "short read: got " << res->body.size() << " of " << advertised << " bytes\n";
      return exit_connection;
    }
  }
  std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
  if (!file || !(file.write(res->body.data(), std::streamsize(res->body.size())))) {
    err << "cannot write " << out_path.string() << "\n";
    return exit_write_error;
  }
  file.close();
  out << out_path.string() << " " << res->body.size() << " bytes\n";
  return exit_ok;
}

}  // namespace forge::client
