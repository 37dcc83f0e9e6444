#pragma once

#include <charconv>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "forge/errors.hpp"

namespace forge::service {

struct ServiceConfig {
  std::string listen_address = "127.0.0.1";
  int listen_port = 8080;
  std::filesystem::path registry_root;
  std::filesystem::path workflow_root;
  std::string backend = "simulated";  // "simulated" or "external"
  std::string external_build_cmd;     // {context_dir} {platform} {output}
  std::string external_convert_cmd;   // {input} {output}; empty = simulated conversion
  std::size_t workers = 2;
  std::string host_platform = "linux/amd64";
  std::vector<std::string> allowed_engines{"docker", "singularity"};
  std::set<std::string> simulated_capabilities{"linux/amd64", "linux/arm64", "linux/ppc64le"};
  int simulated_delay_ms = 0;
  std::string simulated_fail_package;
  std::size_t log_cap_bytes = 1 << 20;

  void validate() const {
    if (registry_root.empty())
      throw Error(Errc::config_error, "registry_root must be set");
    if (workflow_root.empty())
      throw Error(Errc::config_error, "workflow_root must be set");
    if (backend != "simulated" && backend != "external")
      throw Error(Errc::config_error, "backend must be 'simulated' or 'external'", backend);
    if (backend == "external" && external_build_cmd.empty())
      throw Error(Errc::config_error, "external backend requires external_build_cmd");
    if (workers < 1) throw Error(Errc::config_error, "workers must be at least 1");
  }
};

namespace detail {

inline std::string trim(std::string s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
  return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!(cur = trim(cur)).empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!(cur = trim(cur)).empty()) out.push_back(cur);
  return out;
}

inline long parse_int(const std::string& s, const std::string& key) {
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw Error(Errc::config_error, "bad integer '" + s + "' for " + key, key);
  return v;
}

}  // namespace detail

// Flat `key = value` format, '#' comments. Unknown keys are rejected so a
// typo cannot silently fall back to a default.
inline ServiceConfig parse_service_config(const std::string& text) {
  ServiceConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::config_error, "expected key = value on line " + std::to_string(line_no));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));

    if (key == "listen_address") cfg.listen_address = value;
    else if (key == "listen_port") cfg.listen_port = int(detail::parse_int(value, key));
    else if (key == "registry_root") cfg.registry_root = value;
    else if (key == "workflow_root") cfg.workflow_root = value;
    else if (key == "backend") cfg.backend = value;
    else if (key == "external_build_cmd") cfg.external_build_cmd = value;
    else if (key == "external_convert_cmd") cfg.external_convert_cmd = value;
    else if (key == "workers") cfg.workers = std::size_t(detail::parse_int(value, key));
    else if (key == "host_platform") cfg.host_platform = value;
    else if (key == "allowed_engines") cfg.allowed_engines = detail::split_list(value);
    else if (key == "simulated_capabilities") {
      cfg.simulated_capabilities.clear();
      for (auto& s : detail::split_list(value)) cfg.simulated_capabilities.insert(s);
    } else if (key == "simulated_delay_ms")
      cfg.simulated_delay_ms = int(detail::parse_int(value, key));
    else if (key == "simulated_fail_package") cfg.simulated_fail_package = value;
    else if (key == "log_cap_bytes") cfg.log_cap_bytes = std::size_t(detail::parse_int(value, key));
    else throw Error(Errc::config_error, "unknown key '" + key + "'", key);
  }
  return cfg;
}

}  // namespace forge::service
