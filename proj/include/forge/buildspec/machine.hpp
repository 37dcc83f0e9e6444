#pragma once

#include <cctype>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "forge/errors.hpp"

namespace forge::buildspec {

inline const std::vector<std::string> kDefaultEngines{"docker", "singularity"};

namespace detail {

inline bool is_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
      return false;
  return s != "." && s != "..";
}

// <name>[@<version>]
inline bool is_versioned_spec(const std::string& s) {
  auto at = s.find('@');
  if (at == std::string::npos) return is_token(s);
  return is_token(s.substr(0, at)) && is_token(s.substr(at + 1));
}

}  // namespace detail

// Hardware and runtime facts of the machine an image is built for.
struct MachineDescription {
  std::string platform;      // <os>/<isa>, e.g. linux/amd64
  std::string architecture;  // micro-architecture target, e.g. skylake
  std::optional<std::string> container_engine;
  std::optional<std::string> mpi;          // <name>[@<version>]
  std::optional<std::string> gpu_runtime;  // <name>[@<version>]

  friend bool operator==(const MachineDescription&, const MachineDescription&) = default;

  void validate(const std::vector<std::string>& allowed_engines = kDefaultEngines) const {
    auto slash = platform.find('/');
    if (slash == std::string::npos || slash != platform.rfind('/') ||
        !detail::is_token(platform.substr(0, slash)) ||
        !detail::is_token(platform.substr(slash + 1)))
      throw Error(Errc::invalid_value, "platform must look like <os>/<isa>", "platform");
    if (!detail::is_token(architecture))
      throw Error(Errc::invalid_value, "architecture must be a non-empty token", "architecture");
    if (container_engine) {
      bool ok = false;
      for (const auto& e : allowed_engines) ok = ok || e == *container_engine;
      if (!ok)
        throw Error(Errc::invalid_value,
                    "container_engine '" + *container_engine + "' is not in the allow-list",
                    "container_engine");
    }
    if (mpi && !detail::is_versioned_spec(*mpi))
      throw Error(Errc::invalid_value, "mpi must look like <name>[@<version>]", "mpi");
    if (gpu_runtime && !detail::is_versioned_spec(*gpu_runtime))
      throw Error(Errc::invalid_value, "gpu_runtime must look like <name>[@<version>]",
                  "gpu_runtime");
  }

  // sorted key/value facts as fed into the canonical digest
  std::vector<std::pair<std::string, std::string>> facts() const {
    std::vector<std::pair<std::string, std::string>> f;
    f.emplace_back("architecture", architecture);
    if (container_engine) f.emplace_back("container_engine", *container_engine);
    if (gpu_runtime) f.emplace_back("gpu_runtime", *gpu_runtime);
    if (mpi) f.emplace_back("mpi", *mpi);
    f.emplace_back("platform", platform);
    return f;
  }
};

// One build request: which machine, and which workflow step's environment.
struct ContainerConfig {
  MachineDescription machine;
  std::string workflow;
  std::string step_id;

  friend bool operator==(const ContainerConfig&, const ContainerConfig&) = default;

  void validate(const std::vector<std::string>& allowed_engines = kDefaultEngines) const {
    machine.validate(allowed_engines);
    if (!detail::is_token(workflow))
      throw Error(Errc::invalid_value, "workflow must be a path-safe token", "workflow");
    if (!detail::is_token(step_id))
      throw Error(Errc::invalid_value, "step_id must be a path-safe token", "step_id");
  }
};

namespace detail {

inline nlohmann::json parse_strict_object(const std::string& text,
                                          std::initializer_list<const char*> known_keys,
                                          std::initializer_list<const char*> required_keys) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::malformed_json, "input is not valid JSON");
  if (!j.is_object()) throw Error(Errc::malformed_json, "expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : known_keys) known = known || it.key() == k;
    if (!known) throw Error(Errc::invalid_value, "unknown key '" + it.key() + "'", it.key());
  }
  for (const char* k : required_keys)
    if (!j.contains(k)) throw Error(Errc::missing_field, std::string("missing '") + k + "'", k);
  return j;
}

inline std::string string_field(const nlohmann::json& j, const char* key) {
  if (!j.at(key).is_string())
    throw Error(Errc::invalid_value, std::string("'") + key + "' must be a string", key);
  return j.at(key).get<std::string>();
}

inline MachineDescription machine_from_json(const nlohmann::json& j,
                                            const std::vector<std::string>& allowed_engines) {
  MachineDescription m;
  m.platform = string_field(j, "platform");
  m.architecture = string_field(j, "architecture");
  if (j.contains("container_engine")) m.container_engine = string_field(j, "container_engine");
  if (j.contains("mpi")) m.mpi = string_field(j, "mpi");
  if (j.contains("gpu_runtime")) m.gpu_runtime = string_field(j, "gpu_runtime");
  m.validate(allowed_engines);
  return m;
}

}  // namespace detail

// Strict schema: unknown keys rejected, required fields enforced.
inline MachineDescription parse_machine(
    const std::string& json_text,
    const std::vector<std::string>& allowed_engines = kDefaultEngines) {
  auto j = detail::parse_strict_object(
      json_text, {"platform", "architecture", "container_engine", "mpi", "gpu_runtime"},
      {"platform", "architecture"});
  return detail::machine_from_json(j, allowed_engines);
}

// Full request document: {"machine": {...}, "workflow": ..., "step_id": ...}
inline ContainerConfig parse_config(
    const std::string& json_text,
    const std::vector<std::string>& allowed_engines = kDefaultEngines) {
  auto j = detail::parse_strict_object(json_text, {"machine", "workflow", "step_id"},
                                       {"machine", "workflow", "step_id"});
  if (!j.at("machine").is_object())
    throw Error(Errc::invalid_value, "'machine' must be an object", "machine");
  for (auto it = j.at("machine").begin(); it != j.at("machine").end(); ++it) {
    static const char* known[] = {"platform", "architecture", "container_engine", "mpi",
                                  "gpu_runtime"};
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok)
      throw Error(Errc::invalid_value, "unknown machine key '" + it.key() + "'", it.key());
  }
  for (const char* k : {"platform", "architecture"})
    if (!j.at("machine").contains(k))
      throw Error(Errc::missing_field, std::string("missing '") + k + "'", k);

  ContainerConfig cfg;
  cfg.machine = detail::machine_from_json(j.at("machine"), allowed_engines);
  cfg.workflow = detail::string_field(j, "workflow");
  cfg.step_id = detail::string_field(j, "step_id");
  cfg.validate(allowed_engines);
  return cfg;
}

inline std::string config_to_json(const ContainerConfig& cfg) {
  nlohmann::json machine{{"platform", cfg.machine.platform},
                         {"architecture", cfg.machine.architecture}};
  if (cfg.machine.container_engine) machine["container_engine"] = *cfg.machine.container_engine;
  if (cfg.machine.mpi) machine["mpi"] = *cfg.machine.mpi;
  if (cfg.machine.gpu_runtime) machine["gpu_runtime"] = *cfg.machine.gpu_runtime;
  nlohmann::json j{{"machine", machine}, {"workflow", cfg.workflow}, {"step_id", cfg.step_id}};
  return j.dump(2);
}

}  // namespace forge::buildspec
