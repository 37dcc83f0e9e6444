#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "forge/errors.hpp"

namespace forge::buildspec {

// One abstract package request: name, an opaque version constraint, variant
// flags, and references to other packages it builds against.
struct PackageSpec {
  std::string name;
  std::string version_constraint;       // empty = unconstrained
  std::set<std::string> variants;       // e.g. "+mpi", "target=skylake"
  std::vector<std::string> dependencies;

  friend bool operator==(const PackageSpec&, const PackageSpec&) = default;

  std::string to_line() const {
    std::string line = name;
    if (!version_constraint.empty()) line += "@" + version_constraint;
    for (const auto& v : variants) line += " " + v;
    for (const auto& d : dependencies) line += " ^" + d;
    return line;
  }
};

// The generic software environment: an ordered spec list plus build options.
struct EnvironmentManifest {
  std::vector<PackageSpec> specs;
  std::map<std::string, std::string> config;

  friend bool operator==(const EnvironmentManifest&, const EnvironmentManifest&) = default;

  const PackageSpec* find(const std::string& name) const {
    for (const auto& s : specs)
      if (s.name == name) return &s;
    return nullptr;
  }
};

namespace detail {

inline void malformed(const std::string& why, std::size_t line_no) {
  throw Error(Errc::malformed_manifest,
              why + " (line " + std::to_string(line_no) + ")");
}

inline bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

inline bool is_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!is_name_char(c)) return false;
  return true;
}

inline PackageSpec parse_spec_line(const std::string& text, std::size_t line_no) {
  PackageSpec spec;
  std::istringstream in(text);
  std::string token;
  bool first = true;
  while (in >> token) {
    if (first) {
      first = false;
      auto at = token.find('@');
      spec.name = token.substr(0, at);
      if (at != std::string::npos) spec.version_constraint = token.substr(at + 1);
      if (!is_name(spec.name) ||
          (at != std::string::npos && !is_name(spec.version_constraint)))
        malformed("bad package token '" + token + "'", line_no);
    } else if (token[0] == '^') {
      auto dep = token.substr(1);
      if (!is_name(dep)) malformed("bad dependency token '" + token + "'", line_no);
      spec.dependencies.push_back(dep);
    } else if (token[0] == '+' || token[0] == '~' || token.find('=') != std::string::npos) {
      spec.variants.insert(token);
    } else {
      malformed("unrecognized token '" + token + "'", line_no);
    }
  }
  if (first) malformed("empty spec entry", line_no);
  return spec;
}

inline void check_acyclic(const EnvironmentManifest& m) {
  // colors: 0 unvisited, 1 on stack, 2 done
  std::map<std::string, int> color;
  std::vector<std::string> path;

  auto dfs = [&](auto&& self, const std::string& name) -> void {
    color[name] = 1;
    path.push_back(name);
    if (const PackageSpec* spec = m.find(name)) {
      for (const auto& dep : spec->dependencies) {
        if (color[dep] == 1) {
          path.push_back(dep);
          auto start = std::find(path.begin(), path.end(), dep);
          std::string chain;
          for (auto it = start; it != path.end(); ++it) {
            if (!chain.empty()) chain += ",";
            chain += *it;
          }
          throw Error(Errc::cyclic_dependency, "dependency cycle " + chain, chain);
        }
        if (color[dep] == 0) self(self, dep);
      }
    }
    color[name] = 2;
    path.pop_back();
  };
  for (const auto& s : m.specs)
    if (color[s.name] == 0) dfs(dfs, s.name);
}

}  // namespace detail

// Parses the restricted manifest format:
//
//   spack:
//     specs:
//       - <name>[@<version>] [+flag|~flag|key=value]* [^<dep>]*
//     config:        # optional
//       <key>: <value>
//
// Two-space indentation, '#' comments, nothing else. This is a deliberately
// closed subset; anything outside it is a MalformedManifest.
inline EnvironmentManifest parse_manifest(const std::string& yaml_text) {
  enum class Section { none, top, specs, config };
  Section section = Section::none;
  EnvironmentManifest m;
  std::istringstream in(yaml_text);
  std::string raw;
  std::size_t line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string trimmed = raw;
    auto hash = trimmed.find('#');
    if (hash != std::string::npos) trimmed.erase(hash);
    while (!trimmed.empty() && trimmed.back() == ' ') trimmed.pop_back();
    if (trimmed.empty()) continue;

    std::size_t indent = 0;
    while (indent < trimmed.size() && trimmed[indent] == ' ') ++indent;
    std::string body = trimmed.substr(indent);

    if (section == Section::none) {
      if (indent != 0 || body != "spack:") detail::malformed("expected 'spack:'", line_no);
      section = Section::top;
    } else if (indent == 2 && body == "specs:") {
      section = Section::specs;
    } else if (indent == 2 && body == "config:") {
      section = Section::config;
    } else if (indent == 4 && section == Section::specs && body.rfind("- ", 0) == 0) {
      m.specs.push_back(detail::parse_spec_line(body.substr(2), line_no));
    } else if (indent == 4 && section == Section::config) {
      auto colon = body.find(": ");
      if (colon == std::string::npos || colon == 0)
        detail::malformed("expected '<key>: <value>'", line_no);
      m.config[body.substr(0, colon)] = body.substr(colon + 2);
    } else {
      detail::malformed("unexpected line '" + body + "'", line_no);
    }
  }

  if (m.specs.empty())
    throw Error(Errc::malformed_manifest, "manifest lists no specs");
  std::set<std::string> seen;
  for (const auto& s : m.specs)
    if (!seen.insert(s.name).second)
      throw Error(Errc::duplicate_package, "package '" + s.name + "' listed twice", s.name);
  detail::check_acyclic(m);
  return m;
}

// Inverse of parse_manifest; emits the canonical shape the parser accepts,
// byte for byte.
inline std::string serialize_manifest(const EnvironmentManifest& m) {
  std::ostringstream out;
  out << "spack:\n  specs:\n";
  for (const auto& s : m.specs) out << "    - " << s.to_line() << "\n";
  if (!m.config.empty()) {
    out << "  config:\n";
    for (const auto& [k, v] : m.config) out << "    " << k << ": " << v << "\n";
  }
  return out.str();
}

}  // namespace forge::buildspec
