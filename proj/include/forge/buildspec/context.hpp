#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "forge/buildspec/machine.hpp"
#include "forge/buildspec/manifest.hpp"
#include "forge/fsio.hpp"
#include "forge/sha256.hpp"

namespace forge::buildspec {

// Per-package installation description. The body is opaque text; only its
// digest matters to the pipeline.
struct PackageRecipe {
  std::string name;
  std::string body;
  Digest content_digest{};

  static PackageRecipe make(std::string name, std::string body) {
    PackageRecipe r{std::move(name), std::move(body), {}};
    r.content_digest = sha256(r.body);
    return r;
  }

  friend bool operator==(const PackageRecipe&, const PackageRecipe&) = default;
};

// Deterministic normal form of (extended manifest, machine facts); the digest
// keys image reuse, so everything that can change the build must be in it.
struct CanonicalSpec {
  std::vector<std::string> extended_specs;                    // sorted spec lines
  std::vector<std::pair<std::string, std::string>> machine_facts;  // sorted by key
  Digest digest{};

  friend bool operator==(const CanonicalSpec&, const CanonicalSpec&) = default;

  std::string serialization() const {
    std::ostringstream out;
    for (const auto& [k, v] : machine_facts) out << "machine." << k << "=" << v << "\n";
    for (const auto& s : extended_specs) out << "spec=" << s << "\n";
    return out.str();
  }
};

// Everything the image builder consumes.
struct BuildContext {
  std::string recipe_file;       // container build recipe
  std::string environment_file;  // serialized extended manifest
  std::map<std::string, PackageRecipe> package_files;
  CanonicalSpec canonical;
};

namespace detail {

inline std::string strip_version(const std::string& versioned) {
  return versioned.substr(0, versioned.find('@'));
}

inline std::string version_of(const std::string& versioned) {
  auto at = versioned.find('@');
  return at == std::string::npos ? std::string{} : versioned.substr(at + 1);
}

// Pin `runtime` (= "<name>[@<version>]") into the manifest: override an
// existing spec of the same package or append a new one.
inline void inject_runtime(EnvironmentManifest& m, const std::string& runtime,
                           const std::string& target_variant) {
  const std::string name = strip_version(runtime);
  const std::string version = version_of(runtime);
  for (auto& spec : m.specs) {
    if (spec.name != name) continue;
    if (!version.empty() && !spec.version_constraint.empty() &&
        spec.version_constraint != version)
      throw Error(Errc::conflicting_constraint,
                  "manifest pins " + name + "@" + spec.version_constraint +
                      " but the machine requires " + runtime,
                  name);
    if (!version.empty()) spec.version_constraint = version;
    spec.variants.insert(target_variant);
    return;
  }
  PackageSpec injected;
  injected.name = name;
  injected.version_constraint = version;
  injected.variants.insert(target_variant);
  m.specs.push_back(std::move(injected));
}

}  // namespace detail

// Specializes the generic environment for one machine: every spec gains a
// target=<architecture> variant and the machine's MPI / GPU runtimes are
// pinned in. Idempotent, and the original spec order is preserved.
inline EnvironmentManifest extend_environment(const EnvironmentManifest& manifest,
                                              const MachineDescription& machine) {
  machine.validate();
  EnvironmentManifest out = manifest;
  const std::string target = "target=" + machine.architecture;
  for (auto& spec : out.specs) spec.variants.insert(target);
  if (machine.mpi) detail::inject_runtime(out, *machine.mpi, target);
  if (machine.gpu_runtime) detail::inject_runtime(out, *machine.gpu_runtime, target);
  return out;
}

// Normal form + digest. Spec order and variant order never affect the digest;
// any machine fact does.
inline CanonicalSpec canonicalize(const EnvironmentManifest& extended,
                                  const MachineDescription& machine) {
  CanonicalSpec c;
  for (const auto& spec : extended.specs) c.extended_specs.push_back(spec.to_line());
  std::sort(c.extended_specs.begin(), c.extended_specs.end());
  c.machine_facts = machine.facts();
  c.digest = sha256(c.serialization());
  return c;
}

// names required by the context: every spec plus every dependency reference
inline std::set<std::string> required_packages(const EnvironmentManifest& extended) {
  std::set<std::string> names;
  for (const auto& spec : extended.specs) {
    names.insert(spec.name);
    for (const auto& dep : spec.dependencies) names.insert(dep);
  }
  return names;
}

// Renders the build context: a container recipe parameterized by the target
// platform, the serialized extended environment, and the package recipes it
// needs. Byte-deterministic for identical inputs.
inline BuildContext render_build_context(const ContainerConfig& config,
                                         const EnvironmentManifest& manifest,
                                         const std::map<std::string, PackageRecipe>& recipes,
                                         const MachineDescription& machine) {
  BuildContext ctx;
  EnvironmentManifest extended = extend_environment(manifest, machine);
  ctx.environment_file = serialize_manifest(extended);
  ctx.canonical = canonicalize(extended, machine);

  for (const auto& name : required_packages(extended)) {
    auto it = recipes.find(name);
    if (it == recipes.end())
      throw Error(Errc::missing_recipe, "no recipe for package '" + name + "'", name);
    ctx.package_files.emplace(name, it->second);
  }

  std::ostringstream recipe;
  recipe << "# build recipe for " << config.workflow << "/" << config.step_id << "\n"
         << "FROM --platform=" << machine.platform << " spack/ubuntu-jammy:latest\n"
         << "COPY spack.yaml /opt/environment/spack.yaml\n";
  for (const auto& [name, pkg] : ctx.package_files)
    recipe << "COPY packages/" << name << "/package.py /opt/environment/packages/" << name
           << "/package.py\n";
  recipe << "RUN spack --env-dir /opt/environment repo add /opt/environment/packages \\\n"
         << " && spack --env-dir /opt/environment install --fail-fast\n";
  ctx.recipe_file = recipe.str();
  return ctx;
}

// Workflow registry layout:
//   <root>/<workflow>/<step_id>/spack.yaml
//   <root>/<workflow>/packages/<name>/package.py
inline std::pair<EnvironmentManifest, std::map<std::string, PackageRecipe>> fetch_workflow_files(
    const std::string& workflow, const std::string& step_id,
    const std::filesystem::path& registry_root) {
  namespace fs = std::filesystem;
  const fs::path workflow_dir = registry_root / workflow;
  if (!fs::is_directory(workflow_dir))
    throw Error(Errc::workflow_not_found, "no workflow '" + workflow + "'", workflow);
  const fs::path manifest_path = workflow_dir / step_id / "spack.yaml";
  if (!fs::is_regular_file(manifest_path))
    throw Error(Errc::step_not_found, "no step '" + step_id + "' in workflow '" + workflow + "'",
                step_id);

  EnvironmentManifest manifest = parse_manifest(read_file(manifest_path));

  std::map<std::string, PackageRecipe> recipes;
  const fs::path packages_dir = workflow_dir / "packages";
  if (fs::is_directory(packages_dir)) {
    for (const auto& entry : fs::directory_iterator(packages_dir)) {
      if (!entry.is_directory()) continue;
      const fs::path recipe_path = entry.path() / "package.py";
      if (!fs::is_regular_file(recipe_path)) continue;
      const std::string name = entry.path().filename().string();
      recipes.emplace(name, PackageRecipe::make(name, read_file(recipe_path)));
    }
  }
  return {std::move(manifest), std::move(recipes)};
}

}  // namespace forge::buildspec
