#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

#include "forge/buildspec/context.hpp"
#include "forge/errors.hpp"
#include "forge/exec.hpp"
#include "forge/fsio.hpp"
#include "forge/sha256.hpp"

namespace forge::builder {

struct BuildPlatform {
  enum class Mode { native, emulated };

  std::string target;  // platform from the machine description
  std::string host;    // platform of the build host
  Mode mode = Mode::native;
};

inline const char* mode_name(BuildPlatform::Mode m) {
  return m == BuildPlatform::Mode::native ? "native" : "emulated";
}

// Emulation is purely a selection decision: the backend owns how (or whether)
// emulation actually happens.
inline BuildPlatform select_platform(const buildspec::MachineDescription& machine,
                                     const std::string& host_platform) {
  BuildPlatform p;
  p.target = machine.platform;
  p.host = host_platform;
  p.mode = (machine.platform == host_platform) ? BuildPlatform::Mode::native
                                               : BuildPlatform::Mode::emulated;
  return p;
}

struct RawImage {
  Digest digest{};  // sha256 of payload
  enum class Format { oci } format = Format::oci;
  std::string payload;  // archive bytes
  std::string build_log;
  bool log_truncated = false;
};

class BuilderBackend {
 public:
  virtual ~BuilderBackend() = default;
  virtual const std::set<std::string>& capabilities() const = 0;
  // Throws Error(build_failed) with the captured log in the error detail.
  virtual RawImage build(const buildspec::BuildContext& ctx, const BuildPlatform& platform) = 0;
};

// Capability is enforced up front, before the backend does any work.
inline RawImage build_image(const buildspec::BuildContext& ctx, const BuildPlatform& platform,
                            BuilderBackend& backend) {
  if (!backend.capabilities().contains(platform.target))
    throw Error(Errc::unsupported_platform,
                "backend does not support platform '" + platform.target + "'", platform.target);
  return backend.build(ctx, platform);
}

struct SimulatedBackendOptions {
  std::set<std::string> capabilities{"linux/amd64", "linux/arm64", "linux/ppc64le"};
  std::string fail_package;       // fault injection: fail when this package appears
  std::chrono::milliseconds delay{0};
  std::size_t log_cap_bytes = 1 << 20;
};

// Hermetic backend: the "image" is a deterministic archive of the context
// files plus an install transcript, so the digest is a pure function of
// (context, platform). All tests run against this.
class SimulatedBackend : public BuilderBackend {
 public:
  explicit SimulatedBackend(SimulatedBackendOptions opts = {}) : opts_(std::move(opts)) {}

  const std::set<std::string>& capabilities() const override { return opts_.capabilities; }

  RawImage build(const buildspec::BuildContext& ctx, const BuildPlatform& platform) override {
    invocations_.fetch_add(1, std::memory_order_relaxed);
    if (opts_.delay.count() > 0) std::this_thread::sleep_for(opts_.delay);

    std::ostringstream log;
    log << "context: recipe " << ctx.recipe_file.size() << " bytes, environment "
        << ctx.environment_file.size() << " bytes\n";
    log << "platform: " << platform.target << " (" << mode_name(platform.mode) << ")\n";
    for (const auto& [name, recipe] : ctx.package_files) {
      if (!opts_.fail_package.empty() && name == opts_.fail_package) {
        log << "installing " << name << " ... error\n";
        throw Error(Errc::build_failed, "package '" + name + "' failed to install",
                    cap(log.str()));
      }
      log << "installing " << name << " ... ok\n";
    }
    log << "image assembled\n";

    std::ostringstream payload;
    payload << "HPCOCI01\n";
    payload << "platform=" << platform.target << "\n";
    payload << "mode=" << mode_name(platform.mode) << "\n";
    auto emit_file = [&payload](const std::string& path, const std::string& body) {
      payload << "file " << path << " " << body.size() << "\n" << body << "\n";
    };
    emit_file("Dockerfile", ctx.recipe_file);
    for (const auto& [name, recipe] : ctx.package_files)
      emit_file("packages/" + name + "/package.py", recipe.body);
    emit_file("spack.yaml", ctx.environment_file);
    for (const auto& [name, recipe] : ctx.package_files) payload << "installed " << name << "\n";

    RawImage image;
    image.payload = payload.str();
    image.digest = sha256(image.payload);
    image.build_log = cap(log.str());
    image.log_truncated = image.build_log.size() < log.str().size();
    return image;
  }

  int invocations() const { return invocations_.load(std::memory_order_relaxed); }

 private:
  std::string cap(std::string s) const {
    if (s.size() > opts_.log_cap_bytes) {
      s.resize(opts_.log_cap_bytes);
      s += "\n[log truncated]";
    }
    return s;
  }

  SimulatedBackendOptions opts_;
  std::atomic<int> invocations_{0};
};

struct ExternalBackendOptions {
  // Placeholders: {context_dir}, {platform}, {output}
  std::string command_template;
  std::set<std::string> capabilities{"linux/amd64"};
  std::size_t log_cap_bytes = 1 << 20;
  std::filesystem::path work_root = std::filesystem::temp_directory_path();
};

// Shell-out adapter: materializes the context into a directory, runs the
// configured command, and reads the payload it wrote. Exit status 0 means
// success. A real buildx+spack stack plugs in through the template.
class ExternalBackend : public BuilderBackend {
 public:
  explicit ExternalBackend(ExternalBackendOptions opts) : opts_(std::move(opts)) {
    if (opts_.command_template.empty())
      throw Error(Errc::config_error, "external backend requires a command template");
  }

  const std::set<std::string>& capabilities() const override { return opts_.capabilities; }

  RawImage build(const buildspec::BuildContext& ctx, const BuildPlatform& platform) override {
    namespace fs = std::filesystem;
    const fs::path dir = opts_.work_root / ("forge-build-" + to_hex(ctx.canonical.digest).substr(0, 12) +
                                            "-" + std::to_string(::getpid()) + "-" +
                                            std::to_string(counter_.fetch_add(1)));
    fs::create_directories(dir / "packages");
    write_file(dir / "Dockerfile", ctx.recipe_file);
    write_file(dir / "spack.yaml", ctx.environment_file);
    for (const auto& [name, recipe] : ctx.package_files) {
      fs::create_directories(dir / "packages" / name);
      write_file(dir / "packages" / name / "package.py", recipe.body);
    }
    const fs::path output = dir / "image.payload";

    std::string cmd = opts_.command_template;
    replace_all(cmd, "{context_dir}", dir.string());
    replace_all(cmd, "{platform}", platform.target);
    replace_all(cmd, "{output}", output.string());

    CommandResult run = run_command(cmd, opts_.log_cap_bytes);
    if (run.exit_code != 0) {
      fs::remove_all(dir);
      throw Error(Errc::build_failed,
                  "external builder exited with status " + std::to_string(run.exit_code),
                  run.output);
    }
    if (!fs::is_regular_file(output)) {
      fs::remove_all(dir);
      throw Error(Errc::build_failed, "external builder produced no payload", run.output);
    }

    RawImage image;
    image.payload = read_file(output);
    image.digest = sha256(image.payload);
    image.build_log = run.output;
    image.log_truncated = run.truncated;
    fs::remove_all(dir);
    return image;
  }

 private:
  static void replace_all(std::string& s, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
      s.replace(pos, from.size(), to);
  }

  ExternalBackendOptions opts_;
  std::atomic<int> counter_{0};
};

}  // namespace forge::builder
