#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "forge/buildspec/context.hpp"
#include "forge/buildspec/machine.hpp"
#include "forge/builder.hpp"
#include "forge/errors.hpp"
#include "forge/fsio.hpp"
#include "forge/sha256.hpp"

namespace forge::registry {

enum class ImageFormat { oci, sif };

inline const char* format_name(ImageFormat f) { return f == ImageFormat::oci ? "oci" : "sif"; }

inline ImageFormat format_from_name(const std::string& s) {
  if (s == "oci") return ImageFormat::oci;
  if (s == "sif") return ImageFormat::sif;
  throw Error(Errc::invalid_value, "unknown image format '" + s + "'", s);
}

// The 8-byte marker that opens every simulated SIF payload.
inline constexpr std::string_view kSifMarker = "HPCSIF00";

struct ImageRecord {
  std::string image_id;
  Digest canonical_digest{};
  buildspec::MachineDescription machine;
  ImageFormat format = ImageFormat::oci;
  Digest payload_digest{};
  std::uint64_t size_bytes = 0;
  std::int64_t created_at_ms = 0;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

namespace detail {

inline Digest digest_from_hex(const std::string& hex) {
  if (hex.size() != 64) throw Error(Errc::invalid_value, "digest must be 64 hex chars");
  Digest d{};
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw Error(Errc::invalid_value, "bad hex digit");
  };
  for (std::size_t i = 0; i < 32; ++i)
    d[i] = std::uint8_t(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return d;
}

inline nlohmann::json record_to_json(const ImageRecord& r) {
  nlohmann::json machine{{"platform", r.machine.platform},
                         {"architecture", r.machine.architecture}};
  if (r.machine.container_engine) machine["container_engine"] = *r.machine.container_engine;
  if (r.machine.mpi) machine["mpi"] = *r.machine.mpi;
  if (r.machine.gpu_runtime) machine["gpu_runtime"] = *r.machine.gpu_runtime;
  return nlohmann::json{{"image_id", r.image_id},
                        {"canonical_digest", to_hex(r.canonical_digest)},
                        {"machine", machine},
                        {"format", format_name(r.format)},
                        {"payload_digest", to_hex(r.payload_digest)},
                        {"size_bytes", r.size_bytes},
                        {"created_at_ms", r.created_at_ms}};
}

inline ImageRecord record_from_json(const nlohmann::json& j) {
  ImageRecord r;
  r.image_id = j.at("image_id").get<std::string>();
  r.canonical_digest = digest_from_hex(j.at("canonical_digest").get<std::string>());
  const auto& m = j.at("machine");
  r.machine.platform = m.at("platform").get<std::string>();
  r.machine.architecture = m.at("architecture").get<std::string>();
  if (m.contains("container_engine"))
    r.machine.container_engine = m.at("container_engine").get<std::string>();
  if (m.contains("mpi")) r.machine.mpi = m.at("mpi").get<std::string>();
  if (m.contains("gpu_runtime")) r.machine.gpu_runtime = m.at("gpu_runtime").get<std::string>();
  r.format = format_from_name(j.at("format").get<std::string>());
  r.payload_digest = digest_from_hex(j.at("payload_digest").get<std::string>());
  r.size_bytes = j.at("size_bytes").get<std::uint64_t>();
  r.created_at_ms = j.at("created_at_ms").get<std::int64_t>();
  return r;
}

}  // namespace detail

// Turns an OCI payload into the target format's payload bytes.
class FormatConverter {
 public:
  virtual ~FormatConverter() = default;
  virtual std::string convert(const std::string& oci_payload) = 0;
};

// SIF here is modeled as a fixed marker header followed by the OCI archive.
class SimulatedConverter : public FormatConverter {
 public:
  std::string convert(const std::string& oci_payload) override {
    return std::string(kSifMarker) + oci_payload;
  }
};

// Adapter for a real conversion tool; {input} and {output} are substituted.
class ExternalConverter : public FormatConverter {
 public:
  explicit ExternalConverter(std::string command_template,
                             std::filesystem::path work_root = std::filesystem::temp_directory_path())
      : template_(std::move(command_template)), work_root_(std::move(work_root)) {
    if (template_.empty())
      throw Error(Errc::config_error, "external converter requires a command template");
  }

  std::string convert(const std::string& oci_payload) override {
    namespace fs = std::filesystem;
    const fs::path dir =
        work_root_ / ("forge-convert-" + sha256_hex(oci_payload).substr(0, 12) + "-" +
                      std::to_string(::getpid()));
    fs::create_directories(dir);
    const fs::path input = dir / "input.oci";
    const fs::path output = dir / "output.sif";
    write_file(input, oci_payload);
    std::string cmd = template_;
    for (auto [from, to] : {std::pair{"{input}", input.string()}, {"{output}", output.string()}})
      for (std::size_t pos = 0; (pos = cmd.find(from, pos)) != std::string::npos;
           pos += to.size())
        cmd.replace(pos, std::string(from).size(), to);
    CommandResult run = run_command(cmd);
    if (run.exit_code != 0 || !fs::is_regular_file(output)) {
      fs::remove_all(dir);
      throw Error(Errc::conversion_failed,
                  "converter exited with status " + std::to_string(run.exit_code), run.output);
    }
    std::string payload = read_file(output);
    fs::remove_all(dir);
    return payload;
  }

 private:
  std::string template_;
  std::filesystem::path work_root_;
};

struct StoreOptions {
  std::uint64_t max_total_bytes = 0;  // 0 = unlimited
};

// Directory-tree image store:
//   <root>/payloads/<payload_digest>   raw bytes, content-addressed
//   <root>/meta/<image_id>.json        one record per document
// (canonical_digest, format) pairs are unique; storing the same pair again
// returns the existing record.
class ImageStore {
 public:
  explicit ImageStore(std::filesystem::path root, StoreOptions opts = {})
      : root_(std::move(root)), opts_(opts) {
    namespace fs = std::filesystem;
    fs::create_directories(root_ / "payloads");
    fs::create_directories(root_ / "meta");
    for (const auto& entry : fs::directory_iterator(root_ / "meta")) {
      if (entry.path().extension() != ".json") continue;
      ImageRecord r = detail::record_from_json(nlohmann::json::parse(read_file(entry.path())));
      total_bytes_ += r.size_bytes;
      index_.emplace(key_of(r.canonical_digest, r.format), r);
    }
  }

  const std::filesystem::path& root() const { return root_; }

  std::optional<ImageRecord> reuse_lookup(const Digest& canonical_digest,
                                          ImageFormat format) const {
    std::lock_guard lock(mutex_);
    auto it = index_.find(key_of(canonical_digest, format));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  ImageRecord store_image(const builder::RawImage& raw, const buildspec::CanonicalSpec& canonical,
                          const buildspec::MachineDescription& machine) {
    if (sha256(raw.payload) != raw.digest)
      throw Error(Errc::corrupt_payload, "payload bytes do not match the image digest");
    return persist(raw.payload, canonical.digest, machine, ImageFormat::oci);
  }

  ImageRecord convert_format(const ImageRecord& record, ImageFormat target,
                             FormatConverter* converter = nullptr) {
    if (record.format != ImageFormat::oci || target != ImageFormat::sif)
      throw Error(Errc::unsupported_conversion,
                  std::string("only oci -> sif conversion is supported, got ") +
                      format_name(record.format) + " -> " + format_name(target));
    if (auto existing = reuse_lookup(record.canonical_digest, target)) return *existing;
    SimulatedConverter fallback;
    FormatConverter& conv = converter ? *converter : fallback;
    std::string payload = conv.convert(fetch_payload(record.image_id));
    return persist(payload, record.canonical_digest, record.machine, target);
  }

  std::string fetch_payload(const std::string& image_id) const {
    auto record = find_by_id(image_id);
    if (!record) throw Error(Errc::not_found, "no image '" + image_id + "'", image_id);
    return read_file(root_ / "payloads" / to_hex(record->payload_digest));
  }

  std::optional<ImageRecord> find_by_id(const std::string& image_id) const {
    std::lock_guard lock(mutex_);
    for (const auto& [key, record] : index_)
      if (record.image_id == image_id) return record;
    return std::nullopt;
  }

  std::uint64_t total_bytes() const {
    std::lock_guard lock(mutex_);
    return total_bytes_;
  }

  // Test hook, fired between the payload persist and the metadata persist.
  std::function<void()> crash_between_payload_and_meta;

 private:
  static std::string key_of(const Digest& canonical, ImageFormat format) {
    return to_hex(canonical) + ":" + format_name(format);
  }

  ImageRecord persist(const std::string& payload, const Digest& canonical_digest,
                      const buildspec::MachineDescription& machine, ImageFormat format) {
    namespace fs = std::filesystem;
    const std::string key = key_of(canonical_digest, format);

    // concurrent stores of the same digest serialize on a per-key guard;
    // distinct digests proceed in parallel
    std::shared_ptr<std::mutex> guard;
    {
      std::lock_guard lock(mutex_);
      auto it = index_.find(key);
      if (it != index_.end()) return it->second;
      auto& slot = per_key_guards_[key];
      if (!slot) slot = std::make_shared<std::mutex>();
      guard = slot;
    }
    std::lock_guard key_lock(*guard);
    {
      std::lock_guard lock(mutex_);
      auto it = index_.find(key);
      if (it != index_.end()) return it->second;
      if (opts_.max_total_bytes != 0 && total_bytes_ + payload.size() > opts_.max_total_bytes)
        throw Error(Errc::storage_full,
                    "store would exceed " + std::to_string(opts_.max_total_bytes) + " bytes");
    }

    ImageRecord record;
    record.image_id = sha256_hex(key).substr(0, 32);
    record.canonical_digest = canonical_digest;
    record.machine = machine;
    record.format = format;
    record.payload_digest = sha256(payload);
    record.size_bytes = payload.size();
    record.created_at_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();

    // payload first, metadata second: a crash in between leaves no
    // lookup-visible record, only an orphan payload
    write_file_atomic(root_ / "payloads" / to_hex(record.payload_digest), payload);
    if (crash_between_payload_and_meta) crash_between_payload_and_meta();
    write_file_atomic(root_ / "meta" / (record.image_id + ".json"),
                      detail::record_to_json(record).dump(2) + "\n");

    std::lock_guard lock(mutex_);
    index_.emplace(key, record);
    total_bytes_ += record.size_bytes;
    return record;
  }

  std::filesystem::path root_;
  StoreOptions opts_;
  mutable std::mutex mutex_;
  std::map<std::string, ImageRecord> index_;
  std::map<std::string, std::shared_ptr<std::mutex>> per_key_guards_;
  std::uint64_t total_bytes_ = 0;
};

}  // namespace forge::registry
