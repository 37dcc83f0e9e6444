#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace forge {

enum class Errc {
  // buildspec
  malformed_json,
  missing_field,
  invalid_value,
  malformed_manifest,
  duplicate_package,
  cyclic_dependency,
  conflicting_constraint,
  missing_recipe,
  workflow_not_found,
  step_not_found,
  // builder
  unsupported_platform,
  build_failed,
  // registry
  storage_full,
  corrupt_payload,
  unsupported_conversion,
  conversion_failed,
  not_found,
  // service
  validation_failed,
  unknown_job,
  not_ready,
  // geostat
  domain_error,
  duplicate_locations,
  not_positive_definite,
  cholesky_failed,
  tile_size_mismatch,
  // bench
  plan_mismatch,
  output_mismatch,
  // plumbing
  io_error,
  config_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::malformed_json: return "MalformedJson";
    case Errc::missing_field: return "MissingField";
    case Errc::invalid_value: return "InvalidValue";
    case Errc::malformed_manifest: return "MalformedManifest";
    case Errc::duplicate_package: return "DuplicatePackage";
    case Errc::cyclic_dependency: return "CyclicDependency";
    case Errc::conflicting_constraint: return "ConflictingConstraint";
    case Errc::missing_recipe: return "MissingRecipe";
    case Errc::workflow_not_found: return "WorkflowNotFound";
    case Errc::step_not_found: return "StepNotFound";
    case Errc::unsupported_platform: return "UnsupportedPlatform";
    case Errc::build_failed: return "BuildFailed";
    case Errc::storage_full: return "StorageFull";
    case Errc::corrupt_payload: return "CorruptPayload";
    case Errc::unsupported_conversion: return "UnsupportedConversion";
    case Errc::conversion_failed: return "ConversionFailed";
    case Errc::not_found: return "NotFound";
    case Errc::validation_failed: return "ValidationFailed";
    case Errc::unknown_job: return "UnknownJob";
    case Errc::not_ready: return "NotReady";
    case Errc::domain_error: return "DomainError";
    case Errc::duplicate_locations: return "DuplicateLocations";
    case Errc::not_positive_definite: return "NotPositiveDefinite";
    case Errc::cholesky_failed: return "CholeskyFailed";
    case Errc::tile_size_mismatch: return "TileSizeMismatch";
    case Errc::plan_mismatch: return "PlanMismatch";
    case Errc::output_mismatch: return "OutputMismatch";
    case Errc::io_error: return "IoError";
    case Errc::config_error: return "ConfigError";
  }
  return "UnknownError";
}

// Carries a stable code plus a free-form detail (field name, package name,
// pivot index, ...) that tests and callers can dispatch on.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string detail = {})
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        detail_(std::move(detail)) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace forge
