#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <functional>

#include "forge/buildspec/context.hpp"
#include "forge/buildspec/machine.hpp"
#include "forge/buildspec/manifest.hpp"
#include "forge/fsio.hpp"

using namespace forge::buildspec;
using forge::Errc;
using forge::Error;

namespace {

const std::filesystem::path kSamples = FORGE_TEST_DATA_DIR;
const std::filesystem::path kGolden = FORGE_GOLDEN_DIR;

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a forge::Error");
  return Errc::io_error;
}

MachineDescription skylake() {
  return {"linux/amd64", "skylake", "singularity", "openmpi@4", std::nullopt};
}

}  // namespace

TEST_CASE("parse_machine accepts the full and the minimal document") {
  auto m = parse_machine(
      R"({"platform":"linux/amd64","architecture":"skylake","container_engine":"singularity","mpi":"openmpi@4"})");
  CHECK(m.platform == "linux/amd64");
  CHECK(m.architecture == "skylake");
  CHECK(m.container_engine == "singularity");
  CHECK(m.mpi == "openmpi@4");
  CHECK(!m.gpu_runtime.has_value());

  auto minimal = parse_machine(R"({"platform":"linux/amd64","architecture":"zen3"})");
  CHECK(minimal.architecture == "zen3");
  CHECK(!minimal.container_engine.has_value());
  CHECK(!minimal.mpi.has_value());
}

TEST_CASE("parse_machine rejects bad documents") {
  CHECK(code_of([] { parse_machine("{nope"); }) == Errc::malformed_json);
  CHECK(code_of([] { parse_machine(R"({"platform":"linux/amd64"})"); }) == Errc::missing_field);
  CHECK(code_of([] {
          parse_machine(R"({"platform":"linux/amd64","architecture":"skylake","typo":1})");
        }) == Errc::invalid_value);
  CHECK(code_of([] { parse_machine(R"({"platform":"linuxamd64","architecture":"a"})"); }) ==
        Errc::invalid_value);
  CHECK(code_of([] {
          parse_machine(R"({"platform":"linux/amd64","architecture":"a","mpi":"open mpi"})");
        }) == Errc::invalid_value);
  CHECK(code_of([] {
          parse_machine(
              R"({"platform":"linux/amd64","architecture":"a","container_engine":"podman"})");
        }) == Errc::invalid_value);
}

TEST_CASE("parse_config is strict at both levels") {
  auto cfg = parse_config(forge::read_file(kSamples / "config-skylake.json"));
  CHECK(cfg.workflow == "exageostat");
  CHECK(cfg.step_id == "mle");
  CHECK(cfg.machine.architecture == "skylake");

  CHECK(code_of([] {
          parse_config(R"({"machine":{"platform":"linux/amd64","architecture":"a"},)"
                       R"("workflow":"w","step_id":"s","extra":true})");
        }) == Errc::invalid_value);
  CHECK(code_of([] {
          parse_config(R"({"machine":{"platform":"linux/amd64","architecture":"a","x":1},)"
                       R"("workflow":"w","step_id":"s"})");
        }) == Errc::invalid_value);
  CHECK(code_of([] {
          parse_config(R"({"machine":{"platform":"linux/amd64","architecture":"a"},)"
                       R"("workflow":"w"})");
        }) == Errc::missing_field);
  // traversal tokens are not path-safe
  CHECK(code_of([] {
          parse_config(R"({"machine":{"platform":"linux/amd64","architecture":"a"},)"
                       R"("workflow":"..","step_id":"s"})");
        }) == Errc::invalid_value);
}

TEST_CASE("config json round-trips") {
  auto cfg = parse_config(forge::read_file(kSamples / "config-skylake.json"));
  CHECK(parse_config(config_to_json(cfg)) == cfg);
}

TEST_CASE("manifest parsing records specs in order with dependencies") {
  auto m = parse_manifest(forge::read_file(kSamples / "workflow-registry/exageostat/mle/spack.yaml"));
  REQUIRE(m.specs.size() == 3);
  CHECK(m.specs[0].name == "exageostat");
  CHECK(m.specs[0].version_constraint == "1.1.0");
  CHECK(m.specs[0].variants == std::set<std::string>{"+mpi"});
  CHECK(m.specs[0].dependencies == std::vector<std::string>{"gsl", "starpu"});
  CHECK(m.specs[1].name == "gsl");
  CHECK(m.specs[2].name == "starpu");
  CHECK(m.config.at("build_jobs") == "4");
}

TEST_CASE("manifest parser rejects duplicates, cycles, and junk") {
  CHECK(code_of([] {
          parse_manifest("spack:\n  specs:\n    - a\n    - a\n");
        }) == Errc::duplicate_package);
  try {
    parse_manifest("spack:\n  specs:\n    - a ^b\n    - b ^a\n");
    FAIL("expected CyclicDependency");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::cyclic_dependency);
    CHECK(e.detail() == "a,b,a");
  }
  CHECK(code_of([] { parse_manifest("spack:\n  specs:\n"); }) == Errc::malformed_manifest);
  CHECK(code_of([] { parse_manifest(""); }) == Errc::malformed_manifest);
  CHECK(code_of([] { parse_manifest("spack:\n  specs:\n    - a b\n"); }) ==
        Errc::malformed_manifest);
  CHECK(code_of([] { parse_manifest("spack:\n  nonsense:\n"); }) == Errc::malformed_manifest);
  // self-cycle
  CHECK(code_of([] { parse_manifest("spack:\n  specs:\n    - a ^a\n"); }) ==
        Errc::cyclic_dependency);
}

TEST_CASE("manifest serialization round-trips") {
  auto m = parse_manifest(forge::read_file(kSamples / "workflow-registry/exageostat/mle/spack.yaml"));
  CHECK(parse_manifest(serialize_manifest(m)) == m);
}

TEST_CASE("extend adds targets and pins the mpi runtime") {
  EnvironmentManifest m;
  m.specs.push_back({"exageostat", "", {}, {}});
  auto extended = extend_environment(m, skylake());
  REQUIRE(extended.specs.size() == 2);
  CHECK(extended.specs[0].to_line() == "exageostat target=skylake");
  CHECK(extended.specs[1].to_line() == "openmpi@4 target=skylake");
}

TEST_CASE("extend without optional machine fields only adds targets") {
  EnvironmentManifest m;
  m.specs.push_back({"exageostat", "", {}, {}});
  m.specs.push_back({"gsl", "2.7.1", {}, {}});
  MachineDescription zen{"linux/amd64", "zen3", std::nullopt, std::nullopt, std::nullopt};
  auto extended = extend_environment(m, zen);
  REQUIRE(extended.specs.size() == 2);
  CHECK(extended.specs[0].to_line() == "exageostat target=zen3");
  CHECK(extended.specs[1].to_line() == "gsl@2.7.1 target=zen3");
}

TEST_CASE("extend overrides an unpinned spec instead of duplicating it") {
  EnvironmentManifest m;
  m.specs.push_back({"openmpi", "", {"+cuda"}, {}});
  m.specs.push_back({"exageostat", "", {}, {}});
  auto extended = extend_environment(m, skylake());
  REQUIRE(extended.specs.size() == 2);  // no duplicate openmpi
  CHECK(extended.specs[0].to_line() == "openmpi@4 +cuda target=skylake");
}

TEST_CASE("conflicting version pins are rejected") {
  EnvironmentManifest m;
  m.specs.push_back({"openmpi", "3", {}, {}});
  try {
    extend_environment(m, skylake());
    FAIL("expected ConflictingConstraint");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::conflicting_constraint);
    CHECK(e.detail() == "openmpi");
  }
}

TEST_CASE("extend is idempotent") {
  auto m = parse_manifest(forge::read_file(kSamples / "workflow-registry/exageostat/mle/spack.yaml"));
  MachineDescription machine = skylake();
  machine.gpu_runtime = "cuda@11.8";
  auto once = extend_environment(m, machine);
  auto twice = extend_environment(once, machine);
  CHECK(once == twice);
}

TEST_CASE("canonical digest is deterministic and permutation-invariant") {
  auto m = parse_manifest(forge::read_file(kSamples / "workflow-registry/exageostat/mle/spack.yaml"));
  auto machine = skylake();
  auto extended = extend_environment(m, machine);
  auto c1 = canonicalize(extended, machine);
  auto c2 = canonicalize(extended, machine);
  CHECK(c1 == c2);

  EnvironmentManifest shuffled = extended;
  std::rotate(shuffled.specs.begin(), shuffled.specs.begin() + 1, shuffled.specs.end());
  CHECK(canonicalize(shuffled, machine).digest == c1.digest);
}

TEST_CASE("digest depends on the machine facts") {
  auto m = parse_manifest(forge::read_file(kSamples / "workflow-registry/exageostat/mle/spack.yaml"));
  MachineDescription a{"linux/amd64", "skylake", std::nullopt, std::nullopt, std::nullopt};
  MachineDescription b{"linux/amd64", "zen3", std::nullopt, std::nullopt, std::nullopt};
  auto ca = canonicalize(extend_environment(m, a), a);
  auto cb = canonicalize(extend_environment(m, b), b);
  CHECK(ca.digest != cb.digest);

  // engine and platform are facts too
  MachineDescription c = a;
  c.container_engine = "docker";
  CHECK(canonicalize(extend_environment(m, c), c).digest != ca.digest);
  MachineDescription d = a;
  d.platform = "linux/arm64";
  CHECK(canonicalize(extend_environment(m, d), d).digest != ca.digest);
}

TEST_CASE("no two sample machines collide") {
  auto m = parse_manifest(forge::read_file(kSamples / "workflow-registry/exageostat/mle/spack.yaml"));
  std::set<std::string> seen;
  for (std::string arch : {"haswell", "skylake", "icelake", "zen2", "zen3", "neoverse-v1"})
    for (std::string platform : {"linux/amd64", "linux/arm64", "linux/ppc64le"}) {
      MachineDescription machine{platform, arch, std::nullopt, std::nullopt, std::nullopt};
      auto c = canonicalize(extend_environment(m, machine), machine);
      CHECK(seen.insert(forge::to_hex(c.digest)).second);
    }
}

TEST_CASE("golden digest for the sample manifest and machine") {
  auto m = parse_manifest(forge::read_file(kSamples / "workflow-registry/exageostat/mle/spack.yaml"));
  auto machine = skylake();
  auto c = canonicalize(extend_environment(m, machine), machine);
  const std::string expected = forge::read_file(kGolden / "canonical_digest.txt");
  CHECK(forge::to_hex(c.digest) + "\n" == expected);
}

TEST_CASE("render produces a context that satisfies its invariants") {
  auto cfg = parse_config(forge::read_file(kSamples / "config-skylake.json"));
  auto [manifest, recipes] =
      fetch_workflow_files(cfg.workflow, cfg.step_id, kSamples / "workflow-registry");
  auto ctx = render_build_context(cfg, manifest, recipes, cfg.machine);

  // environment_file round-trips to the extended manifest
  auto extended = extend_environment(manifest, cfg.machine);
  CHECK(parse_manifest(ctx.environment_file) == extended);

  // every extended spec has a package file
  for (const auto& spec : extended.specs) CHECK(ctx.package_files.contains(spec.name));
  CHECK(ctx.package_files.contains("openmpi"));  // injected by the machine

  // recipe digests are recomputable
  for (const auto& [name, recipe] : ctx.package_files)
    CHECK(recipe.content_digest == forge::sha256(recipe.body));

  // recipe file mentions the platform and the install steps
  CHECK(ctx.recipe_file.find("--platform=linux/amd64") != std::string::npos);
  CHECK(ctx.recipe_file.find("COPY spack.yaml") != std::string::npos);
  CHECK(ctx.recipe_file.find("spack --env-dir /opt/environment install") != std::string::npos);
}

TEST_CASE("render is byte-deterministic and matches the golden file") {
  auto cfg = parse_config(forge::read_file(kSamples / "config-skylake.json"));
  auto [manifest, recipes] =
      fetch_workflow_files(cfg.workflow, cfg.step_id, kSamples / "workflow-registry");
  auto a = render_build_context(cfg, manifest, recipes, cfg.machine);
  auto b = render_build_context(cfg, manifest, recipes, cfg.machine);
  CHECK(a.recipe_file == b.recipe_file);
  CHECK(a.environment_file == b.environment_file);
  CHECK(a.recipe_file == forge::read_file(kGolden / "recipe_file.golden"));
  CHECK(a.environment_file == forge::read_file(kGolden / "environment_file.golden"));
}

TEST_CASE("render rejects a manifest with a recipe-less package") {
  auto cfg = parse_config(forge::read_file(kSamples / "config-skylake.json"));
  auto [manifest, recipes] =
      fetch_workflow_files(cfg.workflow, cfg.step_id, kSamples / "workflow-registry");
  recipes.erase("gsl");
  try {
    render_build_context(cfg, manifest, recipes, cfg.machine);
    FAIL("expected MissingRecipe");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_recipe);
    CHECK(e.detail() == "gsl");
  }
}

TEST_CASE("fetch_workflow_files resolves the sample tree") {
  auto [manifest, recipes] = fetch_workflow_files("exageostat", "mle", kSamples / "workflow-registry");
  CHECK(manifest.specs.size() == 3);
  CHECK(recipes.contains("exageostat"));
  CHECK(recipes.contains("gsl"));
  CHECK(recipes.contains("starpu"));
  CHECK(recipes.contains("openmpi"));

  CHECK(code_of([] {
          fetch_workflow_files("nope", "mle", kSamples / "workflow-registry");
        }) == Errc::workflow_not_found);
  CHECK(code_of([] {
          fetch_workflow_files("exageostat", "badstep", kSamples / "workflow-registry");
        }) == Errc::step_not_found);
}
