#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "forge/errors.hpp"
#include "forge/geostat/mle.hpp"
#include "forge/geostat/predict.hpp"
#include "forge/geostat/synthetic.hpp"
#include "forge/geostat/tlr.hpp"
#include "forge/sha256.hpp"

namespace forge::bench {

enum class GeoOp { generation, modeling, prediction };
enum class GeoMode { dense, tlr };

inline const char* op_name(GeoOp op) {
  switch (op) {
    case GeoOp::generation: return "generation";
    case GeoOp::modeling: return "modeling";
    case GeoOp::prediction: return "prediction";
  }
  return "?";
}

inline const char* mode_name(GeoMode m) { return m == GeoMode::dense ? "dense" : "tlr"; }

inline GeoOp op_from_name(const std::string& s) {
  for (GeoOp op : {GeoOp::generation, GeoOp::modeling, GeoOp::prediction})
    if (s == op_name(op)) return op;
  throw Error(Errc::invalid_value, "unknown operation '" + s + "'", s);
}

inline GeoMode mode_from_name(const std::string& s) {
  for (GeoMode m : {GeoMode::dense, GeoMode::tlr})
    if (s == mode_name(m)) return m;
  throw Error(Errc::invalid_value, "unknown mode '" + s + "'", s);
}

// One benchmark cell: which operation, which computation variant, the
// problem size, and the tile size for tiled variants (0 when not used).
struct PlanCell {
  GeoOp operation = GeoOp::generation;
  GeoMode mode = GeoMode::dense;
  std::size_t n = 0;
  std::size_t ts = 0;

  friend bool operator==(const PlanCell&, const PlanCell&) = default;
};

struct BenchOptions {
  std::size_t repetitions = 10;  // recorded runs per cell
  std::size_t warmup = 1;        // discarded runs per cell
  std::uint64_t seed = 42;
  std::string env_label = "native";
  geostat::CovarianceParams theta{1.0, 0.1, 0.5, 0.0};
  std::size_t mle_iterations = 10;  // modeling iteration count per run
  double tlr_tol = 1e-7;

  void validate() const {
    if (repetitions < 1) throw Error(Errc::domain_error, "repetitions must be at least 1");
    theta.validate();
  }
};

struct BenchRun {
  PlanCell cell;
  std::size_t repetitions = 0;
  std::vector<double> seconds;  // one entry per recorded repetition
  std::string env_label;
  std::string output_digest;  // sha256 over the numerical outputs, not times
  bool failed = false;
  std::string error;

  double mean_seconds() const {
    double s = 0.0;
    for (double v : seconds) s += v;
    return seconds.empty() ? 0.0 : s / double(seconds.size());
  }
};

namespace detail {

inline void hash_doubles(Sha256& h, const std::vector<double>& values) {
  for (double v : values) {
    char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    h.update(bytes, sizeof(double));
  }
}

// Runs one operation, returning the digest of its numerical output. The
// digest must be identical across environments when seeds match, so only
// deterministic outputs are hashed.
inline std::string run_cell_once(const PlanCell& cell, const BenchOptions& opts) {
  using namespace forge::geostat;
  Sha256 h;
  switch (cell.operation) {
    case GeoOp::generation: {
      GeoDataset ds = generate_synthetic(cell.n, opts.theta, opts.seed);
      if (cell.mode == GeoMode::tlr) {
        // tiled variant: verify the compressed covariance round-trips; the
        // generation itself is identical
        Matrix sigma = build_cov_matrix(ds.locations, opts.theta);
        tlr_reconstruct(tlr_compress(sigma, cell.ts, opts.tlr_tol));
      }
      std::vector<double> flat;
      flat.reserve(3 * ds.size());
      for (const auto& p : ds.locations) {
        flat.push_back(p.x);
        flat.push_back(p.y);
      }
      flat.insert(flat.end(), ds.measurements.begin(), ds.measurements.end());
      hash_doubles(h, flat);
      break;
    }
    case GeoOp::modeling: {
      GeoDataset ds = generate_synthetic(cell.n, opts.theta, opts.seed);
      CovarianceParams init{opts.theta.sigma_sq * 1.25, opts.theta.beta * 0.8,
                            opts.theta.nu * 1.2, opts.theta.nugget};
      ParamBounds bounds{{opts.theta.sigma_sq / 4, opts.theta.beta / 4, opts.theta.nu / 4},
                         {opts.theta.sigma_sq * 4, opts.theta.beta * 4, opts.theta.nu * 4}};
      MleOptions mle_opts;
      mle_opts.max_iterations = opts.mle_iterations;
      mle_opts.max_evaluations = 100 * opts.mle_iterations;
      if (cell.mode == GeoMode::tlr) {
        mle_opts.tlr_tile = cell.ts;
        mle_opts.tlr_tol = opts.tlr_tol;
      }
      MleResult fit = mle_fit(ds, init, bounds, mle_opts);
      hash_doubles(h, {fit.theta.sigma_sq, fit.theta.beta, fit.theta.nu, fit.loglik});
      break;
    }
    case GeoOp::prediction: {
      const std::size_t m = std::max<std::size_t>(1, cell.n / 10);
      GeoDataset joint = generate_synthetic(cell.n + m, opts.theta, opts.seed);
      PredictionProblem prob;
      prob.observed.locations.assign(joint.locations.begin(), joint.locations.begin() + cell.n);
      prob.observed.measurements.assign(joint.measurements.begin(),
                                        joint.measurements.begin() + cell.n);
      prob.query.assign(joint.locations.begin() + cell.n, joint.locations.end());
      CovarianceParams p = opts.theta;
      std::vector<double> z1;
      if (cell.mode == GeoMode::tlr) {
        // accuracy-model variant: condition on the reconstructed compressed
        // covariance
        Matrix sigma = build_cov_matrix(prob.observed.locations, p);
        Matrix approx = tlr_reconstruct(tlr_compress(sigma, cell.ts, opts.tlr_tol));
        CholeskyFactor f = cholesky(approx);
        auto weights = cholesky_solve(f, prob.observed.measurements);
        z1 = build_cross_cov(prob.query, prob.observed.locations, p) * weights;
      } else {
        z1 = predict(prob, p);
      }
      hash_doubles(h, z1);
      break;
    }
  }
  return to_hex(h.finish());
}

}  // namespace detail

// Executes the plan cell by cell, `repetitions` timed runs each after the
// warm-up runs, identical seeds throughout. A failing cell is recorded as
// failed and the rest of the plan continues.
inline std::vector<BenchRun> run_benchmark(const std::vector<PlanCell>& plan,
                                           const BenchOptions& opts) {
  opts.validate();
  std::vector<BenchRun> runs;
  runs.reserve(plan.size());
  for (const PlanCell& cell : plan) {
    BenchRun run;
    run.cell = cell;
    run.repetitions = opts.repetitions;
    run.env_label = opts.env_label;
    try {
      for (std::size_t i = 0; i < opts.warmup; ++i) detail::run_cell_once(cell, opts);
      for (std::size_t i = 0; i < opts.repetitions; ++i) {
        const auto start = std::chrono::steady_clock::now();
        run.output_digest = detail::run_cell_once(cell, opts);
        const auto stop = std::chrono::steady_clock::now();
        run.seconds.push_back(std::chrono::duration<double>(stop - start).count());
      }
    } catch (const std::exception& e) {
      run.failed = true;
      run.error = e.what();
      run.seconds.clear();
      run.output_digest.clear();
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

struct ComparisonRow {
  PlanCell cell;
  double baseline_mean_s = 0.0;
  double candidate_mean_s = 0.0;
  double variation_pct = 0.0;
};

struct ComparisonReport {
  // positive variation = candidate faster than baseline
  static constexpr const char* kConvention =
      "variation_pct = (baseline_mean - candidate_mean) / baseline_mean * 100; "
      "positive means the candidate environment is faster";
  std::vector<ComparisonRow> rows;
};

// Per-cell percent variation of mean times. Before any timing is compared,
// the numerical output digests must agree: identical seeds are required to
// produce bitwise-identical results in both environments.
inline ComparisonReport compare_runs(const std::vector<BenchRun>& baseline,
                                     const std::vector<BenchRun>& candidate) {
  if (baseline.size() != candidate.size())
    throw Error(Errc::plan_mismatch, "baseline and candidate ran different plans");
  ComparisonReport report;
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    const BenchRun& b = baseline[i];
    const BenchRun& c = candidate[i];
    if (!(b.cell == c.cell))
      throw Error(Errc::plan_mismatch, "cell " + std::to_string(i) + " differs between runs");
    if (b.failed != c.failed)
      throw Error(Errc::output_mismatch,
                  "cell " + std::to_string(i) + " failed in one environment only");
    if (b.failed) continue;
    if (b.output_digest != c.output_digest)
      throw Error(Errc::output_mismatch,
                  "cell " + std::to_string(i) +
                      " produced different numerical outputs across environments; "
                      "check the seeds before comparing timings");
    ComparisonRow row;
    row.cell = b.cell;
    row.baseline_mean_s = b.mean_seconds();
    row.candidate_mean_s = c.mean_seconds();
    row.variation_pct =
        (row.baseline_mean_s - row.candidate_mean_s) / row.baseline_mean_s * 100.0;
    report.rows.push_back(row);
  }
  return report;
}

enum class ReportFormat { csv, json };

inline std::string emit_report(const ComparisonReport& report, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::ostringstream out;
    out << "operation,mode,n,ts,baseline_mean_s,candidate_mean_s,variation_pct\n";
    char buf[160];
    for (const auto& r : report.rows) {
      std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%.9f,%.9f,%.4f\n", op_name(r.cell.operation),
                    mode_name(r.cell.mode), r.cell.n, r.cell.ts, r.baseline_mean_s,
                    r.candidate_mean_s, r.variation_pct);
      out << buf;
    }
    return out.str();
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"operation", op_name(r.cell.operation)},
                    {"mode", mode_name(r.cell.mode)},
                    {"n", r.cell.n},
                    {"ts", r.cell.ts},
                    {"baseline_mean_s", r.baseline_mean_s},
                    {"candidate_mean_s", r.candidate_mean_s},
                    {"variation_pct", r.variation_pct}});
  return nlohmann::json{{"convention", ComparisonReport::kConvention}, {"rows", rows}}.dump(2) +
         "\n";
}

// Plan files: CSV with header operation,mode,n,ts.
inline std::vector<PlanCell> parse_plan_csv(const std::string& text) {
  std::vector<PlanCell> plan;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "operation,mode,n,ts")
        throw Error(Errc::io_error, "expected header operation,mode,n,ts");
      continue;
    }
    std::istringstream fields(line);
    std::string op, mode, n, ts;
    if (!std::getline(fields, op, ',') || !std::getline(fields, mode, ',') ||
        !std::getline(fields, n, ',') || !std::getline(fields, ts))
      throw Error(Errc::io_error, "expected 4 fields on line " + std::to_string(line_no));
    PlanCell cell;
    cell.operation = op_from_name(op);
    cell.mode = mode_from_name(mode);
    cell.n = std::stoull(n);
    cell.ts = std::stoull(ts);
    plan.push_back(cell);
  }
  if (plan.empty()) throw Error(Errc::io_error, "plan lists no cells");
  return plan;
}

// Run files: everything needed to compare two environments later.
inline std::string runs_to_json(const std::vector<BenchRun>& runs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : runs)
    out.push_back({{"operation", op_name(r.cell.operation)},
                   {"mode", mode_name(r.cell.mode)},
                   {"n", r.cell.n},
                   {"ts", r.cell.ts},
                   {"repetitions", r.repetitions},
                   {"seconds", r.seconds},
                   {"env_label", r.env_label},
                   {"output_digest", r.output_digest},
                   {"failed", r.failed},
                   {"error", r.error}});
  return out.dump(2) + "\n";
}

inline std::vector<BenchRun> runs_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    throw Error(Errc::io_error, "run file is not a JSON array");
  std::vector<BenchRun> runs;
  for (const auto& item : j) {
    BenchRun r;
    r.cell.operation = op_from_name(item.at("operation").get<std::string>());
    r.cell.mode = mode_from_name(item.at("mode").get<std::string>());
    r.cell.n = item.at("n").get<std::size_t>();
    r.cell.ts = item.at("ts").get<std::size_t>();
    r.repetitions = item.at("repetitions").get<std::size_t>();
    r.seconds = item.at("seconds").get<std::vector<double>>();
    r.env_label = item.at("env_label").get<std::string>();
    r.output_digest = item.at("output_digest").get<std::string>();
    r.failed = item.at("failed").get<bool>();
    r.error = item.at("error").get<std::string>();
    runs.push_back(std::move(r));
  }
  return runs;
}

}  // namespace forge::bench
