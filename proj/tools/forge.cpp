// forge: container image creation service for HPC software, with a bundled
// geostatistics workload and benchmark harness.
//
//   forge serve      run the build service
//   forge build      submit a build request (client)
//   forge status     query a job (client)
//   forge download   fetch a finished image (client)
//   forge context    render a build context locally
//   forge geostat    generate / model / predict on spatial data
//   forge bench      run and compare timing experiments

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include "forge/bench.hpp"
#include "forge/buildspec/context.hpp"
#include "forge/client.hpp"
#include "forge/fsio.hpp"
#include "forge/geostat/csv.hpp"
#include "forge/geostat/mle.hpp"
#include "forge/geostat/predict.hpp"
#include "forge/geostat/synthetic.hpp"
#include "forge/service/http.hpp"
#include "forge/service/pipeline.hpp"

namespace {

forge::service::HttpServer* g_server = nullptr;

void handle_stop_signal(int) {
  if (g_server) g_server->stop();
}

std::string default_url() {
  const char* env = std::getenv("FORGE_URL");
  return env ? env : "http://127.0.0.1:8080";
}

int run_serve(const std::string& config_path, int port_override) {
  auto cfg = forge::service::parse_service_config(forge::read_file(config_path));
  if (port_override >= 0) cfg.listen_port = port_override;
  cfg.validate();

  forge::service::Pipeline pipeline(cfg);
  forge::service::HttpServer server(pipeline);
  g_server = &server;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);

  bool ok = false;
  std::thread serving([&] { ok = server.listen(cfg.listen_address, cfg.listen_port); });
  server.wait_until_ready();
  if (server.is_running()) {
    std::cout << "listening on " << cfg.listen_address << ":" << server.bound_port()
              << std::endl;
    std::cout << "registry: " << cfg.registry_root.string()
              << "  workflows: " << cfg.workflow_root.string() << "  backend: " << cfg.backend
              << std::endl;
  }
  serving.join();
  g_server = nullptr;
  if (!ok) {
    std::cerr << "failed to listen on " << cfg.listen_address << ":" << cfg.listen_port << "\n";
    return 1;
  }
  return 0;
}

int run_context(const std::string& config_path, const std::string& workflow_root,
                const std::string& out_dir) {
  namespace fs = std::filesystem;
  auto cfg = forge::buildspec::parse_config(forge::read_file(config_path));
  auto [manifest, recipes] =
      forge::buildspec::fetch_workflow_files(cfg.workflow, cfg.step_id, workflow_root);
  auto ctx = forge::buildspec::render_build_context(cfg, manifest, recipes, cfg.machine);

  fs::create_directories(fs::path(out_dir) / "packages");
  forge::write_file(fs::path(out_dir) / "Dockerfile", ctx.recipe_file);
  forge::write_file(fs::path(out_dir) / "spack.yaml", ctx.environment_file);
  for (const auto& [name, recipe] : ctx.package_files) {
    fs::create_directories(fs::path(out_dir) / "packages" / name);
    forge::write_file(fs::path(out_dir) / "packages" / name / "package.py", recipe.body);
  }
  std::cout << forge::to_hex(ctx.canonical.digest) << "\n";
  return 0;
}

forge::geostat::CovarianceParams theta_from(double sigma2, double beta, double nu,
                                            double nugget) {
  return {sigma2, beta, nu, nugget};
}

int run_generate(std::size_t n, const forge::geostat::CovarianceParams& theta,
                 std::uint64_t seed, const std::string& out) {
  auto ds = forge::geostat::generate_synthetic(n, theta, seed);
  const std::string csv = forge::geostat::dataset_to_csv(ds);
  if (out.empty() || out == "-") std::cout << csv;
  else forge::write_file(out, csv);
  std::cerr << "generated " << n << " locations (seed " << seed << ")\n";
  return 0;
}

int run_model(const std::string& data_path, const forge::geostat::CovarianceParams& init,
              std::size_t max_iters, std::size_t max_evals, std::size_t nb, double tol,
              const std::string& out) {
  std::ifstream in(data_path);
  if (!in) {
    std::cerr << "cannot open " << data_path << "\n";
    return 1;
  }
  auto ds = forge::geostat::dataset_from_csv(in);

  forge::geostat::ParamBounds bounds{
      {init.sigma_sq / 8, init.beta / 8, init.nu / 8, init.nugget},
      {init.sigma_sq * 8, init.beta * 8, init.nu * 8, init.nugget}};
  forge::geostat::MleOptions opts;
  opts.max_iterations = max_iters;
  opts.max_evaluations = max_evals;
  opts.tlr_tile = nb;
  opts.tlr_tol = tol;
  auto fit = forge::geostat::mle_fit(ds, init, bounds, opts);

  std::cout << "sigma2=" << fit.theta.sigma_sq << " beta=" << fit.theta.beta
            << " nu=" << fit.theta.nu << " nugget=" << fit.theta.nugget << "\n"
            << "loglik=" << std::setprecision(12) << fit.loglik << "\n"
            << "iterations=" << fit.trace.size() << " evaluations=" << fit.evaluations
            << " converged=" << (fit.converged ? "true" : "false") << "\n";
  if (fit.warning) std::cerr << "warning: " << fit.message << "\n";
  if (!out.empty()) {
    nlohmann::json j{{"sigma2", fit.theta.sigma_sq}, {"beta", fit.theta.beta},
                     {"nu", fit.theta.nu},           {"nugget", fit.theta.nugget},
                     {"loglik", fit.loglik},         {"evaluations", fit.evaluations}};
    forge::write_file(out, j.dump(2) + "\n");
  }
  return fit.warning && !std::isfinite(fit.loglik) ? 1 : 0;
}

int run_predict(const std::string& data_path, const std::string& query_path,
                const forge::geostat::CovarianceParams& theta, const std::string& out) {
  std::ifstream data_in(data_path);
  if (!data_in) {
    std::cerr << "cannot open " << data_path << "\n";
    return 1;
  }
  std::ifstream query_in(query_path);
  if (!query_in) {
    std::cerr << "cannot open " << query_path << "\n";
    return 1;
  }
  forge::geostat::PredictionProblem prob;
  prob.observed = forge::geostat::dataset_from_csv(data_in);
  prob.query = forge::geostat::points_from_csv(query_in);
  auto z1 = forge::geostat::predict(prob, theta);

  forge::geostat::GeoDataset result{prob.query, z1};
  const std::string csv = forge::geostat::dataset_to_csv(result);
  if (out.empty() || out == "-") std::cout << csv;
  else forge::write_file(out, csv);
  std::cerr << "predicted " << z1.size() << " values from " << prob.observed.size()
            << " observations\n";
  return 0;
}

int run_bench(const std::string& plan_path, const forge::bench::BenchOptions& opts,
              const std::string& out) {
  auto plan = forge::bench::parse_plan_csv(forge::read_file(plan_path));
  auto runs = forge::bench::run_benchmark(plan, opts);
  forge::write_file(out, forge::bench::runs_to_json(runs));
  for (const auto& r : runs) {
    std::cerr << forge::bench::op_name(r.cell.operation) << " "
              << forge::bench::mode_name(r.cell.mode) << " n=" << r.cell.n
              << " ts=" << r.cell.ts;
    if (r.failed) std::cerr << " FAILED: " << r.error << "\n";
    else std::cerr << " mean=" << r.mean_seconds() << "s over " << r.seconds.size() << " runs\n";
  }
  return 0;
}

int run_compare(const std::string& baseline_path, const std::string& candidate_path,
                const std::string& format, const std::string& out) {
  auto baseline = forge::bench::runs_from_json(forge::read_file(baseline_path));
  auto candidate = forge::bench::runs_from_json(forge::read_file(candidate_path));
  auto report = forge::bench::compare_runs(baseline, candidate);
  const auto fmt =
      format == "json" ? forge::bench::ReportFormat::json : forge::bench::ReportFormat::csv;
  const std::string text = forge::bench::emit_report(report, fmt);
  if (out.empty() || out == "-") std::cout << text;
  else forge::write_file(out, text);
  if (fmt == forge::bench::ReportFormat::csv)
    std::cerr << "# " << forge::bench::ComparisonReport::kConvention << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hardware-tailored container image service and geostatistics workload"};
  app.require_subcommand(1);

  // serve
  std::string serve_config;
  int serve_port = -1;
  auto* serve = app.add_subcommand("serve", "run the build service");
  serve->add_option("--config", serve_config, "service configuration file")->required();
  serve->add_option("--port", serve_port, "override the configured port (0 = any free port)");

  // client commands
  forge::client::ClientConfig client_cfg;
  client_cfg.service_url = default_url();
  std::string build_config, download_out, job_id;
  bool wait = false;
  long poll_ms = 500, timeout_ms = 120000;

  auto add_url = [&](CLI::App* cmd) {
    cmd->add_option("--url", client_cfg.service_url, "service URL (or FORGE_URL)");
  };

  auto* build = app.add_subcommand("build", "submit a container build");
  build->add_option("--config", build_config, "container config JSON")->required();
  build->add_flag("--wait", wait, "poll until the job is terminal");
  build->add_option("--poll-interval", poll_ms, "poll interval in ms");
  build->add_option("--timeout", timeout_ms, "wait timeout in ms");
  add_url(build);

  auto* status = app.add_subcommand("status", "report a job's state");
  status->add_option("job_id", job_id, "job identifier")->required();
  add_url(status);

  auto* download = app.add_subcommand("download", "download a finished image");
  download->add_option("job_id", job_id, "job identifier")->required();
  download->add_option("--out", download_out, "output file")->required();
  add_url(download);

  // context
  std::string ctx_config, ctx_root, ctx_out;
  auto* context = app.add_subcommand("context", "render a build context locally");
  context->add_option("--config", ctx_config, "container config JSON")->required();
  context->add_option("--workflow-root", ctx_root, "workflow registry root")->required();
  context->add_option("--out", ctx_out, "output directory")->required();

  // geostat
  double sigma2 = 1.0, beta = 0.1, nu = 0.5, nugget = 0.0, tol = 1e-7;
  std::size_t n = 400, nb = 0, max_iters = 200, max_evals = 1000;
  std::uint64_t seed = 42;
  std::string data_path, query_path, out_path;

  auto* geostat = app.add_subcommand("geostat", "spatial statistics workload");
  geostat->require_subcommand(1);
  auto add_theta = [&](CLI::App* cmd) {
    cmd->add_option("--sigma2", sigma2, "marginal variance");
    cmd->add_option("--beta", beta, "spatial range");
    cmd->add_option("--nu", nu, "smoothness");
    cmd->add_option("--nugget", nugget, "diagonal nugget");
  };
  auto* generate = geostat->add_subcommand("generate", "draw a synthetic dataset");
  generate->add_option("--n", n, "number of locations");
  add_theta(generate);
  generate->add_option("--seed", seed, "random seed");
  generate->add_option("--out", out_path, "output CSV (default stdout)");

  auto* model = geostat->add_subcommand("model", "fit parameters by maximum likelihood");
  model->add_option("--data", data_path, "dataset CSV")->required();
  add_theta(model);
  model->add_option("--max-iters", max_iters, "optimizer iteration cap");
  model->add_option("--max-evals", max_evals, "objective evaluation cap");
  model->add_option("--nb", nb, "TLR tile size (0 = dense)");
  model->add_option("--tol", tol, "TLR accuracy threshold");
  model->add_option("--out", out_path, "write fitted parameters as JSON");

  auto* predict = geostat->add_subcommand("predict", "krige unobserved locations");
  predict->add_option("--data", data_path, "observed dataset CSV")->required();
  predict->add_option("--query", query_path, "query locations CSV")->required();
  add_theta(predict);
  predict->add_option("--out", out_path, "output CSV (default stdout)");

  // bench
  forge::bench::BenchOptions bench_opts;
  std::string plan_path, baseline_path, candidate_path, format = "csv";
  auto* bench = app.add_subcommand("bench", "timing harness");
  bench->require_subcommand(1);
  auto* bench_run = bench->add_subcommand("run", "execute a benchmark plan");
  bench_run->add_option("--plan", plan_path, "plan CSV")->required();
  bench_run->add_option("--reps", bench_opts.repetitions, "repetitions per cell");
  bench_run->add_option("--warmup", bench_opts.warmup, "discarded warm-up runs per cell");
  bench_run->add_option("--label", bench_opts.env_label, "environment label")->required();
  bench_run->add_option("--seed", bench_opts.seed, "random seed");
  bench_run->add_option("--sigma2", bench_opts.theta.sigma_sq, "marginal variance");
  bench_run->add_option("--beta", bench_opts.theta.beta, "spatial range");
  bench_run->add_option("--nu", bench_opts.theta.nu, "smoothness");
  bench_run->add_option("--mle-iters", bench_opts.mle_iterations, "modeling iteration count");
  bench_run->add_option("--tol", bench_opts.tlr_tol, "TLR accuracy threshold");
  bench_run->add_option("--out", out_path, "run file to write")->required();

  auto* bench_compare = bench->add_subcommand("compare", "compare two run files");
  bench_compare->add_option("--baseline", baseline_path, "baseline run file")->required();
  bench_compare->add_option("--candidate", candidate_path, "candidate run file")->required();
  bench_compare->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  bench_compare->add_option("--out", out_path, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  client_cfg.poll_interval = std::chrono::milliseconds(poll_ms);
  client_cfg.timeout = std::chrono::milliseconds(timeout_ms);

  try {
    if (serve->parsed()) return run_serve(serve_config, serve_port);
    if (build->parsed())
      return forge::client::cmd_build(client_cfg, build_config, wait, std::cout, std::cerr);
    if (status->parsed())
      return forge::client::cmd_status(client_cfg, job_id, std::cout, std::cerr);
    if (download->parsed())
      return forge::client::cmd_download(client_cfg, job_id, download_out, std::cout, std::cerr);
    if (context->parsed()) return run_context(ctx_config, ctx_root, ctx_out);
    if (generate->parsed())
      return run_generate(n, theta_from(sigma2, beta, nu, nugget), seed, out_path);
    if (model->parsed())
      return run_model(data_path, theta_from(sigma2, beta, nu, nugget), max_iters, max_evals, nb,
                       tol, out_path);
    if (predict->parsed())
      return run_predict(data_path, query_path, theta_from(sigma2, beta, nu, nugget), out_path);
    if (bench_run->parsed()) return run_bench(plan_path, bench_opts, out_path);
    if (bench_compare->parsed())
      return run_compare(baseline_path, candidate_path, format, out_path);
  } catch (const forge::Error& e) {
    std::cerr << e.what() << "\n";
    return forge::client::exit_validation;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
