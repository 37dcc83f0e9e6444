#pragma once

#include <condition_variable>
#include <deque>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "forge/buildspec/context.hpp"
#include "forge/buildspec/machine.hpp"
#include "forge/builder.hpp"
#include "forge/registry.hpp"
#include "forge/service/config.hpp"

namespace forge::service {

enum class JobState { pending, building, converting, finished, failed };

inline const char* state_name(JobState s) {
  switch (s) {
    case JobState::pending: return "PENDING";
    case JobState::building: return "BUILDING";
    case JobState::converting: return "CONVERTING";
    case JobState::finished: return "FINISHED";
    case JobState::failed: return "FAILED";
  }
  return "?";
}

inline JobState state_from_name(const std::string& s) {
  for (JobState st : {JobState::pending, JobState::building, JobState::converting,
                      JobState::finished, JobState::failed})
    if (s == state_name(st)) return st;
  throw Error(Errc::invalid_value, "unknown job state '" + s + "'", s);
}

// Read-consistent snapshot of one job.
struct JobView {
  std::string job_id;
  JobState state = JobState::pending;
  bool reused = false;
  std::string image_id;  // set iff finished
  std::string log_tail;
  std::vector<std::pair<std::string, std::int64_t>> timestamps;  // state -> entered at (ms)

  nlohmann::json to_json() const {
    nlohmann::json ts = nlohmann::json::object();
    for (const auto& [k, v] : timestamps) ts[k] = v;
    return nlohmann::json{{"job_id", job_id},     {"state", state_name(state)},
                          {"reused", reused},     {"image_id", image_id},
                          {"log_tail", log_tail}, {"timestamps", ts}};
  }

  static JobView from_json(const nlohmann::json& j) {
    JobView v;
    v.job_id = j.at("job_id").get<std::string>();
    v.state = state_from_name(j.at("state").get<std::string>());
    v.reused = j.at("reused").get<bool>();
    v.image_id = j.at("image_id").get<std::string>();
    v.log_tail = j.at("log_tail").get<std::string>();
    for (auto it = j.at("timestamps").begin(); it != j.at("timestamps").end(); ++it)
      v.timestamps.emplace_back(it.key(), it.value().get<std::int64_t>());
    return v;
  }
};

// Drives submitted configurations through fetch -> extend -> canonicalize ->
// reuse check -> build -> store -> convert. Jobs are journaled to the
// registry root so terminal states survive a restart; anything in flight at
// shutdown reports FAILED("interrupted") afterwards.
class Pipeline {
 public:
  explicit Pipeline(ServiceConfig cfg)
      : Pipeline(std::move(cfg), nullptr, nullptr) {}

  Pipeline(ServiceConfig cfg, std::shared_ptr<builder::BuilderBackend> backend,
           std::shared_ptr<registry::FormatConverter> converter)
      : cfg_(std::move(cfg)) {
    cfg_.validate();
    store_ = std::make_unique<registry::ImageStore>(cfg_.registry_root);
    if (backend) {
      backend_ = std::move(backend);
    } else if (cfg_.backend == "external") {
      builder::ExternalBackendOptions opts;
      opts.command_template = cfg_.external_build_cmd;
      opts.capabilities = cfg_.simulated_capabilities;
      opts.log_cap_bytes = cfg_.log_cap_bytes;
      backend_ = std::make_shared<builder::ExternalBackend>(std::move(opts));
    } else {
      builder::SimulatedBackendOptions opts;
      opts.capabilities = cfg_.simulated_capabilities;
      opts.fail_package = cfg_.simulated_fail_package;
      opts.delay = std::chrono::milliseconds(cfg_.simulated_delay_ms);
      opts.log_cap_bytes = cfg_.log_cap_bytes;
      backend_ = std::make_shared<builder::SimulatedBackend>(std::move(opts));
    }
    if (converter) converter_ = std::move(converter);
    else if (!cfg_.external_convert_cmd.empty())
      converter_ = std::make_shared<registry::ExternalConverter>(cfg_.external_convert_cmd);

    recover_journal();
    for (std::size_t i = 0; i < cfg_.workers; ++i)
      workers_.emplace_back([this] { worker_loop(); });
  }

  ~Pipeline() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    queue_cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  // Validates synchronously; a bad config creates no job.
  std::string submit(const std::string& config_json) {
    buildspec::ContainerConfig config;
    try {
      config = buildspec::parse_config(config_json, cfg_.allowed_engines);
    } catch (const Error& e) {
      throw Error(Errc::validation_failed, e.what());
    }
    auto job = std::make_shared<Job>();
    job->config = config;
    {
      std::lock_guard lock(mutex_);
      job->id = make_job_id();
      job->enter(JobState::pending);
      jobs_.emplace(job->id, job);
      queue_.push_back(job->id);
      journal_locked(*job);
    }
    queue_cv_.notify_one();
    return job->id;
  }

  JobView status(const std::string& job_id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw Error(Errc::unknown_job, "no job '" + job_id + "'", job_id);
    return it->second->view();
  }

  // Payload download for a finished job.
  std::pair<registry::ImageRecord, std::string> download(const std::string& job_id) const {
    std::string image_id;
    {
      std::lock_guard lock(mutex_);
      auto it = jobs_.find(job_id);
      if (it == jobs_.end()) throw Error(Errc::unknown_job, "no job '" + job_id + "'", job_id);
      if (it->second->state != JobState::finished)
        throw Error(Errc::not_ready, "job is " + std::string(state_name(it->second->state)),
                    state_name(it->second->state));
      image_id = it->second->image_id;
    }
    auto record = store_->find_by_id(image_id);
    if (!record) throw Error(Errc::not_found, "image '" + image_id + "' vanished", image_id);
    return {*record, store_->fetch_payload(image_id)};
  }

  registry::ImageStore& store() { return *store_; }
  builder::BuilderBackend& backend() { return *backend_; }
  const ServiceConfig& config() const { return cfg_; }

  // Blocks until the given job reaches FINISHED or FAILED (test helper).
  JobView wait(const std::string& job_id) {
    for (;;) {
      JobView v = status(job_id);
      if (v.state == JobState::finished || v.state == JobState::failed) return v;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }

 private:
  struct Job {
    std::string id;
    buildspec::ContainerConfig config;
    JobState state = JobState::pending;
    bool reused = false;
    std::string image_id;
    std::string log;
    std::vector<std::pair<std::string, std::int64_t>> timestamps;

    void enter(JobState s) {
      state = s;
      timestamps.emplace_back(state_name(s),
                              std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::system_clock::now().time_since_epoch())
                                  .count());
    }

    JobView view() const {
      JobView v;
      v.job_id = id;
      v.state = state;
      v.reused = reused;
      v.image_id = image_id;
      constexpr std::size_t tail = 4096;
      v.log_tail = log.size() <= tail ? log : log.substr(log.size() - tail);
      v.timestamps = timestamps;
      return v;
    }
  };

  std::string make_job_id() {
    std::uniform_int_distribution<int> hexdigit(0, 15);
    std::string suffix;
    for (int i = 0; i < 8; ++i) suffix += "0123456789abcdef"[hexdigit(rng_)];
    return "job-" + std::to_string(++job_counter_) + "-" + suffix;
  }

  void journal_locked(const Job& job) {
    nlohmann::json j = job.view().to_json();
    j["config"] = nlohmann::json::parse(buildspec::config_to_json(job.config));
    j["log"] = job.log;
    write_file_atomic(store_->root() / "jobs" / (job.id + ".json"), j.dump(2) + "\n");
  }

  void recover_journal() {
    namespace fs = std::filesystem;
    fs::create_directories(store_->root() / "jobs");
    for (const auto& entry : fs::directory_iterator(store_->root() / "jobs")) {
      if (entry.path().extension() != ".json") continue;
      nlohmann::json j = nlohmann::json::parse(read_file(entry.path()));
      auto job = std::make_shared<Job>();
      JobView v = JobView::from_json(j);
      job->id = v.job_id;
      job->state = v.state;
      job->reused = v.reused;
      job->image_id = v.image_id;
      job->log = j.value("log", std::string{});
      job->timestamps = v.timestamps;
      job->config = buildspec::parse_config(j.at("config").dump(), cfg_.allowed_engines);
      if (job->state != JobState::finished && job->state != JobState::failed) {
        job->log += "interrupted by service restart\n";
        job->enter(JobState::failed);
        journal_locked(*job);
      }
      std::lock_guard lock(mutex_);
      jobs_.emplace(job->id, job);
      std::size_t num = 0;
      if (sscanf(job->id.c_str(), "job-%zu-", &num) == 1) job_counter_ = std::max(job_counter_, num);
    }
  }

  void worker_loop() {
    for (;;) {
      std::string job_id;
      {
        std::unique_lock lock(mutex_);
        queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (stopping_) return;
        job_id = queue_.front();
        queue_.pop_front();
      }
      run_job(job_id);
    }
  }

  std::shared_ptr<Job> job_ref(const std::string& id) {
    std::lock_guard lock(mutex_);
    return jobs_.at(id);
  }

  void transition(Job& job, JobState s) {
    std::lock_guard lock(mutex_);
    job.enter(s);
    journal_locked(job);
  }

  void append_log(Job& job, const std::string& text) {
    std::lock_guard lock(mutex_);
    job.log += text;
    if (job.log.size() > cfg_.log_cap_bytes) {
      job.log.resize(cfg_.log_cap_bytes);
      job.log += "\n[log truncated]";
    }
  }

  void fail(Job& job, const std::string& message, const std::string& detail = {}) {
    append_log(job, message + "\n");
    if (!detail.empty()) append_log(job, detail + "\n");
    transition(job, JobState::failed);
  }

  void run_job(const std::string& job_id) {
    auto job = job_ref(job_id);
    try {
      const auto& machine = job->config.machine;
      const registry::ImageFormat desired =
          (machine.container_engine && *machine.container_engine == "singularity")
              ? registry::ImageFormat::sif
              : registry::ImageFormat::oci;

      auto [manifest, recipes] =
          buildspec::fetch_workflow_files(job->config.workflow, job->config.step_id,
                                          cfg_.workflow_root);
      auto extended = buildspec::extend_environment(manifest, machine);
      auto canonical = buildspec::canonicalize(extended, machine);

      if (auto existing = store_->reuse_lookup(canonical.digest, desired)) {
        finish(*job, existing->image_id, /*reused=*/true);
        return;
      }

      // coalesce concurrent identical submissions: the second waits here,
      // then finds the first one's image in the store
      auto gate = digest_gate(forge::to_hex(canonical.digest) + ":" +
                              registry::format_name(desired));
      std::lock_guard gate_lock(*gate);
      if (auto existing = store_->reuse_lookup(canonical.digest, desired)) {
        finish(*job, existing->image_id, /*reused=*/true);
        return;
      }

      auto ctx = buildspec::render_build_context(job->config, manifest, recipes, machine);
      auto platform = builder::select_platform(machine, cfg_.host_platform);

      transition(*job, JobState::building);
      builder::RawImage raw = builder::build_image(ctx, platform, *backend_);
      append_log(*job, raw.build_log);

      registry::ImageRecord record = store_->store_image(raw, ctx.canonical, machine);
      if (desired == registry::ImageFormat::sif) {
        transition(*job, JobState::converting);
        record = store_->convert_format(record, registry::ImageFormat::sif, converter_.get());
      }
      finish(*job, record.image_id, /*reused=*/false);
    } catch (const Error& e) {
      fail(*job, e.what(), e.detail());
    } catch (const std::exception& e) {
      fail(*job, e.what());
    }
  }

  void finish(Job& job, const std::string& image_id, bool reused) {
    std::lock_guard lock(mutex_);
    job.reused = reused;
    job.image_id = image_id;
    job.enter(JobState::finished);
    journal_locked(job);
  }

  std::shared_ptr<std::mutex> digest_gate(const std::string& key) {
    std::lock_guard lock(mutex_);
    auto& slot = gates_[key];
    if (!slot) slot = std::make_shared<std::mutex>();
    return slot;
  }

  ServiceConfig cfg_;
  std::unique_ptr<registry::ImageStore> store_;
  std::shared_ptr<builder::BuilderBackend> backend_;
  std::shared_ptr<registry::FormatConverter> converter_;

  mutable std::mutex mutex_;
  std::condition_variable queue_cv_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::deque<std::string> queue_;
  std::map<std::string, std::shared_ptr<std::mutex>> gates_;
  std::vector<std::thread> workers_;
  bool stopping_ = false;
  std::size_t job_counter_ = 0;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace forge::service
