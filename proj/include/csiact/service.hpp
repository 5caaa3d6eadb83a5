#pragma once

#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

// Before httplib: one of the system headers it pulls in defines a macro that
// collides with names inside Eigen.
#include "csiact/inference.hpp"
#include "csiact/model_store.hpp"
#include "csiact/report.hpp"
#include "csiact/synth.hpp"

#include "httplib.h"

namespace csiact {

// ---------------------------------------------------------------------------
// HTTP API (all bodies JSON; errors are {"error": {"code", "message"}})
//
//   POST /api/classify          {source?: "live"|path|"synthetic:<label>:<seed>", model?: name}
//                               -> 202 {job_id, state}
//   GET  /api/jobs              -> {jobs: [Job]}, newest first
//   GET  /api/jobs/{id}         -> Job
//   GET  /api/models            -> {active, models: [{name, kind, schema, created_at, active}]}
//   POST /api/models/activate   {name} -> {active, kind, schema}
//   GET  /api/reports/latest    -> the newest report file, byte for byte
//   GET  /api/health            -> {status, active_model, pending}
//
// Job := {id, state, capture_ref, model, created_at, updated_at,
//         history: [{state, at}], prediction?: {label, per_row_votes, row_agreement},
//         error?: {code, status, message}}

enum class JobState { Pending, Loading, Done, Failed };

constexpr std::string_view to_string(JobState s) noexcept {
  switch (s) {
    case JobState::Pending: return "pending";
    case JobState::Loading: return "loading";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "unknown";
}

struct JobError {
  std::string code;
  int status = 0;  // HTTP status that describes the failure
  std::string message;
};

struct ClassificationJob {
  std::string id;
  JobState state = JobState::Pending;
  std::string capture_ref;
  std::string model;
  std::vector<std::pair<JobState, std::string>> history;
  std::optional<CapturePrediction> prediction;
  std::optional<JobError> error;
};

inline nlohmann::json to_json(const ClassificationJob& job) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& [state, at] : job.history) history.push_back({{"state", to_string(state)}, {"at", at}});
  nlohmann::json j{{"id", job.id},
                   {"state", to_string(job.state)},
                   {"capture_ref", job.capture_ref},
                   {"model", job.model},
                   {"created_at", job.history.front().second},
                   {"updated_at", job.history.back().second},
                   {"history", history}};
  if (job.prediction)
    j["prediction"] = {{"label", job.prediction->label},
                       {"per_row_votes", job.prediction->per_row_votes},
                       {"row_agreement", job.prediction->row_agreement}};
  if (job.error) j["error"] = {{"code", job.error->code}, {"status", job.error->status}, {"message", job.error->message}};
  return j;
}

/// Failure raised by a service operation, carrying its HTTP status.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }

 private:
  int status_;
  std::string code_;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8420;  // 0 picks a free port
  std::filesystem::path model_dir;
  std::filesystem::path capture_dir;
  std::filesystem::path report_dir;
  std::filesystem::path static_dir;
  std::filesystem::path initial_model;  // optional; outside model_dir is allowed
  std::size_t expected_width = 0;      // 0 accepts any model width
  std::size_t max_pending = 64;
  std::size_t max_retained_jobs = 1024;
  // Minimum time a job spends in "loading"; lets slow pollers see the state.
  std::chrono::milliseconds min_loading{0};
  synth::SynthConfig synthetic;  // used by "synthetic:" capture sources
};

namespace service_detail {

inline std::string now_iso() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto t = system_clock::to_time_t(now);
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

/// Newest regular file with the given extension that passes `accept`; ties on
/// mtime go to the lexicographically last name.
template <class Accept>
std::optional<std::filesystem::path> newest_file(const std::filesystem::path& dir, std::string_view ext,
                                                 Accept accept) {
  std::error_code ec;
  if (dir.empty() || !std::filesystem::is_directory(dir, ec)) return std::nullopt;
  std::optional<std::filesystem::path> best;
  std::filesystem::file_time_type best_time{};
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file(ec) || entry.path().extension() != ext) continue;
    const auto t = entry.last_write_time(ec);
    if (ec) continue;
    if (best && (t < best_time || (t == best_time && entry.path().filename() < best->filename()))) continue;
    if (accept(entry.path())) {
      best = entry.path();
      best_time = t;
    }
  }
  return best;
}

inline std::optional<std::filesystem::path> newest_file(const std::filesystem::path& dir, std::string_view ext) {
  return newest_file(dir, ext, [](const std::filesystem::path&) { return true; });
}

inline bool plain_file_name(const std::string& name) {
  return !name.empty() && name.find('/') == std::string::npos && name.find('\\') == std::string::npos &&
         name != "." && name != "..";
}

inline nlohmann::json schema_json(const ModelSchema& s) {
  return {{"feature_width", s.feature_width}, {"labels", s.labels.names()}};
}

}  // namespace service_detail

/// Classification service: job queue, worker thread and HTTP front end.
class Service {
 public:
  explicit Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    std::random_device rd;
    id_rng_.seed((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
    if (!cfg_.initial_model.empty()) {
      if (cfg_.model_dir.empty()) cfg_.model_dir = cfg_.initial_model.parent_path();
      activate_path(cfg_.initial_model);
    }
    worker_ = std::thread([this] { work(); });
    install_routes();
  }

  ~Service() {
    stop();
    {
      std::lock_guard lock(mutex_);
      shutting_down_ = true;
    }
    queue_cv_.notify_all();
    if (worker_.joinable()) worker_.join();
    if (server_thread_.joinable()) server_thread_.join();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const noexcept { return cfg_; }

  // -- HTTP lifecycle -------------------------------------------------------

  /// Binds the listen address; returns the bound port.
  int bind() {
    const int port = cfg_.port == 0 ? server_.bind_to_any_port(cfg_.host)
                                    : (server_.bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1);
    if (port < 0) throw Error(Errc::IoFailure, "cannot listen on " + cfg_.host + ":" + std::to_string(cfg_.port));
    return port;
  }

  /// Serves on the calling thread until stop().
  void serve() { server_.listen_after_bind(); }

  /// Binds and serves on a background thread; returns the bound port.
  int start() {
    const int port = bind();
    server_thread_ = std::thread([this] { serve(); });
    server_.wait_until_ready();
    return port;
  }

  void stop() { server_.stop(); }

  // -- Operations behind the endpoints ---------------------------------------

  /// Queues a job and returns its id.
  std::string submit(const std::string& source, const std::string& model_name = {}) {
    auto model = model_name.empty() ? active_model() : load_named(model_name);
    if (!model.env) throw ServiceError(409, "NoModelLoaded", "no model is active; activate one first");
    auto capture = resolve_source(source);

    std::lock_guard lock(mutex_);
    if (queue_.size() >= cfg_.max_pending)
      throw ServiceError(413, "QueueFull", "more than " + std::to_string(cfg_.max_pending) + " jobs are pending");
    auto job = std::make_shared<JobRecord>();
    job->view.id = new_id();
    job->view.capture_ref = capture.ref;
    job->view.model = model.name;
    job->view.history.emplace_back(JobState::Pending, service_detail::now_iso());
    job->model = std::move(model.env);
    job->capture = std::move(capture);
    jobs_[job->view.id] = job;
    order_.push_back(job->view.id);
    queue_.push_back(job);
    evict_old_jobs();
    queue_cv_.notify_one();
    return job->view.id;
  }

  std::optional<ClassificationJob> job(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second->view;
  }

  std::vector<ClassificationJob> jobs() const {
    std::lock_guard lock(mutex_);
    std::vector<ClassificationJob> out;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) out.push_back(jobs_.at(*it)->view);
    return out;
  }

  nlohmann::json models() const {
    const auto active = active_model();
    nlohmann::json list = nlohmann::json::array();
    std::error_code ec;
    std::vector<std::filesystem::path> files;
    if (!cfg_.model_dir.empty() && std::filesystem::is_directory(cfg_.model_dir, ec))
      for (const auto& e : std::filesystem::directory_iterator(cfg_.model_dir, ec))
        if (e.is_regular_file(ec) && e.path().extension() == kModelExtension) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
      nlohmann::json entry{{"name", path.filename().string()}, {"active", path.filename().string() == active.name}};
      try {
        const auto env = load_model(path);
        entry["kind"] = to_string(env.kind());
        entry["schema"] = service_detail::schema_json(env.schema());
        entry["created_at"] = env.created_at;
        entry["compatible"] = compatible(env);
      } catch (const Error& e) {
        entry["error"] = e.what();
      }
      list.push_back(std::move(entry));
    }
    return {{"active", active.env ? nlohmann::json(active.name) : nlohmann::json(nullptr)}, {"models", list}};
  }

  /// Swaps the serving model; jobs already queued keep the model they captured.
  nlohmann::json activate(const std::string& name) {
    if (!service_detail::plain_file_name(name)) throw ServiceError(404, "UnknownModel", "no model named '" + name + "'");
    const auto path = cfg_.model_dir / name;
    std::error_code ec;
    if (cfg_.model_dir.empty() || !std::filesystem::is_regular_file(path, ec))
      throw ServiceError(404, "UnknownModel", "no model named '" + name + "'");
    const auto env = activate_path(path);
    return {{"active", name}, {"kind", to_string(env->kind())}, {"schema", service_detail::schema_json(env->schema())}};
  }

  /// Raw text of the newest experiment report in the report directory.
  /// Comparisons and other JSON files living there are skipped.
  std::string latest_report() const {
    std::string text;
    const auto path = service_detail::newest_file(cfg_.report_dir, ".json", [&](const std::filesystem::path& p) {
      try {
        auto candidate = detail::read_file(p);
        parse_report(candidate);
        text = std::move(candidate);
        return true;
      } catch (const Error&) {
        return false;
      }
    });
    if (!path) throw ServiceError(404, "NoReports", "no evaluation report has been written yet");
    return text;
  }

  std::string active_model_name() const { return active_model().name; }

  std::size_t pending() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
  }

 private:
  struct NamedModel {
    std::string name;
    std::shared_ptr<const ModelEnvelope> env;
  };

  struct Capture {
    std::string ref;
    std::filesystem::path path;              // file sources
    std::optional<ActivityLabel> activity;   // synthetic sources
    std::uint64_t seed = 0;
  };

  struct JobRecord {
    ClassificationJob view;
    std::shared_ptr<const ModelEnvelope> model;
    Capture capture;
  };

  bool compatible(const ModelEnvelope& env) const {
    return cfg_.expected_width == 0 || env.schema().feature_width == cfg_.expected_width;
  }

  std::shared_ptr<const ModelEnvelope> checked_load(const std::filesystem::path& path) const {
    std::shared_ptr<const ModelEnvelope> env;
    try {
      env = std::make_shared<const ModelEnvelope>(load_model(path));
    } catch (const Error& e) {
      throw ServiceError(422, std::string(to_string(e.code())), e.what());
    }
    if (!compatible(*env))
      throw ServiceError(422, "IncompatibleSchema",
                         "model feature width " + std::to_string(env->schema().feature_width) +
                             " does not match the configured capture width " + std::to_string(cfg_.expected_width));
    return env;
  }

  std::shared_ptr<const ModelEnvelope> activate_path(const std::filesystem::path& path) {
    auto env = checked_load(path);
    std::lock_guard lock(mutex_);
    active_ = {path.filename().string(), env};
    return env;
  }

  NamedModel active_model() const {
    std::lock_guard lock(mutex_);
    return active_;
  }

  NamedModel load_named(const std::string& name) const {
    if (!service_detail::plain_file_name(name) || cfg_.model_dir.empty())
      throw ServiceError(404, "UnknownModel", "no model named '" + name + "'");
    std::error_code ec;
    if (!std::filesystem::is_regular_file(cfg_.model_dir / name, ec))
      throw ServiceError(404, "UnknownModel", "no model named '" + name + "'");
    return {name, checked_load(cfg_.model_dir / name)};
  }

  Capture resolve_source(const std::string& source) const {
    if (source.empty() || source == "live") {
      auto newest = service_detail::newest_file(cfg_.capture_dir, ".csv");
      if (!newest) throw ServiceError(404, "CaptureNotFound", "no capture in the drop directory");
      return {"live:" + newest->filename().string(), *newest, std::nullopt, 0};
    }
    if (source.rfind("synthetic:", 0) == 0) {
      const auto rest = source.substr(10);
      const auto colon = rest.find(':');
      const auto activity = parse_activity(rest.substr(0, colon));
      std::uint64_t seed = 0;
      bool ok = activity && colon != std::string::npos && colon + 1 < rest.size();
      if (ok) {
        const auto digits = rest.substr(colon + 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
        ok = ec == std::errc{} && ptr == digits.data() + digits.size();
      }
      if (!ok) throw ServiceError(400, "BadSource", "expected synthetic:<sitting|standing>:<seed>");
      return {source, {}, activity, seed};
    }
    std::filesystem::path path(source);
    if (path.is_relative() && !cfg_.capture_dir.empty()) path = cfg_.capture_dir / path;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
      throw ServiceError(404, "CaptureNotFound", "capture '" + source + "' does not exist");
    return {source, path, std::nullopt, 0};
  }

  std::string new_id() {
    char buf[40];
    std::snprintf(buf, sizeof buf, "job-%016llx", static_cast<unsigned long long>(id_rng_()));
    return buf;
  }

  void evict_old_jobs() {
    while (order_.size() > cfg_.max_retained_jobs) {
      auto it = jobs_.find(order_.front());
      if (it->second->view.state != JobState::Done && it->second->view.state != JobState::Failed) break;
      jobs_.erase(it);
      order_.pop_front();
    }
  }

  void advance(JobRecord& job, JobState state) {
    job.view.state = state;
    job.view.history.emplace_back(state, service_detail::now_iso());
  }

  void work() {
    for (;;) {
      std::shared_ptr<JobRecord> job;
      {
        std::unique_lock lock(mutex_);
        queue_cv_.wait(lock, [this] { return shutting_down_ || !queue_.empty(); });
        if (shutting_down_) return;
        job = queue_.front();
        queue_.pop_front();
        advance(*job, JobState::Loading);
      }
      const auto started = std::chrono::steady_clock::now();
      std::optional<CapturePrediction> prediction;
      std::optional<JobError> error;
      try {
        const auto sample = job->capture.activity
                                ? synth::generate_sample(cfg_.synthetic, *job->capture.activity, job->capture.seed)
                                : load_sample_csv(job->capture.path);
        prediction = classify_capture(job->model->model, sample);
      } catch (const Error& e) {
        const bool io = e.code() == Errc::IoFailure;
        error = JobError{io ? "CaptureNotFound" : "MalformedCapture", io ? 404 : 422, e.what()};
      } catch (const std::exception& e) {
        error = JobError{"InternalError", 500, e.what()};
      }
      std::this_thread::sleep_until(started + cfg_.min_loading);

      std::lock_guard lock(mutex_);
      job->view.prediction = std::move(prediction);
      job->view.error = std::move(error);
      advance(*job, job->view.error ? JobState::Failed : JobState::Done);
    }
  }

  // -- HTTP -----------------------------------------------------------------

  static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
      auto j = nlohmann::json::parse(req.body);
      if (!j.is_object()) throw ServiceError(400, "BadRequest", "request body must be a JSON object");
      return j;
    } catch (const nlohmann::json::exception& e) {
      throw ServiceError(400, "BadRequest", std::string("invalid JSON body: ") + e.what());
    }
  }

  static std::string string_field(const nlohmann::json& body, const char* key) {
    if (!body.contains(key) || body[key].is_null()) return {};
    if (!body[key].is_string()) throw ServiceError(400, "BadRequest", std::string("'") + key + "' must be a string");
    return body[key].get<std::string>();
  }

  template <typename Fn>
  static httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const ServiceError& e) {
        send_error(res, e.status(), e.code(), e.what());
      } catch (const Error& e) {
        send_error(res, 500, std::string(to_string(e.code())), e.what());
      }
    };
  }

  void install_routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"}});
    server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server_.Post("/api/classify", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      const auto id = submit(string_field(body, "source"), string_field(body, "model"));
      send_json(res, 202, {{"job_id", id}, {"state", to_string(job(id)->state)}});
    }));
    server_.Get("/api/jobs", guarded([this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& j : jobs()) list.push_back(to_json(j));
      send_json(res, 200, {{"jobs", list}});
    }));
    server_.Get(R"(/api/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto found = job(req.matches[1]);
      if (!found) throw ServiceError(404, "UnknownJob", "no job with id '" + std::string(req.matches[1]) + "'");
      send_json(res, 200, to_json(*found));
    }));
    server_.Get("/api/models", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, models());
    }));
    server_.Post("/api/models/activate", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, activate(string_field(parse_body(req), "name")));
    }));
    server_.Get("/api/reports/latest", guarded([this](const httplib::Request&, httplib::Response& res) {
      res.set_content(latest_report(), "application/json");
    }));
    server_.Get("/api/health", guarded([this](const httplib::Request&, httplib::Response& res) {
      const auto name = active_model_name();
      send_json(res, 200,
                {{"status", "ok"},
                 {"active_model", name.empty() ? nlohmann::json(nullptr) : nlohmann::json(name)},
                 {"pending", pending()}});
    }));
    server_.Get(R"(/api/.*)", [](const httplib::Request& req, httplib::Response& res) {
      send_error(res, 404, "NotFound", "no endpoint " + req.path);
    });
    std::error_code ec;
    if (!cfg_.static_dir.empty() && std::filesystem::is_directory(cfg_.static_dir, ec))
      server_.set_mount_point("/", cfg_.static_dir.string());
  }

  ServiceConfig cfg_;
  httplib::Server server_;
  std::thread server_thread_;

  mutable std::mutex mutex_;
  std::condition_variable queue_cv_;
  bool shutting_down_ = false;
  NamedModel active_;
  std::map<std::string, std::shared_ptr<JobRecord>> jobs_;
  std::deque<std::string> order_;
  std::deque<std::shared_ptr<JobRecord>> queue_;
  std::mt19937_64 id_rng_;
  std::thread worker_;
};

}  // namespace csiact
