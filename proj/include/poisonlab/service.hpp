#pragma once

// Session store and job runner behind the HTTP API. Each session lives in its own directory:
//
//   <data_dir>/sessions/<id>/session.json         summary, configs, timestamps
//                            dataset.csv           raw (unstandardised) training data
//                            victim_model.json
//                            sweep_request.json    sweep.json
//                            attacks/<target>_<alg>/request.json, result.json and one file per view
//
// Everything a client can read is a file on disk, so a restarted service serves the same bytes.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "poisonlab/attacks.hpp"
#include "poisonlab/classifier.hpp"
#include "poisonlab/dataset.hpp"
#include "poisonlab/impact.hpp"
#include "poisonlab/json_io.hpp"
#include "poisonlab/projection.hpp"
#include "poisonlab/reporting.hpp"
#include "poisonlab/vulnerability.hpp"

namespace poisonlab {

/// Thrown for requests that name something the store does not hold.
class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a result is requested while the job producing it is still queued or running.
class JobInProgress : public std::runtime_error {
 public:
  JobInProgress(const std::string& message, std::string job_id)
      : std::runtime_error(message), job_id_(std::move(job_id)) {}
  const std::string& job_id() const { return job_id_; }

 private:
  std::string job_id_;
};

enum class JobState { Pending, Running, Done, Failed };

inline constexpr std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::Pending: return "pending";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "failed";
}

struct JobStatus {
  std::string job_id;
  std::string kind;
  JobState state = JobState::Pending;
  double progress = 0.0;
  std::optional<std::string> error;
  std::optional<std::string> result;  // resource path once done
};

inline Json to_json(const JobStatus& s) {
  return Json{{"id", s.job_id},
              {"kind", s.kind},
              {"state", std::string(to_string(s.state))},
              {"progress", s.progress},
              {"error", detail::optional_json(s.error)},
              {"result", detail::optional_json(s.result)}};
}

/// FIFO queue drained by a fixed number of worker threads.
class JobQueue {
 public:
  using Report = std::function<void(double)>;
  using Task = std::function<std::string(const Report&)>;  // returns the result path

  explicit JobQueue(std::size_t workers) {
    if (workers == 0) throw DataError("worker count must be at least 1");
    for (std::size_t i = 0; i < workers; ++i) {
      workers_.emplace_back([this](std::stop_token stop) { run(stop); });
    }
  }

  JobQueue(const JobQueue&) = delete;
  JobQueue& operator=(const JobQueue&) = delete;

  ~JobQueue() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    ready_.notify_all();
    for (auto& w : workers_) w.request_stop();
    workers_.clear();
  }

  std::string submit(std::string kind, Task task) {
    std::lock_guard lock(mutex_);
    const std::string id = "job-" + std::to_string(++counter_);
    status_[id] = JobStatus{id, std::move(kind), JobState::Pending, 0.0, std::nullopt, std::nullopt};
    queue_.emplace_back(id, std::move(task));
    ready_.notify_one();
    return id;
  }

  /// Registers an already finished job (cache hits).
  std::string completed(std::string kind, std::string result) {
    std::lock_guard lock(mutex_);
    const std::string id = "job-" + std::to_string(++counter_);
    status_[id] = JobStatus{id, std::move(kind), JobState::Done, 1.0, std::nullopt, std::move(result)};
    return id;
  }

  JobStatus status(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = status_.find(id);
    if (it == status_.end()) throw NotFound("unknown job '" + id + "'");
    return it->second;
  }

  bool finished(const std::string& id) const {
    const auto s = status(id).state;
    return s == JobState::Done || s == JobState::Failed;
  }

  /// Blocks until the job leaves the queue; returns its final status.
  JobStatus wait(const std::string& id) const {
    std::unique_lock lock(mutex_);
    changed_.wait(lock, [&] {
      const auto it = status_.find(id);
      if (it == status_.end()) throw NotFound("unknown job '" + id + "'");
      return it->second.state == JobState::Done || it->second.state == JobState::Failed;
    });
    return status_.at(id);
  }

 private:
  void run(std::stop_token stop) {
    while (true) {
      std::pair<std::string, Task> job;
      {
        std::unique_lock lock(mutex_);
        ready_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
        if (stopping_ || stop.stop_requested()) return;
        job = std::move(queue_.front());
        queue_.pop_front();
        status_[job.first].state = JobState::Running;
      }
      changed_.notify_all();
      const std::string& id = job.first;
      const Report report = [&](double p) {
        std::lock_guard lock(mutex_);
        status_[id].progress = std::clamp(p, 0.0, 1.0);
      };
      try {
        std::string result = job.second(report);
        std::lock_guard lock(mutex_);
        auto& s = status_[id];
        s.state = JobState::Done;
        s.progress = 1.0;
        s.result = std::move(result);
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex_);
        auto& s = status_[id];
        s.state = JobState::Failed;
        s.error = e.what();
      }
      changed_.notify_all();
    }
  }

  mutable std::mutex mutex_;
  std::condition_variable ready_;
  mutable std::condition_variable changed_;
  std::deque<std::pair<std::string, Task>> queue_;
  std::map<std::string, JobStatus> status_;
  std::uint64_t counter_ = 0;
  bool stopping_ = false;
  std::vector<std::jthread> workers_;
};

namespace detail {

inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Write-then-rename so that readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(tmp + ": cannot open for writing");
    out << text;
    if (!out) throw std::runtime_error(tmp + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string now_iso8601() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

}  // namespace detail

struct SessionRequest {
  Dataset dataset;  // raw scale, original provenance
  ModelConfig model_config;
  std::optional<std::size_t> subsample;
  std::uint64_t seed = 42;
};

struct SweepRequest {
  std::vector<AttackConfig> attack_configs;
  DbdConfig dbd_config;
  std::optional<std::size_t> cap;  // default ceil(n/4)
  std::size_t parallelism = 1;
};

inline Json to_json(const SweepRequest& r) {
  Json configs = Json::array();
  for (const auto& c : r.attack_configs) configs.push_back(to_json(c));
  return Json{{"attack_configs", std::move(configs)},
              {"dbd", to_json(r.dbd_config)},
              {"cap", detail::optional_json(r.cap)}};
}

/// Accepts {"algorithms": [...], "attack": {...shared overrides}, "dbd": {...}, "cap": n, "parallelism": p}.
inline SweepRequest sweep_request_from_json(const Json& j) {
  SweepRequest r;
  const AttackConfig shared = attack_config_from_json(j.value("attack", Json::object()));
  const Json algorithms = j.value("algorithms", Json::array({"binary-search", "stingray"}));
  if (!algorithms.is_array() || algorithms.empty()) throw DataError("algorithms must be a non-empty array");
  for (const auto& a : algorithms) {
    AttackConfig c = shared;
    c.algorithm = parse_algorithm(a.get<std::string>());
    r.attack_configs.push_back(c);
  }
  if (j.contains("dbd")) r.dbd_config = dbd_config_from_json(j.at("dbd"));
  if (j.contains("cap") && !j.at("cap").is_null()) r.cap = j.at("cap").get<std::size_t>();
  detail::read_if(j, "parallelism", r.parallelism);
  if (r.parallelism == 0) throw DataError("parallelism must be at least 1");
  return r;
}

struct AttackRequest {
  std::size_t target_id = 0;
  AttackConfig attack_config;
  std::size_t k = 7;
  std::size_t bins = 20;
  DbdConfig dbd_config;
  ProjectionConfig projection_config;
};

inline Json to_json(const AttackRequest& r) {
  return Json{{"target_id", r.target_id},
              {"attack", to_json(r.attack_config)},
              {"k", r.k},
              {"bins", r.bins},
              {"dbd", to_json(r.dbd_config)},
              {"projection", to_json(r.projection_config)}};
}

/// Accepts {"target_id": t, "algorithm": a, "budget": b, "attack": {...}, "k", "bins", "dbd", "projection"}.
/// Budget defaults to ceil(n/4) when neither "budget" nor "attack.budget" is given.
inline AttackRequest attack_request_from_json(const Json& j, std::size_t dataset_size) {
  AttackRequest r;
  if (!j.contains("target_id")) throw DataError("target_id is required");
  r.target_id = j.at("target_id").get<std::size_t>();
  Json attack = j.value("attack", Json::object());
  if (j.contains("algorithm")) attack["algorithm"] = j.at("algorithm");
  if (j.contains("budget")) attack["budget"] = j.at("budget");
  if (!attack.contains("budget")) attack["budget"] = default_mcsa_cap(dataset_size);
  r.attack_config = attack_config_from_json(attack);
  detail::read_if(j, "k", r.k);
  detail::read_if(j, "bins", r.bins);
  if (j.contains("dbd")) r.dbd_config = dbd_config_from_json(j.at("dbd"));
  if (j.contains("projection")) r.projection_config = projection_config_from_json(j.at("projection"));
  if (r.k < 1 || r.k >= dataset_size) throw DataError("k must lie in [1, n-1]");
  if (r.bins < 2) throw DataError("bins must be at least 2");
  return r;
}

inline const std::vector<std::string>& attack_views() {
  static const std::vector<std::string> views{"overview", "projection", "instances", "features", "graph"};
  return views;
}

/// Every view payload of an attack, computed straight from the module functions.
struct AttackArtifacts {
  std::string result;
  std::map<std::string, std::string> views;
};

inline AttackArtifacts compute_attack_artifacts(const Dataset& data, const ModelConfig& model_config,
                                                const Model& victim, const AttackRequest& request,
                                                const std::function<void(double)>& progress = {}) {
  const auto report = [&](double p) {
    if (progress) progress(p);
  };
  const AttackResult result = run_attack(data, model_config, request.attack_config, request.target_id, &victim);
  report(0.4);
  AttackArtifacts out;
  out.result = dump(to_json(result, data));
  out.views["overview"] = dump(to_json(model_overview(result, data)));
  out.views["projection"] = dump(to_json(tsne_embed(poisoned_dataset(data, result), request.projection_config)));
  report(0.55);
  out.views["instances"] = dump(to_json(instance_attributes(result, data, request.dbd_config, all_kinds())));
  out.views["features"] = dump(to_json(feature_report(result, data, request.bins)));
  report(0.7);
  out.views["graph"] = dump(to_json(build_local_impact_graph(data, result, request.k, model_config)));
  return out;
}

struct SessionInfo {
  std::string id;
  std::size_t size = 0;
  std::size_t dim = 0;
  std::string fingerprint;
};

struct SweepQuery {
  std::string sort_key = "id";
  bool descending = false;
  std::size_t page = 1;  // 1-based
  std::size_t page_size = 50;
};

namespace detail {

// Numeric sort key for one sweep row; nullopt sorts after every value regardless of order.
inline std::optional<double> sweep_sort_value(const Json& row, std::string_view key) {
  const auto number = [](const Json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  if (key == "id") return row.at("id").get<double>();
  if (key == "label") return row.at("label").get<double>();
  if (key == "predicted") return row.at("predicted").get<double>();
  if (key == "dbd") return number(row.at("dbd"));
  std::string field, alg;
  for (std::string_view f : {"mcsa", "risk", "accuracy", "recall", "f1", "roc_auc"}) {
    if (key.size() > f.size() + 1 && key.starts_with(f) && key[f.size()] == '_') {
      field = f;
      alg = key.substr(f.size() + 1);
      break;
    }
  }
  if (field.empty() || !row.at("algorithms").contains(alg)) {
    throw DataError("unknown sort key '" + std::string(key) + "'");
  }
  const Json& o = row.at("algorithms").at(alg);
  if (field == "mcsa") return number(o.at("mcsa"));
  if (field == "risk") {
    const std::string r = o.at("risk").get<std::string>();
    if (r == "unknown") return std::nullopt;
    return r == "high" ? 0.0 : (r == "intermediate" ? 1.0 : 2.0);
  }
  if (field == "accuracy" || field == "recall" || field == "f1" || field == "roc_auc") {
    return o.at("metrics").at(field).get<double>();
  }
  throw DataError("unknown sort key '" + std::string(key) + "'");
}

}  // namespace detail

class Service {
 public:
  explicit Service(std::filesystem::path data_dir, std::size_t workers = 4)
      : root_(std::move(data_dir)), jobs_(workers) {
    std::filesystem::create_directories(root_ / "sessions");
    load_sessions();
  }

  const std::filesystem::path& data_dir() const { return root_; }
  JobQueue& jobs() { return jobs_; }

  SessionInfo create_session(SessionRequest request) {
    request.model_config.validate();
    if (request.dataset.standardization()) throw DataError("upload raw data, not a standardised dataset");
    Dataset raw = request.subsample ? stratified_subsample(request.dataset, *request.subsample, request.seed)
                                    : std::move(request.dataset);
    auto session = std::make_shared<Session>();
    session->raw = std::move(raw);
    session->data = standardize(session->raw);
    session->model_config = request.model_config;
    session->seed = request.seed;
    session->subsample = request.subsample;
    session->victim = train(session->data, session->model_config);
    session->created = session->updated = detail::now_iso8601();
    {
      std::lock_guard lock(mutex_);
      session->id = "s" + std::to_string(++session_counter_) + "-" + fingerprint(session->data).substr(0, 8);
      sessions_[session->id] = session;
    }
    const auto dir = session_dir(session->id);
    std::ostringstream csv;
    write_csv(csv, session->raw);
    detail::write_file_atomic(dir / "dataset.csv", csv.str());
    detail::write_file_atomic(dir / "victim_model.json", dump(to_json(session->victim)));
    persist_summary(*session);
    return SessionInfo{session->id, session->data.size(), session->data.dim(), fingerprint(session->data)};
  }

  Json session_summary(const std::string& session_id) const {
    const auto session = find(session_id);
    std::lock_guard lock(session->mutex);
    return summary_json(*session);
  }

  const Dataset& dataset(const std::string& session_id) const { return find(session_id)->data; }
  const Model& victim_model(const std::string& session_id) const { return find(session_id)->victim; }
  const ModelConfig& model_config(const std::string& session_id) const { return find(session_id)->model_config; }

  std::string start_sweep(const std::string& session_id, const SweepRequest& request) {
    const auto session = find(session_id);
    for (const auto& c : request.attack_configs) c.validate();
    request.dbd_config.validate();
    const std::string hash = detail::fnv1a_hex(fingerprint(session->data) + to_json(request).dump());
    std::lock_guard lock(session->mutex);
    if (session->sweep && session->sweep->hash == hash) {
      if (session->sweep->job && !jobs_.finished(*session->sweep->job)) return *session->sweep->job;
      if (session->sweep->ready) return jobs_.completed("sweep", sweep_path(session_id));
    }
    if (session->sweep && session->sweep->job && !jobs_.finished(*session->sweep->job)) {
      throw JobInProgress("a different sweep is still running for this session", *session->sweep->job);
    }
    session->sweep = SweepEntry{hash, std::nullopt, false, {}};
    const std::size_t cap = request.cap.value_or(default_mcsa_cap(session->data.size()));
    const std::string job = jobs_.submit("sweep", [this, session, request, hash, cap](const JobQueue::Report& report) {
      const std::size_t n = session->data.size();
      const SweepReport sweep = vulnerability_sweep(
          session->data, session->model_config, request.attack_configs, request.dbd_config, cap,
          request.parallelism, [&](std::size_t done) { report(static_cast<double>(done) / static_cast<double>(n)); });
      const std::string text = dump(to_json(sweep));
      const auto dir = session_dir(session->id);
      detail::write_file_atomic(dir / "sweep_request.json", dump(Json{{"hash", hash}, {"request", to_json(request)}}));
      detail::write_file_atomic(dir / "sweep.json", text);
      std::lock_guard lock(session->mutex);
      if (session->sweep && session->sweep->hash == hash) {
        session->sweep->ready = true;
        session->sweep->report = Json::parse(text);
      }
      session->updated = detail::now_iso8601();
      persist_summary(*session);
      return sweep_path(session->id);
    });
    session->sweep->job = job;
    return job;
  }

  /// The stored sweep report, byte for byte.
  std::string sweep_document(const std::string& session_id) const {
    const auto session = find(session_id);
    {
      std::lock_guard lock(session->mutex);
      require_sweep(*session);
    }
    return detail::read_file(session_dir(session_id) / "sweep.json");
  }

  /// One page of sweep rows ordered by `sort_key`; ties and missing values fall back to id order.
  Json get_sweep(const std::string& session_id, const SweepQuery& query) const {
    const auto session = find(session_id);
    Json report;
    {
      std::lock_guard lock(session->mutex);
      require_sweep(*session);
      report = session->sweep->report;
    }
    if (query.page < 1) throw DataError("page numbers start at 1");
    if (query.page_size < 1) throw DataError("page_size must be at least 1");
    const Json& rows = report.at("rows");
    std::vector<std::pair<std::optional<double>, std::size_t>> keyed;
    for (std::size_t i = 0; i < rows.size(); ++i) keyed.emplace_back(detail::sweep_sort_value(rows[i], query.sort_key), i);
    std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
      if (a.first.has_value() != b.first.has_value()) return a.first.has_value();
      if (a.first && *a.first != *b.first) return query.descending ? *a.first > *b.first : *a.first < *b.first;
      return rows[a.second].at("id").template get<std::size_t>() < rows[b.second].at("id").template get<std::size_t>();
    });
    Json page_rows = Json::array();
    const std::size_t begin = (query.page - 1) * query.page_size;
    for (std::size_t i = begin; i < std::min(keyed.size(), begin + query.page_size); ++i) {
      page_rows.push_back(rows[keyed[i].second]);
    }
    return Json{{"victim_metrics", report.at("victim_metrics")},
                {"cap", report.at("cap")},
                {"algorithms", report.at("algorithms")},
                {"total_rows", rows.size()},
                {"page", query.page},
                {"page_size", query.page_size},
                {"sort", query.sort_key},
                {"order", query.descending ? "desc" : "asc"},
                {"rows", std::move(page_rows)}};
  }

  /// Identical requests for a finished (target, algorithm) pair return a completed job at once.
  std::string start_attack(const std::string& session_id, const AttackRequest& request) {
    const auto session = find(session_id);
    request.attack_config.validate();
    request.dbd_config.validate();
    session->data.by_id(request.target_id);
    const AttackKey key{request.target_id, request.attack_config.algorithm};
    const std::string hash = detail::fnv1a_hex(fingerprint(session->data) + to_json(request).dump());
    const std::string path = attack_path(session_id, key);
    std::lock_guard lock(session->mutex);
    if (const auto it = session->attacks.find(key); it != session->attacks.end()) {
      const AttackEntry& entry = it->second;
      if (entry.job && !jobs_.finished(*entry.job)) {
        if (entry.hash == hash) return *entry.job;
        throw JobInProgress("an attack on this target with this algorithm is still running", *entry.job);
      }
      if (entry.ready && entry.hash == hash) return jobs_.completed("attack", path);
    }
    session->attacks[key] = AttackEntry{hash, std::nullopt, false};
    const std::string job = jobs_.submit("attack", [this, session, request, key, hash](const JobQueue::Report& report) {
      const AttackArtifacts artifacts =
          compute_attack_artifacts(session->data, session->model_config, session->victim, request, report);
      const auto dir = attack_dir(session->id, key);
      detail::write_file_atomic(dir / "result.json", artifacts.result);
      for (const auto& [view, text] : artifacts.views) detail::write_file_atomic(dir / (view + ".json"), text);
      detail::write_file_atomic(dir / "request.json", dump(Json{{"hash", hash}, {"request", to_json(request)}}));
      std::lock_guard lock(session->mutex);
      auto& entry = session->attacks[key];
      if (entry.hash == hash) entry.ready = true;
      session->updated = detail::now_iso8601();
      persist_summary(*session);
      return attack_path(session->id, key);
    });
    session->attacks[key].job = job;
    return job;
  }

  /// `view` is one of attack_views() or "result" for the full attack record.
  std::string get_attack_view(const std::string& session_id, std::size_t target_id, Algorithm algorithm,
                              const std::string& view) const {
    if (view != "result" && std::find(attack_views().begin(), attack_views().end(), view) == attack_views().end()) {
      throw NotFound("unknown view '" + view + "'");
    }
    const auto session = find(session_id);
    const AttackKey key{target_id, algorithm};
    {
      std::lock_guard lock(session->mutex);
      const auto it = session->attacks.find(key);
      if (it == session->attacks.end()) {
        throw NotFound("no attack on target " + std::to_string(target_id) + " with " +
                       std::string(to_string(algorithm)) + " in session " + session_id);
      }
      if (!it->second.ready) {
        if (it->second.job && jobs_.status(*it->second.job).state == JobState::Failed) {
          throw NotFound("the attack job failed: " + jobs_.status(*it->second.job).error.value_or(""));
        }
        throw JobInProgress("attack results are not ready yet", it->second.job.value_or(""));
      }
    }
    return detail::read_file(attack_dir(session_id, key) / (view + ".json"));
  }

  /// ETag source: the hash of the configuration that produced the stored payload.
  std::string attack_etag(const std::string& session_id, std::size_t target_id, Algorithm algorithm) const {
    const auto session = find(session_id);
    std::lock_guard lock(session->mutex);
    const auto it = session->attacks.find({target_id, algorithm});
    if (it == session->attacks.end()) throw NotFound("unknown attack");
    return it->second.hash;
  }

  std::string sweep_etag(const std::string& session_id) const {
    const auto session = find(session_id);
    std::lock_guard lock(session->mutex);
    require_sweep(*session);
    return session->sweep->hash;
  }

  JobStatus job_status(const std::string& job_id) const { return jobs_.status(job_id); }

  std::vector<std::string> session_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
  }

 private:
  using AttackKey = std::pair<std::size_t, Algorithm>;

  struct SweepEntry {
    std::string hash;
    std::optional<std::string> job;
    bool ready = false;
    Json report;
  };

  struct AttackEntry {
    std::string hash;
    std::optional<std::string> job;
    bool ready = false;
  };

  struct Session {
    std::string id;
    Dataset raw;
    Dataset data;
    ModelConfig model_config;
    std::uint64_t seed = 42;
    std::optional<std::size_t> subsample;
    Model victim;
    std::string created, updated;
    std::optional<SweepEntry> sweep;
    std::map<AttackKey, AttackEntry> attacks;
    mutable std::mutex mutex;
  };

  std::shared_ptr<Session> find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("unknown session '" + id + "'");
    return it->second;
  }

  void require_sweep(const Session& session) const {
    if (!session.sweep) throw NotFound("no sweep has been run for session " + session.id);
    if (!session.sweep->ready) {
      if (session.sweep->job && jobs_.status(*session.sweep->job).state == JobState::Failed) {
        throw NotFound("the sweep job failed: " + jobs_.status(*session.sweep->job).error.value_or(""));
      }
      throw JobInProgress("sweep results are not ready yet", session.sweep->job.value_or(""));
    }
  }

  std::filesystem::path session_dir(const std::string& id) const { return root_ / "sessions" / id; }

  std::filesystem::path attack_dir(const std::string& id, const AttackKey& key) const {
    return session_dir(id) / "attacks" / (std::to_string(key.first) + "_" + std::string(column_name(key.second)));
  }

  static std::string sweep_path(const std::string& id) { return "/sessions/" + id + "/sweep"; }

  static std::string attack_path(const std::string& id, const AttackKey& key) {
    return "/sessions/" + id + "/attacks/" + std::to_string(key.first) + "/" + std::string(to_string(key.second));
  }

  static Json summary_json(const Session& s) {
    Json attacks = Json::array();
    for (const auto& [key, entry] : s.attacks) {
      if (entry.ready) attacks.push_back(Json{{"target_id", key.first}, {"algorithm", to_string(key.second)}});
    }
    return Json{{"id", s.id},
                {"size", s.data.size()},
                {"dim", s.data.dim()},
                {"feature_names", s.data.feature_names()},
                {"seed", s.seed},
                {"positive", s.data.count(Label::Positive)},
                {"negative", s.data.count(Label::Negative)},
                {"subsample", detail::optional_json(s.subsample)},
                {"fingerprint", fingerprint(s.data)},
                {"model_config", to_json(s.model_config)},
                {"source_ids", s.data.source_ids()},
                {"sweep_ready", s.sweep && s.sweep->ready},
                {"attacks", std::move(attacks)},
                {"created", s.created},
                {"updated", s.updated}};
  }

  void persist_summary(const Session& s) const {
    detail::write_file_atomic(session_dir(s.id) / "session.json", dump(summary_json(s)));
  }

  void load_sessions() {
    for (const auto& entry : std::filesystem::directory_iterator(root_ / "sessions")) {
      if (!entry.is_directory() || !std::filesystem::exists(entry.path() / "session.json")) continue;
      const Json summary = Json::parse(detail::read_file(entry.path() / "session.json"));
      auto session = std::make_shared<Session>();
      session->id = summary.at("id").get<std::string>();
      session->seed = summary.at("seed").get<std::uint64_t>();
      if (!summary.at("subsample").is_null()) session->subsample = summary.at("subsample").get<std::size_t>();
      session->model_config = model_config_from_json(summary.at("model_config"));
      session->created = summary.at("created").get<std::string>();
      session->updated = summary.at("updated").get<std::string>();
      std::istringstream csv(detail::read_file(entry.path() / "dataset.csv"));
      const Dataset loaded = parse_csv(csv, "label", "1", "-1", (entry.path() / "dataset.csv").string());
      session->raw = Dataset(loaded.instances(), loaded.feature_names(), std::nullopt,
                             summary.at("source_ids").get<std::vector<std::size_t>>());
      session->data = standardize(session->raw);
      session->victim = model_from_json(Json::parse(detail::read_file(entry.path() / "victim_model.json")));
      if (std::filesystem::exists(entry.path() / "sweep.json") &&
          std::filesystem::exists(entry.path() / "sweep_request.json")) {
        const Json req = Json::parse(detail::read_file(entry.path() / "sweep_request.json"));
        session->sweep = SweepEntry{req.at("hash").get<std::string>(), std::nullopt, true,
                                    Json::parse(detail::read_file(entry.path() / "sweep.json"))};
      }
      if (std::filesystem::exists(entry.path() / "attacks")) {
        for (const auto& a : std::filesystem::directory_iterator(entry.path() / "attacks")) {
          if (!std::filesystem::exists(a.path() / "request.json")) continue;
          const Json req = Json::parse(detail::read_file(a.path() / "request.json"));
          const AttackKey key{req.at("request").at("target_id").get<std::size_t>(),
                              parse_algorithm(req.at("request").at("attack").at("algorithm").get<std::string>())};
          session->attacks[key] = AttackEntry{req.at("hash").get<std::string>(), std::nullopt, true};
        }
      }
      // Session ids carry a counter; continue numbering after the highest one on disk.
      const auto dash = session->id.find('-');
      if (session->id.size() > 1 && dash != std::string::npos) {
        session_counter_ = std::max<std::uint64_t>(session_counter_, std::stoull(session->id.substr(1, dash - 1)));
      }
      sessions_[session->id] = session;
    }
  }

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t session_counter_ = 0;
  JobQueue jobs_;
};

}  // namespace poisonlab
