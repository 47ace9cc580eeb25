#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dipaint/error.hpp"
#include "dipaint/methods.hpp"
#include "dipaint/neural/checkpoint.hpp"
#include "dipaint/png_io.hpp"
#include "dipaint/service/store.hpp"

namespace dipaint::service {

enum class JobState { kQueued, kRunning, kDone, kFailed, kCancelled };

inline std::string to_string(JobState s) {
  switch (s) {
    case JobState::kQueued: return "queued";
    case JobState::kRunning: return "running";
    case JobState::kDone: return "done";
    case JobState::kFailed: return "failed";
    case JobState::kCancelled: return "cancelled";
  }
  return "?";
}

inline bool is_terminal(JobState s) {
  return s == JobState::kDone || s == JobState::kFailed || s == JobState::kCancelled;
}

// queued -> running | cancelled; running -> done | failed | cancelled.
inline bool can_transition(JobState from, JobState to) {
  switch (from) {
    case JobState::kQueued: return to == JobState::kRunning || to == JobState::kCancelled;
    case JobState::kRunning:
      return to == JobState::kDone || to == JobState::kFailed || to == JobState::kCancelled;
    default: return false;
  }
}

struct JobRequest {
  std::string image_id;
  std::string mask_id;
  std::optional<std::string> reference_image_id;
  std::optional<std::string> style_image_id;
  std::string method;  // as requested, e.g. "patch5"
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  MethodSpec spec;
};

struct JobEvent {
  int iteration = 0;
  double loss = 0.0;
  std::optional<double> ssim;
};

inline std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct JobRecord {
  std::string id;
  JobRequest request;
  JobState state = JobState::kQueued;
  int total_iterations = 0;  // 0 for methods without progress reports
  std::vector<JobEvent> events;
  std::int64_t created_ms = 0;
  std::int64_t updated_ms = 0;
  std::optional<std::string> error;
  bool has_result = false;
  bool cancel_requested = false;

  // Throws SolverError on an illegal transition.
  void transition(JobState to) {
    if (!can_transition(state, to)) {
      throw SolverError("illegal job transition " + to_string(state) + " -> " + to_string(to));
    }
    state = to;
    updated_ms = now_ms();
  }
};

inline nlohmann::ordered_json event_json(const JobEvent& e) {
  nlohmann::ordered_json j;
  j["iteration"] = e.iteration;
  j["loss"] = e.loss;
  if (e.ssim) j["ssim"] = *e.ssim;
  return j;
}

inline nlohmann::ordered_json to_json(const JobRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["method"] = r.request.method;
  j["params"] = r.request.params;
  j["image_id"] = r.request.image_id;
  j["mask_id"] = r.request.mask_id;
  j["reference_image_id"] = r.request.reference_image_id
                                ? nlohmann::ordered_json(*r.request.reference_image_id)
                                : nlohmann::ordered_json(nullptr);
  j["state"] = to_string(r.state);
  nlohmann::ordered_json p;
  p["iteration"] = r.events.empty() ? 0 : r.events.back().iteration;
  p["iterations"] = r.total_iterations;
  if (!r.events.empty()) {
    p["loss"] = r.events.back().loss;
    if (r.events.back().ssim) p["ssim"] = *r.events.back().ssim;
  }
  j["progress"] = p;
  j["created_ms"] = r.created_ms;
  j["updated_ms"] = r.updated_ms;
  j["result"] = r.has_result ? nlohmann::ordered_json("/api/jobs/" + r.id + "/result.png")
                             : nlohmann::ordered_json(nullptr);
  if (r.error) j["error"] = *r.error;
  return j;
}

// Bounded worker pool over a FIFO queue. Jobs read their inputs from the
// store and write results into their job directory.
class JobManager {
 public:
  JobManager(Store& store, int workers) : store_(store) {
    if (workers < 1) throw InvalidArgument("workers must be >= 1");
    std::random_device rd;
    id_rng_ = SplitMix64((static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
                         static_cast<std::uint64_t>(now_ms()));
    for (int i = 0; i < workers; ++i) threads_.emplace_back([this] { worker(); });
  }

  ~JobManager() { shutdown(); }

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  std::string submit(JobRequest req) {
    std::lock_guard lock(mu_);
    if (stopping_) throw SolverError("service is shutting down");
    std::string id;
    do {
      char buf[17];
      std::snprintf(buf, sizeof(buf), "%016llx",
                    static_cast<unsigned long long>(id_rng_()));
      id = buf;
    } while (jobs_.count(id));
    auto rec = std::make_shared<JobRecord>();
    rec->id = id;
    rec->total_iterations = is_neural(req.spec.kind) ? req.spec.dip.iterations : 0;
    rec->request = std::move(req);
    rec->created_ms = rec->updated_ms = now_ms();
    jobs_[id] = rec;
    queue_.push_back(id);
    cv_.notify_all();
    return id;
  }

  std::optional<JobRecord> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return *it->second;
  }

  // Queued jobs are cancelled at once; running ones stop at their next
  // progress report. Terminal jobs are left alone.
  std::optional<JobRecord> cancel(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    JobRecord& r = *it->second;
    if (r.state == JobState::kQueued) {
      r.transition(JobState::kCancelled);
      std::erase(queue_, id);
    } else if (r.state == JobState::kRunning) {
      r.cancel_requested = true;
    }
    cv_.notify_all();
    return r;
  }

  // Blocks until the job has more than `seen` events, reaches a terminal
  // state, the timeout passes or the manager stops. Returns a snapshot.
  std::optional<JobRecord> wait(const std::string& id, std::size_t seen,
                                std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    const auto rec = it->second;
    cv_.wait_for(lock, timeout, [&] {
      return stopping_ || rec->events.size() > seen || is_terminal(rec->state);
    });
    return *rec;
  }

  bool stopping() const {
    std::lock_guard lock(mu_);
    return stopping_;
  }

  // Cancels everything and joins the workers. Idempotent.
  void shutdown() {
    {
      std::lock_guard lock(mu_);
      if (stopping_ && threads_.empty()) return;
      stopping_ = true;
      for (const auto& id : queue_) jobs_[id]->transition(JobState::kCancelled);
      queue_.clear();
      for (auto& [id, r] : jobs_) {
        if (r->state == JobState::kRunning) r->cancel_requested = true;
      }
      cv_.notify_all();
    }
    for (auto& t : threads_) {
      if (t.joinable()) t.join();
    }
    threads_.clear();
  }

  std::filesystem::path result_path(const std::string& id) const {
    return store_.job_dir(id) / "result.png";
  }

 private:
  void worker() {
    for (;;) {
      std::shared_ptr<JobRecord> rec;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
        if (stopping_) return;
        const std::string id = queue_.front();
        queue_.pop_front();
        rec = jobs_[id];
        rec->transition(JobState::kRunning);
        cv_.notify_all();
      }
      execute(*rec);
    }
  }

  void finish(JobRecord& rec, JobState to, std::optional<std::string> error, bool result) {
    std::lock_guard lock(mu_);
    rec.error = std::move(error);
    rec.has_result = result;
    rec.transition(to);
    cv_.notify_all();
  }

  void execute(JobRecord& rec) {
    // The request is immutable once queued, so reading it unlocked is safe.
    const JobRequest& req = rec.request;
    try {
      const auto image = store_.get_image(req.image_id);
      const auto mask = store_.get_mask(req.mask_id);
      if (!image || !mask) throw IoError("job inputs disappeared from the store");
      std::optional<Image> reference, style;
      if (req.reference_image_id) reference = store_.get_image(*req.reference_image_id);
      if (req.style_image_id) style = store_.get_image(*req.style_image_id);

      RunOptions opts;
      opts.reference = reference ? &*reference : nullptr;
      opts.style = style ? &*style : nullptr;
      opts.progress = [&](const nn::ProgressEvent& e) {
        std::lock_guard lock(mu_);
        rec.events.push_back({e.iteration, e.loss, e.ssim});
        rec.updated_ms = now_ms();
        cv_.notify_all();
        return !rec.cancel_requested;
      };
      const MethodResult r = run_method(req.spec, *image, *mask, opts);
      const auto dir = store_.job_dir(rec.id);
      Store::write_atomic(dir / "result.png", encode_png(r.image));
      if (r.network) {
        Store::write_atomic(dir / "checkpoint.bin",
                            nn::encode_checkpoint(r.network->config, r.network->params));
      }
      bool cancelled = false;
      {
        std::lock_guard lock(mu_);
        cancelled = rec.cancel_requested;
      }
      finish(rec, cancelled ? JobState::kCancelled : JobState::kDone, std::nullopt, true);
    } catch (const std::exception& e) {
      finish(rec, JobState::kFailed, std::string(e.what()), false);
    }
  }

  Store& store_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::map<std::string, std::shared_ptr<JobRecord>> jobs_;
  std::deque<std::string> queue_;
  std::vector<std::thread> threads_;
  SplitMix64 id_rng_;
  bool stopping_ = false;
};

}  // namespace dipaint::service
