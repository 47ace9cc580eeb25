#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "dipaint/error.hpp"
#include "dipaint/masking.hpp"
#include "dipaint/methods.hpp"
#include "dipaint/metrics.hpp"
#include "dipaint/png_io.hpp"
#include "dipaint/report.hpp"
#include "dipaint/service/jobs.hpp"
#include "dipaint/service/store.hpp"

namespace dipaint::service {

using Json = nlohmann::ordered_json;

struct ServiceConfig {
  std::filesystem::path data_dir = "data";
  int workers = 1;
  std::filesystem::path static_dir;  // served at / when it exists
  std::size_t max_upload_bytes = 32u << 20;
};

// Thrown inside handlers; turned into {code, message, details?}.
struct HttpError {
  int status;
  std::string code;
  std::string message;
  Json details = nullptr;
};

namespace http_detail {

inline void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, const HttpError& e) {
  Json body;
  body["code"] = e.code;
  body["message"] = e.message;
  if (!e.details.is_null()) body["details"] = e.details;
  send_json(res, e.status, body);
}

inline std::span<const std::uint8_t> body_bytes(const httplib::Request& req) {
  return {reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()};
}

inline Json parse_body(const httplib::Request& req) {
  try {
    return Json::parse(req.body);
  } catch (const std::exception& e) {
    throw HttpError{400, "bad_request", std::string("body is not valid JSON: ") + e.what()};
  }
}

inline std::string get_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw HttpError{422, "invalid_params", std::string("'") + key + "' must be a string"};
  }
  return j[key].get<std::string>();
}

inline std::optional<std::string> get_optional_string(const Json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return get_string(j, key);
}

inline double get_number(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    throw HttpError{422, "invalid_params", std::string("'") + key + "' must be a number"};
  }
  return j[key].get<double>();
}

inline SeedPoint get_point(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer()) {
    throw HttpError{422, "invalid_params", std::string(what) + " must be [row, col]"};
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace http_detail

class Service {
 public:
  explicit Service(ServiceConfig config)
      : config_(std::move(config)), store_(config_.data_dir), jobs_(store_, config_.workers) {
    install_routes();
  }

  ~Service() { stop(); }

  // Binds without serving. port 0 picks a free port. Returns the bound
  // port, or -1 on failure.
  int bind(const std::string& host, int port) {
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
    } else {
      port_ = server_.bind_to_port(host, port) ? port : -1;
    }
    return port_;
  }

  int port() const { return port_; }

  // Serves until stop(); call after a successful bind().
  bool run() { return server_.listen_after_bind(); }

  void wait_until_ready() const { server_.wait_until_ready(); }

  // Cancels jobs, closes streams and stops the listener. Idempotent.
  void stop() {
    if (stopped_.exchange(true)) return;
    jobs_.shutdown();
    server_.stop();
  }

  JobManager& jobs() { return jobs_; }
  Store& store() { return store_; }

 private:
  using Req = httplib::Request;
  using Res = httplib::Response;

  template <typename F>
  auto guarded(F f) {
    return [f](const Req& req, Res& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        http_detail::send_error(res, e);
      } catch (const InvalidArgument& e) {
        http_detail::send_error(res, {422, "invalid_params", e.what()});
      } catch (const IoError& e) {
        http_detail::send_error(res, {400, "bad_request", e.what()});
      } catch (const std::exception& e) {
        http_detail::send_error(res, {500, "internal", e.what()});
      }
    };
  }

  void install_routes() {
    using namespace http_detail;
    // Lets the handler answer 413 with a JSON body instead of httplib's
    // bare status.
    server_.set_payload_max_length(config_.max_upload_bytes + 1);
    server_.set_error_handler([](const Req&, Res& res) {
      if (!res.body.empty()) return;
      const std::string code = res.status == 404   ? "not_found"
                               : res.status == 413 ? "payload_too_large"
                                                   : "error";
      send_error(res, {res.status, code, httplib::status_message(res.status)});
    });

    server_.Get("/api/health", guarded([this](const Req&, Res& res) {
      send_json(res, 200, Json{{"status", "ok"}, {"workers", config_.workers}});
    }));

    server_.Post("/api/images", guarded([this](const Req& req, Res& res) {
      if (req.body.size() > config_.max_upload_bytes) {
        throw HttpError{413, "payload_too_large",
                        "upload of " + std::to_string(req.body.size()) +
                            " bytes exceeds the limit of " +
                            std::to_string(config_.max_upload_bytes)};
      }
      StoredImage s;
      try {
        s = store_.put_image(body_bytes(req));
      } catch (const IoError& e) {
        throw HttpError{400, "bad_png", e.what()};
      }
      send_json(res, 200,
                Json{{"image_id", s.id},
                     {"width", s.image.width},
                     {"height", s.image.height},
                     {"channels", s.image.channels}});
    }));

    server_.Get(R"(/api/images/([A-Za-z0-9_-]+))", guarded([this](const Req& req, Res& res) {
      const auto bytes = store_.image_bytes(req.matches[1]);
      if (!bytes) throw HttpError{404, "not_found", "unknown image " + req.matches[1].str()};
      res.set_content(reinterpret_cast<const char*>(bytes->data()), bytes->size(), "image/png");
    }));

    server_.Post("/api/masks/preview", guarded([this](const Req& req, Res& res) {
      mask_preview(parse_body(req), res);
    }));

    server_.Put(R"(/api/masks/([A-Za-z0-9_-]+))", guarded([this](const Req& req, Res& res) {
      put_mask(req, res);
    }));

    server_.Get(R"(/api/masks/([A-Za-z0-9_-]+))", guarded([this](const Req& req, Res& res) {
      const auto bytes = store_.mask_bytes(req.matches[1]);
      if (!bytes) throw HttpError{404, "not_found", "unknown mask " + req.matches[1].str()};
      res.set_content(reinterpret_cast<const char*>(bytes->data()), bytes->size(), "image/png");
    }));

    server_.Post("/api/jobs", guarded([this](const Req& req, Res& res) {
      JobRequest jr = parse_job(parse_body(req));
      const std::string id = jobs_.submit(std::move(jr));
      send_json(res, 202, Json{{"job_id", id}, {"state", "queued"}});
    }));

    server_.Get(R"(/api/jobs/([0-9a-f]+))", guarded([this](const Req& req, Res& res) {
      send_json(res, 200, to_json(require_job(req.matches[1])));
    }));

    server_.Delete(R"(/api/jobs/([0-9a-f]+))", guarded([this](const Req& req, Res& res) {
      const auto rec = jobs_.cancel(req.matches[1]);
      if (!rec) throw HttpError{404, "not_found", "unknown job " + req.matches[1].str()};
      send_json(res, 200, to_json(*rec));
    }));

    server_.Get(R"(/api/jobs/([0-9a-f]+)/result\.png)", guarded([this](const Req& req,
                                                                      Res& res) {
      const JobRecord rec = require_job(req.matches[1]);
      if (!rec.has_result) {
        throw HttpError{409, "conflict", "job " + rec.id + " is " + to_string(rec.state) +
                                             " and has no result"};
      }
      const auto bytes = png_detail::read_file(jobs_.result_path(rec.id));
      res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), "image/png");
    }));

    server_.Get(R"(/api/jobs/([0-9a-f]+)/metrics)", guarded([this](const Req& req,
                                                                   Res& res) {
      const JobRecord rec = require_job(req.matches[1]);
      if (!rec.request.reference_image_id) {
        throw HttpError{404, "not_found", "job " + rec.id + " has no reference image"};
      }
      if (!rec.has_result) {
        throw HttpError{409, "conflict", "job " + rec.id + " is " + to_string(rec.state)};
      }
      const auto reference = store_.get_image(*rec.request.reference_image_id);
      if (!reference) throw HttpError{404, "not_found", "reference image is gone"};
      const Image result = load_png(jobs_.result_path(rec.id));
      send_json(res, 200, dipaint::to_json(evaluate(*reference, result,
                                                    table_label(rec.request.spec))));
    }));

    server_.Get(R"(/api/jobs/([0-9a-f]+)/events)", guarded([this](const Req& req, Res& res) {
      stream_events(require_job(req.matches[1]).id, res);
    }));

    if (!config_.static_dir.empty() && std::filesystem::is_directory(config_.static_dir)) {
      server_.set_mount_point("/", config_.static_dir.string());
    }
  }

  JobRecord require_job(const std::string& id) const {
    auto rec = jobs_.get(id);
    if (!rec) throw HttpError{404, "not_found", "unknown job " + id};
    return *rec;
  }

  Image require_image(const std::string& id) const {
    auto img = store_.get_image(id);
    if (!img) throw HttpError{404, "not_found", "unknown image " + id};
    return *img;
  }

  void mask_preview(const Json& body, Res& res) {
    using namespace http_detail;
    const std::string image_id = get_string(body, "image_id");
    const std::string mode = get_string(body, "mode");
    const Json params = body.value("params", Json::object());
    const Image img = require_image(image_id);
    const double tolerance = get_number(params, "tolerance", 0.0);
    const int radius = static_cast<int>(get_number(params, "dilate", 0.0));
    auto check_point = [&](const SeedPoint& p) {
      if (p.row < 0 || p.row >= img.height || p.col < 0 || p.col >= img.width) {
        throw HttpError{422, "invalid_params",
                        "seed " + to_string(p) + " is outside the " +
                            shape_string(img.height, img.width) + " image",
                        Json{{"seed", Json::array({p.row, p.col})}}};
      }
    };
    Mask m;
    if (mode == "threshold") {
      ToleranceSpec spec;
      spec.tolerance = tolerance;
      if (params.contains("color")) {
        if (!params["color"].is_array()) {
          throw HttpError{422, "invalid_params", "'color' must be an array"};
        }
        for (const auto& v : params["color"]) {
          if (!v.is_number()) throw HttpError{422, "invalid_params", "'color' must be numeric"};
          spec.reference_color.push_back(v.get<double>());
        }
      } else if (params.contains("point")) {
        const SeedPoint p = get_point(params["point"], "'point'");
        check_point(p);
        for (int c = 0; c < img.channels; ++c) spec.reference_color.push_back(img.at(c, p.row, p.col));
      } else {
        throw HttpError{422, "invalid_params", "threshold needs 'color' or 'point'"};
      }
      m = mask_by_color(img, spec);
    } else if (mode == "grow") {
      std::vector<SeedPoint> seeds;
      if (!params.contains("seeds") || !params["seeds"].is_array()) {
        throw HttpError{422, "invalid_params", "grow needs 'seeds': [[row, col], ...]"};
      }
      for (const auto& s : params["seeds"]) {
        seeds.push_back(get_point(s, "each seed"));
        check_point(seeds.back());
      }
      m = region_grow(img, seeds, tolerance);
    } else {
      throw HttpError{422, "invalid_params", "mode must be 'threshold' or 'grow'"};
    }
    m = dilate(m, radius);
    const auto png = encode_mask_png(m);
    const std::string mask_id = sha256_hex(image_id + ":" + sha256_hex(png)).substr(0, 32);
    store_.put_mask(mask_id, image_id, m);
    send_json(res, 200,
              Json{{"mask_id", mask_id},
                   {"image_id", image_id},
                   {"occluded_count", m.occluded_count()},
                   {"width", m.width},
                   {"height", m.height},
                   {"preview", "/api/masks/" + mask_id}});
  }

  // PUT /api/masks/{id}[?image_id=...]: a new id needs image_id; an
  // existing id keeps its binding unless image_id rebinds it.
  void put_mask(const Req& req, Res& res) {
    const std::string id = req.matches[1];
    std::string image_id;
    if (req.has_param("image_id")) {
      image_id = req.get_param_value("image_id");
    } else if (auto bound = store_.mask_image(id)) {
      image_id = *bound;
    } else {
      throw HttpError{422, "invalid_params", "new mask " + id + " needs ?image_id="};
    }
    const Image img = require_image(image_id);
    Mask m;
    try {
      m = decode_mask_png(http_detail::body_bytes(req), "mask body");
    } catch (const IoError& e) {
      throw HttpError{400, "bad_png", e.what()};
    }
    if (m.height != img.height || m.width != img.width) {
      throw HttpError{409, "conflict",
                      "mask " + shape_string(m.height, m.width) + " does not match image " +
                          shape_string(img.height, img.width),
                      Json{{"mask", Json::array({m.height, m.width})},
                           {"image", Json::array({img.height, img.width})}}};
    }
    store_.put_mask(id, image_id, m);
    http_detail::send_json(res, 200,
                           Json{{"mask_id", id},
                                {"image_id", image_id},
                                {"occluded_count", m.occluded_count()}});
  }

  JobRequest parse_job(const Json& body) {
    using namespace http_detail;
    JobRequest jr;
    jr.image_id = get_string(body, "image_id");
    jr.mask_id = get_string(body, "mask_id");
    jr.method = get_string(body, "method");
    jr.reference_image_id = get_optional_string(body, "reference_image_id");
    jr.style_image_id = get_optional_string(body, "style_image_id");
    if (body.contains("params")) {
      if (!body["params"].is_object()) {
        throw HttpError{422, "invalid_params", "'params' must be an object"};
      }
      jr.params = body["params"];
    }
    const Image img = require_image(jr.image_id);
    const auto mask = store_.get_mask(jr.mask_id);
    if (!mask) throw HttpError{404, "not_found", "unknown mask " + jr.mask_id};
    for (const auto* ref : {&jr.reference_image_id, &jr.style_image_id}) {
      if (!*ref) continue;
      const Image other = require_image(**ref);
      if (!other.same_shape(img)) {
        throw HttpError{422, "invalid_params",
                        "image " + **ref + " " + shape_string(other) + " does not match " +
                            shape_string(img)};
      }
    }
    jr.spec = parse_method(jr.method);
    if (jr.style_image_id && jr.spec.kind != MethodKind::kDipst) {
      throw HttpError{422, "invalid_params", "style_image_id only applies to dipst"};
    }
    for (const auto& [key, value] : jr.params.items()) {
      if (!value.is_number()) {
        throw HttpError{422, "invalid_params", "parameter '" + key + "' must be a number"};
      }
      set_param(jr.spec, key, value.get<double>());
    }
    validate(jr.spec);
    if (mask->height != img.height || mask->width != img.width) {
      throw HttpError{422, "invalid_params",
                      "mask " + shape_string(mask->height, mask->width) +
                          " does not match image " + shape_string(img.height, img.width)};
    }
    check_inputs(jr.spec, img, *mask);
    return jr;
  }

  // Server-sent events: the latest progress snapshot, every later
  // progress event, then one terminal "state" event.
  void stream_events(const std::string& id, Res& res) {
    struct Cursor {
      bool started = false;
      std::size_t seen = 0;
    };
    auto cursor = std::make_shared<Cursor>();
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this, id, cursor](std::size_t, httplib::DataSink& sink) {
          auto send = [&](const char* event, const Json& data) {
            const std::string msg =
                std::string("event: ") + event + "\ndata: " + data.dump() + "\n\n";
            return sink.write(msg.data(), msg.size());
          };
          std::optional<JobRecord> rec;
          if (!cursor->started) {
            cursor->started = true;
            rec = jobs_.get(id);
            if (rec && !rec->events.empty()) {
              if (!send("progress", event_json(rec->events.back()))) return false;
              cursor->seen = rec->events.size();
            }
          } else {
            rec = jobs_.wait(id, cursor->seen, std::chrono::milliseconds(250));
            for (std::size_t i = cursor->seen; rec && i < rec->events.size(); ++i) {
              if (!send("progress", event_json(rec->events[i]))) return false;
            }
            if (rec) cursor->seen = rec->events.size();
          }
          if (!rec) {
            sink.done();
            return true;
          }
          if (is_terminal(rec->state)) {
            Json data{{"state", to_string(rec->state)}};
            if (rec->error) data["error"] = *rec->error;
            send("state", data);
            sink.done();
          } else if (jobs_.stopping() || stopped_) {
            sink.done();
          }
          return true;
        });
  }

  ServiceConfig config_;
  Store store_;
  JobManager jobs_;
  httplib::Server server_;
  int port_ = -1;
  std::atomic<bool> stopped_{false};
};

}  // namespace dipaint::service
