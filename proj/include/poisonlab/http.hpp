#pragma once

// HTTP/JSON routes over a Service.
//
//   POST /sessions                                    JSON body or multipart CSV upload
//   GET  /sessions/{id}
//   POST /sessions/{id}/sweep
//   GET  /sessions/{id}/sweep[?sort=&order=&page=&page_size=]
//   POST /sessions/{id}/attacks
//   GET  /sessions/{id}/attacks/{target}/{alg}/{view}
//   GET  /jobs/{id}
//   GET  /schemas/{name}
//
// Errors are reported as {"error": {"code", "message"[, "job_id"]}}.

#include <exception>
#include <optional>
#include <sstream>
#include <string>

#include <httplib.h>

#include "poisonlab/json_io.hpp"
#include "poisonlab/schemas.hpp"
#include "poisonlab/service.hpp"

namespace poisonlab {

namespace detail {

inline void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

inline void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                       const std::optional<std::string>& job_id = std::nullopt) {
  Json err{{"code", code}, {"message", message}};
  if (job_id) err["job_id"] = *job_id;
  send_json(res, status, dump(Json{{"error", std::move(err)}}));
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const NotFound& e) {
      send_error(res, 404, "not_found", e.what());
    } catch (const JobInProgress& e) {
      res.set_header("Retry-After", "1");
      send_error(res, 409, "job_running", e.what(), e.job_id());
    } catch (const Json::exception& e) {
      send_error(res, 400, "invalid_json", e.what());
    } catch (const DataError& e) {
      send_error(res, 400, "invalid_request", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

inline Json body_json(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  Json j = Json::parse(req.body);
  if (!j.is_object()) throw DataError("request body must be a JSON object");
  return j;
}

inline void send_job(httplib::Response& res, const Service& service, const std::string& job_id) {
  const JobStatus status = service.job_status(job_id);
  send_json(res, status.state == JobState::Done ? 200 : 202, dump(Json{{"job", to_json(status)}}));
}

inline bool not_modified(const httplib::Request& req, httplib::Response& res, const std::string& etag) {
  const std::string quoted = "\"" + etag + "\"";
  res.set_header("ETag", quoted);
  if (req.get_header_value("If-None-Match") == quoted) {
    res.status = 304;
    return true;
  }
  return false;
}

inline SessionRequest session_request(const httplib::Request& req) {
  Json options;
  std::optional<std::string> csv_text;
  if (req.is_multipart_form_data()) {
    if (!req.has_file("dataset")) throw DataError("multipart upload needs a 'dataset' file part");
    csv_text = req.get_file_value("dataset").content;
    options = Json::object();
    for (const char* key : {"label_column", "positive", "negative"}) {
      if (req.has_file(key)) options[key] = req.get_file_value(key).content;
    }
    for (const char* key : {"subsample", "seed"}) {
      if (req.has_file(key)) options[key] = std::stoull(req.get_file_value(key).content);
    }
    if (req.has_file("model_config")) options["model_config"] = Json::parse(req.get_file_value("model_config").content);
  } else {
    options = body_json(req);
    if (options.contains("csv")) csv_text = options.at("csv").get<std::string>();
  }
  const std::string label = options.value("label_column", std::string("label"));
  const std::string pos = options.value("positive", std::string("1"));
  const std::string neg = options.value("negative", std::string("-1"));
  SessionRequest r;
  if (csv_text) {
    std::istringstream in(*csv_text);
    r.dataset = parse_csv(in, label, pos, neg, "upload");
  } else if (options.contains("path")) {
    r.dataset = load_csv(options.at("path").get<std::string>(), label, pos, neg);
  } else {
    throw DataError("provide a dataset as a multipart file, a 'csv' string or a server-side 'path'");
  }
  if (options.contains("model_config")) r.model_config = model_config_from_json(options.at("model_config"));
  if (options.contains("subsample") && !options.at("subsample").is_null()) {
    r.subsample = options.at("subsample").get<std::size_t>();
  }
  detail::read_if(options, "seed", r.seed);
  return r;
}

}  // namespace detail

/// Registers every route on `server`. The service must outlive the server.
inline void mount(httplib::Server& server, Service& service) {
  using detail::guarded;

  server.Post("/sessions", guarded([&](const httplib::Request& req, httplib::Response& res) {
    const SessionInfo info = service.create_session(detail::session_request(req));
    detail::send_json(res, 201, dump(service.session_summary(info.id)));
  }));

  server.Get(R"(/sessions/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
    detail::send_json(res, 200, dump(service.session_summary(req.matches[1])));
  }));

  server.Post(R"(/sessions/([^/]+)/sweep)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    const std::string job = service.start_sweep(req.matches[1], sweep_request_from_json(detail::body_json(req)));
    detail::send_job(res, service, job);
  }));

  server.Get(R"(/sessions/([^/]+)/sweep)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const bool paged = req.has_param("sort") || req.has_param("order") || req.has_param("page") ||
                       req.has_param("page_size");
    if (!paged) {
      const std::string body = service.sweep_document(id);
      if (detail::not_modified(req, res, service.sweep_etag(id))) return;
      detail::send_json(res, 200, body);
      return;
    }
    SweepQuery q;
    if (req.has_param("sort")) q.sort_key = req.get_param_value("sort");
    if (req.has_param("order")) {
      const std::string order = req.get_param_value("order");
      if (order != "asc" && order != "desc") throw DataError("order must be 'asc' or 'desc'");
      q.descending = order == "desc";
    }
    try {
      if (req.has_param("page")) q.page = std::stoull(req.get_param_value("page"));
      if (req.has_param("page_size")) q.page_size = std::stoull(req.get_param_value("page_size"));
    } catch (const std::logic_error&) {
      throw DataError("page and page_size must be positive integers");
    }
    detail::send_json(res, 200, dump(service.get_sweep(id, q)));
  }));

  server.Post(R"(/sessions/([^/]+)/attacks)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const AttackRequest request = attack_request_from_json(detail::body_json(req), service.dataset(id).size());
    detail::send_job(res, service, service.start_attack(id, request));
  }));

  server.Get(R"(/sessions/([^/]+)/attacks/(\d+)/([^/]+)/([^/]+))",
             guarded([&](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               const std::size_t target = std::stoull(req.matches[2]);
               const Algorithm alg = parse_algorithm(req.matches[3].str());
               const std::string view = req.matches[4];
               const std::string body = service.get_attack_view(id, target, alg, view);
               if (detail::not_modified(req, res, service.attack_etag(id, target, alg) + "-" + view)) return;
               detail::send_json(res, 200, body);
             }));

  server.Get(R"(/jobs/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
    detail::send_json(res, 200, dump(to_json(service.job_status(req.matches[1]))));
  }));

  server.Get(R"(/schemas/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.matches[1];
    if (!schemas().contains(name)) throw NotFound("unknown schema '" + name + "'");
    detail::send_json(res, 200, schema(name));
  }));
}

}  // namespace poisonlab
