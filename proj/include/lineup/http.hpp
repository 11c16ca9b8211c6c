#pragma once

// HTTP/1.1 JSON API over a SessionStore.
//
//   POST /sessions                  multipart: data (CSV) + spec (JSON) -> 201
//   GET  /sessions/{id}/lineup.svg
//   POST /sessions/{id}/responses   {"observer_tag": ..., "panel": ...}
//   POST /sessions/{id}/reveal      header X-Admin-Token
//   GET  /sessions/{id}/status

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include "httplib.h"
#include "lineup/error.hpp"
#include "lineup/service.hpp"

namespace lineup::http {

inline int status_for(Errc code) {
  switch (code) {
    case Errc::session_not_found: return 404;
    case Errc::duplicate_observer: return 409;
    case Errc::already_revealed: return 410;
    case Errc::panel_out_of_range:
    case Errc::null_generation_failed: return 422;
    case Errc::forbidden: return 403;
    case Errc::io_error: return 500;
    default: return 400;
  }
}

namespace detail {

inline void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, std::string_view code,
                       const std::string& message) {
  send_json(res, status, {{"error", std::string(code)}, {"message", message}});
}

// Runs a handler and maps library errors onto status codes.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), to_string(e.code()), e.what());
    } catch (const Json::exception& e) {
      send_error(res, 400, "parse_error", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

// Multipart field by name, accepting both "data" and "data.csv" style keys.
inline std::optional<std::string> form_field(const httplib::Request& req,
                                             const std::string& name,
                                             const std::string& alt) {
  if (req.has_file(name)) return req.get_file_value(name).content;
  if (req.has_file(alt)) return req.get_file_value(alt).content;
  return std::nullopt;
}

}  // namespace detail

struct ServerOptions {
  std::string allowed_origin = "*";
  std::optional<std::filesystem::path> ui_dir;  // static assets served at /ui
};

inline void register_routes(httplib::Server& server, service::SessionStore& store,
                            const ServerOptions& opt = {}) {
  using detail::guarded;
  using detail::send_json;

  server.set_post_routing_handler([origin = opt.allowed_origin](
                                      const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Headers", "Content-Type, X-Admin-Token");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
  });
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  server.Post("/sessions", guarded([&store](const httplib::Request& req,
                                            httplib::Response& res) {
    if (!req.is_multipart_form_data()) {
      throw Error(Errc::parse_error, "expected multipart/form-data with data and spec");
    }
    const auto csv = detail::form_field(req, "data", "data.csv");
    const auto spec = detail::form_field(req, "spec", "spec.json");
    if (!csv) throw Error(Errc::parse_error, "missing 'data' part");
    if (!spec) throw Error(Errc::parse_error, "missing 'spec' part");
    Json spec_doc;
    try {
      spec_doc = Json::parse(*spec);
    } catch (const Json::exception& e) {
      throw Error(Errc::invalid_spec, std::string("spec is not valid JSON: ") + e.what());
    }
    const auto created = store.create(*csv, spec_doc);
    send_json(res, 201,
              {{"session_id", created.session_id},
               {"admin_token", created.admin_token},
               {"m", created.m},
               {"plot_kind", std::string(to_string(created.plot_kind))}});
  }));

  server.Get(R"(/sessions/([A-Za-z0-9_-]+)/lineup\.svg)",
             guarded([&store](const httplib::Request& req, httplib::Response& res) {
               res.set_content(store.lineup_svg(req.matches[1]), "image/svg+xml");
             }));

  server.Post(R"(/sessions/([A-Za-z0-9_-]+)/responses)",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                store.status(id);  // 404 before body validation
                Json body;
                try {
                  body = Json::parse(req.body);
                } catch (const Json::exception& e) {
                  throw Error(Errc::parse_error, std::string("body is not JSON: ") + e.what());
                }
                if (!body.is_object() || !body.contains("observer_tag") ||
                    !body.at("observer_tag").is_string() ||
                    body.at("observer_tag").get<std::string>().empty()) {
                  throw Error(Errc::parse_error, "observer_tag must be a nonempty string");
                }
                if (!body.contains("panel") || !body.at("panel").is_number_integer()) {
                  throw Error(Errc::parse_error, "panel must be an integer");
                }
                const auto panel = body.at("panel").get<long long>();
                if (panel < 1) throw Error(Errc::panel_out_of_range, "panel must be >= 1");
                const auto n = store.submit(id, body.at("observer_tag").get<std::string>(),
                                            static_cast<std::size_t>(panel));
                send_json(res, 200, {{"accepted", true}, {"responses_so_far", n}});
              }));

  server.Post(R"(/sessions/([A-Za-z0-9_-]+)/reveal)",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
                const auto r = store.reveal(req.matches[1],
                                            req.get_header_value("X-Admin-Token"));
                send_json(res, 200, service::to_json(r));
              }));

  server.Get(R"(/sessions/([A-Za-z0-9_-]+)/status)",
             guarded([&store](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, store.status(req.matches[1]));
             }));

  if (opt.ui_dir) server.set_mount_point("/ui", opt.ui_dir->string());
}

// Store directory and port from LINEUP_STORE_DIR / LINEUP_PORT, with
// explicit values taking precedence.
inline std::filesystem::path store_dir_from_env(std::optional<std::string> given) {
  if (given) return *given;
  if (const char* v = std::getenv("LINEUP_STORE_DIR"); v && *v) return v;
  return "lineup-store";
}

inline int port_from_env(std::optional<int> given) {
  if (given) return *given;
  if (const char* v = std::getenv("LINEUP_PORT"); v && *v) return std::atoi(v);
  return 8080;
}

}  // namespace lineup::http
