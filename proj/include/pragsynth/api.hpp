#pragma once

// Transport-independent HTTP/JSON routing for the session service. The server
// binary forwards every request here; tests call it directly.
//
//   POST   /sessions                {ui_mode, robot, seed?, target?}
//   GET    /sessions/{id}
//   POST   /sessions/{id}/examples  {string, sign}
//   DELETE /sessions/{id}/examples  {string, sign}
//   POST   /sessions/{id}/guess
//   POST   /sessions/{id}/abandon
//   GET    /healthz

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pragsynth/error.hpp"
#include "pragsynth/session.hpp"

namespace pragsynth {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

namespace detail {

inline std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto slash = path.find('/');
    parts.push_back(path.substr(0, slash));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash);
  }
  return parts;
}

inline ApiResponse error_response(int status, ErrorCode code, const std::string& message) {
  return {status, {{"code", to_string(code)}, {"message", message}}};
}

inline Sign parse_sign(const nlohmann::json& body) {
  if (!body.contains("sign")) return Sign::Positive;
  auto sign = sign_from_string(body.at("sign").get<std::string>());
  if (!sign || *sign == Sign::Unsigned) {
    throw Error(ErrorCode::InvalidArgument, "sign must be 'positive' or 'negative'");
  }
  return *sign;
}

inline std::string parse_string(const nlohmann::json& body) {
  if (!body.contains("string") || !body.at("string").is_string()) {
    throw Error(ErrorCode::InvalidString, "request needs a 'string' field");
  }
  return body.at("string").get<std::string>();
}

}  // namespace detail

inline ApiResponse handle_request(SessionService& service, std::string_view method,
                                  std::string_view path, std::string_view body_text) {
  using detail::error_response;
  const auto parts = detail::split_path(path);
  try {
    nlohmann::json body = nlohmann::json::object();
    if (!body_text.empty()) {
      body = nlohmann::json::parse(body_text);
      if (!body.is_object()) {
        throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
      }
    }

    if (parts.size() == 1 && parts[0] == "healthz" && method == "GET") {
      return {200, {{"status", "ok"}}};
    }
    if (parts.empty() || parts[0] != "sessions") {
      return error_response(404, ErrorCode::NotFound, "no such route");
    }

    if (parts.size() == 1) {
      if (method != "POST") return error_response(404, ErrorCode::NotFound, "no such route");
      auto mode = ui_mode_from_string(body.value("ui_mode", std::string()));
      auto robot = robot_from_string(body.value("robot", std::string()));
      if (!mode) throw Error(ErrorCode::InvalidArgument, "ui_mode must be positive_only or positive_negative");
      if (!robot) throw Error(ErrorCode::InvalidArgument, "robot must be green or blue");
      std::optional<std::uint64_t> seed;
      std::optional<std::string> target;
      if (body.contains("seed") && !body.at("seed").is_null()) seed = body.at("seed").get<std::uint64_t>();
      if (body.contains("target") && !body.at("target").is_null()) target = body.at("target").get<std::string>();
      const Session s = service.create_session(*mode, *robot, seed, target);
      return {201, session_view(service.engine(), s)};
    }

    const std::string id(parts[1]);
    if (!service.contains(id)) {
      return error_response(404, ErrorCode::NotFound, "unknown session '" + id + "'");
    }

    if (parts.size() == 2 && method == "GET") {
      return {200, session_view(service.engine(), service.get(id))};
    }
    if (parts.size() == 3) {
      const std::string_view action = parts[2];
      if (action == "examples" && method == "POST") {
        const auto g = service.add_example(id, detail::parse_string(body), detail::parse_sign(body));
        return {200, to_json(g)};
      }
      if (action == "examples" && method == "DELETE") {
        const auto g = service.remove_example(id, detail::parse_string(body), detail::parse_sign(body));
        return {200, to_json(g)};
      }
      if (action == "guess" && method == "POST") {
        return {200, to_json(service.request_guess(id))};
      }
      if (action == "abandon" && method == "POST") {
        return {200, session_view(service.engine(), service.abandon_session(id))};
      }
    }
    return error_response(404, ErrorCode::NotFound, "no such route");
  } catch (const Error& e) {
    return error_response(400, e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, ErrorCode::InvalidArgument, e.what());
  }
}

}  // namespace pragsynth
