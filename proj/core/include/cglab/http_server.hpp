#pragma once

#include <string>

#include "cglab/session.hpp"

namespace httplib {
class Server;
}

namespace cglab {

/// HTTP status for an error code (404 not found, 409 ordering/staging,
/// 422 validation, 400 otherwise).
int http_status(Errc code);

/// {"error": {"code": ..., "message": ..., "residual"?: ...}}.
Json error_body(const Error& e);

/// Mounts the session API:
///   POST /sessions
///   GET  /sessions/{id}
///   GET  /sessions/{id}/trials/{t}
///   POST /sessions/{id}/trials/{t}/response
///   POST /sessions/{id}/comprehension
///   GET  /sessions/{id}/summary
void register_routes(httplib::Server& server, SessionService& service);

/// Blocks until the server stops.
bool serve(SessionService& service, const std::string& host, int port);

}  // namespace cglab
