#include "cglab/http_server.hpp"

#include <httplib.h>

#include <cstdio>
#include <regex>

namespace cglab {

int http_status(Errc code) {
  switch (code) {
    case Errc::not_found: return 404;
    case Errc::trial_order_violation:
    case Errc::duplicate_submission:
    case Errc::staging_violation:
    case Errc::invalid_state: return 409;
    case Errc::validation: return 422;
    case Errc::io: return 500;
    default: return 400;
  }
}

Json error_body(const Error& e) {
  Json err = {{"code", errc_name(e.code())}, {"message", e.what()}};
  if (e.code() == Errc::validation) {
    static const std::regex residual(R"(residual (-?\d+))");
    std::cmatch m;
    if (std::regex_search(e.what(), m, residual)) err["residual"] = std::stol(m[1].str());
  }
  return {{"schema", kSessionSchema}, {"error", err}};
}

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F f, int ok_status = 200) {
  return [f, ok_status](const httplib::Request& req, httplib::Response& res) {
    try {
      reply(res, ok_status, f(req));
    } catch (const Error& e) {
      reply(res, http_status(e.code()), error_body(e));
    } catch (const Json::exception& e) {
      reply(res, 400, error_body(Error(Errc::validation, std::string("malformed JSON: ") + e.what())));
    } catch (const std::exception& e) {
      reply(res, 500, error_body(Error(Errc::io, e.what())));
    }
  };
}

Json body_of(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  return Json::parse(req.body);
}

int trial_of(const httplib::Request& req) {
  try {
    return std::stoi(req.matches[2].str());
  } catch (const std::exception&) {
    throw Error(Errc::validation, "trial must be an integer");
  }
}

}  // namespace

void register_routes(httplib::Server& server, SessionService& service) {
  SessionService* svc = &service;
  server.Post("/sessions", guarded([svc](const httplib::Request& req) { return svc->create_session(body_of(req)); }, 201));
  server.Get(R"(/sessions/([0-9a-f]+))",
             guarded([svc](const httplib::Request& req) { return svc->get_session(req.matches[1].str()); }));
  server.Get(R"(/sessions/([0-9a-f]+)/trials/(-?\d+))", guarded([svc](const httplib::Request& req) {
               return svc->get_trial(req.matches[1].str(), trial_of(req));
             }));
  server.Post(R"(/sessions/([0-9a-f]+)/trials/(-?\d+)/response)", guarded([svc](const httplib::Request& req) {
                return svc->submit_response(req.matches[1].str(), trial_of(req), body_of(req));
              }));
  server.Post(R"(/sessions/([0-9a-f]+)/comprehension)", guarded([svc](const httplib::Request& req) {
                return svc->comprehension(req.matches[1].str(), body_of(req));
              }));
  server.Get(R"(/sessions/([0-9a-f]+)/summary)",
             guarded([svc](const httplib::Request& req) { return svc->summary(req.matches[1].str()); }));
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const Errc code = res.status == 404 ? Errc::not_found : Errc::invalid_argument;
    res.set_content(error_body(Error(code, "no route for " + req.method + " " + req.path)).dump(), "application/json");
  });
}

bool serve(SessionService& service, const std::string& host, int port) {
  httplib::Server server;
  register_routes(server, service);
  std::fprintf(stderr, "session service listening on %s:%d\n", host.c_str(), port);
  return server.listen(host, port);
}

}  // namespace cglab
