#include "ctxguard/gateway.hpp"

#include "ctxguard/errors.hpp"
#include "json_util.hpp"
#include "mediator_json.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <condition_variable>
#include <thread>

namespace ctxguard {

using nlohmann::json;

struct Gateway::Server {
  httplib::Server http;
  std::thread listener;
  std::thread sweeper;
  std::mutex sweep_mu;
  std::condition_variable sweep_cv;
  bool stopping = false;
};

namespace {

HttpResponse ok(const json &j) { return {200, j.dump()}; }

HttpResponse error_response(int status, const std::string &msg) {
  return {status, json{{"error", msg}}.dump()};
}

std::string strip_version(const std::string &path) {
  if (path.rfind("/v1/", 0) == 0)
    return path.substr(3);
  return path;
}

} // namespace

Gateway::Gateway(Mediator &mediator) : mediator_(mediator) {
  std::lock_guard lock(mu_);
  note_new_tickets();
}

Gateway::~Gateway() { stop(); }

void Gateway::note_new_tickets() {
  const auto now = std::chrono::steady_clock::now();
  for (const auto &t : mediator_.pending())
    queued_at_.try_emplace(t.ticket_id, now);
}

HttpResponse Gateway::handle(const std::string &method, const std::string &path,
                             const std::string &body,
                             const std::map<std::string, std::string> &query) {
  std::lock_guard lock(mu_);
  const std::string p = strip_version(path);
  try {
    if (method == "GET") {
      if (p == "/pending")
        return get_pending();
      if (p == "/records")
        return get_records(query);
      if (p == "/models/stats")
        return get_stats();
      if (p.rfind("/snapshots/", 0) == 0)
        return get_snapshot(p.substr(11));
    } else if (method == "POST") {
      if (p == "/decisions")
        return post_decision(body);
      if (p == "/overrides")
        return post_override(body);
      if (p == "/traces")
        return post_trace(body);
    }
    return error_response(404, "no route for " + method + " " + path);
  } catch (const ReferenceError &e) {
    return error_response(404, e.what());
  } catch (const ConflictError &e) {
    return error_response(409, e.what());
  } catch (const Error &e) {
    return error_response(400, e.what());
  } catch (const json::exception &e) {
    return error_response(400, e.what());
  }
}

HttpResponse Gateway::get_pending() {
  json a = json::array();
  for (const auto &t : mediator_.pending())
    a.push_back(detail::ticket_summary_to_json(t));
  return ok(a);
}

HttpResponse Gateway::post_decision(const std::string &body) {
  const json j = detail::parse_json(body);
  const auto ticket = detail::require<std::string>(j, "ticket_id", "decision");
  const bool allow = detail::require<bool>(j, "allow", "decision");
  const RequestRecord &r = mediator_.resolve_prompt(ticket, allow);
  queued_at_.erase(ticket);
  return ok(detail::record_to_json(r));
}

HttpResponse Gateway::post_override(const std::string &body) {
  const json j = detail::parse_json(body);
  const auto id = detail::require<std::string>(j, "request_id", "override");
  return ok(detail::record_to_json(mediator_.override_denial(id)));
}

HttpResponse Gateway::get_records(const std::map<std::string, std::string> &query) {
  const auto &records = mediator_.records();
  std::size_t offset = 0, limit = 100;
  try {
    if (auto it = query.find("offset"); it != query.end())
      offset = std::stoul(it->second);
    if (auto it = query.find("limit"); it != query.end())
      limit = std::stoul(it->second);
  } catch (const std::exception &) {
    throw ValidationError("offset and limit must be non-negative integers");
  }
  json page = json::array();
  for (std::size_t i = offset; i < records.size() && i < offset + limit; ++i)
    page.push_back(detail::record_to_json(records[i]));
  return ok({{"total", records.size()},
             {"offset", offset},
             {"records", std::move(page)}});
}

HttpResponse Gateway::get_stats() {
  const MediatorStats s = mediator_.stats();
  json perms = json::object();
  for (const auto &[p, ps] : s.permissions)
    perms[std::string(to_string(p))] = {
        {"examples_seen", ps.examples_seen},
        {"algo", std::string(to_string(ps.algo))},
        {"verdicts",
         {{"Allow", ps.allow}, {"Deny", ps.deny}, {"Prompted", ps.prompted}}}};
  return ok({{"permissions", std::move(perms)},
             {"thresholds",
              {{"tau_lo", s.thresholds.tau_lo}, {"tau_hi", s.thresholds.tau_hi}}},
             {"prompts",
              {{"created", s.prompts_created},
               {"resolved", s.prompts_resolved},
               {"expired", s.prompts_expired},
               {"pending", s.prompts_pending}}}});
}

HttpResponse Gateway::get_snapshot(const std::string &id) {
  const WindowSnapshot *s = mediator_.find_snapshot(id);
  if (!s)
    return error_response(404, "unknown snapshot '" + id + "'");
  return ok(detail::snapshot_to_json(*s));
}

HttpResponse Gateway::post_trace(const std::string &body) {
  Trace t;
  try {
    t = parse_trace(body);
  } catch (const Error &e) {
    return error_response(400, e.what());
  }
  const auto ids = mediator_.run_trace(t);
  note_new_tickets();
  json tickets = json::array();
  for (const auto &id : ids)
    if (const auto *r = mediator_.find_record(id); r && r->ticket_id)
      tickets.push_back(*r->ticket_id);
  return ok({{"request_ids", ids}, {"ticket_ids", std::move(tickets)}});
}

std::vector<std::string>
Gateway::expire_stale(std::chrono::steady_clock::time_point now) {
  std::lock_guard lock(mu_);
  std::vector<std::string> expired;
  const auto timeout = mediator_.config().prompt_timeout_ms;
  if (!timeout)
    return expired;
  note_new_tickets();
  std::vector<std::pair<std::string, std::int64_t>> due;
  for (const auto &t : mediator_.pending()) {
    auto age = std::chrono::duration_cast<std::chrono::milliseconds>(
                   now - queued_at_.at(t.ticket_id))
                   .count();
    if (age >= *timeout)
      due.emplace_back(t.ticket_id, t.created_at + *timeout);
  }
  for (const auto &[id, at] : due) {
    mediator_.expire_prompt(id, at);
    queued_at_.erase(id);
    expired.push_back(id);
  }
  return expired;
}

namespace {

void install_routes(httplib::Server &svr, Gateway &gw) {
  auto forward = [&gw](const httplib::Request &req, httplib::Response &res) {
    std::map<std::string, std::string> query;
    for (const auto &[k, v] : req.params)
      query[k] = v;
    HttpResponse r = gw.handle(req.method, req.path, req.body, query);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  svr.Get(".*", forward);
  svr.Post(".*", forward);
}

} // namespace

bool Gateway::serve(const std::string &host, int port) {
  if (server_)
    return false;
  server_ = std::make_unique<Server>();
  install_routes(server_->http, *this);
  server_->sweeper = std::thread([this] {
    std::unique_lock lock(server_->sweep_mu);
    while (!server_->sweep_cv.wait_for(lock, std::chrono::seconds(1),
                                       [this] { return server_->stopping; }))
      expire_stale();
  });
  const bool ok = server_->http.listen(host, port);
  stop();
  return ok;
}

int Gateway::serve_background(const std::string &host) {
  if (server_)
    return -1;
  server_ = std::make_unique<Server>();
  install_routes(server_->http, *this);
  const int port = server_->http.bind_to_any_port(host);
  if (port < 0) {
    server_.reset();
    return -1;
  }
  server_->listener = std::thread([this] { server_->http.listen_after_bind(); });
  server_->sweeper = std::thread([this] {
    std::unique_lock lock(server_->sweep_mu);
    while (!server_->sweep_cv.wait_for(lock, std::chrono::seconds(1),
                                       [this] { return server_->stopping; }))
      expire_stale();
  });
  server_->http.wait_until_ready();
  return port;
}

void Gateway::stop() {
  if (!server_)
    return;
  {
    std::lock_guard lock(server_->sweep_mu);
    server_->stopping = true;
  }
  server_->sweep_cv.notify_all();
  server_->http.stop();
  if (server_->listener.joinable())
    server_->listener.join();
  if (server_->sweeper.joinable())
    server_->sweeper.join();
  server_.reset();
}

} // namespace ctxguard
