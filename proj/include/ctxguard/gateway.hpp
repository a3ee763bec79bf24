#pragma once

#include "ctxguard/mediator.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace ctxguard {

struct HttpResponse {
  int status = 200;
  /// JSON document.
  std::string body;
};

/// HTTP surface over one Mediator. Every call takes the same lock, so
/// decisions and trace replays are applied one at a time and reads see a
/// consistent state.
///
/// Routes (also served without the /v1 prefix):
///   GET  /v1/pending            unresolved prompt summaries, oldest first
///   POST /v1/decisions          {"ticket_id", "allow"} -> closed record
///   POST /v1/overrides          {"request_id"} -> record of a reversed denial
///   GET  /v1/records            ?offset=&limit= page of the decision log
///   GET  /v1/models/stats       per-permission counts and thresholds
///   GET  /v1/snapshots/{id}     full window snapshot
///   POST /v1/traces             JSON-lines trace -> created record ids
class Gateway {
public:
  explicit Gateway(Mediator &mediator);
  ~Gateway();
  Gateway(const Gateway &) = delete;
  Gateway &operator=(const Gateway &) = delete;

  /// Dispatches one request. `query` holds decoded query parameters.
  HttpResponse handle(const std::string &method, const std::string &path,
                      const std::string &body,
                      const std::map<std::string, std::string> &query = {});

  /// Expires prompts pending longer than the mediator's timeout, measured
  /// on the wall clock since they were queued. Returns the expired ids.
  std::vector<std::string> expire_stale(std::chrono::steady_clock::time_point now =
                                            std::chrono::steady_clock::now());

  /// Blocks serving HTTP until stop(). Returns false if the port could not
  /// be bound. A background sweep calls expire_stale() every second.
  bool serve(const std::string &host, int port);
  /// Binds to an ephemeral port and serves on a background thread; returns
  /// the port, or -1 on failure.
  int serve_background(const std::string &host = "127.0.0.1");
  void stop();

private:
  HttpResponse get_pending();
  HttpResponse post_decision(const std::string &body);
  HttpResponse post_override(const std::string &body);
  HttpResponse get_records(const std::map<std::string, std::string> &query);
  HttpResponse get_stats();
  HttpResponse get_snapshot(const std::string &id);
  HttpResponse post_trace(const std::string &body);
  void note_new_tickets();

  Mediator &mediator_;
  std::mutex mu_;
  std::map<std::string, std::chrono::steady_clock::time_point> queued_at_;
  struct Server;
  std::unique_ptr<Server> server_;
};

} // namespace ctxguard
