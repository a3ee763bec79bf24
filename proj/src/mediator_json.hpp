#pragma once

#include "ctxguard/mediator.hpp"
#include "features_json.hpp"
#include "snapshot_json.hpp"

#include <json.hpp>

namespace ctxguard::detail {

template <class T> nlohmann::json opt(const std::optional<T> &v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json record_to_json(const RequestRecord &r) {
  return {{"request_id", r.request_id},
          {"permission", std::string(to_string(r.permission))},
          {"package_id", r.package_id},
          {"component_id", r.component_id},
          {"api", r.api.str()},
          {"time", r.time},
          {"snapshot_id", opt(r.snapshot_id)},
          {"trigger_widget", opt(r.trigger_widget)},
          {"entry_event", opt(r.entry_event)},
          {"background", r.background},
          {"features", features_to_json(r.features)},
          {"verdict", std::string(to_string(r.verdict))},
          {"decision_source", std::string(to_string(r.decision_source))},
          {"p_legal", r.p_legal},
          {"p_legal_after", opt(r.p_legal_after)},
          {"latency_ms", r.latency_ms},
          {"closed", r.closed},
          {"warning", r.warning},
          {"ticket_id", opt(r.ticket_id)}};
}

/// Pending-list entry: everything but the snapshot body.
inline nlohmann::json ticket_summary_to_json(const PromptTicket &t) {
  return {{"ticket_id", t.ticket_id},
          {"request_id", t.request_id},
          {"permission", std::string(to_string(t.permission))},
          {"package_id", t.package_id},
          {"entry_event", t.entry_event},
          {"snapshot_id", t.snapshot ? nlohmann::json(t.snapshot->snapshot_id)
                                     : nlohmann::json(nullptr)},
          {"highlighted_widget", opt(t.highlighted_widget)},
          {"created_at", t.created_at}};
}

inline nlohmann::json ticket_to_json(const PromptTicket &t) {
  auto j = ticket_summary_to_json(t);
  j["snapshot"] =
      t.snapshot ? snapshot_to_json(*t.snapshot) : nlohmann::json(nullptr);
  return j;
}

} // namespace ctxguard::detail
