#pragma once

#include "ctxguard/app_model.hpp"
#include "ctxguard/features.hpp"
#include "ctxguard/learners.hpp"
#include "ctxguard/renderer.hpp"
#include "ctxguard/trace.hpp"

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctxguard {

enum class Verdict { Allow, Deny, Prompted };
enum class DecisionSource { Model, User, TimeoutPolicy };
/// What to do with a call from a Service that no Activity started.
enum class BackgroundPolicy { Prompt, AlwaysDeny };

std::string_view to_string(Verdict v);
std::string_view to_string(DecisionSource s);
std::string_view to_string(BackgroundPolicy b);
BackgroundPolicy background_policy_from_string(std::string_view s);

struct RequestRecord {
  std::string request_id;
  PermissionType permission = PermissionType::DEVICE_ID;
  std::string package_id;
  std::string component_id;
  MethodSig api;
  std::int64_t time = 0;
  std::optional<std::string> snapshot_id;
  std::optional<std::string> trigger_widget;
  /// Entry method signature, absent if no stack frame is in a catalog.
  std::optional<std::string> entry_event;
  bool background = false;
  ContextFeatures features;
  Verdict verdict = Verdict::Prompted;
  DecisionSource decision_source = DecisionSource::Model;
  double p_legal = 0.5;
  /// Model output on the same features after user feedback was applied.
  std::optional<double> p_legal_after;
  /// Pipeline time (attribution, features, prediction, policy), excluding
  /// any wait on the user.
  double latency_ms = 0;
  bool closed = false;
  /// Set for denials; surfaced to the user as a warning.
  bool warning = false;
  std::optional<std::string> ticket_id;
};

struct PromptTicket {
  std::string ticket_id;
  std::string request_id;
  PermissionType permission = PermissionType::DEVICE_ID;
  std::string package_id;
  /// Absent for background requests with no originating Activity.
  std::optional<WindowSnapshot> snapshot;
  std::optional<std::string> highlighted_widget;
  std::string entry_event;
  std::int64_t created_at = 0;
};

struct LatestWidget {
  std::string widget_id;
  std::string owner_package;
  friend bool operator==(const LatestWidget &, const LatestWidget &) = default;
};

struct DeviceState {
  std::optional<std::string> foreground_package;
  std::optional<std::string> foreground_activity;
  std::optional<LatestWidget> latest_widget;
  std::optional<WindowSnapshot> latest_activity_snapshot;
  /// "package/service" -> component id of the Activity that started it.
  std::map<std::string, std::string> service_origin;
  /// "package/activity" -> most recent rendering.
  std::map<std::string, WindowSnapshot> activity_snapshots;
  std::int64_t last_time = std::numeric_limits<std::int64_t>::min();
};

struct MediatorConfig {
  Thresholds thresholds;
  BackgroundPolicy background = BackgroundPolicy::Prompt;
  /// nullopt disables expiry.
  std::optional<std::int64_t> prompt_timeout_ms = 30'000;
  EnabledSets enabled;
  /// Algorithm for permissions that have no loaded model.
  Algo default_algo = Algo::LR;
  Hyperparameters hyperparameters;
};

struct Attribution {
  const WindowSnapshot *snapshot = nullptr;
  std::optional<std::string> trigger_widget;
  std::vector<EntryPointRecord> entries;
  /// Call from a Service without a recorded origin.
  bool orphan_service = false;
};

/// Outermost frame whose method is in a callback catalog.
std::optional<EntryPointRecord>
extract_entry_from_stack(const std::vector<MethodSig> &stack);

/// Allow if p >= tau_hi, Deny if p <= tau_lo, Prompted otherwise.
Verdict decide(double p_legal, const Thresholds &t);

struct PermissionStats {
  std::uint64_t examples_seen = 0;
  Algo algo = Algo::LR;
  std::size_t allow = 0;
  std::size_t deny = 0;
  std::size_t prompted = 0;
};

struct MediatorStats {
  std::map<PermissionType, PermissionStats> permissions;
  Thresholds thresholds;
  std::size_t prompts_created = 0;
  std::size_t prompts_resolved = 0;
  std::size_t prompts_expired = 0;
  std::size_t prompts_pending = 0;
};

/// Single-writer runtime over DeviceState. Not thread-safe; callers that
/// share one instance serialize access.
class Mediator {
public:
  explicit Mediator(MediatorConfig config = {},
                    const SensitiveApiMap &api_map = default_sensitive_api_map());

  /// Registers an app. Throws ValidationError if the id is taken.
  void install(AppPackage pkg);
  const AppPackage *package(std::string_view id) const;

  void set_model(PermissionModel m);
  /// The permission's model, created with the default algorithm if absent.
  PermissionModel &model(PermissionType p);
  const PermissionModel *find_model(PermissionType p) const;

  struct CallOutcome {
    std::string request_id;
    std::optional<std::string> ticket_id;
  };

  /// Applies one event. SensitiveCall events go through on_sensitive_call
  /// and their outcome is returned. Throws ValidationError on a time that
  /// does not advance, ReferenceError on unknown ids.
  std::optional<CallOutcome> apply_event(const TraceEvent &e);

  Attribution attribute_context(const TraceEvent &call) const;
  /// attribute_context + assemble_features under the configured sets.
  ContextFeatures request_features(const TraceEvent &call) const;

  /// Replays a trace, shifting its times so it starts after the last
  /// applied event. Returns the ids of the records it created. Errors are
  /// rethrown as TraceError with the event index.
  std::vector<std::string> run_trace(const Trace &trace);

  /// Applies the user's decision to the model, then closes the record.
  /// Throws ReferenceError (unknown ticket) or ConflictError (closed).
  const RequestRecord &resolve_prompt(const std::string &ticket_id,
                                      bool user_allows);
  /// Deny without a model update. Throws ValidationError if the timeout
  /// has not elapsed or expiry is disabled.
  const RequestRecord &expire_prompt(const std::string &ticket_id,
                                     std::int64_t now);
  /// Expires every pending ticket whose timeout has elapsed at `now`.
  std::vector<std::string> expire_due(std::int64_t now);
  /// User reverses a denial: the record becomes Allow (source User) and the
  /// model learns the context as legal.
  const RequestRecord &override_denial(const std::string &request_id);

  const std::vector<RequestRecord> &records() const { return records_; }
  const RequestRecord *find_record(std::string_view id) const;
  const std::deque<PromptTicket> &pending() const { return pending_; }
  const PromptTicket *find_ticket(std::string_view id) const;
  const WindowSnapshot *find_snapshot(std::string_view id) const;
  const DeviceState &state() const { return state_; }
  const MediatorConfig &config() const { return config_; }
  MediatorStats stats() const;
  std::int64_t now() const { return state_.last_time; }

private:
  enum class TicketState { Pending, Resolved, Expired };

  CallOutcome on_sensitive_call(const TraceEvent &e);
  const AppPackage &require_package(const std::string &id) const;
  const Component &require_component(const AppPackage &pkg,
                                     const std::optional<std::string> &id) const;
  RequestRecord &record_for_ticket(const std::string &ticket_id);
  void drop_pending(const std::string &ticket_id);

  MediatorConfig config_;
  const SensitiveApiMap *api_map_;
  std::map<std::string, AppPackage, std::less<>> packages_;
  std::map<PermissionType, PermissionModel> models_;
  DeviceState state_;
  std::vector<RequestRecord> records_;
  std::map<std::string, std::size_t, std::less<>> record_index_;
  std::deque<PromptTicket> pending_;
  std::map<std::string, TicketState, std::less<>> tickets_;
  std::map<std::string, WindowSnapshot, std::less<>> snapshots_;
  std::size_t prompts_created_ = 0;
  std::size_t prompts_resolved_ = 0;
  std::size_t prompts_expired_ = 0;
};

/// One JSON object per record / ticket, field names as in the structs.
std::string serialize_record(const RequestRecord &r);
std::string serialize_ticket(const PromptTicket &t);

} // namespace ctxguard
