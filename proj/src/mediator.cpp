#include "ctxguard/mediator.hpp"

#include "ctxguard/errors.hpp"
#include "ctxguard/static_analyzer.hpp"
#include "mediator_json.hpp"

#include <algorithm>
#include <chrono>

namespace ctxguard {

namespace {

std::string key(const std::string &package, const std::string &component) {
  return package + "/" + component;
}

} // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
  case Verdict::Allow:
    return "Allow";
  case Verdict::Deny:
    return "Deny";
  case Verdict::Prompted:
    break;
  }
  return "Prompted";
}

std::string_view to_string(DecisionSource s) {
  switch (s) {
  case DecisionSource::Model:
    return "Model";
  case DecisionSource::User:
    return "User";
  case DecisionSource::TimeoutPolicy:
    break;
  }
  return "TimeoutPolicy";
}

std::string_view to_string(BackgroundPolicy b) {
  return b == BackgroundPolicy::Prompt ? "prompt" : "always-deny";
}

BackgroundPolicy background_policy_from_string(std::string_view s) {
  if (s == "prompt")
    return BackgroundPolicy::Prompt;
  if (s == "always-deny")
    return BackgroundPolicy::AlwaysDeny;
  throw ValidationError("unknown background policy '" + std::string(s) + "'");
}

std::optional<EntryPointRecord>
extract_entry_from_stack(const std::vector<MethodSig> &stack) {
  for (const auto &frame : stack)
    if (auto e = classify_entry(frame))
      return e;
  return std::nullopt;
}

Verdict decide(double p_legal, const Thresholds &t) {
  if (p_legal >= t.tau_hi)
    return Verdict::Allow;
  if (p_legal <= t.tau_lo)
    return Verdict::Deny;
  return Verdict::Prompted;
}

Mediator::Mediator(MediatorConfig config, const SensitiveApiMap &api_map)
    : config_(std::move(config)), api_map_(&api_map) {
  config_.thresholds.validate();
  if (!config_.enabled.any())
    throw ValidationError("at least one feature set must be enabled");
  if (config_.prompt_timeout_ms && *config_.prompt_timeout_ms < 0)
    throw ValidationError("prompt timeout must be non-negative");
}

void Mediator::install(AppPackage pkg) {
  validate_package(pkg);
  const std::string id = pkg.package_id;
  if (!packages_.emplace(id, std::move(pkg)).second)
    throw ValidationError("package already installed: " + id);
}

const AppPackage *Mediator::package(std::string_view id) const {
  auto it = packages_.find(id);
  return it == packages_.end() ? nullptr : &it->second;
}

void Mediator::set_model(PermissionModel m) {
  m.set_thresholds(config_.thresholds);
  const PermissionType p = m.permission();
  models_.insert_or_assign(p, std::move(m));
}

PermissionModel &Mediator::model(PermissionType p) {
  auto it = models_.find(p);
  if (it == models_.end())
    it = models_
             .emplace(p, PermissionModel(p, config_.default_algo,
                                         config_.hyperparameters,
                                         config_.thresholds))
             .first;
  return it->second;
}

const PermissionModel *Mediator::find_model(PermissionType p) const {
  auto it = models_.find(p);
  return it == models_.end() ? nullptr : &it->second;
}

const AppPackage &Mediator::require_package(const std::string &id) const {
  const AppPackage *p = package(id);
  if (!p)
    throw ReferenceError("unknown package", id);
  return *p;
}

const Component &
Mediator::require_component(const AppPackage &pkg,
                            const std::optional<std::string> &id) const {
  const Component *c = id ? pkg.find_component(*id) : nullptr;
  if (!c)
    throw ReferenceError("unknown component", id.value_or(""));
  return *c;
}

std::optional<Mediator::CallOutcome> Mediator::apply_event(const TraceEvent &e) {
  validate_event(e);
  if (e.time <= state_.last_time)
    throw ValidationError("event time " + std::to_string(e.time) +
                          " does not advance past " +
                          std::to_string(state_.last_time));
  std::optional<CallOutcome> outcome;
  switch (e.kind) {
  case EventKind::LaunchActivity: {
    const AppPackage &pkg = require_package(e.package);
    const Component &c = require_component(pkg, e.component);
    if (c.kind != ComponentKind::Activity)
      throw ValidationError("cannot launch non-Activity " + c.component_id);
    WindowSnapshot snap = render_window(pkg, c.component_id, {}, e.time);
    snapshots_.insert_or_assign(snap.snapshot_id, snap);
    state_.activity_snapshots.insert_or_assign(key(pkg.package_id, c.component_id),
                                               snap);
    state_.foreground_package = pkg.package_id;
    state_.foreground_activity = c.component_id;
    state_.latest_activity_snapshot = std::move(snap);
    state_.latest_widget.reset();
    break;
  }
  case EventKind::LifecycleCallback: {
    const AppPackage &pkg = require_package(e.package);
    const Component &c = require_component(pkg, e.component);
    // A resumed Activity returns to the foreground with its last rendering.
    if (c.kind == ComponentKind::Activity && *e.method == "onResume") {
      auto it = state_.activity_snapshots.find(key(pkg.package_id, c.component_id));
      if (it != state_.activity_snapshots.end()) {
        if (state_.foreground_activity != c.component_id ||
            state_.foreground_package != pkg.package_id)
          state_.latest_widget.reset();
        state_.foreground_package = pkg.package_id;
        state_.foreground_activity = c.component_id;
        state_.latest_activity_snapshot = it->second;
      }
    }
    break;
  }
  case EventKind::ListenerInvoke: {
    const AppPackage &pkg = require_package(e.package);
    const WidgetDecl *w = pkg.find_widget(*e.widget);
    if (!w)
      throw ReferenceError("unknown widget", *e.widget);
    state_.latest_widget = LatestWidget{w->widget_id, w->owner_package};
    break;
  }
  case EventKind::StartService: {
    const AppPackage &pkg = require_package(e.package);
    const Component &c = require_component(pkg, e.component);
    if (c.kind != ComponentKind::Service)
      throw ValidationError("cannot start non-Service " + c.component_id);
    const std::string k = key(pkg.package_id, c.component_id);
    if (state_.foreground_package == pkg.package_id && state_.foreground_activity)
      state_.service_origin[k] = *state_.foreground_activity;
    else
      state_.service_origin.erase(k);
    break;
  }
  case EventKind::OverlayShow:
    // The overlay's package need not be installed; only its identity matters.
    state_.latest_widget = LatestWidget{*e.widget, e.package};
    break;
  case EventKind::StopComponent: {
    const AppPackage &pkg = require_package(e.package);
    const Component &c = require_component(pkg, e.component);
    if (c.kind == ComponentKind::Service) {
      state_.service_origin.erase(key(pkg.package_id, c.component_id));
    } else if (state_.foreground_package == pkg.package_id &&
               state_.foreground_activity == c.component_id) {
      state_.foreground_package.reset();
      state_.foreground_activity.reset();
      state_.latest_activity_snapshot.reset();
      state_.latest_widget.reset();
    }
    break;
  }
  case EventKind::SensitiveCall:
    outcome = on_sensitive_call(e);
    break;
  }
  state_.last_time = e.time;
  return outcome;
}

Attribution Mediator::attribute_context(const TraceEvent &call) const {
  const AppPackage &pkg = require_package(call.package);
  const Component &c = require_component(pkg, call.component);
  Attribution a;
  auto entry = extract_entry_from_stack(call.stack);

  if (c.kind == ComponentKind::Activity) {
    auto it = state_.activity_snapshots.find(key(pkg.package_id, c.component_id));
    if (it != state_.activity_snapshots.end())
      a.snapshot = &it->second;
    // The latest widget explains a call only when a listener started it, the
    // widget belongs to the requesting app, and it is on the rendered window.
    if (entry && entry->kind == EntryKind::Listener && state_.latest_widget &&
        state_.latest_widget->owner_package == pkg.package_id && a.snapshot) {
      const RenderedWidget *w = a.snapshot->find(state_.latest_widget->widget_id);
      if (w && w->owner_package == pkg.package_id)
        a.trigger_widget = w->widget_id;
    }
  } else {
    auto origin = state_.service_origin.find(key(pkg.package_id, c.component_id));
    if (origin != state_.service_origin.end()) {
      auto it = state_.activity_snapshots.find(key(pkg.package_id, origin->second));
      if (it != state_.activity_snapshots.end())
        a.snapshot = &it->second;
    } else {
      a.orphan_service = true;
    }
  }
  if (entry) {
    entry->bound_widget = a.trigger_widget;
    a.entries.push_back(std::move(*entry));
  }
  return a;
}

ContextFeatures Mediator::request_features(const TraceEvent &call) const {
  Attribution a = attribute_context(call);
  return assemble_features(a.snapshot, a.entries, a.trigger_widget,
                           config_.enabled);
}

Mediator::CallOutcome Mediator::on_sensitive_call(const TraceEvent &e) {
  const auto t0 = std::chrono::steady_clock::now();
  const MethodSig &api = e.stack.back();
  auto perm = api_map_->find(api);
  if (!perm)
    throw ReferenceError("unknown api signature", api.str());
  Attribution a = attribute_context(e);
  ContextFeatures features = assemble_features(a.snapshot, a.entries,
                                               a.trigger_widget, config_.enabled);
  const double p = model(*perm).predict(features);
  Verdict verdict = decide(p, config_.thresholds);
  DecisionSource source = DecisionSource::Model;
  if (a.orphan_service) {
    if (config_.background == BackgroundPolicy::AlwaysDeny) {
      verdict = Verdict::Deny;
      source = DecisionSource::TimeoutPolicy;
    } else {
      verdict = Verdict::Prompted;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();

  RequestRecord r;
  r.request_id = "r" + std::to_string(records_.size() + 1);
  r.permission = *perm;
  r.package_id = e.package;
  r.component_id = *e.component;
  r.api = api;
  r.time = e.time;
  if (a.snapshot)
    r.snapshot_id = a.snapshot->snapshot_id;
  r.trigger_widget = a.trigger_widget;
  if (!a.entries.empty())
    r.entry_event = a.entries.front().entry.str();
  r.background = a.orphan_service;
  r.features = std::move(features);
  r.verdict = verdict;
  r.decision_source = source;
  r.p_legal = p;
  r.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  r.closed = verdict != Verdict::Prompted;
  r.warning = verdict == Verdict::Deny;

  CallOutcome out{r.request_id, std::nullopt};
  if (verdict == Verdict::Prompted) {
    PromptTicket t;
    t.ticket_id = "t" + std::to_string(++prompts_created_);
    t.request_id = r.request_id;
    t.permission = r.permission;
    t.package_id = r.package_id;
    if (a.snapshot)
      t.snapshot = *a.snapshot;
    t.highlighted_widget = a.trigger_widget;
    t.entry_event = r.entry_event.value_or("");
    t.created_at = e.time;
    r.ticket_id = t.ticket_id;
    out.ticket_id = t.ticket_id;
    tickets_.emplace(t.ticket_id, TicketState::Pending);
    pending_.push_back(std::move(t));
  }
  record_index_.emplace(r.request_id, records_.size());
  records_.push_back(std::move(r));
  return out;
}

std::vector<std::string> Mediator::run_trace(const Trace &trace) {
  validate_trace(trace);
  std::vector<std::string> ids;
  if (trace.empty())
    return ids;
  std::int64_t shift = 0;
  if (trace.front().time <= state_.last_time)
    shift = state_.last_time + 1 - trace.front().time;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    TraceEvent e = trace[i];
    e.time += shift;
    try {
      if (auto out = apply_event(e))
        ids.push_back(out->request_id);
    } catch (const TraceError &) {
      throw;
    } catch (const Error &err) {
      throw TraceError(i, err.what());
    }
  }
  return ids;
}

RequestRecord &Mediator::record_for_ticket(const std::string &ticket_id) {
  auto st = tickets_.find(ticket_id);
  if (st == tickets_.end())
    throw ReferenceError("unknown ticket", ticket_id);
  if (st->second != TicketState::Pending)
    throw ConflictError("ticket already closed: " + ticket_id);
  auto it = std::find_if(pending_.begin(), pending_.end(),
                         [&](const PromptTicket &t) { return t.ticket_id == ticket_id; });
  return records_.at(record_index_.at(it->request_id));
}

void Mediator::drop_pending(const std::string &ticket_id) {
  pending_.erase(std::remove_if(pending_.begin(), pending_.end(),
                                [&](const PromptTicket &t) {
                                  return t.ticket_id == ticket_id;
                                }),
                 pending_.end());
}

const RequestRecord &Mediator::resolve_prompt(const std::string &ticket_id,
                                              bool user_allows) {
  RequestRecord &r = record_for_ticket(ticket_id);
  PermissionModel &m = model(r.permission);
  m.update(r.features, user_allows ? Label::Legal : Label::Illegal);
  r.verdict = user_allows ? Verdict::Allow : Verdict::Deny;
  r.decision_source = DecisionSource::User;
  r.p_legal_after = m.predict(r.features);
  r.closed = true;
  r.warning = false;
  tickets_[ticket_id] = TicketState::Resolved;
  ++prompts_resolved_;
  drop_pending(ticket_id);
  return r;
}

const RequestRecord &Mediator::expire_prompt(const std::string &ticket_id,
                                             std::int64_t now) {
  RequestRecord &r = record_for_ticket(ticket_id);
  if (!config_.prompt_timeout_ms)
    throw ValidationError("prompt expiry is disabled");
  const PromptTicket *t = find_ticket(ticket_id);
  if (now - t->created_at < *config_.prompt_timeout_ms)
    throw ValidationError("prompt timeout has not elapsed: " + ticket_id);
  r.verdict = Verdict::Deny;
  r.decision_source = DecisionSource::TimeoutPolicy;
  r.closed = true;
  r.warning = true;
  tickets_[ticket_id] = TicketState::Expired;
  ++prompts_expired_;
  drop_pending(ticket_id);
  return r;
}

std::vector<std::string> Mediator::expire_due(std::int64_t now) {
  std::vector<std::string> due;
  if (!config_.prompt_timeout_ms)
    return due;
  for (const auto &t : pending_)
    if (now - t.created_at >= *config_.prompt_timeout_ms)
      due.push_back(t.ticket_id);
  for (const auto &id : due)
    expire_prompt(id, now);
  return due;
}

const RequestRecord &Mediator::override_denial(const std::string &request_id) {
  auto it = record_index_.find(request_id);
  if (it == record_index_.end())
    throw ReferenceError("unknown request", request_id);
  RequestRecord &r = records_[it->second];
  if (!r.closed || r.verdict != Verdict::Deny)
    throw ConflictError("only a closed denial can be overridden: " + request_id);
  PermissionModel &m = model(r.permission);
  m.update(r.features, Label::Legal);
  r.verdict = Verdict::Allow;
  r.decision_source = DecisionSource::User;
  r.p_legal_after = m.predict(r.features);
  r.warning = false;
  return r;
}

const RequestRecord *Mediator::find_record(std::string_view id) const {
  auto it = record_index_.find(id);
  return it == record_index_.end() ? nullptr : &records_[it->second];
}

const PromptTicket *Mediator::find_ticket(std::string_view id) const {
  for (const auto &t : pending_)
    if (t.ticket_id == id)
      return &t;
  return nullptr;
}

const WindowSnapshot *Mediator::find_snapshot(std::string_view id) const {
  auto it = snapshots_.find(id);
  return it == snapshots_.end() ? nullptr : &it->second;
}

MediatorStats Mediator::stats() const {
  MediatorStats s;
  s.thresholds = config_.thresholds;
  for (const auto &[p, m] : models_) {
    auto &ps = s.permissions[p];
    ps.examples_seen = m.examples_seen();
    ps.algo = m.algo();
  }
  for (const auto &r : records_) {
    auto &ps = s.permissions[r.permission];
    if (auto *m = find_model(r.permission))
      ps.algo = m->algo();
    if (!r.closed)
      ++ps.prompted;
    else if (r.verdict == Verdict::Allow)
      ++ps.allow;
    else
      ++ps.deny;
  }
  s.prompts_created = prompts_created_;
  s.prompts_resolved = prompts_resolved_;
  s.prompts_expired = prompts_expired_;
  s.prompts_pending = pending_.size();
  return s;
}

std::string serialize_record(const RequestRecord &r) {
  return detail::record_to_json(r).dump();
}

std::string serialize_ticket(const PromptTicket &t) {
  return detail::ticket_to_json(t).dump();
}

} // namespace ctxguard
