#pragma once

#include "ctxguard/app_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxguard {

enum class EventKind {
  LaunchActivity,
  LifecycleCallback,
  ListenerInvoke,
  StartService,
  SensitiveCall,
  OverlayShow,
  StopComponent,
};

std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);

/// One device event. Which optional fields are set depends on `kind`:
///   LaunchActivity, StopComponent, StartService: component
///   LifecycleCallback: component, method
///   ListenerInvoke: widget, event
///   SensitiveCall: component, stack (outermost first, last frame = api)
///   OverlayShow: widget; `package` is the foreign overlay owner
struct TraceEvent {
  /// Milliseconds on a monotonic clock.
  std::int64_t time = 0;
  EventKind kind = EventKind::LaunchActivity;
  std::string package;
  std::optional<std::string> component;
  std::optional<std::string> widget;
  std::optional<std::string> event;
  std::optional<std::string> method;
  std::vector<MethodSig> stack;

  friend bool operator==(const TraceEvent &, const TraceEvent &) = default;
};

using Trace = std::vector<TraceEvent>;

/// Checks the per-kind payload and, for a trace, strictly increasing
/// times. Throws TraceError.
void validate_event(const TraceEvent &e, std::size_t index = 0);
void validate_trace(const Trace &t);

/// One JSON object per line. Blank lines are skipped.
/// Throws SyntaxError (line number) or TraceError.
Trace parse_trace(std::string_view text);
std::string serialize_trace(const Trace &t);
std::string serialize_event(const TraceEvent &e);

} // namespace ctxguard
