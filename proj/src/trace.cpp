#include "ctxguard/trace.hpp"

#include "ctxguard/errors.hpp"
#include "json_util.hpp"

namespace ctxguard {

using nlohmann::json;

namespace {

constexpr std::pair<EventKind, std::string_view> kKindNames[] = {
    {EventKind::LaunchActivity, "LaunchActivity"},
    {EventKind::LifecycleCallback, "LifecycleCallback"},
    {EventKind::ListenerInvoke, "ListenerInvoke"},
    {EventKind::StartService, "StartService"},
    {EventKind::SensitiveCall, "SensitiveCall"},
    {EventKind::OverlayShow, "OverlayShow"},
    {EventKind::StopComponent, "StopComponent"},
};

json event_to_json(const TraceEvent &e) {
  json j = {{"time", e.time},
            {"kind", std::string(to_string(e.kind))},
            {"package", e.package}};
  if (e.component)
    j["component"] = *e.component;
  if (e.widget)
    j["widget"] = *e.widget;
  if (e.event)
    j["event"] = *e.event;
  if (e.method)
    j["method"] = *e.method;
  if (!e.stack.empty()) {
    json s = json::array();
    for (const auto &m : e.stack)
      s.push_back(m.str());
    j["stack"] = std::move(s);
  }
  return j;
}

std::optional<std::string> opt_string(const json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null())
    return std::nullopt;
  if (!it->is_string())
    throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

TraceEvent event_from_json(const json &j) {
  if (!j.is_object())
    throw ValidationError("event must be an object");
  TraceEvent e;
  e.time = detail::require<std::int64_t>(j, "time", "event");
  e.kind = event_kind_from_string(
      detail::require<std::string>(j, "kind", "event"));
  e.package = detail::require<std::string>(j, "package", "event");
  e.component = opt_string(j, "component");
  e.widget = opt_string(j, "widget");
  e.event = opt_string(j, "event");
  e.method = opt_string(j, "method");
  if (auto it = j.find("stack"); it != j.end()) {
    if (!it->is_array())
      throw ValidationError("field 'stack' must be an array");
    for (const auto &f : *it) {
      if (!f.is_string())
        throw ValidationError("stack frames must be strings");
      e.stack.push_back(MethodSig::parse(f.get<std::string>()));
    }
  }
  return e;
}

} // namespace

std::string_view to_string(EventKind k) {
  for (const auto &[kind, name] : kKindNames)
    if (kind == k)
      return name;
  return "?";
}

EventKind event_kind_from_string(std::string_view s) {
  for (const auto &[kind, name] : kKindNames)
    if (name == s)
      return kind;
  throw ValidationError("unknown event kind '" + std::string(s) + "'");
}

void validate_event(const TraceEvent &e, std::size_t index) {
  auto need = [&](bool ok, const char *what) {
    if (!ok)
      throw TraceError(index, std::string(to_string(e.kind)) + " requires " +
                                  what);
  };
  need(!e.package.empty(), "a package");
  switch (e.kind) {
  case EventKind::LaunchActivity:
  case EventKind::StartService:
  case EventKind::StopComponent:
    need(e.component.has_value(), "a component");
    break;
  case EventKind::LifecycleCallback:
    need(e.component.has_value(), "a component");
    need(e.method.has_value(), "a method");
    break;
  case EventKind::ListenerInvoke:
    need(e.widget.has_value(), "a widget");
    need(e.event.has_value(), "an event type");
    break;
  case EventKind::SensitiveCall:
    need(e.component.has_value(), "a component");
    need(!e.stack.empty(), "a non-empty stack");
    break;
  case EventKind::OverlayShow:
    need(e.widget.has_value(), "a widget");
    break;
  }
}

void validate_trace(const Trace &t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    validate_event(t[i], i);
    if (i > 0 && t[i].time <= t[i - 1].time)
      throw TraceError(i, "event times must be strictly increasing");
  }
}

Trace parse_trace(std::string_view text) {
  Trace out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (nl == std::string_view::npos)
        break;
      continue;
    }
    json j;
    try {
      j = json::parse(line.begin(), line.end());
    } catch (const json::parse_error &e) {
      throw SyntaxError(std::string("malformed trace line: ") + e.what(),
                        line_no);
    }
    try {
      out.push_back(event_from_json(j));
    } catch (const TraceError &) {
      throw;
    } catch (const Error &e) {
      throw TraceError(out.size(), e.what());
    }
    if (nl == std::string_view::npos)
      break;
  }
  validate_trace(out);
  return out;
}

std::string serialize_event(const TraceEvent &e) {
  return event_to_json(e).dump();
}

std::string serialize_trace(const Trace &t) {
  std::string out;
  for (const auto &e : t) {
    out += serialize_event(e);
    out += '\n';
  }
  return out;
}

} // namespace ctxguard
