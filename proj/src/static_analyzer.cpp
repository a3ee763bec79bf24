#include "ctxguard/static_analyzer.hpp"

#include "ctxguard/errors.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace ctxguard {

using nlohmann::json;

std::string_view to_string(EntryKind k) {
  return k == EntryKind::Listener ? "Listener" : "Lifecycle";
}

std::optional<EntryPointRecord> classify_entry(const MethodSig &m) {
  if (is_listener_method(m))
    return EntryPointRecord{m, EntryKind::Listener, m.method_name, std::nullopt};
  if (is_lifecycle_method(m))
    return EntryPointRecord{m, EntryKind::Lifecycle, std::nullopt, std::nullopt};
  return std::nullopt;
}

std::vector<SensitiveCallSite> find_sensitive_sites(const AppPackage &pkg,
                                                    const SensitiveApiMap &map) {
  std::vector<SensitiveCallSite> sites;
  for (const auto &[caller, callee] : pkg.call_graph.edges) {
    auto perm = map.find(callee);
    if (!perm)
      continue;
    sites.push_back({caller.str() + "->" + callee.str(), callee, *perm, caller});
  }
  std::sort(sites.begin(), sites.end(), [](const auto &a, const auto &b) {
    return std::pair(a.containing_method.str(), a.api.str()) <
           std::pair(b.containing_method.str(), b.api.str());
  });
  return sites;
}

std::vector<EntryPointRecord> find_entry_points(const AppPackage &pkg,
                                                const SensitiveCallSite &site) {
  std::map<MethodSig, std::vector<const MethodSig *>> callers;
  for (const auto &[caller, callee] : pkg.call_graph.edges)
    callers[callee].push_back(&caller);

  std::set<MethodSig> seen{site.containing_method};
  std::deque<const MethodSig *> queue{&site.containing_method};
  std::vector<EntryPointRecord> out;
  while (!queue.empty()) {
    const MethodSig *m = queue.front();
    queue.pop_front();
    if (auto e = classify_entry(*m))
      out.push_back(std::move(*e));
    if (auto it = callers.find(*m); it != callers.end())
      for (const MethodSig *c : it->second)
        if (seen.insert(*c).second)
          queue.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
    return a.entry.str() < b.entry.str();
  });
  return out;
}

std::optional<std::string> resolve_trigger_widget(const AppPackage &pkg,
                                                  const EntryPointRecord &entry) {
  if (entry.kind != EntryKind::Listener || !entry.event_type)
    return std::nullopt;
  std::optional<std::string> found;
  for (const auto &b : pkg.call_graph.handler_bindings) {
    if (b.listener != entry.entry || b.event_type != *entry.event_type)
      continue;
    if (found && *found != b.widget_id)
      throw AmbiguityError("listener " + entry.entry.str() + " (" +
                           *entry.event_type + ") is bound to both '" +
                           *found + "' and '" + b.widget_id + "'");
    found = b.widget_id;
  }
  return found;
}

std::optional<std::string> resolve_host_window(const AppPackage &pkg,
                                               const std::string &widget_id) {
  const LayoutTemplate *layout = pkg.layout_of_widget(widget_id);
  if (!layout)
    return std::nullopt;
  for (const auto &c : pkg.components)
    if (c.kind == ComponentKind::Activity && c.layout_id == layout->layout_id)
      return c.component_id;
  return std::nullopt;
}

std::optional<std::string>
resolve_host_window(const AppPackage &pkg,
                    const std::vector<EntryPointRecord> &entries) {
  for (const auto &e : entries) {
    const Component *c = pkg.owner_of_class(e.entry.class_name);
    if (c && c->kind == ComponentKind::Activity)
      return c->component_id;
  }
  return std::nullopt;
}

std::vector<ContextBinding> extract_bindings(const AppPackage &pkg,
                                             const SensitiveApiMap &map) {
  std::vector<ContextBinding> out;
  for (auto &site : find_sensitive_sites(pkg, map)) {
    ContextBinding b;
    b.entries = find_entry_points(pkg, site);
    for (auto &e : b.entries) {
      e.bound_widget = resolve_trigger_widget(pkg, e);
      if (!b.trigger_widget && e.bound_widget)
        b.trigger_widget = e.bound_widget;
    }
    if (b.trigger_widget) {
      b.host_activity = resolve_host_window(pkg, *b.trigger_widget);
      // a widget in a layout no Activity shows cannot be a trigger
      if (!b.host_activity)
        b.trigger_widget.reset();
    }
    if (!b.host_activity)
      b.host_activity = resolve_host_window(pkg, b.entries);
    b.site = std::move(site);
    out.push_back(std::move(b));
  }
  return out;
}

BindingReview parse_binding_review(std::string_view text) {
  json doc = detail::parse_json(text);
  BindingReview r;
  try {
    if (auto it = doc.find("allow"); it != doc.end())
      r.allow = it->get<std::set<std::string>>();
    if (auto it = doc.find("deny"); it != doc.end())
      r.deny = it->get<std::set<std::string>>();
  } catch (const json::exception &e) {
    throw ValidationError(std::string("review schema error: ") + e.what());
  }
  return r;
}

std::vector<ContextBinding> apply_review(std::vector<ContextBinding> bindings,
                                         const BindingReview &review) {
  std::erase_if(bindings, [&](const ContextBinding &b) {
    if (review.deny.count(b.site.site_id))
      return true;
    return !review.allow.empty() && !review.allow.count(b.site.site_id);
  });
  return bindings;
}

namespace {

json opt(const std::optional<std::string> &s) {
  return s ? json(*s) : json(nullptr);
}

std::optional<std::string> opt_from(const json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null())
    return std::nullopt;
  return it->get<std::string>();
}

} // namespace

std::string serialize_bindings(const std::string &package_id,
                               const std::vector<ContextBinding> &bindings) {
  json arr = json::array();
  for (const auto &b : bindings) {
    json entries = json::array();
    for (const auto &e : b.entries)
      entries.push_back({{"entry", e.entry.str()},
                         {"kind", std::string(to_string(e.kind))},
                         {"event_type", opt(e.event_type)},
                         {"bound_widget", opt(e.bound_widget)}});
    arr.push_back(
        {{"site",
          {{"site_id", b.site.site_id},
           {"api", b.site.api.str()},
           {"permission", std::string(to_string(b.site.permission))},
           {"containing_method", b.site.containing_method.str()}}},
         {"entries", std::move(entries)},
         {"trigger_widget", opt(b.trigger_widget)},
         {"host_activity", opt(b.host_activity)}});
  }
  json doc = {{"package_id", package_id}, {"bindings", std::move(arr)}};
  return doc.dump(2) + "\n";
}

std::vector<ContextBinding> parse_bindings(std::string_view text,
                                           std::string *package_id) {
  json doc = detail::parse_json(text);
  std::vector<ContextBinding> out;
  try {
    if (package_id)
      *package_id = detail::require<std::string>(doc, "package_id", "bindings");
    for (const auto &bj : detail::require_node(doc, "bindings", "bindings")) {
      ContextBinding b;
      const auto &sj = detail::require_node(bj, "site", "binding");
      b.site.site_id = sj.at("site_id").get<std::string>();
      b.site.api = MethodSig::parse(sj.at("api").get<std::string>());
      b.site.permission =
          permission_from_string(sj.at("permission").get<std::string>());
      b.site.containing_method =
          MethodSig::parse(sj.at("containing_method").get<std::string>());
      for (const auto &ej : bj.at("entries")) {
        EntryPointRecord e;
        e.entry = MethodSig::parse(ej.at("entry").get<std::string>());
        auto kind = ej.at("kind").get<std::string>();
        if (kind == "Listener")
          e.kind = EntryKind::Listener;
        else if (kind == "Lifecycle")
          e.kind = EntryKind::Lifecycle;
        else
          throw ValidationError("unknown entry kind '" + kind + "'");
        e.event_type = opt_from(ej, "event_type");
        e.bound_widget = opt_from(ej, "bound_widget");
        b.entries.push_back(std::move(e));
      }
      b.trigger_widget = opt_from(bj, "trigger_widget");
      b.host_activity = opt_from(bj, "host_activity");
      out.push_back(std::move(b));
    }
  } catch (const json::exception &e) {
    throw ValidationError(std::string("bindings schema error: ") + e.what());
  }
  return out;
}

} // namespace ctxguard
