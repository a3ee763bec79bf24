#pragma once

#include "ctxguard/app_model.hpp"
#include "ctxguard/errors.hpp"
#include "ctxguard/rng.hpp"
#include "ctxguard/static_analyzer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef CTXGUARD_FIXTURE_DIR
#error "CTXGUARD_FIXTURE_DIR must be defined"
#endif

namespace testsupport {

using namespace ctxguard;

inline std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture(const std::string &name) {
  return read_file(std::filesystem::path(CTXGUARD_FIXTURE_DIR) / name);
}

inline AppPackage fixture_package(const std::string &name) {
  return parse_package(fixture(name));
}

inline const std::string kQkActivity = "com.moez.QKSMS.ui.compose.ComposeActivity";

// ---------------------------------------------------------------------------
// Random packages for the analyzer oracle.

struct RandomPackageOptions {
  std::size_t max_nodes = 30;
  std::size_t activities = 3;
  double edge_density = 0.08;
};

/// A valid package with up to `max_nodes` call-graph nodes spread over a few
/// Activities, a Service and an unowned helper class. Catalog methods,
/// helpers and sensitive APIs are mixed; edges are random (cycles allowed).
/// Each (listener, event) pair is bound to at most one widget.
inline AppPackage random_package(std::uint64_t seed,
                                 const RandomPackageOptions &o = {}) {
  Rng rng(seed);
  AppPackage pkg;
  pkg.package_id = "com.rand.p" + std::to_string(seed);
  const std::string base = pkg.package_id + ".";

  std::vector<std::string> widgets;
  std::vector<std::string> classes;
  for (std::size_t a = 0; a < o.activities; ++a) {
    LayoutTemplate lt;
    lt.layout_id = "layout" + std::to_string(a);
    lt.screen_size = {1080, 1920};
    const std::size_t nw = 1 + rng.below(4);
    for (std::size_t w = 0; w < nw; ++w) {
      WidgetDecl d;
      d.widget_id = "w" + std::to_string(a) + "_" + std::to_string(w);
      d.class_name = "android.widget.Button";
      const int top = static_cast<int>(w) * 300;
      d.bounds = {0, top, 500, top + 200};
      d.owner_package = pkg.package_id;
      widgets.push_back(d.widget_id);
      lt.widgets.push_back(d);
    }
    pkg.layouts.emplace(lt.layout_id, lt);
    Component c;
    c.component_id = base + "Act" + std::to_string(a);
    c.kind = ComponentKind::Activity;
    // Some layouts are never shown by any Activity.
    c.layout_id = rng.bernoulli(0.85) ? lt.layout_id : "layout0";
    c.classes.push_back(c.component_id + "$1");
    pkg.components.push_back(c);
    classes.push_back(c.component_id);
    classes.push_back(c.component_id + "$1");
  }
  Component svc;
  svc.component_id = base + "Svc";
  svc.kind = ComponentKind::Service;
  pkg.components.push_back(svc);
  classes.push_back(svc.component_id);
  classes.push_back(base + "util.Helper");

  static const std::vector<std::string> listeners = {"onClick", "onLongClick",
                                                     "onTouch", "onItemSelected"};
  static const std::vector<std::string> lifecycles = {"onCreate", "onResume",
                                                      "onStart"};
  static const std::vector<std::string> apis = {
      "android.telephony.TelephonyManager.getDeviceId()",
      "android.location.LocationManager.getLastKnownLocation(java.lang.String)",
      "android.media.AudioRecord.startRecording()",
      "android.telephony.SmsManager.sendTextMessage(java.lang.String,java.lang.String,java.lang.String,android.app.PendingIntent,android.app.PendingIntent)",
      "android.hardware.Camera.open(int)"};

  std::vector<MethodSig> nodes;
  const std::size_t n = 4 + rng.below(o.max_nodes - 3);
  std::set<MethodSig> seen;
  while (nodes.size() < n) {
    const double r = rng.uniform();
    MethodSig m;
    if (r < 0.15) {
      m = MethodSig::parse(rng.pick(apis));
    } else {
      m.class_name = rng.pick(classes);
      if (r < 0.40)
        m.method_name = rng.pick(listeners), m.param_types = {"android.view.View"};
      else if (r < 0.55)
        m.method_name = rng.pick(lifecycles);
      else
        m.method_name = "helper" + std::to_string(rng.below(12));
    }
    if (seen.insert(m).second)
      nodes.push_back(m);
  }
  pkg.call_graph.nodes = seen;
  for (const auto &a : nodes)
    for (const auto &b : nodes)
      if (!(a == b) && rng.bernoulli(o.edge_density))
        pkg.call_graph.edges.emplace(a, b);

  std::set<std::pair<std::string, MethodSig>> bound;
  for (const auto &m : nodes) {
    if (!is_listener_method(m) || !rng.bernoulli(0.7))
      continue;
    if (bound.emplace(m.method_name, m).second)
      pkg.call_graph.handler_bindings.push_back(
          {rng.pick(widgets), m.method_name, m});
  }
  validate_package(pkg);
  return pkg;
}

// ---------------------------------------------------------------------------
// Brute-force oracle: enumerate every simple path from every catalog method
// and record which methods it touches.

struct OracleBinding {
  std::string site_id;
  std::vector<std::string> entries;
  std::vector<std::optional<std::string>> bound_widgets;
  std::optional<std::string> trigger_widget;
  std::optional<std::string> host_activity;
  friend bool operator==(const OracleBinding &, const OracleBinding &) = default;
};

inline bool is_catalog(const MethodSig &m) {
  static const std::set<std::string> names = {
      "onClick", "onLongClick", "onCheckedChanged", "onItemSelected", "onScroll",
      "onTouch", "onCreate",    "onStart",          "onResume",       "onPause",
      "onStop",  "onDestroy",   "onFinishInflate",  "onCreateView"};
  return names.count(m.method_name) > 0;
}

inline std::vector<OracleBinding> oracle_bindings(const AppPackage &pkg,
                                                  const SensitiveApiMap &map) {
  std::map<MethodSig, std::vector<MethodSig>> out_edges;
  for (const auto &[a, b] : pkg.call_graph.edges)
    out_edges[a].push_back(b);

  // reach[m] = every node lying on some simple path that starts at m.
  std::map<MethodSig, std::set<MethodSig>> reach;
  for (const auto &start : pkg.call_graph.nodes) {
    if (!is_catalog(start))
      continue;
    std::set<MethodSig> &r = reach[start];
    std::vector<MethodSig> path{start};
    std::set<MethodSig> on_path{start};
    std::function<void()> dfs = [&] {
      r.insert(path.back());
      for (const auto &next : out_edges[path.back()]) {
        if (on_path.count(next))
          continue;
        path.push_back(next);
        on_path.insert(next);
        dfs();
        on_path.erase(next);
        path.pop_back();
      }
    };
    dfs();
  }

  auto widget_layout = [&](const std::string &w) -> std::optional<std::string> {
    for (const auto &[id, lt] : pkg.layouts) {
      bool found = false;
      for_each_widget(lt.widgets, [&](const WidgetDecl &d) {
        found = found || d.widget_id == w;
      });
      if (found)
        return id;
    }
    return std::nullopt;
  };
  auto activity_showing = [&](const std::string &layout) -> std::optional<std::string> {
    for (const auto &c : pkg.components)
      if (c.kind == ComponentKind::Activity && c.layout_id == layout)
        return c.component_id;
    return std::nullopt;
  };
  auto activity_owning = [&](const std::string &cls) -> std::optional<std::string> {
    const Component *owner = nullptr;
    for (const auto &c : pkg.components)
      if (c.component_id == cls)
        owner = &c;
    if (!owner)
      for (const auto &c : pkg.components)
        if (std::count(c.classes.begin(), c.classes.end(), cls))
          owner = owner ? owner : &c;
    if (owner && owner->kind == ComponentKind::Activity)
      return owner->component_id;
    return std::nullopt;
  };

  std::vector<std::pair<std::string, OracleBinding>> rows;
  for (const auto &[caller, callee] : pkg.call_graph.edges) {
    if (!map.find(callee))
      continue;
    OracleBinding b;
    b.site_id = caller.str() + "->" + callee.str();
    std::vector<MethodSig> entries;
    for (const auto &[m, r] : reach)
      if (r.count(caller))
        entries.push_back(m);
    std::sort(entries.begin(), entries.end(),
              [](const auto &x, const auto &y) { return x.str() < y.str(); });
    for (const auto &e : entries) {
      b.entries.push_back(e.str());
      std::set<std::string> ws;
      for (const auto &h : pkg.call_graph.handler_bindings)
        if (h.listener == e && h.event_type == e.method_name && is_listener_method(e))
          ws.insert(h.widget_id);
      if (ws.size() > 1)
        throw AmbiguityError("oracle: ambiguous binding");
      b.bound_widgets.push_back(ws.empty() ? std::nullopt
                                           : std::optional(*ws.begin()));
    }
    for (const auto &w : b.bound_widgets)
      if (w && !b.trigger_widget)
        b.trigger_widget = w;
    if (b.trigger_widget) {
      if (auto lt = widget_layout(*b.trigger_widget))
        b.host_activity = activity_showing(*lt);
      if (!b.host_activity)
        b.trigger_widget.reset();
    }
    if (!b.host_activity)
      for (const auto &e : entries)
        if (auto a = activity_owning(e.class_name)) {
          b.host_activity = a;
          break;
        }
    rows.emplace_back(caller.str() + "\x1f" + callee.str(), std::move(b));
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto &x, const auto &y) { return x.first < y.first; });
  std::vector<OracleBinding> out;
  for (auto &[k, b] : rows)
    out.push_back(std::move(b));
  return out;
}

inline std::vector<OracleBinding>
to_oracle_form(const std::vector<ContextBinding> &bindings) {
  std::vector<OracleBinding> out;
  for (const auto &b : bindings) {
    OracleBinding o;
    o.site_id = b.site.site_id;
    for (const auto &e : b.entries) {
      o.entries.push_back(e.entry.str());
      o.bound_widgets.push_back(e.bound_widget);
    }
    o.trigger_widget = b.trigger_widget;
    o.host_activity = b.host_activity;
    out.push_back(std::move(o));
  }
  return out;
}

} // namespace testsupport
