#include "ctxguard/app_model.hpp"

#include "ctxguard/errors.hpp"
#include "embedded_data.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <sstream>

namespace ctxguard {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kPermissionNames = {
    "DEVICE_ID", "LOCATION", "CAMERA", "RECORD_AUDIO",
    "BLUETOOTH", "NFC",      "SEND_SMS"};

const std::set<std::string> kFlagAttributes = {
    "is_password", "is_clickable", "is_long_clickable", "is_checkable",
    "is_scrollable"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

Rect rect_from_json(const json &j, const std::string &where) {
  if (!j.is_array() || j.size() != 4)
    throw ValidationError(where + ": bounds must be [left, top, right, bottom]");
  Rect r{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  if (r.right < r.left || r.bottom < r.top)
    throw ValidationError(where + ": bounds violation (inverted rectangle)");
  return r;
}

json rect_to_json(const Rect &r) {
  return json::array({r.left, r.top, r.right, r.bottom});
}

WidgetDecl widget_from_json(const json &j, const std::string &default_owner) {
  WidgetDecl w;
  w.widget_id = detail::require<std::string>(j, "widget_id", "widget");
  const std::string where = "widget '" + w.widget_id + "'";
  w.class_name = detail::require<std::string>(j, "class_name", where);
  if (auto it = j.find("text"); it != j.end() && !it->is_null())
    w.text = it->get<std::string>();
  w.bounds = rect_from_json(detail::require_node(j, "bounds", where), where);
  if (auto it = j.find("flags"); it != j.end()) {
    const json &f = *it;
    w.flags.is_password = f.value("is_password", false);
    w.flags.is_clickable = f.value("is_clickable", false);
    w.flags.is_long_clickable = f.value("is_long_clickable", false);
    w.flags.is_checkable = f.value("is_checkable", false);
    w.flags.is_scrollable = f.value("is_scrollable", false);
  }
  w.owner_package = j.value("owner_package", default_owner);
  if (auto it = j.find("children"); it != j.end())
    for (const auto &c : *it)
      w.children.push_back(widget_from_json(c, default_owner));
  return w;
}

json widget_to_json(const WidgetDecl &w) {
  json j;
  j["widget_id"] = w.widget_id;
  j["class_name"] = w.class_name;
  j["text"] = w.text ? json(*w.text) : json(nullptr);
  j["bounds"] = rect_to_json(w.bounds);
  j["flags"] = {{"is_password", w.flags.is_password},
                {"is_clickable", w.flags.is_clickable},
                {"is_long_clickable", w.flags.is_long_clickable},
                {"is_checkable", w.flags.is_checkable},
                {"is_scrollable", w.flags.is_scrollable}};
  j["owner_package"] = w.owner_package;
  json children = json::array();
  for (const auto &c : w.children)
    children.push_back(widget_to_json(c));
  j["children"] = std::move(children);
  return j;
}

MethodSig sig_from_json(const json &j, const std::string &where) {
  if (!j.is_string())
    throw ValidationError(where + ": method signature must be a string");
  return MethodSig::parse(j.get<std::string>());
}

void check_widget_tree(const std::vector<WidgetDecl> &ws, const Rect &parent,
                       const std::string &layout_id,
                       std::set<std::string> &seen_ids) {
  for (const auto &w : ws) {
    if (w.widget_id.empty())
      throw ValidationError("layout '" + layout_id + "': empty widget_id");
    if (!seen_ids.insert(w.widget_id).second)
      throw ValidationError("duplicate widget_id '" + w.widget_id +
                            "' (widget ids are unique per package)");
    if (w.bounds.right < w.bounds.left || w.bounds.bottom < w.bounds.top)
      throw ValidationError("widget '" + w.widget_id +
                            "': bounds violation (inverted rectangle)");
    if (!parent.contains(w.bounds))
      throw ValidationError("widget '" + w.widget_id +
                            "': bounds violation (outside parent/screen)");
    check_widget_tree(w.children, w.bounds, layout_id, seen_ids);
  }
}

} // namespace

std::string_view to_string(PermissionType p) {
  return kPermissionNames[static_cast<std::size_t>(p)];
}

PermissionType permission_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kPermissionNames.size(); ++i)
    if (kPermissionNames[i] == s)
      return static_cast<PermissionType>(i);
  throw ValidationError("unknown permission token '" + std::string(s) + "'");
}

std::string MethodSig::str() const {
  std::string out = class_name + "." + method_name + "(";
  for (std::size_t i = 0; i < param_types.size(); ++i) {
    if (i)
      out += ',';
    out += param_types[i];
  }
  out += ')';
  return out;
}

MethodSig MethodSig::parse(std::string_view s) {
  s = trim(s);
  MethodSig sig;
  std::string_view head = s;
  if (auto open = s.find('('); open != std::string_view::npos) {
    if (s.back() != ')')
      throw ValidationError("malformed method signature '" + std::string(s) +
                            "'");
    head = s.substr(0, open);
    std::string_view params = s.substr(open + 1, s.size() - open - 2);
    while (!trim(params).empty()) {
      auto comma = params.find(',');
      sig.param_types.emplace_back(trim(params.substr(0, comma)));
      if (sig.param_types.back().empty())
        throw ValidationError("empty parameter type in '" + std::string(s) +
                              "'");
      if (comma == std::string_view::npos)
        break;
      params.remove_prefix(comma + 1);
    }
  }
  auto dot = head.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == head.size())
    throw ValidationError("method signature needs Class.method: '" +
                          std::string(s) + "'");
  sig.class_name = std::string(trim(head.substr(0, dot)));
  sig.method_name = std::string(trim(head.substr(dot + 1)));
  if (sig.class_name.empty() || sig.method_name.empty())
    throw ValidationError("method signature needs Class.method: '" +
                          std::string(s) + "'");
  return sig;
}

const std::set<std::string> &listener_catalog() {
  static const std::set<std::string> c = {"onClick",         "onLongClick",
                                          "onCheckedChanged", "onItemSelected",
                                          "onScroll",        "onTouch"};
  return c;
}

const std::set<std::string> &lifecycle_catalog() {
  static const std::set<std::string> c = {
      "onCreate", "onStart",   "onResume",        "onPause",
      "onStop",   "onDestroy", "onFinishInflate", "onCreateView"};
  return c;
}

bool is_listener_method(const MethodSig &m) {
  return listener_catalog().count(m.method_name) > 0;
}

bool is_lifecycle_method(const MethodSig &m) {
  return lifecycle_catalog().count(m.method_name) > 0;
}

const Component *AppPackage::find_component(std::string_view id) const {
  for (const auto &c : components)
    if (c.component_id == id)
      return &c;
  return nullptr;
}

namespace {
const WidgetDecl *find_in(const std::vector<WidgetDecl> &ws,
                          std::string_view id) {
  for (const auto &w : ws) {
    if (w.widget_id == id)
      return &w;
    if (const auto *hit = find_in(w.children, id))
      return hit;
  }
  return nullptr;
}
} // namespace

const LayoutTemplate *
AppPackage::layout_of_widget(std::string_view widget_id) const {
  for (const auto &[id, layout] : layouts)
    if (find_in(layout.widgets, widget_id))
      return &layout;
  return nullptr;
}

const WidgetDecl *AppPackage::find_widget(std::string_view widget_id) const {
  for (const auto &[id, layout] : layouts)
    if (const auto *w = find_in(layout.widgets, widget_id))
      return w;
  return nullptr;
}

const Component *AppPackage::owner_of_class(std::string_view class_name) const {
  for (const auto &c : components)
    if (c.component_id == class_name)
      return &c;
  for (const auto &c : components)
    if (std::find(c.classes.begin(), c.classes.end(), class_name) !=
        c.classes.end())
      return &c;
  return nullptr;
}

void validate_package(const AppPackage &pkg) {
  if (pkg.package_id.empty())
    throw ValidationError("package_id must be non-empty");

  std::set<std::string> widget_ids;
  for (const auto &[id, layout] : pkg.layouts) {
    if (id != layout.layout_id)
      throw ValidationError("layout key '" + id + "' != layout_id '" +
                            layout.layout_id + "'");
    if (layout.screen_size.width <= 0 || layout.screen_size.height <= 0)
      throw ValidationError("layout '" + id + "': screen_size must be positive");
    Rect screen{0, 0, layout.screen_size.width, layout.screen_size.height};
    check_widget_tree(layout.widgets, screen, id, widget_ids);
  }

  std::set<std::string> component_ids;
  for (const auto &c : pkg.components) {
    if (c.component_id.empty())
      throw ValidationError("empty component_id");
    if (!component_ids.insert(c.component_id).second)
      throw ValidationError("duplicate component_id '" + c.component_id + "'");
    if (c.kind == ComponentKind::Activity) {
      if (!c.layout_id)
        throw ValidationError("Activity '" + c.component_id +
                              "' must reference a layout_id");
      if (!pkg.layouts.count(*c.layout_id))
        throw ReferenceError("Activity '" + c.component_id +
                                 "' references undeclared layout",
                             *c.layout_id);
    } else if (c.layout_id) {
      throw ValidationError("Service '" + c.component_id +
                            "' must not declare a layout_id");
    }
  }

  const auto &g = pkg.call_graph;
  for (const auto &n : g.nodes)
    if (n.class_name.empty() || n.method_name.empty())
      throw ValidationError("call graph node with empty class or method name");
  for (const auto &[caller, callee] : g.edges) {
    if (!g.nodes.count(caller))
      throw ReferenceError("edge caller is not a node", caller.str());
    if (!g.nodes.count(callee))
      throw ReferenceError("edge callee is not a node", callee.str());
  }
  for (const auto &b : g.handler_bindings) {
    if (!widget_ids.count(b.widget_id))
      throw ReferenceError("handler binding names an undeclared widget",
                           b.widget_id);
    if (!listener_catalog().count(b.event_type))
      throw ValidationError("handler binding event_type '" + b.event_type +
                            "' is not in the listener catalog");
    if (!g.nodes.count(b.listener))
      throw ReferenceError("handler binding listener is not a node",
                           b.listener.str());
  }
  for (const auto &a : g.runtime_assignments) {
    if (!widget_ids.count(a.widget_id))
      throw ReferenceError("runtime assignment targets an undeclared widget",
                           a.widget_id);
    if (a.attribute != "text" && !kFlagAttributes.count(a.attribute))
      throw ValidationError("runtime assignment attribute '" + a.attribute +
                            "' is not supported");
    if (a.attribute != "text" && a.value != "true" && a.value != "false")
      throw ValidationError("flag assignment value must be true|false");
  }

  for (const auto &[id, layout] : pkg.layouts)
    for_each_widget(layout.widgets, [&](const WidgetDecl &w) {
      if (w.text && w.text->rfind("@string/", 0) == 0 &&
          !pkg.resources.count(*w.text))
        throw ReferenceError("unresolved resource reference", *w.text);
    });
}

AppPackage parse_package(std::string_view text) {
  json doc = detail::parse_json(text);
  AppPackage pkg;
  try {
    if (!doc.is_object())
      throw ValidationError("package document must be an object");
    pkg.package_id = detail::require<std::string>(doc, "package_id", "package");

    if (auto it = doc.find("resources"); it != doc.end())
      pkg.resources = it->get<std::map<std::string, std::string>>();

    if (auto it = doc.find("declared_permissions"); it != doc.end())
      for (const auto &p : *it)
        pkg.declared_permissions.insert(
            permission_from_string(p.get<std::string>()));

    for (const auto &lj : detail::require_node(doc, "layouts", "package")) {
      LayoutTemplate layout;
      layout.layout_id = detail::require<std::string>(lj, "layout_id", "layout");
      const auto &ss = detail::require_node(lj, "screen_size", layout.layout_id);
      if (!ss.is_array() || ss.size() != 2)
        throw ValidationError("screen_size must be [width, height]");
      layout.screen_size = {ss[0].get<int>(), ss[1].get<int>()};
      for (const auto &wj : detail::require_node(lj, "widgets", layout.layout_id))
        layout.widgets.push_back(widget_from_json(wj, pkg.package_id));
      if (!pkg.layouts.emplace(layout.layout_id, layout).second)
        throw ValidationError("duplicate layout_id '" + layout.layout_id + "'");
    }

    for (const auto &cj : detail::require_node(doc, "components", "package")) {
      Component c;
      c.component_id = detail::require<std::string>(cj, "component_id", "component");
      auto kind = detail::require<std::string>(cj, "kind", c.component_id);
      if (kind == "Activity")
        c.kind = ComponentKind::Activity;
      else if (kind == "Service")
        c.kind = ComponentKind::Service;
      else
        throw ValidationError("component '" + c.component_id +
                              "': unknown kind '" + kind + "'");
      if (auto it = cj.find("layout_id"); it != cj.end() && !it->is_null())
        c.layout_id = it->get<std::string>();
      c.exported = cj.value("exported", false);
      if (auto it = cj.find("classes"); it != cj.end())
        c.classes = it->get<std::vector<std::string>>();
      pkg.components.push_back(std::move(c));
    }

    const auto &gj = detail::require_node(doc, "call_graph", "package");
    auto &g = pkg.call_graph;
    if (auto it = gj.find("nodes"); it != gj.end())
      for (const auto &n : *it)
        if (!g.nodes.insert(sig_from_json(n, "node")).second)
          throw ValidationError("duplicate call graph node '" +
                                n.get<std::string>() + "'");
    if (auto it = gj.find("edges"); it != gj.end())
      for (const auto &e : *it) {
        if (!e.is_array() || e.size() != 2)
          throw ValidationError("edge must be [caller, callee]");
        g.edges.emplace(sig_from_json(e[0], "edge"), sig_from_json(e[1], "edge"));
      }
    if (auto it = gj.find("handler_bindings"); it != gj.end())
      for (const auto &b : *it)
        g.handler_bindings.push_back(
            {detail::require<std::string>(b, "widget_id", "handler binding"),
             detail::require<std::string>(b, "event_type", "handler binding"),
             sig_from_json(detail::require_node(b, "listener", "handler binding"),
                           "handler binding")});
    if (auto it = gj.find("runtime_assignments"); it != gj.end())
      for (const auto &a : *it)
        g.runtime_assignments.push_back(
            {detail::require<std::string>(a, "widget_id", "runtime assignment"),
             detail::require<std::string>(a, "attribute", "runtime assignment"),
             detail::require<std::string>(a, "value", "runtime assignment")});
  } catch (const json::exception &e) {
    throw ValidationError(std::string("package schema error: ") + e.what());
  }
  validate_package(pkg);
  return pkg;
}

std::string serialize_package(const AppPackage &pkg) {
  json doc;
  doc["package_id"] = pkg.package_id;
  json perms = json::array();
  for (auto p : pkg.declared_permissions)
    perms.push_back(std::string(to_string(p)));
  doc["declared_permissions"] = std::move(perms);
  doc["resources"] = pkg.resources;

  json layouts = json::array();
  for (const auto &[id, layout] : pkg.layouts) {
    json lj;
    lj["layout_id"] = layout.layout_id;
    lj["screen_size"] = {layout.screen_size.width, layout.screen_size.height};
    json widgets = json::array();
    for (const auto &w : layout.widgets)
      widgets.push_back(widget_to_json(w));
    lj["widgets"] = std::move(widgets);
    layouts.push_back(std::move(lj));
  }
  doc["layouts"] = std::move(layouts);

  json comps = json::array();
  for (const auto &c : pkg.components) {
    json cj;
    cj["component_id"] = c.component_id;
    cj["kind"] = c.kind == ComponentKind::Activity ? "Activity" : "Service";
    cj["layout_id"] = c.layout_id ? json(*c.layout_id) : json(nullptr);
    cj["exported"] = c.exported;
    cj["classes"] = c.classes;
    comps.push_back(std::move(cj));
  }
  doc["components"] = std::move(comps);

  json g;
  json nodes = json::array();
  for (const auto &n : pkg.call_graph.nodes)
    nodes.push_back(n.str());
  g["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto &[a, b] : pkg.call_graph.edges)
    edges.push_back({a.str(), b.str()});
  g["edges"] = std::move(edges);
  json bindings = json::array();
  for (const auto &b : pkg.call_graph.handler_bindings)
    bindings.push_back({{"widget_id", b.widget_id},
                        {"event_type", b.event_type},
                        {"listener", b.listener.str()}});
  g["handler_bindings"] = std::move(bindings);
  json assigns = json::array();
  for (const auto &a : pkg.call_graph.runtime_assignments)
    assigns.push_back({{"widget_id", a.widget_id},
                       {"attribute", a.attribute},
                       {"value", a.value}});
  g["runtime_assignments"] = std::move(assigns);
  doc["call_graph"] = std::move(g);
  return doc.dump(2) + "\n";
}

void SensitiveApiMap::add(const MethodSig &sig, PermissionType perm) {
  if (!exact_.emplace(sig, perm).second)
    throw ValidationError("duplicate signature '" + sig.str() +
                          "' in sensitive API map");
}

void SensitiveApiMap::add_any_overload(const std::string &qualified_name,
                                       PermissionType perm) {
  if (!by_name_.emplace(qualified_name, perm).second)
    throw ValidationError("duplicate signature '" + qualified_name +
                          "' in sensitive API map");
}

std::optional<PermissionType> SensitiveApiMap::find(const MethodSig &sig) const {
  if (auto it = exact_.find(sig); it != exact_.end())
    return it->second;
  if (auto it = by_name_.find(sig.class_name + "." + sig.method_name);
      it != by_name_.end())
    return it->second;
  return std::nullopt;
}

SensitiveApiMap load_sensitive_api_map(std::string_view text) {
  SensitiveApiMap map;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = trim(line);
    if (l.empty() || l.front() == '#')
      continue;
    std::size_t arrow = l.find("->");
    std::size_t arrow_len = 2;
    if (arrow == std::string_view::npos) {
      arrow = l.find("\xE2\x86\x92"); // U+2192
      arrow_len = 3;
    }
    if (arrow == std::string_view::npos)
      throw SyntaxError("expected 'signature -> PERMISSION'", line_no);
    std::string_view lhs = trim(l.substr(0, arrow));
    std::string_view rhs = trim(l.substr(arrow + arrow_len));
    if (lhs.empty() || rhs.empty())
      throw SyntaxError("expected 'signature -> PERMISSION'", line_no);
    PermissionType perm = permission_from_string(rhs);
    MethodSig sig = MethodSig::parse(lhs);
    if (lhs.find('(') == std::string_view::npos) {
      std::string key = sig.class_name + "." + sig.method_name;
      map.add_any_overload(key, perm);
    } else {
      map.add(sig, perm);
    }
  }
  return map;
}

const SensitiveApiMap &default_sensitive_api_map() {
  static const SensitiveApiMap map =
      load_sensitive_api_map(embedded::kSensitiveApiMap);
  return map;
}

} // namespace ctxguard
