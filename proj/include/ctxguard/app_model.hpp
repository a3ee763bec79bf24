#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctxguard {

enum class PermissionType {
  DEVICE_ID,
  LOCATION,
  CAMERA,
  RECORD_AUDIO,
  BLUETOOTH,
  NFC,
  SEND_SMS,
};

inline constexpr std::array<PermissionType, 7> kAllPermissions = {
    PermissionType::DEVICE_ID, PermissionType::LOCATION,
    PermissionType::CAMERA,    PermissionType::RECORD_AUDIO,
    PermissionType::BLUETOOTH, PermissionType::NFC,
    PermissionType::SEND_SMS};

std::string_view to_string(PermissionType p);
/// Throws ValidationError on an unknown token.
PermissionType permission_from_string(std::string_view s);

struct MethodSig {
  std::string class_name;
  std::string method_name;
  std::vector<std::string> param_types;

  /// "Class.method(T1,T2)"
  std::string str() const;
  /// Parses "pkg.Class.method(T1,T2)"; the part after the last '.' before
  /// '(' is the method name. A missing parameter list means no parameters.
  static MethodSig parse(std::string_view s);

  friend auto operator<=>(const MethodSig &, const MethodSig &) = default;
};

/// Fixed callback catalogs. Membership is decided by method name only: entry
/// methods override SDK callbacks and keep their names under obfuscation.
const std::set<std::string> &listener_catalog();
const std::set<std::string> &lifecycle_catalog();
bool is_listener_method(const MethodSig &m);
bool is_lifecycle_method(const MethodSig &m);

struct Rect {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  int width() const { return right - left; }
  int height() const { return bottom - top; }
  bool contains(const Rect &o) const {
    return o.left >= left && o.top >= top && o.right <= right &&
           o.bottom <= bottom;
  }
  friend bool operator==(const Rect &, const Rect &) = default;
};

struct ScreenSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const ScreenSize &, const ScreenSize &) = default;
};

struct WidgetFlags {
  bool is_password = false;
  bool is_clickable = false;
  bool is_long_clickable = false;
  bool is_checkable = false;
  bool is_scrollable = false;
  friend bool operator==(const WidgetFlags &, const WidgetFlags &) = default;
};

struct WidgetDecl {
  std::string widget_id;
  std::string class_name;
  /// Literal text or a resource reference ("@string/name").
  std::optional<std::string> text;
  Rect bounds;
  WidgetFlags flags;
  std::string owner_package;
  std::vector<WidgetDecl> children;

  friend bool operator==(const WidgetDecl &, const WidgetDecl &) = default;
};

struct LayoutTemplate {
  std::string layout_id;
  ScreenSize screen_size;
  std::vector<WidgetDecl> widgets;

  friend bool operator==(const LayoutTemplate &,
                         const LayoutTemplate &) = default;
};

enum class ComponentKind { Activity, Service };

struct Component {
  std::string component_id;
  ComponentKind kind = ComponentKind::Activity;
  std::optional<std::string> layout_id;
  bool exported = false;
  /// Classes whose methods run on behalf of this component (fragments,
  /// custom views, helpers). The component id itself always counts.
  std::vector<std::string> classes;

  friend bool operator==(const Component &, const Component &) = default;
};

struct HandlerBinding {
  std::string widget_id;
  std::string event_type;
  MethodSig listener;
  friend auto operator<=>(const HandlerBinding &,
                          const HandlerBinding &) = default;
};

struct RuntimeAssignment {
  std::string widget_id;
  std::string attribute;
  std::string value;
  friend bool operator==(const RuntimeAssignment &,
                         const RuntimeAssignment &) = default;
};

struct CallGraph {
  std::set<MethodSig> nodes;
  std::set<std::pair<MethodSig, MethodSig>> edges;
  std::vector<HandlerBinding> handler_bindings;
  std::vector<RuntimeAssignment> runtime_assignments;

  friend bool operator==(const CallGraph &, const CallGraph &) = default;
};

struct AppPackage {
  std::string package_id;
  std::vector<Component> components;
  std::map<std::string, LayoutTemplate> layouts;
  CallGraph call_graph;
  std::set<PermissionType> declared_permissions;
  /// Flat resource table: "@string/name" -> text.
  std::map<std::string, std::string> resources;

  const Component *find_component(std::string_view id) const;
  /// Layout declaring the widget, or nullptr.
  const LayoutTemplate *layout_of_widget(std::string_view widget_id) const;
  const WidgetDecl *find_widget(std::string_view widget_id) const;
  /// Component that owns methods of `class_name` (by id or `classes`).
  const Component *owner_of_class(std::string_view class_name) const;

  friend bool operator==(const AppPackage &, const AppPackage &) = default;
};

/// Visits a widget tree in document (pre-)order.
template <class F> void for_each_widget(const std::vector<WidgetDecl> &ws, F &&f) {
  for (const auto &w : ws) {
    f(w);
    for_each_widget(w.children, f);
  }
}

/// Parses and cross-validates a `.apkg` document.
/// Throws SyntaxError, ReferenceError, or ValidationError.
AppPackage parse_package(std::string_view text);

/// Canonical `.apkg` form; parse_package(serialize_package(p)) == p.
std::string serialize_package(const AppPackage &pkg);

/// Runs the invariant checks parse_package applies. Useful for packages
/// built in code.
void validate_package(const AppPackage &pkg);

class SensitiveApiMap {
public:
  /// Exact signature entry. Throws ValidationError on duplicates.
  void add(const MethodSig &sig, PermissionType perm);
  /// Overload-agnostic entry keyed by "Class.method".
  void add_any_overload(const std::string &qualified_name,
                        PermissionType perm);

  std::optional<PermissionType> find(const MethodSig &sig) const;
  bool contains(const MethodSig &sig) const { return find(sig).has_value(); }
  std::size_t size() const { return exact_.size() + by_name_.size(); }
  bool empty() const { return size() == 0; }

  const std::map<MethodSig, PermissionType> &exact_entries() const {
    return exact_;
  }
  const std::map<std::string, PermissionType> &overload_entries() const {
    return by_name_;
  }

private:
  std::map<MethodSig, PermissionType> exact_;
  std::map<std::string, PermissionType> by_name_;
};

/// One entry per line: `signature -> PERMISSION` (the arrow may also be
/// "→"). Blank lines and lines starting with '#' are ignored. A signature
/// without a parameter list matches every overload.
/// Throws SyntaxError (line number), ValidationError on unknown permission
/// or duplicate signature.
SensitiveApiMap load_sensitive_api_map(std::string_view text);

/// Map shipped with the project (data/sensitive_api_map.txt).
const SensitiveApiMap &default_sensitive_api_map();

} // namespace ctxguard
