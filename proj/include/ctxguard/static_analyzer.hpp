#pragma once

#include "ctxguard/app_model.hpp"

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace ctxguard {

struct SensitiveCallSite {
  std::string site_id;
  MethodSig api;
  PermissionType permission = PermissionType::DEVICE_ID;
  MethodSig containing_method;
  friend bool operator==(const SensitiveCallSite &,
                         const SensitiveCallSite &) = default;
};

enum class EntryKind { Lifecycle, Listener };

struct EntryPointRecord {
  MethodSig entry;
  EntryKind kind = EntryKind::Lifecycle;
  std::optional<std::string> event_type;
  std::optional<std::string> bound_widget;
  friend bool operator==(const EntryPointRecord &,
                         const EntryPointRecord &) = default;
};

struct ContextBinding {
  SensitiveCallSite site;
  std::vector<EntryPointRecord> entries;
  std::optional<std::string> trigger_widget;
  std::optional<std::string> host_activity;
  friend bool operator==(const ContextBinding &,
                         const ContextBinding &) = default;
};

/// Classifies a method as an entry point, or nullopt if it is in neither
/// catalog. Listener entries carry their method name as event type.
std::optional<EntryPointRecord> classify_entry(const MethodSig &m);

/// One site per (containing method, api) edge whose callee is mapped,
/// ordered by (containing method, api) signature string.
std::vector<SensitiveCallSite> find_sensitive_sites(const AppPackage &pkg,
                                                    const SensitiveApiMap &map);

/// Catalog methods from which the site's containing method is reachable
/// (including the containing method itself). Traversal continues through
/// catalog methods, so nested entries are all reported. Sorted by signature.
/// `bound_widget` is left empty; extract_bindings fills it.
std::vector<EntryPointRecord> find_entry_points(const AppPackage &pkg,
                                                const SensitiveCallSite &site);

/// Widget whose handler binding targets (entry, event). Absent for
/// lifecycle entries or unbound listeners. Throws AmbiguityError if two
/// distinct widgets bind the same (event, listener).
std::optional<std::string> resolve_trigger_widget(const AppPackage &pkg,
                                                  const EntryPointRecord &entry);

/// Activity whose layout declares the widget (first by component order).
std::optional<std::string> resolve_host_window(const AppPackage &pkg,
                                               const std::string &widget_id);

/// Activity owning the first entry whose class belongs to an Activity.
/// Absent if every entry belongs to a Service or to no component.
std::optional<std::string>
resolve_host_window(const AppPackage &pkg,
                    const std::vector<EntryPointRecord> &entries);

std::vector<ContextBinding> extract_bindings(const AppPackage &pkg,
                                             const SensitiveApiMap &map);

/// Replayable manual review of analyzer output: sites listed in `deny`
/// are dropped; when `allow` is non-empty only listed sites are kept.
struct BindingReview {
  std::set<std::string> allow;
  std::set<std::string> deny;
};

BindingReview parse_binding_review(std::string_view text);
std::vector<ContextBinding> apply_review(std::vector<ContextBinding> bindings,
                                         const BindingReview &review);

/// `.bind` document for one package, stable ordering.
std::string serialize_bindings(const std::string &package_id,
                               const std::vector<ContextBinding> &bindings);
std::vector<ContextBinding> parse_bindings(std::string_view text,
                                           std::string *package_id = nullptr);

std::string_view to_string(EntryKind k);

} // namespace ctxguard
