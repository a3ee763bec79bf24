#include "ctxguard/renderer.hpp"

#include "ctxguard/errors.hpp"
#include "json_util.hpp"
#include "snapshot_json.hpp"

#include <algorithm>
#include <map>

namespace ctxguard {

using nlohmann::json;

GridCell::GridCell(int index) : index_(index) {
  if (index < 0 || index > 8)
    throw ValidationError("grid cell index out of range: " +
                          std::to_string(index));
}

const RenderedWidget *WindowSnapshot::find(std::string_view widget_id) const {
  for (const auto &w : widgets)
    if (w.widget_id == widget_id)
      return &w;
  return nullptr;
}

GridCell grid_map(const Rect &bounds, ScreenSize screen) {
  // center = (l + r) / 2, so 3 * cx / w == 3 * (l + r) / (2 * w); integer
  // arithmetic keeps the boundary rule exact
  auto band = [](std::int64_t lo, std::int64_t hi, std::int64_t extent) {
    std::int64_t k = (3 * (lo + hi)) / (2 * extent);
    return static_cast<int>(std::clamp<std::int64_t>(k, 0, 2));
  };
  int col = band(bounds.left, bounds.right, screen.width);
  int row = band(bounds.top, bounds.bottom, screen.height);
  return GridCell(3 * row + col);
}

namespace {

void apply_flag(WidgetFlags &f, const std::string &attr, bool v) {
  if (attr == "is_password")
    f.is_password = v;
  else if (attr == "is_clickable")
    f.is_clickable = v;
  else if (attr == "is_long_clickable")
    f.is_long_clickable = v;
  else if (attr == "is_checkable")
    f.is_checkable = v;
  else if (attr == "is_scrollable")
    f.is_scrollable = v;
}

} // namespace

WindowSnapshot render_window(const AppPackage &pkg,
                             const std::string &activity_id,
                             std::string snapshot_id,
                             std::int64_t rendered_at) {
  const Component *c = pkg.find_component(activity_id);
  if (!c)
    throw ReferenceError("unknown activity", activity_id);
  if (c->kind != ComponentKind::Activity || !c->layout_id)
    throw ValidationError("component '" + activity_id +
                          "' is not an Activity with a layout");
  auto lit = pkg.layouts.find(*c->layout_id);
  if (lit == pkg.layouts.end())
    throw ReferenceError("activity references undeclared layout", *c->layout_id);
  const LayoutTemplate &layout = lit->second;

  WindowSnapshot snap;
  snap.snapshot_id = snapshot_id.empty()
                         ? pkg.package_id + "/" + activity_id + "@" +
                               std::to_string(rendered_at)
                         : std::move(snapshot_id);
  snap.package_id = pkg.package_id;
  snap.activity_id = activity_id;
  snap.screen_size = layout.screen_size;
  snap.rendered_at = rendered_at;

  const double screen_area = static_cast<double>(
      static_cast<std::int64_t>(layout.screen_size.width) *
      layout.screen_size.height);
  std::map<std::string, std::size_t> index;
  for_each_widget(layout.widgets, [&](const WidgetDecl &w) {
    RenderedWidget r;
    r.widget_id = w.widget_id;
    r.class_name = w.class_name;
    if (w.text) {
      auto res = pkg.resources.find(*w.text);
      r.resolved_text = res != pkg.resources.end() ? res->second : *w.text;
    }
    r.cell = grid_map(w.bounds, layout.screen_size);
    const double area = static_cast<double>(
        static_cast<std::int64_t>(w.bounds.width()) * w.bounds.height());
    r.size_fraction = std::clamp(area / screen_area, 0.0, 1.0);
    r.flags = w.flags;
    r.owner_package = w.owner_package;
    r.bounds = w.bounds;
    index[r.widget_id] = snap.widgets.size();
    snap.widgets.push_back(std::move(r));
  });

  for (const auto &a : pkg.call_graph.runtime_assignments) {
    auto it = index.find(a.widget_id);
    if (it == index.end()) {
      if (!pkg.find_widget(a.widget_id))
        throw ReferenceError("runtime assignment targets an undeclared widget",
                             a.widget_id);
      continue; // belongs to another layout
    }
    RenderedWidget &w = snap.widgets[it->second];
    if (a.attribute == "text") {
      auto res = pkg.resources.find(a.value);
      w.resolved_text = res != pkg.resources.end() ? res->second : a.value;
    } else {
      apply_flag(w.flags, a.attribute, a.value == "true");
    }
  }
  return snap;
}

std::string serialize_snapshot(const WindowSnapshot &snap) {
  return detail::snapshot_to_json(snap).dump(2) + "\n";
}

WindowSnapshot parse_snapshot(std::string_view text) {
  return detail::snapshot_from_json(detail::parse_json(text));
}

} // namespace ctxguard
