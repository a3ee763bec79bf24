#pragma once

#include "ctxguard/app_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ctxguard {

/// Row-major index into a 3x3 partition of the screen.
class GridCell {
public:
  constexpr GridCell() = default;
  /// Throws ValidationError outside 0..8.
  explicit GridCell(int index);
  constexpr int index() const { return index_; }
  constexpr int row() const { return index_ / 3; }
  constexpr int col() const { return index_ % 3; }
  friend constexpr bool operator==(GridCell, GridCell) = default;

private:
  int index_ = 0;
};

struct RenderedWidget {
  std::string widget_id;
  std::string class_name;
  std::string resolved_text;
  GridCell cell;
  double size_fraction = 0.0;
  WidgetFlags flags;
  std::string owner_package;
  /// Absolute bounds, kept for drawing.
  Rect bounds;
  friend bool operator==(const RenderedWidget &,
                         const RenderedWidget &) = default;
};

struct WindowSnapshot {
  std::string snapshot_id;
  std::string package_id;
  std::string activity_id;
  ScreenSize screen_size;
  std::vector<RenderedWidget> widgets;
  std::int64_t rendered_at = 0;

  const RenderedWidget *find(std::string_view widget_id) const;
  friend bool operator==(const WindowSnapshot &,
                         const WindowSnapshot &) = default;
};

/// Cell of the bounds' center; half-open intervals, so a center exactly on
/// a third-line belongs to the lower/right cell, and cx == w or cy == h
/// clamps to the last row/column.
GridCell grid_map(const Rect &bounds, ScreenSize screen);

/// Renders an Activity: resolves resource texts, applies runtime
/// assignments, maps geometry to grid cells. Throws ReferenceError for an
/// unknown activity or an assignment to an undeclared widget, and
/// ValidationError if the component is not an Activity with a layout.
WindowSnapshot render_window(const AppPackage &pkg,
                             const std::string &activity_id,
                             std::string snapshot_id = {},
                             std::int64_t rendered_at = 0);

/// `.snap` document.
std::string serialize_snapshot(const WindowSnapshot &snap);
WindowSnapshot parse_snapshot(std::string_view text);

} // namespace ctxguard
