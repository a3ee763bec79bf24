#pragma once

#include "ctxguard/errors.hpp"
#include "ctxguard/renderer.hpp"

#include <json.hpp>

namespace ctxguard::detail {

inline nlohmann::json snapshot_to_json(const WindowSnapshot &s) {
  using nlohmann::json;
  json widgets = json::array();
  for (const auto &w : s.widgets)
    widgets.push_back(
        {{"widget_id", w.widget_id},
         {"class_name", w.class_name},
         {"resolved_text", w.resolved_text},
         {"cell", w.cell.index()},
         {"size_fraction", w.size_fraction},
         {"flags",
          {{"is_password", w.flags.is_password},
           {"is_clickable", w.flags.is_clickable},
           {"is_long_clickable", w.flags.is_long_clickable},
           {"is_checkable", w.flags.is_checkable},
           {"is_scrollable", w.flags.is_scrollable}}},
         {"owner_package", w.owner_package},
         {"bounds",
          {w.bounds.left, w.bounds.top, w.bounds.right, w.bounds.bottom}}});
  return {{"snapshot_id", s.snapshot_id},
          {"package_id", s.package_id},
          {"activity_id", s.activity_id},
          {"screen_size", {s.screen_size.width, s.screen_size.height}},
          {"widgets", std::move(widgets)},
          {"rendered_at", s.rendered_at}};
}

inline WindowSnapshot snapshot_from_json(const nlohmann::json &j) {
  try {
    WindowSnapshot s;
    s.snapshot_id = j.at("snapshot_id").get<std::string>();
    s.package_id = j.at("package_id").get<std::string>();
    s.activity_id = j.at("activity_id").get<std::string>();
    s.screen_size = {j.at("screen_size").at(0).get<int>(),
                     j.at("screen_size").at(1).get<int>()};
    s.rendered_at = j.at("rendered_at").get<std::int64_t>();
    for (const auto &wj : j.at("widgets")) {
      RenderedWidget w;
      w.widget_id = wj.at("widget_id").get<std::string>();
      w.class_name = wj.at("class_name").get<std::string>();
      w.resolved_text = wj.at("resolved_text").get<std::string>();
      w.cell = GridCell(wj.at("cell").get<int>());
      w.size_fraction = wj.at("size_fraction").get<double>();
      const auto &f = wj.at("flags");
      w.flags = {f.value("is_password", false), f.value("is_clickable", false),
                 f.value("is_long_clickable", false),
                 f.value("is_checkable", false),
                 f.value("is_scrollable", false)};
      w.owner_package = wj.at("owner_package").get<std::string>();
      if (auto it = wj.find("bounds"); it != wj.end())
        w.bounds = {it->at(0).get<int>(), it->at(1).get<int>(),
                    it->at(2).get<int>(), it->at(3).get<int>()};
      s.widgets.push_back(std::move(w));
    }
    return s;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("snapshot schema error: ") + e.what());
  }
}

} // namespace ctxguard::detail
