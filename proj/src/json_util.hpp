#pragma once

#include "ctxguard/errors.hpp"

#include <json.hpp>

#include <string>
#include <string_view>

namespace ctxguard::detail {

inline nlohmann::json parse_json(std::string_view text) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error &e) {
    throw SyntaxError(std::string("malformed document: ") + e.what(), e.byte);
  }
}

inline const nlohmann::json &require_node(const nlohmann::json &j,
                                          const char *key,
                                          const std::string &where) {
  auto it = j.find(key);
  if (it == j.end())
    throw ValidationError(where + ": missing field '" + key + "'");
  return *it;
}

template <class T>
T require(const nlohmann::json &j, const char *key, const std::string &where) {
  try {
    return require_node(j, key, where).get<T>();
  } catch (const nlohmann::json::type_error &) {
    throw ValidationError(where + ": field '" + key + "' has the wrong type");
  }
}

} // namespace ctxguard::detail
