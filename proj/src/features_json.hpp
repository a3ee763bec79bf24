#pragma once

#include "ctxguard/errors.hpp"
#include "ctxguard/features.hpp"

#include <json.hpp>

namespace ctxguard::detail {

inline nlohmann::json sparse_to_json(const SparseVector &v) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto &[i, c] : v.entries())
    a.push_back({i, c});
  return a;
}

inline SparseVector sparse_from_json(const nlohmann::json &a) {
  SparseVector v;
  for (const auto &p : a) {
    auto idx = p.at(0).get<std::uint32_t>();
    if (idx >= kHashSpace)
      throw ValidationError("feature index out of range");
    auto c = p.at(1).get<double>();
    if (c < 0)
      throw ValidationError("feature counts must be non-negative");
    v.add(idx, c);
  }
  return v;
}

inline nlohmann::json features_to_json(const ContextFeatures &f) {
  return {{"who", sparse_to_json(f.who)},
          {"when", sparse_to_json(f.when)},
          {"what", sparse_to_json(f.what)},
          {"dense", f.dense}};
}

inline ContextFeatures features_from_json(const nlohmann::json &j) {
  try {
    ContextFeatures f;
    f.who = sparse_from_json(j.at("who"));
    f.when = sparse_from_json(j.at("when"));
    f.what = sparse_from_json(j.at("what"));
    const auto &d = j.at("dense");
    if (!d.is_array() || d.size() != kDenseSize)
      throw ValidationError("dense block must have exactly 9 values");
    for (std::size_t k = 0; k < kDenseSize; ++k)
      f.dense[k] = d[k].get<double>();
    return f;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("feature schema error: ") + e.what());
  }
}

} // namespace ctxguard::detail
