#pragma once

#include "ctxguard/renderer.hpp"
#include "ctxguard/static_analyzer.hpp"
#include "ctxguard/text.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctxguard {

/// index -> count; zero entries are never stored.
class SparseVector {
public:
  void add(std::uint32_t index, double count);
  double get(std::uint32_t index) const;
  bool empty() const { return entries_.empty(); }
  std::size_t nnz() const { return entries_.size(); }
  void clear() { entries_.clear(); }
  SparseVector &operator+=(const SparseVector &o);
  const std::map<std::uint32_t, double> &entries() const { return entries_; }
  friend bool operator==(const SparseVector &, const SparseVector &) = default;

private:
  std::map<std::uint32_t, double> entries_;
};

/// Dense structural block slots.
enum DenseSlot : std::size_t {
  kSizeFraction = 0,
  kIsPassword,
  kIsClickable,
  kIsLongClickable,
  kIsCheckable,
  kIsScrollable,
  kEntryIsLifecycle,
  kEntryIsListener,
  kHasTriggerWidget,
  kDenseSize
};

using DenseBlock = std::array<double, kDenseSize>;

/// Feature set a dense slot is derived from.
FeatureSet dense_slot_owner(std::size_t slot);

struct EnabledSets {
  bool who = true;
  bool when = true;
  bool what = true;

  bool enabled(FeatureSet s) const;
  bool any() const { return who || when || what; }
  /// "who+when", "what", "all", ...
  std::string label() const;
  /// Accepts "all" or '+'/','-separated set names. Throws ValidationError.
  static EnabledSets parse(std::string_view s);
  /// The 7 non-empty subsets in a fixed order: who, when, what, who+when,
  /// who+what, when+what, all.
  static std::vector<EnabledSets> all_subsets();
  friend bool operator==(const EnabledSets &, const EnabledSets &) = default;
};

struct ContextFeatures {
  SparseVector who;
  SparseVector when;
  SparseVector what;
  DenseBlock dense{};

  const SparseVector &set(FeatureSet s) const;
  friend bool operator==(const ContextFeatures &,
                         const ContextFeatures &) = default;
};

/// Dimension of the flattened vector learners see: three hashed spaces
/// followed by the dense block.
inline constexpr std::size_t kFlatDim = 3 * kHashSpace + kDenseSize;

/// Flattened (index, value) pairs in increasing index order.
std::vector<std::pair<std::uint32_t, double>>
flatten(const ContextFeatures &f);

struct WhoFeatures {
  SparseVector tokens;
  /// Slots owned by the who set; the rest stay zero.
  DenseBlock dense{};
};

/// Empty (has_trigger_widget = 0) when the widget is absent or not in the
/// snapshot.
WhoFeatures extract_who(const WindowSnapshot *snapshot,
                        const std::optional<std::string> &widget_id,
                        const Stopwords &sw = Stopwords::english());

SparseVector extract_when(const std::vector<EntryPointRecord> &entries);

/// Contribution of one widget to the what set.
SparseVector extract_what_widget(const RenderedWidget &w,
                                 const Stopwords &sw = Stopwords::english());
SparseVector extract_what(const WindowSnapshot &snapshot,
                          const Stopwords &sw = Stopwords::english());

/// Zeroes disabled sets and the dense slots they own.
void mask_features(ContextFeatures &f, const EnabledSets &enabled);

/// Throws ValidationError when no set is enabled.
ContextFeatures assemble_features(const WindowSnapshot *snapshot,
                                  const std::vector<EntryPointRecord> &entries,
                                  const std::optional<std::string> &trigger_widget,
                                  const EnabledSets &enabled = {},
                                  const Stopwords &sw = Stopwords::english());

std::string serialize_features(const ContextFeatures &f);
ContextFeatures parse_features(std::string_view text);

} // namespace ctxguard
