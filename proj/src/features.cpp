#include "ctxguard/features.hpp"

#include "ctxguard/errors.hpp"
#include "features_json.hpp"
#include "json_util.hpp"

namespace ctxguard {

void SparseVector::add(std::uint32_t index, double count) {
  if (count == 0.0)
    return;
  auto [it, inserted] = entries_.emplace(index, count);
  if (!inserted) {
    it->second += count;
    if (it->second == 0.0)
      entries_.erase(it);
  }
}

double SparseVector::get(std::uint32_t index) const {
  auto it = entries_.find(index);
  return it == entries_.end() ? 0.0 : it->second;
}

SparseVector &SparseVector::operator+=(const SparseVector &o) {
  for (const auto &[i, v] : o.entries_)
    add(i, v);
  return *this;
}

FeatureSet dense_slot_owner(std::size_t slot) {
  return slot == kEntryIsLifecycle || slot == kEntryIsListener ? FeatureSet::When
                                                               : FeatureSet::Who;
}

bool EnabledSets::enabled(FeatureSet s) const {
  switch (s) {
  case FeatureSet::Who:
    return who;
  case FeatureSet::When:
    return when;
  case FeatureSet::What:
    return what;
  }
  return false;
}

std::string EnabledSets::label() const {
  if (who && when && what)
    return "all";
  std::string out;
  for (auto [on, name] : {std::pair{who, "who"}, std::pair{when, "when"},
                          std::pair{what, "what"}}) {
    if (!on)
      continue;
    if (!out.empty())
      out += '+';
    out += name;
  }
  return out.empty() ? "none" : out;
}

EnabledSets EnabledSets::parse(std::string_view s) {
  if (s == "all")
    return {};
  EnabledSets e{false, false, false};
  std::string tok;
  auto flush = [&] {
    if (tok == "who")
      e.who = true;
    else if (tok == "when")
      e.when = true;
    else if (tok == "what")
      e.what = true;
    else if (!tok.empty())
      throw ValidationError("unknown feature set '" + tok + "'");
    tok.clear();
  };
  for (char c : s) {
    if (c == '+' || c == ',')
      flush();
    else
      tok += c;
  }
  flush();
  if (!e.any())
    throw ValidationError("at least one feature set must be enabled");
  return e;
}

std::vector<EnabledSets> EnabledSets::all_subsets() {
  return {{true, false, false}, {false, true, false}, {false, false, true},
          {true, true, false},  {true, false, true},  {false, true, true},
          {true, true, true}};
}

const SparseVector &ContextFeatures::set(FeatureSet s) const {
  switch (s) {
  case FeatureSet::Who:
    return who;
  case FeatureSet::When:
    return when;
  case FeatureSet::What:
    break;
  }
  return what;
}

std::vector<std::pair<std::uint32_t, double>> flatten(const ContextFeatures &f) {
  std::vector<std::pair<std::uint32_t, double>> out;
  out.reserve(f.who.nnz() + f.when.nnz() + f.what.nnz() + kDenseSize);
  std::uint32_t offset = 0;
  for (const SparseVector *v : {&f.who, &f.when, &f.what}) {
    for (const auto &[i, c] : v->entries())
      out.emplace_back(offset + i, c);
    offset += kHashSpace;
  }
  for (std::size_t k = 0; k < kDenseSize; ++k)
    if (f.dense[k] != 0.0)
      out.emplace_back(offset + static_cast<std::uint32_t>(k), f.dense[k]);
  return out;
}

namespace {

std::string cell_token(GridCell c) { return "cell" + std::to_string(c.index()); }

} // namespace

WhoFeatures extract_who(const WindowSnapshot *snapshot,
                        const std::optional<std::string> &widget_id,
                        const Stopwords &sw) {
  WhoFeatures out;
  if (!snapshot || !widget_id)
    return out;
  const RenderedWidget *w = snapshot->find(*widget_id);
  if (!w)
    return out;
  auto add_text = [&](std::string_view s) {
    for (const auto &t : text_tokens(s, sw))
      out.tokens.add(hash_token(FeatureSet::Who, t), 1.0);
  };
  add_text(w->widget_id);
  add_text(w->class_name);
  add_text(w->resolved_text);
  out.tokens.add(hash_token(FeatureSet::Who, cell_token(w->cell)), 1.0);

  out.dense[kSizeFraction] = w->size_fraction;
  out.dense[kIsPassword] = w->flags.is_password;
  out.dense[kIsClickable] = w->flags.is_clickable;
  out.dense[kIsLongClickable] = w->flags.is_long_clickable;
  out.dense[kIsCheckable] = w->flags.is_checkable;
  out.dense[kIsScrollable] = w->flags.is_scrollable;
  out.dense[kHasTriggerWidget] = 1.0;
  return out;
}

SparseVector extract_when(const std::vector<EntryPointRecord> &entries) {
  SparseVector v;
  auto add = [&](std::string_view s) {
    for (const auto &t : split_identifier(s))
      v.add(hash_token(FeatureSet::When, t), 1.0);
  };
  for (const auto &e : entries) {
    add(e.entry.class_name);
    add(e.entry.method_name);
    for (const auto &p : e.entry.param_types)
      add(p);
    if (e.event_type)
      add(*e.event_type);
    v.add(hash_token(FeatureSet::When,
                     e.kind == EntryKind::Listener ? "listener" : "lifecycle"),
          1.0);
  }
  return v;
}

SparseVector extract_what_widget(const RenderedWidget &w, const Stopwords &sw) {
  SparseVector v;
  if (w.resolved_text.empty())
    return v;
  const std::string prefix = cell_token(w.cell) + ":";
  for (const auto &t : text_tokens(w.resolved_text, sw)) {
    v.add(hash_token(FeatureSet::What, t), 1.0);
    v.add(hash_token(FeatureSet::What, prefix + t), 1.0);
  }
  return v;
}

SparseVector extract_what(const WindowSnapshot &snapshot, const Stopwords &sw) {
  SparseVector v;
  for (const auto &w : snapshot.widgets)
    v += extract_what_widget(w, sw);
  return v;
}

void mask_features(ContextFeatures &f, const EnabledSets &enabled) {
  if (!enabled.who)
    f.who.clear();
  if (!enabled.when)
    f.when.clear();
  if (!enabled.what)
    f.what.clear();
  for (std::size_t k = 0; k < kDenseSize; ++k)
    if (!enabled.enabled(dense_slot_owner(k)))
      f.dense[k] = 0.0;
}

ContextFeatures assemble_features(const WindowSnapshot *snapshot,
                                  const std::vector<EntryPointRecord> &entries,
                                  const std::optional<std::string> &trigger_widget,
                                  const EnabledSets &enabled,
                                  const Stopwords &sw) {
  if (!enabled.any())
    throw ValidationError("at least one feature set must be enabled");
  ContextFeatures f;
  auto who = extract_who(snapshot, trigger_widget, sw);
  f.who = std::move(who.tokens);
  f.dense = who.dense;
  f.when = extract_when(entries);
  for (const auto &e : entries) {
    if (e.kind == EntryKind::Lifecycle)
      f.dense[kEntryIsLifecycle] = 1.0;
    else
      f.dense[kEntryIsListener] = 1.0;
  }
  if (snapshot)
    f.what = extract_what(*snapshot, sw);
  mask_features(f, enabled);
  return f;
}

std::string serialize_features(const ContextFeatures &f) {
  return detail::features_to_json(f).dump() + "\n";
}

ContextFeatures parse_features(std::string_view text) {
  return detail::features_from_json(detail::parse_json(text));
}

} // namespace ctxguard
