#include "ctxguard/corpus.hpp"
#include "ctxguard/features.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace ctxguard;
using namespace testsupport;

namespace {

struct Qk {
  AppPackage pkg = fixture_package("qksms_compose.apkg");
  WindowSnapshot snap = render_window(pkg, kQkActivity);
  std::vector<ContextBinding> bindings =
      extract_bindings(pkg, default_sensitive_api_map());
};

bool has(const SparseVector &v, FeatureSet s, const std::string &tok) {
  return v.get(hash_token(s, tok)) > 0;
}

} // namespace

TEST_CASE("SparseVector") {
  SparseVector v;
  v.add(3, 1);
  v.add(3, 2);
  v.add(5, 0);
  CHECK(v.get(3) == 3);
  CHECK(v.nnz() == 1);
  SparseVector w;
  w.add(3, -3);
  v += w;
  CHECK(v.empty());
}

TEST_CASE("who features of the compose button") {
  Qk q;
  auto who = extract_who(&q.snap, std::string("compose_button"));
  for (const char *t : {"send", "compos", "button", "cell8", "imag"})
    CHECK(has(who.tokens, FeatureSet::Who, t));
  CHECK(who.dense[kHasTriggerWidget] == 1.0);
  CHECK(who.dense[kIsClickable] == 1.0);
  CHECK(who.dense[kSizeFraction] > 0.0);
  CHECK(who.dense[kEntryIsListener] == 0.0);
}

TEST_CASE("who features are empty without a widget") {
  Qk q;
  for (auto w : {std::optional<std::string>{}, std::optional<std::string>{"ghost"}}) {
    auto who = extract_who(&q.snap, w);
    CHECK(who.tokens.empty());
    CHECK(who.dense[kHasTriggerWidget] == 0.0);
  }
  CHECK(extract_who(nullptr, std::string("compose_button")).tokens.empty());
}

TEST_CASE("bottom ad banner carries a bottom-row cell token") {
  WindowSnapshot s;
  RenderedWidget ad;
  ad.widget_id = "ad_banner";
  ad.class_name = "com.google.android.gms.ads.AdView";
  ad.cell = grid_map({0, 1780, 1080, 1920}, {1080, 1920});
  s.widgets.push_back(ad);
  auto who = extract_who(&s, std::string("ad_banner"));
  CHECK(has(who.tokens, FeatureSet::Who, "cell7"));
}

TEST_CASE("when features") {
  EntryPointRecord click{MethodSig::parse("a.B$1.onClick(android.view.View)"),
                         EntryKind::Listener, "onClick", std::nullopt};
  auto v = extract_when({click});
  for (const char *t : {"on", "click", "listener", "view"})
    CHECK(has(v, FeatureSet::When, t));
  CHECK(v.get(hash_token(FeatureSet::When, "click")) == 2.0);

  EntryPointRecord create{MethodSig::parse("a.B.onCreate(android.os.Bundle)"),
                          EntryKind::Lifecycle, std::nullopt, std::nullopt};
  auto c = extract_when({create});
  for (const char *t : {"on", "create", "lifecycle"})
    CHECK(has(c, FeatureSet::When, t));
  CHECK_FALSE(has(c, FeatureSet::When, "listener"));
  CHECK(extract_when({}).empty());
}

TEST_CASE("what features") {
  Qk q;
  auto v = extract_what(q.snap);
  CHECK(has(v, FeatureSet::What, "compos"));
  CHECK(has(v, FeatureSet::What, "cell0:compos"));
  CHECK(has(v, FeatureSet::What, "send"));
  CHECK(has(v, FeatureSet::What, "messag"));

  auto rec = render_window(fixture_package("recorder.apkg"),
                           "com.example.recorder.RecordActivity");
  CHECK(has(extract_what(rec), FeatureSet::What, "cell4:00"));

  WindowSnapshot blank;
  blank.widgets.push_back(RenderedWidget{});
  CHECK(extract_what(blank).empty());
}

TEST_CASE("what is the sum of per-widget contributions") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto c = generate_corpus(seed, 2);
    for (const auto &pkg : c.packages)
      for (const auto &comp : pkg.components) {
        if (comp.kind != ComponentKind::Activity)
          continue;
        auto s = render_window(pkg, comp.component_id);
        SparseVector sum;
        for (const auto &w : s.widgets)
          sum += extract_what_widget(w);
        CHECK(sum == extract_what(s));
      }
  }
}

TEST_CASE("assemble_features and masking") {
  Qk q;
  const auto &b = q.bindings.at(0);
  auto all = assemble_features(&q.snap, b.entries, b.trigger_widget);
  CHECK_FALSE(all.who.empty());
  CHECK_FALSE(all.when.empty());
  CHECK_FALSE(all.what.empty());
  CHECK(all.dense[kEntryIsListener] == 1.0);
  CHECK(all.dense[kEntryIsLifecycle] == 0.0);

  auto what_only = assemble_features(&q.snap, b.entries, b.trigger_widget,
                                     EnabledSets::parse("what"));
  CHECK(what_only.who.empty());
  CHECK(what_only.when.empty());
  CHECK(what_only.what == all.what);
  for (std::size_t k = 0; k < kDenseSize; ++k)
    CHECK(what_only.dense[k] == 0.0);

  auto when_only = assemble_features(&q.snap, b.entries, b.trigger_widget,
                                     EnabledSets::parse("when"));
  CHECK(when_only.dense[kEntryIsListener] == 1.0);
  CHECK(when_only.dense[kHasTriggerWidget] == 0.0);

  CHECK_THROWS_AS(assemble_features(&q.snap, b.entries, b.trigger_widget,
                                    EnabledSets{false, false, false}),
                  ValidationError);
  CHECK(serialize_features(all) ==
        serialize_features(assemble_features(&q.snap, b.entries, b.trigger_widget)));
  CHECK(parse_features(serialize_features(all)) == all);
}

TEST_CASE("dense slot ownership") {
  CHECK(dense_slot_owner(kSizeFraction) == FeatureSet::Who);
  CHECK(dense_slot_owner(kHasTriggerWidget) == FeatureSet::Who);
  CHECK(dense_slot_owner(kEntryIsLifecycle) == FeatureSet::When);
  CHECK(dense_slot_owner(kEntryIsListener) == FeatureSet::When);
}

TEST_CASE("EnabledSets parsing") {
  CHECK(EnabledSets::parse("all") == EnabledSets{});
  CHECK(EnabledSets::parse("who+what") == EnabledSets{true, false, true});
  CHECK(EnabledSets::parse("when,who").label() == "who+when");
  CHECK_THROWS_AS(EnabledSets::parse("how"), ValidationError);
  auto subsets = EnabledSets::all_subsets();
  REQUIRE(subsets.size() == 7);
  CHECK(subsets.back() == EnabledSets{});
}

TEST_CASE("features ignore renamed internal methods") {
  // Obfuscating a non-catalog helper must not change the features.
  const AppPackage pkg = fixture_package("recorder.apkg");
  const std::string act = "com.example.recorder.RecordActivity";
  AppPackage renamed = pkg;
  CallGraph g;
  auto rename = [](MethodSig m) {
    if (m.method_name == "startRecording")
      m.method_name = "a";
    return m;
  };
  for (const auto &n : pkg.call_graph.nodes)
    g.nodes.insert(rename(n));
  for (const auto &[a, b] : pkg.call_graph.edges)
    g.edges.emplace(rename(a), rename(b));
  g.handler_bindings = pkg.call_graph.handler_bindings;
  g.runtime_assignments = pkg.call_graph.runtime_assignments;
  renamed.call_graph = g;
  REQUIRE_FALSE(renamed == pkg);
  auto b1 = extract_bindings(pkg, default_sensitive_api_map());
  auto b2 = extract_bindings(renamed, default_sensitive_api_map());
  auto s1 = render_window(pkg, act);
  auto s2 = render_window(renamed, act);
  CHECK(assemble_features(&s2, b2.at(0).entries, b2.at(0).trigger_widget) ==
        assemble_features(&s1, b1.at(0).entries, b1.at(0).trigger_widget));
}

TEST_CASE("flatten layout") {
  Qk q;
  const auto &b = q.bindings.at(0);
  auto f = assemble_features(&q.snap, b.entries, b.trigger_widget);
  auto flat = flatten(f);
  CHECK(flat.size() == f.who.nnz() + f.when.nnz() + f.what.nnz() +
                           std::count_if(f.dense.begin(), f.dense.end(),
                                         [](double d) { return d != 0; }));
  for (std::size_t i = 1; i < flat.size(); ++i)
    CHECK(flat[i - 1].first < flat[i].first);
  CHECK(flat.back().first < kFlatDim);
  CHECK(kFlatDim == 196617);
}
