#include "ctxguard/corpus.hpp"
#include "ctxguard/evalharness.hpp"
#include "ctxguard/mediator.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace ctxguard;
using namespace testsupport;

namespace {

Mediator with_fixtures(MediatorConfig cfg = {}) {
  Mediator m(cfg);
  for (const char *f : {"qksms_compose.apkg", "recorder.apkg",
                        "walkie_talkie.apkg", "weather.apkg"})
    m.install(fixture_package(f));
  return m;
}

const RequestRecord &only_record(const Mediator &m) {
  REQUIRE(m.records().size() == 1);
  return m.records().front();
}

/// Model that outputs a high P(Legal) for the given features.
PermissionModel confident(PermissionType p, const ContextFeatures &f, Label y) {
  PermissionModel m(p, Algo::NB);
  for (int i = 0; i < 20; ++i)
    m.update(f, y);
  return m;
}

} // namespace

TEST_CASE("extract_entry_from_stack picks the outermost catalog frame") {
  auto s = [](const char *x) { return MethodSig::parse(x); };
  auto e = extract_entry_from_stack(
      {s("a.Main.onCreate(android.os.Bundle)"), s("a.Main$1.onClick(android.view.View)"),
       s("a.Main.helper()"), s("android.telephony.TelephonyManager.getDeviceId()")});
  REQUIRE(e);
  CHECK(e->entry.method_name == "onCreate");
  CHECK(e->kind == EntryKind::Lifecycle);
  CHECK_FALSE(extract_entry_from_stack({s("a.Main.helper()")}));
  CHECK_FALSE(extract_entry_from_stack({}));
}

TEST_CASE("decide") {
  Thresholds t;
  CHECK(decide(0.9, t) == Verdict::Allow);
  CHECK(decide(0.8, t) == Verdict::Allow);
  CHECK(decide(0.5, t) == Verdict::Prompted);
  CHECK(decide(0.2, t) == Verdict::Deny);
  CHECK(decide(0.1, t) == Verdict::Deny);
}

TEST_CASE("config validation") {
  MediatorConfig c;
  c.thresholds = {0.8, 0.2};
  CHECK_THROWS_AS(Mediator{c}, ValidationError);
  c = {};
  c.enabled = {false, false, false};
  CHECK_THROWS_AS(Mediator{c}, ValidationError);
  Mediator m;
  m.install(fixture_package("weather.apkg"));
  CHECK_THROWS_AS(m.install(fixture_package("weather.apkg")), ValidationError);
}

TEST_CASE("compose flow attributes the send button") {
  Mediator m = with_fixtures();
  auto ids = m.run_trace(parse_trace(fixture("qksms_compose.trace")));
  REQUIRE(ids.size() == 1);
  const RequestRecord &r = only_record(m);
  CHECK(r.permission == PermissionType::SEND_SMS);
  CHECK(r.trigger_widget == "compose_button");
  CHECK(r.entry_event ==
        std::string("com.moez.QKSMS.ui.compose.ComposeView.onClick(android.view.View)"));
  CHECK(r.features.dense[kHasTriggerWidget] == 1.0);
  CHECK(r.features.dense[kEntryIsListener] == 1.0);
  // untrained model: p = 0.5, so the user is asked
  CHECK(r.verdict == Verdict::Prompted);
  REQUIRE(m.pending().size() == 1);
  const PromptTicket &t = m.pending().front();
  CHECK(t.highlighted_widget == "compose_button");
  REQUIRE(t.snapshot);
  CHECK(m.find_snapshot(t.snapshot->snapshot_id));

  // a model confident in this context allows it
  Mediator m2 = with_fixtures();
  m2.set_model(confident(PermissionType::SEND_SMS, r.features, Label::Legal));
  m2.run_trace(parse_trace(fixture("qksms_compose.trace")));
  CHECK(only_record(m2).verdict == Verdict::Allow);
  CHECK(only_record(m2).decision_source == DecisionSource::Model);
  CHECK(m2.pending().empty());
}

TEST_CASE("service call uses the originating activity's window") {
  Mediator m = with_fixtures();
  m.run_trace(parse_trace(fixture("weather_service.trace")));
  const RequestRecord &r = only_record(m);
  CHECK(r.permission == PermissionType::LOCATION);
  CHECK_FALSE(r.background);
  CHECK_FALSE(r.trigger_widget);
  CHECK(r.features.who.empty());
  REQUIRE(r.snapshot_id);
  const WindowSnapshot *s = m.find_snapshot(*r.snapshot_id);
  REQUIRE(s);
  CHECK(s->activity_id == "com.example.weather.MainActivity");
  CHECK(r.features.what == extract_what(*s));
  CHECK(r.features.dense[kEntryIsLifecycle] == 1.0);
}

TEST_CASE("orphan service call") {
  SUBCASE("always-deny") {
    MediatorConfig c;
    c.background = BackgroundPolicy::AlwaysDeny;
    Mediator m = with_fixtures(c);
    m.run_trace(parse_trace(fixture("weather_orphan.trace")));
    const RequestRecord &r = only_record(m);
    CHECK(r.background);
    CHECK(r.verdict == Verdict::Deny);
    CHECK(r.decision_source == DecisionSource::TimeoutPolicy);
    CHECK(r.warning);
    CHECK_FALSE(r.snapshot_id);
  }
  SUBCASE("prompt, even with a confident model") {
    Mediator m = with_fixtures();
    TraceEvent call = parse_trace(fixture("weather_orphan.trace")).at(0);
    m.set_model(confident(PermissionType::LOCATION, m.request_features(call),
                          Label::Legal));
    m.run_trace({call});
    const RequestRecord &r = only_record(m);
    CHECK(r.verdict == Verdict::Prompted);
    REQUIRE(r.ticket_id);
    CHECK_FALSE(m.find_ticket(*r.ticket_id)->snapshot);
  }
}

TEST_CASE("overlay widget is not attributed to the victim app") {
  Mediator m = with_fixtures();
  m.run_trace(parse_trace(fixture("overlay_spoof.trace")));
  const RequestRecord &r = only_record(m);
  CHECK_FALSE(r.trigger_widget);
  CHECK(r.features.who.empty());
  CHECK(r.features.dense[kHasTriggerWidget] == 0.0);
  REQUIRE(m.state().latest_widget);
  CHECK(m.state().latest_widget->owner_package == "com.evil.overlay");

  // features equal those of the same call with no widget event at all
  Mediator plain = with_fixtures();
  Trace t = parse_trace(fixture("overlay_spoof.trace"));
  t.erase(t.begin() + 2);
  plain.run_trace(t);
  CHECK(only_record(plain).features == r.features);
}

TEST_CASE("resolve_prompt feeds the model") {
  for (Algo a : {Algo::LR, Algo::NB, Algo::SVM}) {
    for (bool allow : {true, false}) {
      CAPTURE(a);
      CAPTURE(allow);
      MediatorConfig c;
      c.default_algo = a;
      Mediator m = with_fixtures(c);
      m.run_trace(parse_trace(fixture("qksms_compose.trace")));
      const std::string ticket = *only_record(m).ticket_id;
      const double before = only_record(m).p_legal;
      const RequestRecord &r = m.resolve_prompt(ticket, allow);
      CHECK(r.closed);
      CHECK(r.decision_source == DecisionSource::User);
      CHECK(r.verdict == (allow ? Verdict::Allow : Verdict::Deny));
      REQUIRE(r.p_legal_after);
      if (allow)
        CHECK(*r.p_legal_after > before);
      else
        CHECK(*r.p_legal_after < before);
      CHECK(m.pending().empty());
      CHECK_THROWS_AS(m.resolve_prompt(ticket, allow), ConflictError);
      CHECK(m.stats().prompts_resolved == 1);
      CHECK(m.stats().permissions.at(PermissionType::SEND_SMS).examples_seen == 1);
    }
  }
  Mediator m = with_fixtures();
  CHECK_THROWS_AS(m.resolve_prompt("t99", true), ReferenceError);
}

TEST_CASE("prompt expiry") {
  Mediator m = with_fixtures();
  m.run_trace(parse_trace(fixture("qksms_compose.trace")));
  const std::string ticket = *only_record(m).ticket_id;
  const std::int64_t created = m.find_ticket(ticket)->created_at;
  CHECK_THROWS_AS(m.expire_prompt(ticket, created + 29'999), ValidationError);
  CHECK(m.expire_due(created + 29'999).empty());
  auto due = m.expire_due(created + 30'000);
  REQUIRE(due.size() == 1);
  const RequestRecord &r = only_record(m);
  CHECK(r.verdict == Verdict::Deny);
  CHECK(r.decision_source == DecisionSource::TimeoutPolicy);
  CHECK_FALSE(r.p_legal_after);
  CHECK(m.find_model(PermissionType::SEND_SMS)->examples_seen() == 0);
  CHECK_THROWS_AS(m.resolve_prompt(ticket, true), ConflictError);
  CHECK(m.stats().prompts_expired == 1);

  MediatorConfig c;
  c.prompt_timeout_ms = std::nullopt;
  Mediator never = with_fixtures(c);
  never.run_trace(parse_trace(fixture("qksms_compose.trace")));
  CHECK_THROWS_AS(never.expire_prompt(*only_record(never).ticket_id, 1'000'000'000),
                  ValidationError);
  CHECK(never.expire_due(1'000'000'000).empty());
}

TEST_CASE("override_denial") {
  Mediator m = with_fixtures();
  m.run_trace(parse_trace(fixture("qksms_compose.trace")));
  const RequestRecord &rec = only_record(m);
  CHECK_THROWS_AS(m.override_denial(rec.request_id), ConflictError);
  m.resolve_prompt(*rec.ticket_id, false);
  const double denied_p = *rec.p_legal_after;
  const RequestRecord &r = m.override_denial(rec.request_id);
  CHECK(r.verdict == Verdict::Allow);
  CHECK(r.decision_source == DecisionSource::User);
  CHECK(*r.p_legal_after > denied_p);
  CHECK_FALSE(r.warning);
  CHECK_THROWS_AS(m.override_denial(r.request_id), ConflictError);
  CHECK_THROWS_AS(m.override_denial("r404"), ReferenceError);
}

TEST_CASE("every call gets exactly one verdict") {
  Corpus c = generate_corpus(5, 4);
  Mediator m;
  for (const auto &p : c.packages)
    m.install(p);
  std::size_t calls = 0;
  for (const auto &t : c.traces) {
    calls += std::count_if(t.begin(), t.end(), [](const TraceEvent &e) {
      return e.kind == EventKind::SensitiveCall;
    });
    m.run_trace(t);
  }
  CHECK(m.records().size() == calls);
  std::size_t open = 0;
  for (const auto &r : m.records()) {
    CHECK(r.closed == (r.verdict != Verdict::Prompted));
    CHECK(r.closed != r.ticket_id.has_value());
    open += !r.closed;
  }
  CHECK(m.pending().size() == open);
}

TEST_CASE("startup call of a dual-entry app is not auto-allowed") {
  Corpus c = generate_corpus(1, 60);
  auto models = train_models(build_dataset(c), Algo::LR);
  Mediator m = with_fixtures();
  for (auto &[p, model] : models)
    m.set_model(model);
  m.run_trace(parse_trace(fixture("walkie_oncreate.trace")));
  const RequestRecord &r = only_record(m);
  CHECK(r.permission == PermissionType::RECORD_AUDIO);
  CHECK_FALSE(r.trigger_widget);
  CHECK(r.features.dense[kEntryIsLifecycle] == 1.0);
  CHECK(r.verdict != Verdict::Allow);
}

TEST_CASE("stop semantics") {
  Mediator m = with_fixtures();
  Trace t = parse_trace(fixture("weather_service.trace"));
  t.pop_back();
  m.run_trace(t);
  const std::string svc_key = "com.example.weather/com.example.weather.UpdateService";
  CHECK(m.state().service_origin.count(svc_key));

  TraceEvent stop;
  stop.kind = EventKind::StopComponent;
  stop.package = "com.example.weather";
  stop.component = "com.example.weather.MainActivity";
  stop.time = m.now() + 1;
  m.apply_event(stop);
  CHECK_FALSE(m.state().foreground_activity);
  // the started service keeps its origin
  CHECK(m.state().service_origin.count(svc_key));

  stop.component = "com.example.weather.UpdateService";
  stop.time = m.now() + 1;
  m.apply_event(stop);
  CHECK_FALSE(m.state().service_origin.count(svc_key));
}

TEST_CASE("event errors") {
  Mediator m = with_fixtures();
  TraceEvent tap;
  tap.kind = EventKind::ListenerInvoke;
  tap.package = "com.moez.QKSMS";
  tap.widget = "nope";
  tap.event = "onClick";
  tap.time = 1;
  CHECK_THROWS_AS(m.apply_event(tap), ReferenceError);
  tap.widget = "compose_button";
  m.apply_event(tap);
  CHECK_THROWS_AS(m.apply_event(tap), ValidationError); // time does not advance

  TraceEvent launch;
  launch.package = "com.unknown";
  launch.component = "X";
  launch.time = 10;
  CHECK_THROWS_AS(m.apply_event(launch), ReferenceError);

  Trace t = parse_trace(fixture("qksms_compose.trace"));
  t[2].widget = "ghost";
  try {
    m.run_trace(t);
    FAIL("expected TraceError");
  } catch (const TraceError &e) {
    CHECK(e.index() == 2);
  }
}

TEST_CASE("run_trace rebases times") {
  Mediator m = with_fixtures();
  const Trace t = parse_trace(fixture("qksms_compose.trace"));
  m.run_trace(t);
  m.run_trace(t);
  REQUIRE(m.records().size() == 2);
  CHECK(m.records()[1].time > m.records()[0].time);
  CHECK(m.records()[1].features == m.records()[0].features);
}

TEST_CASE("records serialize") {
  Mediator m = with_fixtures();
  m.run_trace(parse_trace(fixture("qksms_compose.trace")));
  auto j = serialize_record(only_record(m));
  CHECK(j.find("\"verdict\":\"Prompted\"") != std::string::npos);
  CHECK(serialize_ticket(m.pending().front()).find("compose_button") != std::string::npos);
}
