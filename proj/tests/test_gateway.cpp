#include "ctxguard/gateway.hpp"
#include "support.hpp"

#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

using namespace ctxguard;
using namespace testsupport;
using nlohmann::json;

namespace {

struct Fixture {
  Mediator mediator;
  Gateway gateway{mediator};
  Fixture() {
    for (const char *f : {"qksms_compose.apkg", "weather.apkg"})
      mediator.install(fixture_package(f));
  }
  json call(const std::string &method, const std::string &path,
            const std::string &body = "", int expect = 200,
            const std::map<std::string, std::string> &q = {}) {
    HttpResponse r = gateway.handle(method, path, body, q);
    CHECK(r.status == expect);
    return json::parse(r.body);
  }
};

} // namespace

TEST_CASE("trace upload, pending list, decision") {
  Fixture f;
  json up = f.call("POST", "/v1/traces", fixture("qksms_compose.trace"));
  REQUIRE(up["request_ids"].size() == 1);
  REQUIRE(up["ticket_ids"].size() == 1);
  const std::string ticket = up["ticket_ids"][0];

  json pending = f.call("GET", "/v1/pending");
  REQUIRE(pending.size() == 1);
  CHECK(pending[0]["ticket_id"] == ticket);
  CHECK(pending[0]["highlighted_widget"] == "compose_button");
  CHECK(pending[0]["permission"] == "SEND_SMS");

  const std::string snap = pending[0]["snapshot_id"];
  json s = f.call("GET", "/v1/snapshots/" + snap);
  CHECK(s["snapshot_id"] == snap);
  CHECK(s["widgets"].size() == 5);

  json rec = f.call("POST", "/v1/decisions",
                    json{{"ticket_id", ticket}, {"allow", true}}.dump());
  CHECK(rec["verdict"] == "Allow");
  CHECK(rec["decision_source"] == "User");
  CHECK(rec["p_legal_after"].get<double>() > rec["p_legal"].get<double>());
  CHECK(f.call("GET", "/v1/pending").empty());

  f.call("POST", "/v1/decisions", json{{"ticket_id", ticket}, {"allow", true}}.dump(),
         409);
  f.call("POST", "/v1/decisions", json{{"ticket_id", "t77"}, {"allow", true}}.dump(),
         404);

  json stats = f.call("GET", "/v1/models/stats");
  CHECK(stats["permissions"]["SEND_SMS"]["examples_seen"] == 1);
  CHECK(stats["permissions"]["SEND_SMS"]["verdicts"]["Allow"] == 1);
  CHECK(stats["prompts"]["resolved"] == 1);
  CHECK(stats["thresholds"]["tau_hi"] == 0.8);
}

TEST_CASE("unprefixed routes are served too") {
  Fixture f;
  CHECK(f.call("GET", "/pending").is_array());
  CHECK(f.call("GET", "/models/stats").contains("thresholds"));
}

TEST_CASE("records paging") {
  Fixture f;
  for (int i = 0; i < 5; ++i)
    f.call("POST", "/v1/traces", fixture("weather_service.trace"));
  json all = f.call("GET", "/v1/records");
  CHECK(all["total"] == 5);
  CHECK(all["records"].size() == 5);
  json page = f.call("GET", "/v1/records", "", 200, {{"offset", "3"}, {"limit", "10"}});
  REQUIRE(page["records"].size() == 2);
  CHECK(page["records"][0]["request_id"] == "r4");
  CHECK(f.call("GET", "/v1/records", "", 200, {{"offset", "9"}})["records"].empty());
  f.call("GET", "/v1/records", "", 400, {{"limit", "x"}});
}

TEST_CASE("overrides") {
  Fixture f;
  json up = f.call("POST", "/v1/traces", fixture("qksms_compose.trace"));
  const std::string rid = up["request_ids"][0];
  f.call("POST", "/v1/overrides", json{{"request_id", rid}}.dump(), 409);
  f.call("POST", "/v1/decisions",
         json{{"ticket_id", up["ticket_ids"][0]}, {"allow", false}}.dump());
  json r = f.call("POST", "/v1/overrides", json{{"request_id", rid}}.dump());
  CHECK(r["verdict"] == "Allow");
  f.call("POST", "/v1/overrides", json{{"request_id", "r999"}}.dump(), 404);
}

TEST_CASE("error statuses") {
  Fixture f;
  f.call("GET", "/v1/nothing", "", 404);
  f.call("DELETE", "/v1/pending", "", 404);
  f.call("GET", "/v1/snapshots/nope", "", 404);
  f.call("POST", "/v1/decisions", "{not json", 400);
  f.call("POST", "/v1/decisions", json{{"ticket_id", "t1"}}.dump(), 400);
  f.call("POST", "/v1/traces", "{oops", 400);
  // replay failure: unknown package
  f.call("POST", "/v1/traces",
         R"({"time":1,"kind":"LaunchActivity","package":"x","component":"y"})", 400);
}

TEST_CASE("stale prompts expire on the wall clock") {
  Fixture f;
  f.call("POST", "/v1/traces", fixture("qksms_compose.trace"));
  const auto now = std::chrono::steady_clock::now();
  CHECK(f.gateway.expire_stale(now).empty());
  auto expired = f.gateway.expire_stale(now + std::chrono::seconds(31));
  REQUIRE(expired.size() == 1);
  CHECK(f.call("GET", "/v1/pending").empty());
  json rec = f.call("GET", "/v1/records")["records"][0];
  CHECK(rec["verdict"] == "Deny");
  CHECK(rec["decision_source"] == "TimeoutPolicy");
  CHECK(f.call("GET", "/v1/models/stats")["prompts"]["expired"] == 1);
}

TEST_CASE("HTTP round trip") {
  Fixture f;
  const int port = f.gateway.serve_background();
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);
  auto up = cli.Post("/v1/traces", fixture("qksms_compose.trace"), "application/x-ndjson");
  REQUIRE(up);
  CHECK(up->status == 200);
  auto pending = cli.Get("/v1/pending");
  REQUIRE(pending);
  CHECK(json::parse(pending->body).size() == 1);
  auto page = cli.Get("/v1/records?offset=0&limit=1");
  REQUIRE(page);
  CHECK(json::parse(page->body)["records"].size() == 1);
  auto missing = cli.Get("/v1/snapshots/zzz");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  f.gateway.stop();
}

TEST_CASE("pending is empty, then FIFO") {
  Fixture f;
  CHECK(f.call("GET", "/v1/pending") == json::array());
  f.call("POST", "/v1/traces", fixture("qksms_compose.trace"));
  f.call("POST", "/v1/traces", fixture("weather_orphan.trace"));
  json p = f.call("GET", "/v1/pending");
  REQUIRE(p.size() == 2);
  CHECK(p[0]["permission"] == "SEND_SMS");
  CHECK(p[1]["permission"] == "LOCATION");
  CHECK(p[0]["created_at"].get<std::int64_t>() < p[1]["created_at"].get<std::int64_t>());
  CHECK(p[1]["snapshot_id"].is_null());
}

TEST_CASE("repeated denials lead to auto-deny without a prompt") {
  Fixture f;
  int prompts = 0;
  bool auto_denied = false;
  for (int round = 0; round < 50 && !auto_denied; ++round) {
    json up = f.call("POST", "/v1/traces", fixture("qksms_compose.trace"));
    if (up["ticket_ids"].empty()) {
      json rec = f.call("GET", "/v1/records", "", 200,
                        {{"offset", std::to_string(round)}})["records"][0];
      CHECK(rec["verdict"] == "Deny");
      CHECK(rec["decision_source"] == "Model");
      CHECK(rec["p_legal"].get<double>() <= 0.2);
      auto_denied = true;
    } else {
      ++prompts;
      f.call("POST", "/v1/decisions",
             json{{"ticket_id", up["ticket_ids"][0]}, {"allow", false}}.dump());
    }
  }
  CHECK(auto_denied);
  CHECK(prompts >= 1);
  CHECK(f.call("GET", "/v1/pending").empty());
}

TEST_CASE("every prompt is resolved, expired or pending") {
  Fixture f;
  for (int i = 0; i < 6; ++i)
    f.call("POST", "/v1/traces", fixture(i % 2 ? "weather_orphan.trace"
                                               : "qksms_compose.trace"));
  json p = f.call("GET", "/v1/pending");
  f.call("POST", "/v1/decisions", json{{"ticket_id", p[0]["ticket_id"]}, {"allow", true}}.dump());
  f.call("POST", "/v1/decisions", json{{"ticket_id", p[1]["ticket_id"]}, {"allow", false}}.dump());
  f.gateway.expire_stale(std::chrono::steady_clock::now() + std::chrono::minutes(1));
  json s = f.call("GET", "/v1/models/stats")["prompts"];
  CHECK(s["resolved"].get<int>() + s["expired"].get<int>() + s["pending"].get<int>() ==
        s["created"].get<int>());
  CHECK(s["resolved"] == 2);
}

TEST_CASE("stats report a loaded model") {
  Mediator m;
  m.install(fixture_package("qksms_compose.apkg"));
  PermissionModel model(PermissionType::SEND_SMS, Algo::NB);
  for (int i = 0; i < 12; ++i)
    model.update(ContextFeatures{}, i % 2 ? Label::Legal : Label::Illegal);
  m.set_model(parse_model(serialize_model(model)));
  Gateway gw(m);
  json s = json::parse(gw.handle("GET", "/v1/models/stats", "").body);
  CHECK(s["permissions"]["SEND_SMS"]["examples_seen"] == 12);
  CHECK(s["permissions"]["SEND_SMS"]["algo"] == "NB");
}
