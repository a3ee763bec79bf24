#include "ctxguard/evalharness.hpp"
#include "support.hpp"

#include <doctest.h>

#include <json.hpp>

using namespace ctxguard;
using namespace testsupport;

namespace {

const Corpus &small_corpus() {
  static const Corpus c = generate_corpus(1, 40);
  return c;
}

const std::vector<EvalExample> &small_data() {
  static const std::vector<EvalExample> d = build_dataset(small_corpus());
  return d;
}

void check_partition(const std::vector<std::vector<std::size_t>> &folds,
                     std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto &f : folds) {
    CHECK_FALSE(f.empty());
    for (auto i : f)
      ++seen.at(i);
  }
  for (int s : seen)
    CHECK(s == 1);
}

} // namespace

TEST_CASE("ungrouped folds") {
  std::vector<std::string> g(100, "x");
  auto folds = make_folds(g, 5, 3, false);
  REQUIRE(folds.size() == 5);
  check_partition(folds, 100);
  for (const auto &f : folds)
    CHECK(f.size() == 20);

  for (std::size_t n : {7u, 23u, 101u}) {
    auto f = make_folds(std::vector<std::string>(n, "x"), 4, 1, false);
    check_partition(f, n);
    std::size_t lo = n, hi = 0;
    for (auto &x : f) {
      lo = std::min(lo, x.size());
      hi = std::max(hi, x.size());
    }
    CHECK(hi - lo <= 1);
  }
  CHECK(make_folds(g, 5, 3, false) == folds);
  CHECK_FALSE(make_folds(g, 5, 4, false) == folds);
}

TEST_CASE("grouped folds keep groups together") {
  Rng rng(2);
  std::vector<std::string> g;
  for (int i = 0; i < 300; ++i)
    g.push_back("app" + std::to_string(rng.below(40)));
  auto folds = make_folds(g, 5, 1);
  check_partition(folds, g.size());
  std::map<std::string, std::size_t> home;
  for (std::size_t f = 0; f < folds.size(); ++f)
    for (auto i : folds[f]) {
      auto [it, fresh] = home.emplace(g[i], f);
      CHECK(it->second == f);
    }
}

TEST_CASE("fold errors") {
  CHECK_THROWS_AS(make_folds({"a", "b"}, 1, 1), ValidationError);
  CHECK_THROWS_AS(make_folds({"a", "b"}, 3, 1, false), ValidationError);
  CHECK_THROWS_AS(make_folds({"a", "a", "b"}, 3, 1, true), ValidationError);
}

TEST_CASE("dataset") {
  const auto &d = small_data();
  std::size_t expect = 0;
  for (const auto &i : small_corpus().instances)
    expect += i.label != InstanceLabel::UserDependent;
  CHECK(d.size() == expect);
  for (const auto &e : d)
    CHECK(e.group == e.instance_id.substr(0, e.instance_id.find('#')));
  auto w = when_violation_subset(d);
  for (const auto &e : w)
    CHECK((e.label == Label::Legal || e.violation == Violation::When));
  CHECK(w.size() < d.size());
}

TEST_CASE("cross validation is deterministic and covers every permission") {
  CvOptions o;
  o.k = 3;
  auto a = cross_validate(small_data(), Algo::NB, o);
  auto b = cross_validate(small_data(), Algo::NB, o);
  CHECK(cv_to_json(a) == cv_to_json(b));
  CHECK(a.per_permission.size() == 7);
  std::size_t total = 0;
  for (auto &[p, m] : a.per_permission) {
    total += m.total;
    CHECK(m.weighted_f >= 0.0);
    CHECK(m.weighted_f <= 1.0);
  }
  CHECK(total == small_data().size());
  auto j = nlohmann::json::parse(cv_to_json(a));
  CHECK(j["algo"] == "NB");
  CHECK_FALSE(format_cv_table(a).empty());

  o.k = 1000;
  CHECK_THROWS_AS(cross_validate(small_data(), Algo::NB, o), ValidationError);
}

TEST_CASE("reference cross-validation results are stable") {
  // Frozen regression values on the reference corpus (seed 1, 200 apps).
  static const Corpus c = generate_corpus(1, 200);
  auto d = build_dataset(c);
  auto lr = cross_validate(d, Algo::LR);
  CHECK(lr.median_f == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(lr.average_precision == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(lr.average_recall == doctest::Approx(1.0).epsilon(1e-9));
  auto nb = cross_validate(d, Algo::NB);
  CHECK(nb.median_f == doctest::Approx(0.8939057978000456).epsilon(1e-9));
  CHECK(nb.average_precision == doctest::Approx(0.9134059273934475).epsilon(1e-9));
  CHECK(nb.average_recall == doctest::Approx(0.898222241656585).epsilon(1e-9));
}

TEST_CASE("ablation produces one row per subset") {
  CvOptions o;
  o.k = 3;
  auto rows = ablate(small_data(), Algo::NB, EnabledSets::all_subsets(), o);
  REQUIRE(rows.size() == 7);
  CHECK(rows.front().feature_sets == "who");
  CHECK(rows.back().feature_sets == "all");
  CHECK(nlohmann::json::parse(ablation_to_json(rows)).size() == 7);
  CHECK_FALSE(format_ablation_table(rows).empty());
}

TEST_CASE("median and percentile") {
  CHECK(median({}) == 0.0);
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i)
    v.push_back(i);
  CHECK(percentile(v, 0.95) == 95.0);
  CHECK(percentile(v, 1.0) == 100.0);
  CHECK(percentile(v, 0.0) == 1.0);
  CHECK(percentile({}, 0.5) == 0.0);
}

TEST_CASE("train_models") {
  auto models = train_models(small_data(), Algo::LR);
  CHECK(models.size() == 7);
  for (auto &[p, m] : models) {
    CHECK(m.permission() == p);
    CHECK(m.algo() == Algo::LR);
    CHECK(m.examples_seen() > 0);
  }
}

TEST_CASE("personalization") {
  auto profiles = generate_profiles(1, 4, 0.0);
  auto r = personalize_eval(small_corpus(), profiles);
  REQUIRE(r.users.size() == 4);
  for (const auto &u : r.users) {
    CHECK(u.train_size == 33);
    CHECK(u.test_size == 17);
  }
  CHECK(personalization_to_json(r) ==
        personalization_to_json(personalize_eval(small_corpus(), profiles)));

  PersonalizationOptions big;
  big.decisions_per_user = 100000;
  CHECK_THROWS_AS(personalize_eval(small_corpus(), profiles, big), ValidationError);
}

TEST_CASE("bench_overhead summarizes created records") {
  Mediator m;
  m.install(fixture_package("qksms_compose.apkg"));
  auto s = bench_overhead(m, parse_trace(fixture("qksms_compose.trace")), 20);
  CHECK(s.requests == 20);
  CHECK(s.median_ms >= 0.0);
  CHECK(s.p95_ms >= s.median_ms);
  CHECK(s.max_ms >= s.p95_ms);
  CHECK(m.records().size() == 20);
  CHECK_FALSE(format_latency(s).empty());
}
