#include "ctxguard/evalharness.hpp"

#include "ctxguard/errors.hpp"
#include "ctxguard/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace ctxguard {

using nlohmann::json;

std::vector<EvalExample> build_dataset(const Corpus &corpus) {
  std::vector<EvalExample> out;
  for (const auto &inst : corpus.instances) {
    if (inst.label == InstanceLabel::UserDependent)
      continue;
    EvalExample e;
    e.features = instance_features(corpus, inst);
    e.label = inst.label == InstanceLabel::Legal ? Label::Legal : Label::Illegal;
    e.permission = inst.permission;
    e.violation = inst.violation;
    e.group = inst.package_id;
    e.instance_id = inst.instance_id;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<EvalExample> when_violation_subset(const std::vector<EvalExample> &d) {
  std::vector<EvalExample> out;
  for (const auto &e : d)
    if (e.label == Label::Legal || e.violation == Violation::When)
      out.push_back(e);
  return out;
}

std::vector<std::vector<std::size_t>>
make_folds(const std::vector<std::string> &groups, std::size_t k,
           std::uint64_t seed, bool group_by_key) {
  if (k < 2)
    throw ValidationError("k must be at least 2");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  if (!group_by_key) {
    if (groups.size() < k)
      throw ValidationError("fewer items than folds");
    std::vector<std::size_t> idx(groups.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      idx[i] = i;
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i)
      folds[i % k].push_back(idx[i]);
  } else {
    std::map<std::string, std::vector<std::size_t>> by_group;
    for (std::size_t i = 0; i < groups.size(); ++i)
      by_group[groups[i]].push_back(i);
    if (by_group.size() < k)
      throw ValidationError("fewer groups than folds");
    std::vector<const std::vector<std::size_t> *> order;
    for (const auto &[_, members] : by_group)
      order.push_back(&members);
    rng.shuffle(order);
    for (const auto *members : order) {
      auto smallest = std::min_element(
          folds.begin(), folds.end(),
          [](const auto &a, const auto &b) { return a.size() < b.size(); });
      smallest->insert(smallest->end(), members->begin(), members->end());
    }
  }
  for (auto &f : folds)
    std::sort(f.begin(), f.end());
  return folds;
}

double median(std::vector<double> v) {
  if (v.empty())
    return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double percentile(std::vector<double> v, double q) {
  if (v.empty())
    return 0.0;
  std::sort(v.begin(), v.end());
  const double rank = std::ceil(q * static_cast<double>(v.size()));
  const std::size_t i = rank < 1 ? 0 : static_cast<std::size_t>(rank) - 1;
  return v[std::min(i, v.size() - 1)];
}

namespace {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return base * 0x9e3779b97f4a7c15ULL + a * 1000003ULL + b * 7919ULL + 1;
}

Label to_label(double p) { return p >= 0.5 ? Label::Legal : Label::Illegal; }

} // namespace

CvResult cross_validate(const std::vector<EvalExample> &data, Algo algo,
                        const CvOptions &opt) {
  CvResult r;
  r.algo = algo;
  r.feature_sets = opt.enabled.label();
  std::vector<double> fs, ps, rs;
  for (PermissionType perm : kAllPermissions) {
    std::vector<const EvalExample *> sub;
    for (const auto &e : data)
      if (e.permission == perm)
        sub.push_back(&e);
    if (sub.empty())
      continue;
    if (sub.size() < opt.k)
      throw ValidationError("permission " + std::string(to_string(perm)) +
                            " has fewer than k examples");
    std::vector<std::string> groups;
    for (const auto *e : sub)
      groups.push_back(e->group);
    const auto folds = make_folds(groups, opt.k,
                                  derive_seed(opt.seed, static_cast<int>(perm), 0),
                                  opt.group_by_app);
    std::vector<Label> predicted, truth;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      std::vector<bool> in_test(sub.size(), false);
      for (auto i : folds[f])
        in_test[i] = true;
      std::vector<TrainExample> train;
      for (std::size_t i = 0; i < sub.size(); ++i) {
        if (in_test[i])
          continue;
        TrainExample t{sub[i]->features, sub[i]->label, perm, 1.0};
        mask_features(t.features, opt.enabled);
        train.push_back(std::move(t));
      }
      PermissionModel m(perm, algo, opt.hyperparameters);
      m.train(train, derive_seed(opt.seed, static_cast<int>(perm), f + 1));
      for (auto i : folds[f]) {
        ContextFeatures x = sub[i]->features;
        mask_features(x, opt.enabled);
        predicted.push_back(to_label(m.predict(x)));
        truth.push_back(sub[i]->label);
      }
    }
    Metrics m = evaluate(predicted, truth);
    fs.push_back(m.weighted_f);
    ps.push_back(m.weighted_precision);
    rs.push_back(m.weighted_recall);
    r.per_permission.emplace(perm, m);
  }
  r.median_f = median(fs);
  auto mean = [](const std::vector<double> &v) {
    double s = 0;
    for (double x : v)
      s += x;
    return v.empty() ? 0.0 : s / v.size();
  };
  r.average_precision = mean(ps);
  r.average_recall = mean(rs);
  return r;
}

std::vector<CvResult> ablate(const std::vector<EvalExample> &data, Algo algo,
                             const std::vector<EnabledSets> &subsets,
                             const CvOptions &opt) {
  std::vector<CvResult> rows;
  for (const auto &s : subsets) {
    CvOptions o = opt;
    o.enabled = s;
    rows.push_back(cross_validate(data, algo, o));
  }
  return rows;
}

std::map<PermissionType, PermissionModel>
train_models(const std::vector<EvalExample> &data, Algo algo,
             const Hyperparameters &hp, std::uint64_t seed) {
  std::map<PermissionType, PermissionModel> out;
  for (PermissionType perm : kAllPermissions) {
    std::vector<TrainExample> train;
    for (const auto &e : data)
      if (e.permission == perm)
        train.push_back({e.features, e.label, perm, 1.0});
    PermissionModel m(perm, algo, hp);
    m.train(train, derive_seed(seed, static_cast<int>(perm), 99));
    out.emplace(perm, std::move(m));
  }
  return out;
}

PersonalizationResult personalize_eval(const Corpus &corpus,
                                       const std::vector<UserProfile> &profiles,
                                       const PersonalizationOptions &opt) {
  std::vector<const LabeledInstance *> pool;
  std::set<PermissionType> ud_perms;
  for (const auto &i : corpus.instances)
    if (i.label == InstanceLabel::UserDependent) {
      pool.push_back(&i);
      ud_perms.insert(i.permission);
    }
  if (pool.size() < opt.decisions_per_user)
    throw ValidationError("corpus has " + std::to_string(pool.size()) +
                          " user-dependent instances, need " +
                          std::to_string(opt.decisions_per_user));
  if (!(opt.train_fraction > 0.0 && opt.train_fraction < 1.0))
    throw ValidationError("train fraction must lie in (0, 1)");

  // generic models: every Legal/Illegal instance of the permissions involved
  std::vector<EvalExample> data = build_dataset(corpus);
  std::erase_if(data, [&](const EvalExample &e) {
    return !ud_perms.count(e.permission);
  });
  auto generic = train_models(data, opt.algo, opt.hyperparameters, opt.seed);

  std::map<const LabeledInstance *, ContextFeatures> features;
  for (const auto *i : pool)
    features.emplace(i, instance_features(corpus, *i));

  PersonalizationResult out;
  std::vector<double> fs;
  for (std::size_t u = 0; u < profiles.size(); ++u) {
    Rng rng(derive_seed(opt.seed, u, 7));
    std::vector<const LabeledInstance *> chosen = pool;
    rng.shuffle(chosen);
    chosen.resize(opt.decisions_per_user);
    std::vector<Label> decisions;
    for (const auto *i : chosen)
      decisions.push_back(simulate_user(profiles[u], *i, rng));
    const auto n_train = static_cast<std::size_t>(
        std::llround(opt.train_fraction * static_cast<double>(chosen.size())));

    std::map<PermissionType, PermissionModel> models = generic;
    for (std::size_t j = 0; j < n_train; ++j)
      models.at(chosen[j]->permission).update(features.at(chosen[j]), decisions[j]);
    std::vector<Label> predicted, truth;
    for (std::size_t j = n_train; j < chosen.size(); ++j) {
      predicted.push_back(
          to_label(models.at(chosen[j]->permission).predict(features.at(chosen[j]))));
      truth.push_back(decisions[j]);
    }
    UserResult ur;
    ur.profile_id = profiles[u].profile_id;
    ur.metrics = evaluate(predicted, truth);
    ur.train_size = n_train;
    ur.test_size = chosen.size() - n_train;
    fs.push_back(ur.metrics.weighted_f);
    out.users.push_back(std::move(ur));
  }
  out.median_f = median(fs);
  return out;
}

namespace {

std::size_t current_rss_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("VmRSS:", 0) == 0)
      return std::stoul(line.substr(6));
  return 0;
}

} // namespace

LatencyStats bench_overhead(Mediator &mediator, const Trace &trace,
                            std::size_t repetitions) {
  std::vector<double> lat;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t r = 0; r < repetitions; ++r)
    for (const auto &id : mediator.run_trace(trace))
      lat.push_back(mediator.find_record(id)->latency_ms);
  const auto t1 = std::chrono::steady_clock::now();
  LatencyStats s;
  s.requests = lat.size();
  if (!lat.empty()) {
    double sum = 0;
    for (double x : lat)
      sum += x;
    s.mean_ms = sum / lat.size();
    s.median_ms = median(lat);
    s.p95_ms = percentile(lat, 0.95);
    s.max_ms = *std::max_element(lat.begin(), lat.end());
    const double minutes = std::chrono::duration<double>(t1 - t0).count() / 60.0;
    s.requests_per_min = minutes > 0 ? lat.size() / minutes : 0.0;
  }
  s.rss_kb = current_rss_kb();
  return s;
}

// ------------------------------------------------------------ reports

namespace {

std::string fixed(double v, int digits = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

std::string cell(const std::string &s, std::size_t w, bool left = false) {
  if (s.size() >= w)
    return s;
  return left ? s + std::string(w - s.size(), ' ')
              : std::string(w - s.size(), ' ') + s;
}

json metrics_json(const Metrics &m) {
  auto cls = [](const ClassMetrics &c) {
    return json{{"precision", c.precision},
                {"recall", c.recall},
                {"f", c.f},
                {"support", c.support}};
  };
  return {{"legal", cls(m.legal)},
          {"illegal", cls(m.illegal)},
          {"weighted_precision", m.weighted_precision},
          {"weighted_recall", m.weighted_recall},
          {"weighted_f", m.weighted_f},
          {"macro_precision", m.macro_precision},
          {"macro_recall", m.macro_recall},
          {"macro_f", m.macro_f},
          {"accuracy", m.accuracy},
          {"total", m.total}};
}

json cv_json(const CvResult &r) {
  json per = json::object();
  for (const auto &[p, m] : r.per_permission)
    per[std::string(to_string(p))] = metrics_json(m);
  return {{"algo", std::string(to_string(r.algo))},
          {"feature_sets", r.feature_sets},
          {"per_permission", std::move(per)},
          {"median_f", r.median_f},
          {"average_precision", r.average_precision},
          {"average_recall", r.average_recall}};
}

} // namespace

std::string format_cv_table(const CvResult &r) {
  std::ostringstream out;
  out << "algo " << to_string(r.algo) << ", features " << r.feature_sets << "\n";
  out << cell("permission", 14, true) << cell("precision", 11)
      << cell("recall", 9) << cell("f", 9) << cell("n", 7) << "\n";
  for (const auto &[p, m] : r.per_permission)
    out << cell(std::string(to_string(p)), 14, true)
        << cell(fixed(m.weighted_precision), 11)
        << cell(fixed(m.weighted_recall), 9) << cell(fixed(m.weighted_f), 9)
        << cell(std::to_string(m.total), 7) << "\n";
  out << "median F " << fixed(r.median_f) << ", average P "
      << fixed(r.average_precision) << ", average R "
      << fixed(r.average_recall) << "\n";
  return out.str();
}

std::string format_ablation_table(const std::vector<CvResult> &rows) {
  std::ostringstream out;
  out << cell("features", 16, true) << cell("median F", 10)
      << cell("avg P", 9) << cell("avg R", 9) << "\n";
  for (const auto &r : rows)
    out << cell(r.feature_sets, 16, true) << cell(fixed(r.median_f), 10)
        << cell(fixed(r.average_precision), 9)
        << cell(fixed(r.average_recall), 9) << "\n";
  return out.str();
}

std::string format_personalization_table(const PersonalizationResult &r) {
  std::ostringstream out;
  out << cell("profile", 22, true) << cell("precision", 11)
      << cell("recall", 9) << cell("f", 9) << "\n";
  for (const auto &u : r.users)
    out << cell(u.profile_id, 22, true)
        << cell(fixed(u.metrics.weighted_precision), 11)
        << cell(fixed(u.metrics.weighted_recall), 9)
        << cell(fixed(u.metrics.weighted_f), 9) << "\n";
  out << "median F " << fixed(r.median_f) << "\n";
  return out.str();
}

std::string format_latency(const LatencyStats &s) {
  std::ostringstream out;
  out << "requests " << s.requests << "\n"
      << "mean ms " << fixed(s.mean_ms, 4) << "\n"
      << "median ms " << fixed(s.median_ms, 4) << "\n"
      << "p95 ms " << fixed(s.p95_ms, 4) << "\n"
      << "max ms " << fixed(s.max_ms, 4) << "\n"
      << "requests/min " << fixed(s.requests_per_min, 1) << "\n"
      << "rss kB " << s.rss_kb << "\n";
  return out.str();
}

std::string cv_to_json(const CvResult &r) { return cv_json(r).dump(1) + "\n"; }

std::string ablation_to_json(const std::vector<CvResult> &rows) {
  json a = json::array();
  for (const auto &r : rows)
    a.push_back(cv_json(r));
  return a.dump(1) + "\n";
}

std::string personalization_to_json(const PersonalizationResult &r) {
  json users = json::array();
  for (const auto &u : r.users)
    users.push_back({{"profile_id", u.profile_id},
                     {"metrics", metrics_json(u.metrics)},
                     {"train_size", u.train_size},
                     {"test_size", u.test_size}});
  return json{{"users", std::move(users)}, {"median_f", r.median_f}}.dump(1) +
         "\n";
}

std::string latency_to_json(const LatencyStats &s) {
  return json{{"requests", s.requests},
              {"mean_ms", s.mean_ms},
              {"median_ms", s.median_ms},
              {"p95_ms", s.p95_ms},
              {"max_ms", s.max_ms},
              {"requests_per_min", s.requests_per_min},
              {"rss_kb", s.rss_kb}}
             .dump(1) +
         "\n";
}

} // namespace ctxguard
