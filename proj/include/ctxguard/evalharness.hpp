#pragma once

#include "ctxguard/corpus.hpp"
#include "ctxguard/features.hpp"
#include "ctxguard/learners.hpp"
#include "ctxguard/mediator.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ctxguard {

struct EvalExample {
  ContextFeatures features;
  Label label = Label::Legal;
  PermissionType permission = PermissionType::DEVICE_ID;
  Violation violation = Violation::None;
  /// Fold grouping key (the app).
  std::string group;
  std::string instance_id;
};

/// Legal and Illegal instances with all feature sets enabled.
std::vector<EvalExample> build_dataset(const Corpus &corpus);
/// Legal instances plus the when-violating Illegal ones.
std::vector<EvalExample> when_violation_subset(const std::vector<EvalExample> &d);

/// Random partition of item indices into k folds. Ungrouped: sizes differ by
/// at most one. Grouped: whole groups are dealt, in shuffled order, to the
/// currently smallest fold. Throws ValidationError if k < 2 or there are
/// fewer items (or groups) than folds.
std::vector<std::vector<std::size_t>>
make_folds(const std::vector<std::string> &groups, std::size_t k,
           std::uint64_t seed, bool group_by_key = true);

struct CvOptions {
  std::size_t k = 5;
  std::uint64_t seed = 1;
  bool group_by_app = true;
  EnabledSets enabled;
  Hyperparameters hyperparameters;
};

struct CvResult {
  Algo algo = Algo::LR;
  std::string feature_sets = "all";
  std::map<PermissionType, Metrics> per_permission;
  /// Median of the per-permission weighted F values.
  double median_f = 0;
  double average_precision = 0;
  double average_recall = 0;
};

/// k-fold CV per permission; every fold is the test set exactly once.
/// Throws ValidationError when a permission has fewer than k examples.
CvResult cross_validate(const std::vector<EvalExample> &data, Algo algo,
                        const CvOptions &opt = {});

/// One cross_validate run per subset, in the given order.
std::vector<CvResult> ablate(const std::vector<EvalExample> &data, Algo algo,
                             const std::vector<EnabledSets> &subsets,
                             const CvOptions &opt = {});

struct UserResult {
  std::string profile_id;
  Metrics metrics;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

struct PersonalizationOptions {
  std::size_t decisions_per_user = 50;
  double train_fraction = 2.0 / 3.0;
  std::uint64_t seed = 1;
  Algo algo = Algo::LR;
  Hyperparameters hyperparameters;
};

struct PersonalizationResult {
  std::vector<UserResult> users;
  double median_f = 0;
};

/// Per profile: copy the generic model for the user-dependent permission
/// (trained on the corpus's Legal/Illegal instances of it), apply the
/// training share of the user's decisions as incremental updates, and score
/// the held-out share. Throws ValidationError if the corpus has fewer
/// user-dependent instances than decisions_per_user.
PersonalizationResult personalize_eval(const Corpus &corpus,
                                       const std::vector<UserProfile> &profiles,
                                       const PersonalizationOptions &opt = {});

struct LatencyStats {
  std::size_t requests = 0;
  double mean_ms = 0;
  double median_ms = 0;
  double p95_ms = 0;
  double max_ms = 0;
  double requests_per_min = 0;
  std::size_t rss_kb = 0;
};

/// Replays `trace` `repetitions` times through `mediator` and summarizes the
/// per-request pipeline latency of the records created.
LatencyStats bench_overhead(Mediator &mediator, const Trace &trace,
                            std::size_t repetitions);

/// Median; 0 for an empty input.
double median(std::vector<double> v);
/// Nearest-rank percentile, q in [0, 1].
double percentile(std::vector<double> v, double q);

/// Per-permission models trained on every Legal/Illegal instance.
std::map<PermissionType, PermissionModel>
train_models(const std::vector<EvalExample> &data, Algo algo,
             const Hyperparameters &hp = {}, std::uint64_t seed = 1);

// Report formatting: aligned text and JSON.
std::string format_cv_table(const CvResult &r);
std::string format_ablation_table(const std::vector<CvResult> &rows);
std::string format_personalization_table(const PersonalizationResult &r);
std::string format_latency(const LatencyStats &s);
std::string cv_to_json(const CvResult &r);
std::string ablation_to_json(const std::vector<CvResult> &rows);
std::string personalization_to_json(const PersonalizationResult &r);
std::string latency_to_json(const LatencyStats &s);

} // namespace ctxguard
