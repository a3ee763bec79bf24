#pragma once

#include "ctxguard/app_model.hpp"
#include "ctxguard/features.hpp"
#include "ctxguard/learners.hpp"
#include "ctxguard/rng.hpp"
#include "ctxguard/static_analyzer.hpp"
#include "ctxguard/trace.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ctxguard {

enum class InstanceLabel { Legal, Illegal, UserDependent };
/// Which context dimension an Illegal instance gets wrong.
enum class Violation { None, Who, What, When };
/// How the sensitive call is reached: from a widget listener only, from a
/// lifecycle callback only, or from both.
enum class EntrySchema { Listener, Lifecycle, Dual };

std::string_view to_string(InstanceLabel l);
InstanceLabel instance_label_from_string(std::string_view s);
std::string_view to_string(Violation v);
Violation violation_from_string(std::string_view s);
std::string_view to_string(EntrySchema e);

struct ScenarioTemplate {
  std::string name;
  PermissionType permission = PermissionType::DEVICE_ID;
  InstanceLabel label = InstanceLabel::Legal;
  Violation violation = Violation::None;
  EntrySchema entry = EntrySchema::Listener;
  /// Page themes the template may render (text pools and geometry).
  std::vector<std::string> themes;
};

/// Every template the generator draws from.
const std::vector<ScenarioTemplate> &scenario_templates();
const ScenarioTemplate &find_template(std::string_view name);

struct TemplateMix {
  double legal = 0.50;
  double illegal = 0.35;
  double user_dependent = 0.15;
  /// Permissions Legal/Illegal instances are spread over.
  std::vector<PermissionType> permissions{kAllPermissions.begin(),
                                          kAllPermissions.end()};
  /// Throws ValidationError unless the fractions are non-negative, sum to 1,
  /// and all 7 permissions are covered.
  void validate() const;
};

struct LabeledInstance {
  std::string instance_id;
  std::string package_id;
  std::string template_name;
  PermissionType permission = PermissionType::DEVICE_ID;
  InstanceLabel label = InstanceLabel::Legal;
  Violation violation = Violation::None;
  std::string site_id;
  std::string host_activity;
  /// Index into Corpus::traces.
  std::size_t trace_index = 0;
  friend bool operator==(const LabeledInstance &,
                         const LabeledInstance &) = default;
};

struct UserProfile {
  std::string profile_id;
  /// Template name -> probability the user allows the request.
  std::map<std::string, double> preference;
  double noise_rate = 0.0;
};

struct Corpus {
  std::uint64_t seed = 0;
  std::size_t n_apps = 0;
  TemplateMix mix;
  std::vector<AppPackage> packages;
  /// Construction-time bindings per package, in extract_bindings order.
  std::map<std::string, std::vector<ContextBinding>> gold_bindings;
  std::vector<LabeledInstance> instances;
  /// One replayable trace per instance.
  std::vector<Trace> traces;

  const AppPackage &package(std::string_view id) const;
  const ContextBinding &binding(const LabeledInstance &inst) const;
};

inline constexpr std::size_t kInstancesPerApp = 10;

/// Deterministic under `seed`. Throws ValidationError on n_apps == 0 or an
/// invalid mix.
Corpus generate_corpus(std::uint64_t seed, std::size_t n_apps,
                       const TemplateMix &mix = {},
                       std::size_t instances_per_app = kInstancesPerApp);

/// Static-context features of an instance: host window rendering plus the
/// binding's entries and trigger widget.
ContextFeatures instance_features(const Corpus &corpus,
                                  const LabeledInstance &inst,
                                  const EnabledSets &enabled = {});

/// Profiles with 0/1 preferences per user-dependent template, plus one
/// always-deny profile (noise 0) and one near-random profile (all 0.5).
std::vector<UserProfile> generate_profiles(std::uint64_t seed,
                                           std::size_t count = 24,
                                           double noise_rate = 0.0);

/// Allow drawn from the profile's preference, flipped with probability
/// noise_rate. Throws ValidationError for non-user-dependent instances.
Label simulate_user(const UserProfile &profile, const LabeledInstance &inst,
                    Rng &rng);

/// Directory layout: packages/*.apkg, bindings/*.bind, traces/*.trace,
/// labels.json. Output is byte-identical for equal corpora.
void write_corpus(const Corpus &corpus, const std::filesystem::path &dir);
Corpus read_corpus(const std::filesystem::path &dir);

std::string serialize_profiles(const std::vector<UserProfile> &profiles);

} // namespace ctxguard
