#pragma once

#include "ctxguard/app_model.hpp"
#include "ctxguard/features.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace ctxguard {

enum class Label { Legal, Illegal };
std::string_view to_string(Label l);
Label label_from_string(std::string_view s);

enum class Algo { NB, LR, SVM, HT };
std::string_view to_string(Algo a);
Algo algo_from_string(std::string_view s);

using FlatVector = std::vector<std::pair<std::uint32_t, double>>;

/// Fixed learner settings. Defaults are the project's reference values.
struct Hyperparameters {
  double nb_alpha = 1.0;
  double lr_eta = 0.1;
  double lr_lambda = 1e-4;
  double svm_lambda = 1e-4;
  double ht_delta = 1e-7;
  /// Split anyway once the Hoeffding bound falls below this (VFDT tie rule).
  double ht_tie_threshold = 0.05;
  int ht_grace_period = 200;
  /// Offline passes for the gradient learners (LR, SVM). NB and HT are
  /// count-based and see each example once.
  int epochs = 10;
  friend bool operator==(const Hyperparameters &,
                         const Hyperparameters &) = default;
};

struct Thresholds {
  double tau_lo = 0.2;
  double tau_hi = 0.8;
  /// Throws ValidationError unless 0 < tau_lo < tau_hi < 1.
  void validate() const;
  friend bool operator==(const Thresholds &, const Thresholds &) = default;
};

struct TrainExample {
  ContextFeatures features;
  Label label = Label::Legal;
  PermissionType permission = PermissionType::DEVICE_ID;
  double weight = 1.0;
};

/// Multinomial NB over the hashed count space with Laplace smoothing; the
/// dense block is binarized at 0.5 and modelled as Bernoulli features.
class NaiveBayes {
public:
  struct ClassStats {
    double examples = 0;
    double token_total = 0;
    std::unordered_map<std::uint32_t, double> token_counts;
    std::array<double, kDenseSize> dense_on{};
    friend bool operator==(const ClassStats &, const ClassStats &) = default;
  };

  explicit NaiveBayes(double alpha = 1.0) : alpha_(alpha) {}
  void update(const FlatVector &x, Label y, double weight);
  double predict(const FlatVector &x) const;
  /// log P(Legal | x) - log P(Illegal | x)
  double log_odds(const FlatVector &x) const;

  const ClassStats &stats(Label y) const {
    return y == Label::Legal ? legal_ : illegal_;
  }
  ClassStats &mutable_stats(Label y) {
    return y == Label::Legal ? legal_ : illegal_;
  }
  double alpha() const { return alpha_; }

private:
  double log_likelihood(const ClassStats &c, double total_examples,
                        const FlatVector &x) const;
  double alpha_;
  ClassStats legal_;
  ClassStats illegal_;
};

/// Logistic regression, one SGD step per example on
///   weight * log(1 + exp(-y m)) + lambda/2 ||w||^2,  m = w.x + b,
/// with y = +1 for Legal. The bias is not regularized.
class LogisticRegression {
public:
  LogisticRegression(double eta = 0.1, double lambda = 1e-4);
  void update(const FlatVector &x, Label y, double weight);
  double predict(const FlatVector &x) const;
  double margin(const FlatVector &x) const;

  double loss(const FlatVector &x, Label y, double weight = 1.0) const;
  /// Full gradient of loss(); index kFlatDim holds d/d bias.
  std::vector<double> gradient(const FlatVector &x, Label y,
                               double weight = 1.0) const;

  double weight(std::size_t i) const { return scale_ * v_[i]; }
  void set_weight(std::size_t i, double w);
  double bias() const { return bias_; }
  void set_bias(double b) { bias_ = b; }
  double eta() const { return eta_; }
  double lambda() const { return lambda_; }

private:
  void renormalize();
  double eta_;
  double lambda_;
  double scale_ = 1.0;
  double bias_ = 0.0;
  std::vector<double> v_;
};

/// Pegasos linear SVM. A constant feature (index kFlatDim) plays the bias.
/// predict() maps the margin m through sigmoid(2m).
class LinearSvm {
public:
  explicit LinearSvm(double lambda = 1e-4);
  void update(const FlatVector &x, Label y, double weight);
  double predict(const FlatVector &x) const;
  double margin(const FlatVector &x) const;
  double norm() const;
  std::uint64_t steps() const { return t_; }
  double weight(std::size_t i) const { return scale_ * v_[i]; }
  double lambda() const { return lambda_; }

  friend class ModelCodec;

private:
  void add_scaled(const FlatVector &x, double coef);
  void renormalize();
  double lambda_;
  std::uint64_t t_ = 0;
  double scale_ = 1.0;
  double norm_sq_ = 0.0; // of v_
  std::vector<double> v_;
};

/// VFDT over binarized features: token present, dense slot >= 0.5.
class HoeffdingTree {
public:
  struct Node {
    bool leaf = true;
    std::uint32_t split_feature = 0;
    std::unique_ptr<Node> absent;
    std::unique_ptr<Node> present;
    std::array<double, 2> class_counts{}; // [legal, illegal]
    std::unordered_map<std::uint32_t, std::array<double, 2>> present_counts;
    double weight_since_eval = 0;
  };

  HoeffdingTree(double delta = 1e-7, int grace_period = 200,
                double tie_threshold = 0.05);
  HoeffdingTree(const HoeffdingTree &o);
  HoeffdingTree &operator=(const HoeffdingTree &o);
  HoeffdingTree(HoeffdingTree &&) = default;
  HoeffdingTree &operator=(HoeffdingTree &&) = default;

  void update(const FlatVector &x, Label y, double weight);
  double predict(const FlatVector &x) const;

  std::size_t node_count() const;
  std::size_t depth() const;
  /// Root split feature, if the root has split.
  std::optional<std::uint32_t> root_split() const;
  const Node &root() const { return *root_; }
  Node &mutable_root() { return *root_; }

private:
  const Node &leaf_for(const FlatVector &x) const;
  void try_split(Node &leaf);
  double delta_;
  int grace_;
  double tie_;
  std::unique_ptr<Node> root_;
};

double hoeffding_bound(double range, double delta, double n);

/// Per-permission classifier plus decision thresholds.
class PermissionModel {
public:
  using State = std::variant<NaiveBayes, LogisticRegression, LinearSvm,
                             HoeffdingTree>;

  PermissionModel(PermissionType permission, Algo algo,
                  Hyperparameters hp = {}, Thresholds thresholds = {});

  void update(const ContextFeatures &f, Label y, double weight = 1.0);
  void update_flat(const FlatVector &x, Label y, double weight = 1.0);
  double predict(const ContextFeatures &f) const;
  double predict_flat(const FlatVector &x) const;

  /// Offline training: LR/SVM run `epochs` shuffled passes, NB/HT one pass
  /// in the given order. examples_seen grows by examples.size().
  void train(const std::vector<TrainExample> &examples, std::uint64_t seed);

  PermissionType permission() const { return permission_; }
  Algo algo() const { return algo_; }
  std::uint64_t examples_seen() const { return examples_seen_; }
  const Thresholds &thresholds() const { return thresholds_; }
  void set_thresholds(const Thresholds &t);
  const Hyperparameters &hyperparameters() const { return hp_; }
  const State &state() const { return state_; }
  State &mutable_state() { return state_; }

  friend class ModelCodec;

private:
  PermissionType permission_;
  Algo algo_;
  Hyperparameters hp_;
  Thresholds thresholds_;
  std::uint64_t examples_seen_ = 0;
  State state_;
};

inline constexpr int kModelFormatVersion = 1;

/// Versioned model file. parse_model rejects other versions.
std::string serialize_model(const PermissionModel &m);
PermissionModel parse_model(std::string_view text);

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f = 0;
  std::size_t support = 0;
};

struct Metrics {
  ClassMetrics legal;
  ClassMetrics illegal;
  /// Support-weighted averages of the per-class values.
  double weighted_precision = 0;
  double weighted_recall = 0;
  double weighted_f = 0;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f = 0;
  std::size_t total = 0;
  double accuracy = 0;
};

/// 2PR / (P + R), 0 when P + R == 0.
double f_measure(double precision, double recall);

/// Throws ValidationError on length mismatch.
Metrics evaluate(const std::vector<Label> &predictions,
                 const std::vector<Label> &labels);

} // namespace ctxguard
