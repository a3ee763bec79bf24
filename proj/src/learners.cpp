#include "ctxguard/learners.hpp"

#include "ctxguard/errors.hpp"
#include "ctxguard/rng.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace ctxguard {

using nlohmann::json;

namespace {

constexpr std::uint32_t kDenseOffset = 3 * kHashSpace;
constexpr double kTokenVocabulary = 3.0 * kHashSpace;

double sigmoid(double z) {
  if (z >= 0)
    return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sign_of(Label y) { return y == Label::Legal ? 1.0 : -1.0; }
std::size_t class_index(Label y) { return y == Label::Legal ? 0 : 1; }

} // namespace

std::string_view to_string(Label l) {
  return l == Label::Legal ? "Legal" : "Illegal";
}

Label label_from_string(std::string_view s) {
  if (s == "Legal")
    return Label::Legal;
  if (s == "Illegal")
    return Label::Illegal;
  throw ValidationError("unknown label '" + std::string(s) + "'");
}

std::string_view to_string(Algo a) {
  switch (a) {
  case Algo::NB:
    return "NB";
  case Algo::LR:
    return "LR";
  case Algo::SVM:
    return "SVM";
  case Algo::HT:
    return "HT";
  }
  return "?";
}

Algo algo_from_string(std::string_view s) {
  std::string up(s);
  for (auto &c : up)
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Algo a : {Algo::NB, Algo::LR, Algo::SVM, Algo::HT})
    if (to_string(a) == up)
      return a;
  throw ValidationError("unknown algorithm '" + std::string(s) + "'");
}

void Thresholds::validate() const {
  if (!(0.0 < tau_lo && tau_lo < tau_hi && tau_hi < 1.0))
    throw ValidationError("thresholds must satisfy 0 < tau_lo < tau_hi < 1");
}

// ---------------------------------------------------------------- NB

void NaiveBayes::update(const FlatVector &x, Label y, double weight) {
  ClassStats &c = mutable_stats(y);
  c.examples += weight;
  for (const auto &[i, v] : x) {
    if (i < kDenseOffset) {
      c.token_counts[i] += v * weight;
      c.token_total += v * weight;
    } else if (v >= 0.5) {
      c.dense_on[i - kDenseOffset] += weight;
    }
  }
}

double NaiveBayes::log_likelihood(const ClassStats &c, double total_examples,
                                  const FlatVector &x) const {
  double ll = std::log((c.examples + alpha_) / (total_examples + 2 * alpha_));
  const double denom = std::log(c.token_total + alpha_ * kTokenVocabulary);
  std::array<bool, kDenseSize> dense_bits{};
  for (const auto &[i, v] : x) {
    if (i < kDenseOffset) {
      auto it = c.token_counts.find(i);
      const double count = it == c.token_counts.end() ? 0.0 : it->second;
      ll += v * (std::log(count + alpha_) - denom);
    } else {
      dense_bits[i - kDenseOffset] = v >= 0.5;
    }
  }
  for (std::size_t k = 0; k < kDenseSize; ++k) {
    const double p_on =
        (c.dense_on[k] + alpha_) / (c.examples + 2 * alpha_);
    ll += std::log(dense_bits[k] ? p_on : 1.0 - p_on);
  }
  return ll;
}

double NaiveBayes::log_odds(const FlatVector &x) const {
  const double n = legal_.examples + illegal_.examples;
  return log_likelihood(legal_, n, x) - log_likelihood(illegal_, n, x);
}

double NaiveBayes::predict(const FlatVector &x) const {
  return sigmoid(log_odds(x));
}

// ---------------------------------------------------------------- LR

LogisticRegression::LogisticRegression(double eta, double lambda)
    : eta_(eta), lambda_(lambda), v_(kFlatDim, 0.0) {}

double LogisticRegression::margin(const FlatVector &x) const {
  double s = 0;
  for (const auto &[i, v] : x)
    s += v_[i] * v;
  return scale_ * s + bias_;
}

double LogisticRegression::predict(const FlatVector &x) const {
  return sigmoid(margin(x));
}

void LogisticRegression::update(const FlatVector &x, Label y, double weight) {
  const double ys = sign_of(y);
  // d/dm of weight * log(1 + exp(-y m))
  const double g = -ys * sigmoid(-ys * margin(x)) * weight;
  scale_ *= 1.0 - eta_ * lambda_;
  if (scale_ < 1e-9)
    renormalize();
  for (const auto &[i, v] : x)
    v_[i] -= eta_ * g * v / scale_;
  bias_ -= eta_ * g;
}

double LogisticRegression::loss(const FlatVector &x, Label y,
                                double weight) const {
  double sq = 0;
  for (double v : v_)
    sq += v * v;
  return weight * softplus(-sign_of(y) * margin(x)) +
         0.5 * lambda_ * scale_ * scale_ * sq;
}

std::vector<double> LogisticRegression::gradient(const FlatVector &x, Label y,
                                                 double weight) const {
  const double ys = sign_of(y);
  const double g = -ys * sigmoid(-ys * margin(x)) * weight;
  std::vector<double> grad(kFlatDim + 1);
  for (std::size_t i = 0; i < kFlatDim; ++i)
    grad[i] = lambda_ * scale_ * v_[i];
  for (const auto &[i, v] : x)
    grad[i] += g * v;
  grad[kFlatDim] = g;
  return grad;
}

void LogisticRegression::set_weight(std::size_t i, double w) {
  v_[i] = w / scale_;
}

void LogisticRegression::renormalize() {
  for (double &v : v_)
    v *= scale_;
  scale_ = 1.0;
}

// ---------------------------------------------------------------- SVM

LinearSvm::LinearSvm(double lambda) : lambda_(lambda), v_(kFlatDim + 1, 0.0) {}

double LinearSvm::margin(const FlatVector &x) const {
  double s = v_[kFlatDim];
  for (const auto &[i, v] : x)
    s += v_[i] * v;
  return scale_ * s;
}

double LinearSvm::predict(const FlatVector &x) const {
  return sigmoid(2.0 * margin(x));
}

double LinearSvm::norm() const { return scale_ * std::sqrt(norm_sq_); }

void LinearSvm::add_scaled(const FlatVector &x, double coef) {
  // v += coef * (x, 1), keeping ||v||^2 current
  auto bump = [&](std::size_t i, double delta) {
    norm_sq_ += 2 * v_[i] * delta + delta * delta;
    v_[i] += delta;
  };
  for (const auto &[i, v] : x)
    bump(i, coef * v);
  bump(kFlatDim, coef);
}

void LinearSvm::update(const FlatVector &x, Label y, double weight) {
  ++t_;
  const double eta = 1.0 / (lambda_ * static_cast<double>(t_));
  const double ys = sign_of(y);
  const bool violated = ys * margin(x) < 1.0;
  const double shrink = 1.0 - eta * lambda_;
  if (shrink <= 0.0) {
    std::fill(v_.begin(), v_.end(), 0.0);
    norm_sq_ = 0.0;
    scale_ = 1.0;
  } else {
    scale_ *= shrink;
    if (scale_ < 1e-9)
      renormalize();
  }
  if (violated)
    add_scaled(x, eta * ys * weight / scale_);
  const double radius = 1.0 / std::sqrt(lambda_);
  const double n = norm();
  if (n > radius) {
    scale_ *= radius / n;
    if (scale_ < 1e-9)
      renormalize();
  }
}

void LinearSvm::renormalize() {
  norm_sq_ = 0.0;
  for (double &v : v_) {
    v *= scale_;
    norm_sq_ += v * v;
  }
  scale_ = 1.0;
}

// ---------------------------------------------------------------- HT

double hoeffding_bound(double range, double delta, double n) {
  return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * n));
}

namespace {

double entropy2(double a, double b) {
  const double n = a + b;
  if (n <= 0)
    return 0.0;
  double h = 0;
  for (double c : {a, b})
    if (c > 0)
      h -= (c / n) * std::log2(c / n);
  return h;
}

std::unique_ptr<HoeffdingTree::Node> clone(const HoeffdingTree::Node &n) {
  auto out = std::make_unique<HoeffdingTree::Node>();
  out->leaf = n.leaf;
  out->split_feature = n.split_feature;
  out->class_counts = n.class_counts;
  out->present_counts = n.present_counts;
  out->weight_since_eval = n.weight_since_eval;
  if (n.absent)
    out->absent = clone(*n.absent);
  if (n.present)
    out->present = clone(*n.present);
  return out;
}

bool feature_on(const FlatVector &x, std::uint32_t f) {
  auto it = std::lower_bound(
      x.begin(), x.end(), f,
      [](const std::pair<std::uint32_t, double> &p, std::uint32_t k) {
        return p.first < k;
      });
  if (it == x.end() || it->first != f)
    return false;
  return f < kDenseOffset ? it->second > 0.0 : it->second >= 0.5;
}

} // namespace

HoeffdingTree::HoeffdingTree(double delta, int grace_period,
                             double tie_threshold)
    : delta_(delta), grace_(grace_period), tie_(tie_threshold),
      root_(std::make_unique<Node>()) {}

HoeffdingTree::HoeffdingTree(const HoeffdingTree &o)
    : delta_(o.delta_), grace_(o.grace_), tie_(o.tie_), root_(clone(*o.root_)) {}

HoeffdingTree &HoeffdingTree::operator=(const HoeffdingTree &o) {
  if (this != &o) {
    delta_ = o.delta_;
    grace_ = o.grace_;
    tie_ = o.tie_;
    root_ = clone(*o.root_);
  }
  return *this;
}

const HoeffdingTree::Node &HoeffdingTree::leaf_for(const FlatVector &x) const {
  const Node *n = root_.get();
  while (!n->leaf)
    n = feature_on(x, n->split_feature) ? n->present.get() : n->absent.get();
  return *n;
}

void HoeffdingTree::update(const FlatVector &x, Label y, double weight) {
  Node *n = root_.get();
  while (!n->leaf)
    n = feature_on(x, n->split_feature) ? n->present.get() : n->absent.get();
  const std::size_t c = class_index(y);
  n->class_counts[c] += weight;
  for (const auto &[i, v] : x)
    if (i < kDenseOffset ? v > 0.0 : v >= 0.5)
      n->present_counts[i][c] += weight;
  n->weight_since_eval += weight;
  if (n->weight_since_eval >= grace_) {
    n->weight_since_eval = 0;
    try_split(*n);
  }
}

void HoeffdingTree::try_split(Node &leaf) {
  const double a = leaf.class_counts[0];
  const double b = leaf.class_counts[1];
  if (a <= 0 || b <= 0)
    return; // pure leaf
  const double n = a + b;
  const double h = entropy2(a, b);

  // features absent from every example at this leaf have zero gain, which
  // is also the value of not splitting
  double best = 0, second = 0;
  std::uint32_t best_feature = 0;
  bool have_best = false;
  std::vector<std::uint32_t> keys;
  keys.reserve(leaf.present_counts.size());
  for (const auto &kv : leaf.present_counts)
    keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  for (std::uint32_t f : keys) {
    const auto &p = leaf.present_counts.at(f);
    const double np = p[0] + p[1];
    const double na = n - np;
    const double gain = h - (np / n) * entropy2(p[0], p[1]) -
                        (na / n) * entropy2(a - p[0], b - p[1]);
    if (!have_best || gain > best) {
      second = have_best ? best : second;
      best = gain;
      best_feature = f;
      have_best = true;
    } else if (gain > second) {
      second = gain;
    }
  }
  if (!have_best || best <= 0)
    return;
  const double eps = hoeffding_bound(1.0, delta_, n);
  if (best - second <= eps && eps >= tie_)
    return;

  const auto &p = leaf.present_counts.at(best_feature);
  leaf.leaf = false;
  leaf.split_feature = best_feature;
  leaf.present = std::make_unique<Node>();
  leaf.absent = std::make_unique<Node>();
  leaf.present->class_counts = p;
  leaf.absent->class_counts = {a - p[0], b - p[1]};
  leaf.present_counts.clear();
  leaf.present_counts.rehash(0);
}

double HoeffdingTree::predict(const FlatVector &x) const {
  const Node &leaf = leaf_for(x);
  const double n = leaf.class_counts[0] + leaf.class_counts[1];
  return n > 0 ? leaf.class_counts[0] / n : 0.5;
}

namespace {
std::size_t count_nodes(const HoeffdingTree::Node &n) {
  if (n.leaf)
    return 1;
  return 1 + count_nodes(*n.absent) + count_nodes(*n.present);
}
std::size_t node_depth(const HoeffdingTree::Node &n) {
  if (n.leaf)
    return 1;
  return 1 + std::max(node_depth(*n.absent), node_depth(*n.present));
}
} // namespace

std::size_t HoeffdingTree::node_count() const { return count_nodes(*root_); }
std::size_t HoeffdingTree::depth() const { return node_depth(*root_); }

std::optional<std::uint32_t> HoeffdingTree::root_split() const {
  if (root_->leaf)
    return std::nullopt;
  return root_->split_feature;
}

// ---------------------------------------------------------------- model

namespace {
PermissionModel::State make_state(Algo algo, const Hyperparameters &hp) {
  switch (algo) {
  case Algo::NB:
    return NaiveBayes(hp.nb_alpha);
  case Algo::LR:
    return LogisticRegression(hp.lr_eta, hp.lr_lambda);
  case Algo::SVM:
    return LinearSvm(hp.svm_lambda);
  case Algo::HT:
    break;
  }
  return HoeffdingTree(hp.ht_delta, hp.ht_grace_period, hp.ht_tie_threshold);
}
} // namespace

PermissionModel::PermissionModel(PermissionType permission, Algo algo,
                                 Hyperparameters hp, Thresholds thresholds)
    : permission_(permission), algo_(algo), hp_(hp), thresholds_(thresholds),
      state_(make_state(algo, hp)) {
  thresholds_.validate();
}

void PermissionModel::set_thresholds(const Thresholds &t) {
  t.validate();
  thresholds_ = t;
}

void PermissionModel::update_flat(const FlatVector &x, Label y, double weight) {
  if (!(weight > 0))
    throw ValidationError("example weight must be positive");
  std::visit([&](auto &m) { m.update(x, y, weight); }, state_);
  ++examples_seen_;
}

void PermissionModel::update(const ContextFeatures &f, Label y, double weight) {
  update_flat(flatten(f), y, weight);
}

double PermissionModel::predict_flat(const FlatVector &x) const {
  return std::visit([&](const auto &m) { return m.predict(x); }, state_);
}

double PermissionModel::predict(const ContextFeatures &f) const {
  return predict_flat(flatten(f));
}

void PermissionModel::train(const std::vector<TrainExample> &examples,
                            std::uint64_t seed) {
  std::vector<FlatVector> flat;
  flat.reserve(examples.size());
  for (const auto &e : examples)
    flat.push_back(flatten(e.features));
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  const bool gradient = algo_ == Algo::LR || algo_ == Algo::SVM;
  const int passes = gradient ? hp_.epochs : 1;
  Rng rng(seed);
  for (int epoch = 0; epoch < passes; ++epoch) {
    if (gradient)
      rng.shuffle(order);
    for (std::size_t i : order)
      update_flat(flat[i], examples[i].label, examples[i].weight);
  }
  // Count each example once, not once per epoch.
  examples_seen_ -= static_cast<std::uint64_t>(passes - 1) * examples.size();
}

// ---------------------------------------------------------------- codec

class ModelCodec {
public:
  static json encode(const PermissionModel &m);
  static PermissionModel decode(const json &j);

private:
  static json encode_node(const HoeffdingTree::Node &n);
  static std::unique_ptr<HoeffdingTree::Node> decode_node(const json &j);
};

namespace {

json sparse_dense(const std::vector<double> &v) {
  json a = json::array();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0)
      a.push_back({i, v[i]});
  return a;
}

json class_stats_to_json(const NaiveBayes::ClassStats &c) {
  std::vector<std::pair<std::uint32_t, double>> counts(c.token_counts.begin(),
                                                       c.token_counts.end());
  std::sort(counts.begin(), counts.end());
  json tc = json::array();
  for (const auto &[i, v] : counts)
    tc.push_back({i, v});
  return {{"examples", c.examples},
          {"token_total", c.token_total},
          {"token_counts", std::move(tc)},
          {"dense_on", c.dense_on}};
}

NaiveBayes::ClassStats class_stats_from_json(const json &j) {
  NaiveBayes::ClassStats c;
  c.examples = j.at("examples").get<double>();
  c.token_total = j.at("token_total").get<double>();
  for (const auto &p : j.at("token_counts"))
    c.token_counts[p.at(0).get<std::uint32_t>()] = p.at(1).get<double>();
  c.dense_on = j.at("dense_on").get<std::array<double, kDenseSize>>();
  if (c.examples < 0 || c.token_total < 0)
    throw ValidationError("NB counts must be non-negative");
  return c;
}

} // namespace

json ModelCodec::encode_node(const HoeffdingTree::Node &n) {
  json j;
  j["class_counts"] = n.class_counts;
  if (n.leaf) {
    std::vector<std::uint32_t> keys;
    for (const auto &kv : n.present_counts)
      keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    json pc = json::array();
    for (auto k : keys) {
      const auto &c = n.present_counts.at(k);
      pc.push_back({k, c[0], c[1]});
    }
    j["present_counts"] = std::move(pc);
    j["weight_since_eval"] = n.weight_since_eval;
  } else {
    j["split_feature"] = n.split_feature;
    j["absent"] = encode_node(*n.absent);
    j["present"] = encode_node(*n.present);
  }
  return j;
}

std::unique_ptr<HoeffdingTree::Node> ModelCodec::decode_node(const json &j) {
  auto n = std::make_unique<HoeffdingTree::Node>();
  n->class_counts = j.at("class_counts").get<std::array<double, 2>>();
  if (j.contains("split_feature")) {
    n->leaf = false;
    n->split_feature = j.at("split_feature").get<std::uint32_t>();
    n->absent = decode_node(j.at("absent"));
    n->present = decode_node(j.at("present"));
  } else {
    for (const auto &p : j.at("present_counts"))
      n->present_counts[p.at(0).get<std::uint32_t>()] = {p.at(1).get<double>(),
                                                         p.at(2).get<double>()};
    n->weight_since_eval = j.value("weight_since_eval", 0.0);
  }
  return n;
}

json ModelCodec::encode(const PermissionModel &m) {
  const auto &hp = m.hp_;
  json j;
  j["format"] = "ctxguard-model";
  j["version"] = kModelFormatVersion;
  j["permission"] = std::string(to_string(m.permission_));
  j["algo"] = std::string(to_string(m.algo_));
  j["examples_seen"] = m.examples_seen_;
  j["thresholds"] = {{"tau_lo", m.thresholds_.tau_lo},
                     {"tau_hi", m.thresholds_.tau_hi}};
  j["hyperparameters"] = {{"nb_alpha", hp.nb_alpha},
                          {"lr_eta", hp.lr_eta},
                          {"lr_lambda", hp.lr_lambda},
                          {"svm_lambda", hp.svm_lambda},
                          {"ht_delta", hp.ht_delta},
                          {"ht_tie_threshold", hp.ht_tie_threshold},
                          {"ht_grace_period", hp.ht_grace_period},
                          {"epochs", hp.epochs}};
  json params;
  std::visit(
      [&](const auto &s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NaiveBayes>) {
          params["legal"] = class_stats_to_json(s.stats(Label::Legal));
          params["illegal"] = class_stats_to_json(s.stats(Label::Illegal));
        } else if constexpr (std::is_same_v<T, LogisticRegression>) {
          std::vector<double> w(kFlatDim);
          for (std::size_t i = 0; i < kFlatDim; ++i)
            w[i] = s.weight(i);
          params["weights"] = sparse_dense(w);
          params["bias"] = s.bias();
        } else if constexpr (std::is_same_v<T, LinearSvm>) {
          std::vector<double> w(kFlatDim + 1);
          for (std::size_t i = 0; i <= kFlatDim; ++i)
            w[i] = s.weight(i);
          params["weights"] = sparse_dense(w);
          params["steps"] = s.steps();
        } else {
          params["tree"] = encode_node(s.root());
        }
      },
      m.state_);
  j["params"] = std::move(params);
  return j;
}

PermissionModel ModelCodec::decode(const json &j) {
  if (j.value("format", std::string()) != "ctxguard-model")
    throw ValidationError("not a model file");
  const int version = j.at("version").get<int>();
  if (version != kModelFormatVersion)
    throw ValidationError("model version mismatch: file has " +
                          std::to_string(version) + ", expected " +
                          std::to_string(kModelFormatVersion));
  Hyperparameters hp;
  const auto &hj = j.at("hyperparameters");
  hp.nb_alpha = hj.at("nb_alpha").get<double>();
  hp.lr_eta = hj.at("lr_eta").get<double>();
  hp.lr_lambda = hj.at("lr_lambda").get<double>();
  hp.svm_lambda = hj.at("svm_lambda").get<double>();
  hp.ht_delta = hj.at("ht_delta").get<double>();
  hp.ht_tie_threshold = hj.at("ht_tie_threshold").get<double>();
  hp.ht_grace_period = hj.at("ht_grace_period").get<int>();
  hp.epochs = hj.at("epochs").get<int>();
  Thresholds t{j.at("thresholds").at("tau_lo").get<double>(),
               j.at("thresholds").at("tau_hi").get<double>()};
  PermissionModel m(permission_from_string(j.at("permission").get<std::string>()),
                    algo_from_string(j.at("algo").get<std::string>()), hp, t);
  m.examples_seen_ = j.at("examples_seen").get<std::uint64_t>();
  const auto &p = j.at("params");
  std::visit(
      [&](auto &s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NaiveBayes>) {
          s.mutable_stats(Label::Legal) = class_stats_from_json(p.at("legal"));
          s.mutable_stats(Label::Illegal) =
              class_stats_from_json(p.at("illegal"));
        } else if constexpr (std::is_same_v<T, LogisticRegression>) {
          for (const auto &w : p.at("weights")) {
            auto i = w.at(0).get<std::size_t>();
            if (i >= kFlatDim)
              throw ValidationError("LR weight index out of range");
            s.set_weight(i, w.at(1).get<double>());
          }
          s.set_bias(p.at("bias").get<double>());
        } else if constexpr (std::is_same_v<T, LinearSvm>) {
          for (const auto &w : p.at("weights")) {
            auto i = w.at(0).get<std::size_t>();
            if (i > kFlatDim)
              throw ValidationError("SVM weight index out of range");
            s.v_[i] = w.at(1).get<double>();
          }
          s.t_ = p.at("steps").get<std::uint64_t>();
          s.scale_ = 1.0;
          s.renormalize();
        } else {
          s.mutable_root() = std::move(*decode_node(p.at("tree")));
        }
      },
      m.state_);
  return m;
}

std::string serialize_model(const PermissionModel &m) {
  return ModelCodec::encode(m).dump() + "\n";
}

PermissionModel parse_model(std::string_view text) {
  auto j = detail::parse_json(text);
  try {
    return ModelCodec::decode(j);
  } catch (const json::exception &e) {
    throw ValidationError(std::string("model schema error: ") + e.what());
  }
}

// ---------------------------------------------------------------- metrics

double f_measure(double precision, double recall) {
  return precision + recall == 0 ? 0.0
                                 : 2 * precision * recall / (precision + recall);
}

Metrics evaluate(const std::vector<Label> &predictions,
                 const std::vector<Label> &labels) {
  if (predictions.size() != labels.size())
    throw ValidationError("evaluate: predictions and labels differ in length");
  // confusion[truth][predicted]
  double confusion[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < labels.size(); ++i)
    confusion[class_index(labels[i])][class_index(predictions[i])] += 1;

  Metrics m;
  m.total = labels.size();
  auto per_class = [&](std::size_t c) {
    ClassMetrics cm;
    const double tp = confusion[c][c];
    const double predicted = confusion[0][c] + confusion[1][c];
    const double actual = confusion[c][0] + confusion[c][1];
    cm.precision = predicted > 0 ? tp / predicted : 0.0;
    cm.recall = actual > 0 ? tp / actual : 0.0;
    cm.f = f_measure(cm.precision, cm.recall);
    cm.support = static_cast<std::size_t>(actual);
    return cm;
  };
  m.legal = per_class(0);
  m.illegal = per_class(1);
  if (m.total > 0) {
    const double n = static_cast<double>(m.total);
    const double wl = m.legal.support / n, wi = m.illegal.support / n;
    m.weighted_precision = wl * m.legal.precision + wi * m.illegal.precision;
    m.weighted_recall = wl * m.legal.recall + wi * m.illegal.recall;
    m.weighted_f = wl * m.legal.f + wi * m.illegal.f;
    m.accuracy = (confusion[0][0] + confusion[1][1]) / n;
  }
  m.macro_precision = (m.legal.precision + m.illegal.precision) / 2;
  m.macro_recall = (m.legal.recall + m.illegal.recall) / 2;
  m.macro_f = (m.legal.f + m.illegal.f) / 2;
  return m;
}

} // namespace ctxguard
