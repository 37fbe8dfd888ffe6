#include "fsmfp/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fsmfp/errors.hpp"
#include "fsmfp/rand.hpp"
#include "fsmfp/similarity.hpp"

namespace fsmfp {

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::logistic_regression: return "lr";
    case ModelKind::random_forest: return "rf";
    case ModelKind::svm_rbf: return "svm";
  }
  return "?";
}

ModelKind model_kind_from_name(std::string_view name) {
  if (name == "lr" || name == "logistic_regression") return ModelKind::logistic_regression;
  if (name == "rf" || name == "random_forest") return ModelKind::random_forest;
  if (name == "svm" || name == "svm_rbf") return ModelKind::svm_rbf;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

// ---- pair construction ----

std::vector<PairSample> build_pairs(std::span<const FeatureVector> vectors, PairPolicy policy,
                                    std::uint64_t seed, int p_value) {
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < vectors.size(); ++i)
    if (device_known(vectors[i].device_id)) labeled.push_back(i);
  if (labeled.size() < 2)
    throw ConfigError("build_pairs: need at least 2 fingerprints with known devices");

  const auto packed = pack_vectors(vectors);
  auto make_pair = [&](std::size_t i, std::size_t j) {
    PairSample s;
    s.i = i;
    s.j = j;
    s.dev_i = vectors[i].device_id;
    s.dev_j = vectors[j].device_id;
    const DistanceTriple t = distance_triple(packed[i], packed[j]);
    s.f_euclidean = t.euclidean;
    s.f_cosine = t.cosine;
    s.f_manhattan = t.manhattan;
    s.label = s.dev_i == s.dev_j ? 1 : 0;
    s.p_value = p_value;
    return s;
  };

  std::vector<PairSample> pairs;
  std::uint64_t negatives_total = 0;
  for (std::size_t a = 0; a < labeled.size(); ++a) {
    for (std::size_t b = a + 1; b < labeled.size(); ++b) {
      const bool same = vectors[labeled[a]].device_id == vectors[labeled[b]].device_id;
      if (same) {
        pairs.push_back(make_pair(labeled[a], labeled[b]));
      } else if (policy == PairPolicy::exhaustive) {
        pairs.push_back(make_pair(labeled[a], labeled[b]));
      } else {
        ++negatives_total;
      }
    }
  }

  if (policy == PairPolicy::balanced) {
    const std::uint64_t positives = pairs.size();
    const std::uint64_t want = std::min<std::uint64_t>(positives, negatives_total);
    // sample negative pairs without replacement from the (a, b) index
    // triangle via rejection
    std::mt19937_64 rng(derive_seed(seed, 0xba1a));
    std::set<std::pair<std::size_t, std::size_t>> chosen;
    const std::uint64_t m = labeled.size();
    while (chosen.size() < want) {
      std::uint64_t a = bounded_uint(rng, m);
      std::uint64_t b = bounded_uint(rng, m);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      const std::size_t ia = labeled[a], ib = labeled[b];
      if (vectors[ia].device_id == vectors[ib].device_id) continue;
      chosen.insert({ia, ib});
    }
    for (const auto& [ia, ib] : chosen) pairs.push_back(make_pair(ia, ib));
  }
  return pairs;
}

// ---- logistic regression ----

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::array<double, 3> standardize(const std::array<double, 3>& f,
                                  const std::array<double, 3>& mean,
                                  const std::array<double, 3>& scale) {
  std::array<double, 3> out;
  for (int k = 0; k < 3; ++k) out[k] = (f[k] - mean[k]) / scale[k];
  return out;
}

}  // namespace

double lr_loss(std::span<const PairSample> pairs, const std::array<double, 3>& mean,
               const std::array<double, 3>& scale, const std::array<double, 3>& w, double b,
               double l2) {
  double loss = 0;
  for (const auto& s : pairs) {
    const auto x = standardize(s.features(), mean, scale);
    const double z = w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + b;
    // numerically stable log-loss
    const double margin = s.label == 1 ? z : -z;
    loss += margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
  }
  loss /= static_cast<double>(pairs.size());
  for (double wk : w) loss += 0.5 * l2 * wk * wk;
  return loss;
}

void lr_gradient(std::span<const PairSample> pairs, const std::array<double, 3>& mean,
                 const std::array<double, 3>& scale, const std::array<double, 3>& w, double b,
                 double l2, std::array<double, 3>& grad_w, double& grad_b) {
  grad_w = {0, 0, 0};
  grad_b = 0;
  for (const auto& s : pairs) {
    const auto x = standardize(s.features(), mean, scale);
    const double z = w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + b;
    const double err = sigmoid(z) - static_cast<double>(s.label);
    for (int k = 0; k < 3; ++k) grad_w[k] += err * x[k];
    grad_b += err;
  }
  const double n = static_cast<double>(pairs.size());
  for (int k = 0; k < 3; ++k) grad_w[k] = grad_w[k] / n + l2 * w[k];
  grad_b /= n;
}

// ---- decision trees ----

double DecisionTree::predict(const std::array<double, 3>& f) const {
  int node = 0;
  while (nodes[node].feature >= 0) {
    node = f[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                           : nodes[node].right;
  }
  return nodes[node].prob;
}

namespace {

struct TreeBuilder {
  const std::vector<std::array<double, 3>>& features;
  const std::vector<int>& labels;
  const RfParams& params;
  std::mt19937_64 rng;
  std::vector<TreeNode> nodes;

  static double gini(std::uint64_t pos, std::uint64_t n) {
    if (n == 0) return 0;
    const double p = static_cast<double>(pos) / static_cast<double>(n);
    return 2.0 * p * (1.0 - p);
  }

  int build(std::vector<std::size_t>& idx, int depth) {
    std::uint64_t pos = 0;
    for (auto i : idx) pos += static_cast<std::uint64_t>(labels[i]);
    const double node_prob = idx.empty() ? 0.0 : static_cast<double>(pos) / idx.size();

    auto leaf = [&] {
      nodes.push_back({-1, 0.0, -1, -1, node_prob});
      return static_cast<int>(nodes.size() - 1);
    };
    if (depth >= params.max_depth || idx.size() < static_cast<std::size_t>(params.min_split) ||
        pos == 0 || pos == idx.size())
      return leaf();

    // one candidate feature per split (floor(sqrt(3)) = 1)
    const int feat = static_cast<int>(bounded_uint(rng, 3));
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return features[a][feat] < features[b][feat];
    });

    const double parent = gini(pos, idx.size());
    double best_gain = 0;
    std::size_t best_cut = 0;  // split between idx[best_cut-1] and idx[best_cut]
    std::uint64_t left_pos = 0;
    for (std::size_t k = 1; k < idx.size(); ++k) {
      left_pos += static_cast<std::uint64_t>(labels[idx[k - 1]]);
      if (features[idx[k - 1]][feat] == features[idx[k]][feat]) continue;
      const double wl = static_cast<double>(k) / idx.size();
      const double gain = parent - wl * gini(left_pos, k) -
                          (1.0 - wl) * gini(pos - left_pos, idx.size() - k);
      if (gain > best_gain) {
        best_gain = gain;
        best_cut = k;
      }
    }
    if (best_cut == 0 || best_gain <= 1e-12) return leaf();

    const double threshold =
        0.5 * (features[idx[best_cut - 1]][feat] + features[idx[best_cut]][feat]);
    std::vector<std::size_t> left_idx(idx.begin(), idx.begin() + best_cut);
    std::vector<std::size_t> right_idx(idx.begin() + best_cut, idx.end());

    const int me = static_cast<int>(nodes.size());
    nodes.push_back({feat, threshold, -1, -1, node_prob});
    const int left = build(left_idx, depth + 1);
    nodes[me].left = left;
    const int right = build(right_idx, depth + 1);
    nodes[me].right = right;
    return me;
  }
};

}  // namespace

// ---- training ----

ClassifierModel train(ModelKind kind, std::span<const PairSample> pairs,
                      const Hyperparameters& hyper, std::uint64_t seed) {
  if (kind == ModelKind::svm_rbf) throw UnsupportedKindError("svm_rbf");
  if (pairs.empty()) throw ConfigError("train: no pairs");
  bool has_pos = false, has_neg = false;
  for (const auto& s : pairs) (s.label == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw ConfigError("train: pairs contain a single class");

  ClassifierModel model;
  model.kind = kind;
  model.seed = seed;
  model.hyper = hyper;
  for (const auto& s : pairs) {
    model.train_devices.insert(s.dev_i);
    model.train_devices.insert(s.dev_j);
  }

  if (kind == ModelKind::logistic_regression) {
    // standardize the three distances (stored with the model)
    model.feat_mean = {0, 0, 0};
    for (const auto& s : pairs) {
      const auto f = s.features();
      for (int k = 0; k < 3; ++k) model.feat_mean[k] += f[k];
    }
    for (auto& m : model.feat_mean) m /= static_cast<double>(pairs.size());
    std::array<double, 3> var{0, 0, 0};
    for (const auto& s : pairs) {
      const auto f = s.features();
      for (int k = 0; k < 3; ++k) {
        const double d = f[k] - model.feat_mean[k];
        var[k] += d * d;
      }
    }
    for (int k = 0; k < 3; ++k) {
      const double sd = std::sqrt(var[k] / static_cast<double>(pairs.size()));
      model.feat_scale[k] = sd > 0 ? sd : 1.0;
    }

    model.weights = {0, 0, 0};
    model.bias = 0;
    std::array<double, 3> grad_w;
    double grad_b;
    for (int epoch = 0; epoch < hyper.lr.epochs; ++epoch) {
      lr_gradient(pairs, model.feat_mean, model.feat_scale, model.weights, model.bias,
                  hyper.lr.l2, grad_w, grad_b);
      for (int k = 0; k < 3; ++k) model.weights[k] -= hyper.lr.learning_rate * grad_w[k];
      model.bias -= hyper.lr.learning_rate * grad_b;
    }
    return model;
  }

  // random forest
  std::vector<std::array<double, 3>> features;
  std::vector<int> labels;
  features.reserve(pairs.size());
  labels.reserve(pairs.size());
  for (const auto& s : pairs) {
    features.push_back(s.features());
    labels.push_back(s.label);
  }

  model.trees.resize(static_cast<std::size_t>(hyper.rf.trees));
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    TreeBuilder builder{features, labels, hyper.rf, std::mt19937_64(derive_seed(seed, t)), {}};
    // bootstrap sample, same size as the training set
    std::vector<std::size_t> idx(pairs.size());
    for (auto& i : idx) i = bounded_uint(builder.rng, pairs.size());
    builder.build(idx, 0);
    model.trees[t].nodes = std::move(builder.nodes);
  }
  return model;
}

double ClassifierModel::predict(const std::array<double, 3>& features) const {
  if (kind == ModelKind::logistic_regression) {
    const auto x = standardize(features, feat_mean, feat_scale);
    return sigmoid(weights[0] * x[0] + weights[1] * x[1] + weights[2] * x[2] + bias);
  }
  // majority vote; probability is the fraction of trees voting same-device
  std::size_t votes = 0;
  for (const auto& tree : trees)
    if (tree.predict(features) >= 0.5) ++votes;
  return trees.empty() ? 0.0 : static_cast<double>(votes) / static_cast<double>(trees.size());
}

EvalOutcome evaluate_classifier(const ClassifierModel& model,
                                std::span<const PairSample> test_pairs) {
  if (test_pairs.empty()) throw ConfigError("evaluate_classifier: empty test set");
  for (const auto& s : test_pairs) {
    if (model.train_devices.count(s.dev_i) || model.train_devices.count(s.dev_j))
      throw ContractViolation("evaluate_classifier: device leaked from training split: " +
                              (model.train_devices.count(s.dev_i) ? s.dev_i : s.dev_j));
  }

  EvalOutcome out;
  std::map<int, std::pair<std::uint64_t, std::uint64_t>> per_p;  // correct, total
  for (const auto& s : test_pairs) {
    const int predicted = model.predict(s.features()) >= 0.5 ? 1 : 0;
    if (predicted == 1 && s.label == 1) out.tp++;
    if (predicted == 1 && s.label == 0) out.fp++;
    if (predicted == 0 && s.label == 0) out.tn++;
    if (predicted == 0 && s.label == 1) out.fn++;
    if (s.p_value >= 0) {
      auto& [correct, total] = per_p[s.p_value];
      correct += predicted == s.label ? 1 : 0;
      total += 1;
    }
  }
  out.accuracy = static_cast<double>(out.tp + out.tn) / static_cast<double>(test_pairs.size());
  for (const auto& [p, stat] : per_p)
    out.per_p_accuracy[p] = static_cast<double>(stat.first) / static_cast<double>(stat.second);
  return out;
}

MatchResult match_with_model(std::span<const FeatureVector> vectors,
                             const ClassifierModel& model) {
  if (vectors.size() < 2) throw ContractViolation("match_with_model: need at least 2 fingerprints");
  const auto packed = pack_vectors(vectors);
  std::vector<std::size_t> predicted(vectors.size(), 0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    std::size_t best = vectors.size();
    double best_score = -1.0;
    for (std::size_t j = 0; j < vectors.size(); ++j) {
      if (j == i) continue;
      const DistanceTriple t = distance_triple(packed[i], packed[j]);
      const double score = model.predict({t.euclidean, t.cosine, t.manhattan});
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    predicted[i] = best;
  }
  std::vector<std::string> devices;
  devices.reserve(vectors.size());
  for (const auto& v : vectors) devices.push_back(v.device_id);
  return finish_match(std::move(predicted), devices);
}

DeviceSplit split_by_device(std::span<const FeatureVector> vectors, double train_fraction,
                            std::uint64_t seed) {
  if (train_fraction <= 0 || train_fraction >= 1)
    throw ConfigError("split_by_device: train_fraction must lie in (0, 1)");

  std::map<std::string, std::vector<std::size_t>> by_device;
  for (std::size_t i = 0; i < vectors.size(); ++i)
    if (device_known(vectors[i].device_id)) by_device[vectors[i].device_id].push_back(i);
  if (by_device.size() < 2) throw ConfigError("split_by_device: need at least 2 devices");

  std::vector<std::string> devices;
  devices.reserve(by_device.size());
  std::size_t labeled_total = 0;
  for (const auto& [dev, idx] : by_device) {
    devices.push_back(dev);
    labeled_total += idx.size();
  }

  // seeded Fisher-Yates over the device list
  std::mt19937_64 rng(derive_seed(seed, 0x5b117));
  for (std::size_t i = devices.size() - 1; i > 0; --i) {
    const std::size_t j = bounded_uint(rng, i + 1);
    std::swap(devices[i], devices[j]);
  }

  DeviceSplit split;
  std::size_t train_count = 0;
  const auto target = static_cast<std::size_t>(train_fraction * static_cast<double>(labeled_total));
  std::size_t cut = 0;
  for (; cut < devices.size(); ++cut) {
    if (train_count >= target && cut >= 1) break;
    train_count += by_device[devices[cut]].size();
  }
  if (cut == devices.size()) cut = devices.size() - 1;  // keep at least one test device

  for (std::size_t d = 0; d < devices.size(); ++d) {
    auto& side = d < cut ? split.train : split.test;
    for (std::size_t i : by_device[devices[d]]) side.push_back(vectors[i]);
  }
  return split;
}

}  // namespace fsmfp
