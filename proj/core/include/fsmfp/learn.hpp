#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsmfp/featurize.hpp"
#include "fsmfp/similarity.hpp"

namespace fsmfp {

/// Labeled fingerprint pair: the three distances between vectors i and j,
/// label 1 iff both fingerprints belong to the same device.
struct PairSample {
  std::size_t i = 0, j = 0;
  std::string dev_i, dev_j;
  double f_euclidean = 0, f_cosine = 0, f_manhattan = 0;
  int label = 0;
  int p_value = -1;  // grouping size metadata, -1 when absent

  std::array<double, 3> features() const { return {f_euclidean, f_cosine, f_manhattan}; }
};

enum class PairPolicy { balanced, exhaustive };

/// Builds labeled pairs over fingerprints with known device ids: all
/// same-device pairs, plus either a seeded 1:1 sample of different-device
/// pairs (balanced) or all of them (exhaustive). Distances are computed on
/// the vectors as given (callers pass normalized vectors).
/// Throws ConfigError when fewer than 2 labeled fingerprints exist.
std::vector<PairSample> build_pairs(std::span<const FeatureVector> vectors, PairPolicy policy,
                                    std::uint64_t seed, int p_value = -1);

enum class ModelKind { logistic_regression, random_forest, svm_rbf };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(std::string_view name);  // throws ConfigError

struct LrParams {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-4;
};

struct RfParams {
  int trees = 100;
  int max_depth = 12;
  int min_split = 2;
  // features per split: floor(sqrt(3)) = 1
};

struct Hyperparameters {
  LrParams lr;
  RfParams rf;
};

/// One node of a CART tree laid out in a flat array. leaf when feature < 0.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1, right = -1;
  double prob = 0.0;  // positive fraction at the leaf
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  double predict(const std::array<double, 3>& f) const;
};

/// Trained same-device classifier. predict() yields the probability that a
/// pair is same-device.
struct ClassifierModel {
  ModelKind kind = ModelKind::logistic_regression;

  // logistic regression: standardizer + weights over the 3 distances
  std::array<double, 3> feat_mean{};
  std::array<double, 3> feat_scale{};
  std::array<double, 3> weights{};
  double bias = 0.0;

  // random forest
  std::vector<DecisionTree> trees;

  // training metadata
  std::uint64_t seed = 0;
  Hyperparameters hyper;
  std::set<std::string> train_devices;

  double predict(const std::array<double, 3>& features) const;
};

/// Trains one classifier kind; deterministic given seed. LR is batch
/// gradient descent on L2-regularized log-loss; RF is bagged CART with gini
/// impurity and vote-fraction probabilities. svm_rbf is not built into this
/// binary and throws UnsupportedKindError. Throws ConfigError when pairs
/// contain a single class.
ClassifierModel train(ModelKind kind, std::span<const PairSample> pairs,
                      const Hyperparameters& hyper, std::uint64_t seed);

struct EvalOutcome {
  double accuracy = 0.0;  // threshold 0.5
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::map<int, double> per_p_accuracy;  // only for pairs carrying p metadata
};

/// Accuracy and confusion counts at threshold 0.5. Re-checks that no test
/// device was seen at training time (ContractViolation on overlap). Throws
/// ConfigError on an empty test set.
EvalOutcome evaluate_classifier(const ClassifierModel& model,
                                std::span<const PairSample> test_pairs);

/// Score-based nearest-neighbor matching: each fingerprint is matched to the
/// candidate maximizing the model's same-device probability (ties to the
/// lowest index). Eligibility and accuracy follow nearest_neighbor_match.
MatchResult match_with_model(std::span<const FeatureVector> vectors,
                             const ClassifierModel& model);

/// Device-disjoint split: devices are shuffled by seed and assigned to the
/// train side until train_fraction of labeled fingerprints is covered.
/// Unknown-device fingerprints are dropped.
struct DeviceSplit {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> test;
};
DeviceSplit split_by_device(std::span<const FeatureVector> vectors, double train_fraction,
                            std::uint64_t seed);

// Internals exposed for the finite-difference gradient check.
double lr_loss(std::span<const PairSample> pairs, const std::array<double, 3>& mean,
               const std::array<double, 3>& scale, const std::array<double, 3>& w, double b,
               double l2);
void lr_gradient(std::span<const PairSample> pairs, const std::array<double, 3>& mean,
                 const std::array<double, 3>& scale, const std::array<double, 3>& w, double b,
                 double l2, std::array<double, 3>& grad_w, double& grad_b);

}  // namespace fsmfp
