#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mediaflow/interactions.hpp"

namespace mediaflow {

class RegressionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using FeatureMatrix = std::vector<std::vector<double>>;  // row-major, rows = samples

// R^2 = 1 - SS_res / SS_tot. Throws when actual is constant (zero variance)
// or the vectors are shorter than 2.
double r_squared(std::span<const double> actual, std::span<const double> predicted);

struct LinearModel {
  std::vector<double> weights;
  double intercept = 0;

  double predict(std::span<const double> features) const;
};

// Minimizes ||y - Xw - b||^2 + lambda * ||w||^2 (intercept unpenalized).
// A singular system at lambda = 0 throws, suggesting lambda > 0.
LinearModel fit_ridge(const FeatureMatrix& X, std::span<const double> y, double lambda);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  double value = 0;  // leaf prediction
  int left = -1;
  int right = -1;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> features) const;
};

// Exhaustive SSE-minimizing splits over sorted unique feature values with
// midpoint thresholds. Exact at desk scale.
DecisionTree fit_regression_tree(const FeatureMatrix& X, std::span<const double> y,
                                 std::span<const std::size_t> sample_indices, int max_depth);

enum class EnsembleKind { boosting, forest };

struct TreeModel {
  EnsembleKind kind = EnsembleKind::boosting;
  double base = 0;           // stage-0 constant (boosting) or unused (forest)
  double learning_rate = 1;  // boosting shrinkage
  std::vector<DecisionTree> trees;
  std::vector<double> training_sse;  // per stage (boosting) for monotonicity checks

  double predict(std::span<const double> features) const;
  std::vector<double> predict_all(const FeatureMatrix& X) const;
};

// Stage 0 is the mean predictor; each stage fits a depth-bounded tree to the
// current residuals and adds it scaled by learning_rate.
TreeModel fit_gbdt(const FeatureMatrix& X, std::span<const double> y, int stages, int depth,
                   double learning_rate);

// Trees fit on bootstrap subsamples; prediction is the mean over trees.
TreeModel fit_random_forest(const FeatureMatrix& X, std::span<const double> y, int trees,
                            int depth, double subsample, std::uint64_t seed);

// Trains on k-1 folds, evaluates R^2 on the held-out fold. Folds come from a
// seeded shuffle followed by a contiguous split (the first n % k folds get
// the extra sample). A fold whose actuals are constant is reported missing.
struct CvResult {
  double mean_r2 = 0;  // over valid folds
  std::vector<std::optional<double>> fold_r2;
  std::vector<std::string> warnings;
};

using FitPredictFn = std::function<std::vector<double>(
    const FeatureMatrix& train_X, std::span<const double> train_y,
    const FeatureMatrix& test_X)>;

CvResult kfold_cv(const FeatureMatrix& X, std::span<const double> y, int k,
                  std::uint64_t seed, const FitPredictFn& fit_predict);

// Deterministic fold sizes for n samples in k folds: {ceil, ..., floor}.
std::vector<std::size_t> kfold_sizes(std::size_t n, int k);

struct RegressionDataset {
  std::vector<std::string> states;        // row keys
  std::vector<std::string> feature_names; // selected outlet ids
  FeatureMatrix X;
  std::vector<double> y;  // Democratic two-party vote share
};

// Builds the vote-regression dataset from a state-by-outlet matrix: selects
// the top_n outlets per leaning by received interactions, optionally
// log-scales features (log10(1 + v)), and joins the vote-share targets.
RegressionDataset build_vote_dataset(const InteractionMatrix& state_to_outlet,
                                     const MediaRegistry& registry,
                                     const std::vector<std::pair<std::string, double>>& votes,
                                     std::size_t top_n_per_leaning, bool log_scale = false);

}  // namespace mediaflow
