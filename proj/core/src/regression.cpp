#include "mediaflow/regression.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace mediaflow {

double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size() || actual.size() < 2) {
    throw RegressionError("r_squared needs two equal-length vectors of size >= 2");
  }
  const double mean =
      std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0) {
    throw RegressionError("r_squared undefined for constant actuals");
  }
  return 1.0 - ss_res / ss_tot;
}

double LinearModel::predict(std::span<const double> features) const {
  double sum = intercept;
  for (std::size_t i = 0; i < weights.size() && i < features.size(); ++i) {
    sum += weights[i] * features[i];
  }
  return sum;
}

LinearModel fit_ridge(const FeatureMatrix& X, std::span<const double> y, double lambda) {
  if (lambda < 0) throw RegressionError("lambda must be >= 0");
  if (X.empty() || X.size() != y.size()) {
    throw RegressionError("fit_ridge: X rows must match y");
  }
  const auto n = static_cast<Eigen::Index>(X.size());
  const auto d = static_cast<Eigen::Index>(X.front().size());

  // Center y and columns of X so the intercept stays unpenalized.
  Eigen::MatrixXd mat(n, d);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    target(i) = y[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) {
      mat(i, j) = X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  Eigen::RowVectorXd col_means = mat.colwise().mean();
  const double y_mean = target.mean();
  Eigen::MatrixXd centered = mat.rowwise() - col_means;
  Eigen::VectorXd centered_y = target.array() - y_mean;

  Eigen::MatrixXd gram =
      centered.transpose() * centered + lambda * Eigen::MatrixXd::Identity(d, d);
  if (lambda == 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (!lu.isInvertible()) {
      throw RegressionError(
          "singular system at lambda = 0; use a positive regularization strength");
    }
  }
  Eigen::VectorXd w = gram.ldlt().solve(centered.transpose() * centered_y);

  LinearModel model;
  model.weights.resize(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) model.weights[static_cast<std::size_t>(j)] = w(j);
  model.intercept = y_mean - col_means.dot(w);
  return model;
}

double DecisionTree::predict(std::span<const double> features) const {
  int node = 0;
  for (;;) {
    const TreeNode& current = nodes[static_cast<std::size_t>(node)];
    if (current.feature < 0) return current.value;
    node = features[static_cast<std::size_t>(current.feature)] <= current.threshold
               ? current.left
               : current.right;
  }
}

namespace {

struct SplitResult {
  int feature = -1;
  double threshold = 0;
  double sse = std::numeric_limits<double>::infinity();
};

double subset_mean(std::span<const double> y, const std::vector<std::size_t>& indices) {
  double sum = 0;
  for (std::size_t i : indices) sum += y[i];
  return sum / static_cast<double>(indices.size());
}

double subset_sse(std::span<const double> y, const std::vector<std::size_t>& indices) {
  const double mean = subset_mean(y, indices);
  double sse = 0;
  for (std::size_t i : indices) sse += (y[i] - mean) * (y[i] - mean);
  return sse;
}

// Exhaustive best split: for each feature, sort indices by value and try the
// midpoint between each pair of adjacent distinct values.
SplitResult best_split(const FeatureMatrix& X, std::span<const double> y,
                       const std::vector<std::size_t>& indices) {
  SplitResult best;
  const std::size_t dims = X.front().size();
  std::vector<std::size_t> order(indices);

  for (std::size_t f = 0; f < dims; ++f) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (X[a][f] != X[b][f]) return X[a][f] < X[b][f];
      return a < b;
    });

    // prefix sums over the sorted order
    double left_sum = 0, left_sq = 0;
    double total_sum = 0, total_sq = 0;
    for (std::size_t i : order) {
      total_sum += y[i];
      total_sq += y[i] * y[i];
    }
    const auto n = static_cast<double>(order.size());
    for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
      const double value = y[order[pos]];
      left_sum += value;
      left_sq += value * value;
      if (X[order[pos]][f] == X[order[pos + 1]][f]) continue;  // no boundary here
      const double left_n = static_cast<double>(pos + 1);
      const double right_n = n - left_n;
      const double right_sum = total_sum - left_sum;
      const double right_sq = total_sq - left_sq;
      const double sse = (left_sq - left_sum * left_sum / left_n) +
                         (right_sq - right_sum * right_sum / right_n);
      if (sse < best.sse) {
        best.sse = sse;
        best.feature = static_cast<int>(f);
        best.threshold = (X[order[pos]][f] + X[order[pos + 1]][f]) / 2.0;
      }
    }
  }
  return best;
}

int build_tree_node(DecisionTree& tree, const FeatureMatrix& X, std::span<const double> y,
                    const std::vector<std::size_t>& indices, int depth) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes.back().value = subset_mean(y, indices);

  if (depth <= 0 || indices.size() < 2) return id;
  if (subset_sse(y, indices) == 0) return id;  // already pure

  SplitResult split = best_split(X, y, indices);
  if (split.feature < 0) return id;  // all feature values identical

  std::vector<std::size_t> left, right;
  for (std::size_t i : indices) {
    (X[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right)
        .push_back(i);
  }
  if (left.empty() || right.empty()) return id;

  const int left_id = build_tree_node(tree, X, y, left, depth - 1);
  const int right_id = build_tree_node(tree, X, y, right, depth - 1);
  tree.nodes[static_cast<std::size_t>(id)].feature = split.feature;
  tree.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
  tree.nodes[static_cast<std::size_t>(id)].left = left_id;
  tree.nodes[static_cast<std::size_t>(id)].right = right_id;
  return id;
}

}  // namespace

DecisionTree fit_regression_tree(const FeatureMatrix& X, std::span<const double> y,
                                 std::span<const std::size_t> sample_indices, int max_depth) {
  if (X.empty() || X.size() != y.size()) {
    throw RegressionError("fit_regression_tree: X rows must match y");
  }
  if (sample_indices.empty()) throw RegressionError("fit_regression_tree: no samples");
  DecisionTree tree;
  std::vector<std::size_t> indices(sample_indices.begin(), sample_indices.end());
  build_tree_node(tree, X, y, indices, max_depth);
  return tree;
}

double TreeModel::predict(std::span<const double> features) const {
  if (kind == EnsembleKind::boosting) {
    double sum = base;
    for (const auto& tree : trees) sum += learning_rate * tree.predict(features);
    return sum;
  }
  if (trees.empty()) return base;
  double sum = 0;
  for (const auto& tree : trees) sum += tree.predict(features);
  return sum / static_cast<double>(trees.size());
}

std::vector<double> TreeModel::predict_all(const FeatureMatrix& X) const {
  std::vector<double> out;
  out.reserve(X.size());
  for (const auto& row : X) out.push_back(predict(row));
  return out;
}

TreeModel fit_gbdt(const FeatureMatrix& X, std::span<const double> y, int stages, int depth,
                   double learning_rate) {
  if (stages < 1) throw RegressionError("fit_gbdt: stages must be >= 1");
  if (depth < 1) throw RegressionError("fit_gbdt: depth must be >= 1");
  if (learning_rate <= 0 || learning_rate > 1) {
    throw RegressionError("fit_gbdt: learning_rate must be in (0, 1]");
  }
  if (X.size() < 2) throw RegressionError("fit_gbdt: need at least 2 samples");
  if (X.size() != y.size()) throw RegressionError("fit_gbdt: X rows must match y");

  TreeModel model;
  model.kind = EnsembleKind::boosting;
  model.learning_rate = learning_rate;
  model.base =
      std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

  std::vector<double> prediction(y.size(), model.base);
  std::vector<std::size_t> all(y.size());
  std::iota(all.begin(), all.end(), 0);

  auto record_sse = [&] {
    double sse = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      sse += (y[i] - prediction[i]) * (y[i] - prediction[i]);
    }
    model.training_sse.push_back(sse);
  };
  record_sse();  // stage 0: the constant mean predictor

  std::vector<double> residuals(y.size());
  for (int stage = 0; stage < stages; ++stage) {
    for (std::size_t i = 0; i < y.size(); ++i) residuals[i] = y[i] - prediction[i];
    DecisionTree tree = fit_regression_tree(X, residuals, all, depth);
    for (std::size_t i = 0; i < y.size(); ++i) {
      prediction[i] += learning_rate * tree.predict(X[i]);
    }
    model.trees.push_back(std::move(tree));
    record_sse();
  }
  return model;
}

TreeModel fit_random_forest(const FeatureMatrix& X, std::span<const double> y, int trees,
                            int depth, double subsample, std::uint64_t seed) {
  if (trees < 1) throw RegressionError("fit_random_forest: trees must be >= 1");
  if (subsample <= 0 || subsample > 1) {
    throw RegressionError("fit_random_forest: subsample must be in (0, 1]");
  }
  if (X.size() < 2) throw RegressionError("fit_random_forest: need at least 2 samples");
  if (X.size() != y.size()) throw RegressionError("fit_random_forest: X rows must match y");

  TreeModel model;
  model.kind = EnsembleKind::forest;
  std::mt19937_64 rng(seed);
  const auto sample_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(subsample * static_cast<double>(X.size()))));

  for (int t = 0; t < trees; ++t) {
    std::vector<std::size_t> bootstrap(sample_count);
    std::uniform_int_distribution<std::size_t> pick(0, X.size() - 1);
    for (auto& idx : bootstrap) idx = pick(rng);
    model.trees.push_back(fit_regression_tree(X, y, bootstrap, depth));
  }
  return model;
}

std::vector<std::size_t> kfold_sizes(std::size_t n, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw RegressionError("kfold: k must be in [1, n]");
  }
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), base);
  for (std::size_t i = 0; i < extra; ++i) ++sizes[i];
  return sizes;
}

CvResult kfold_cv(const FeatureMatrix& X, std::span<const double> y, int k,
                  std::uint64_t seed, const FitPredictFn& fit_predict) {
  if (X.size() != y.size()) throw RegressionError("kfold_cv: X rows must match y");
  const std::size_t n = X.size();
  const auto sizes = kfold_sizes(n, k);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  CvResult result;
  double sum = 0;
  int valid = 0;
  std::size_t offset = 0;
  for (int fold = 0; fold < k; ++fold) {
    const std::size_t fold_size = sizes[static_cast<std::size_t>(fold)];
    std::set<std::size_t> test_set(order.begin() + static_cast<std::ptrdiff_t>(offset),
                                   order.begin() + static_cast<std::ptrdiff_t>(offset + fold_size));
    offset += fold_size;

    FeatureMatrix train_X, test_X;
    std::vector<double> train_y, test_y;
    for (std::size_t i = 0; i < n; ++i) {
      if (test_set.contains(i)) {
        test_X.push_back(X[i]);
        test_y.push_back(y[i]);
      } else {
        train_X.push_back(X[i]);
        train_y.push_back(y[i]);
      }
    }

    bool constant = true;
    for (std::size_t i = 1; i < test_y.size(); ++i) {
      if (test_y[i] != test_y[0]) {
        constant = false;
        break;
      }
    }
    if (constant || test_y.size() < 2) {
      result.fold_r2.emplace_back(std::nullopt);
      result.warnings.push_back("fold " + std::to_string(fold) +
                                " has constant actuals; reported as missing");
      continue;
    }

    std::vector<double> predicted = fit_predict(train_X, train_y, test_X);
    const double r2 = r_squared(test_y, predicted);
    result.fold_r2.emplace_back(r2);
    sum += r2;
    ++valid;
  }
  if (valid == 0) throw RegressionError("kfold_cv: no valid folds");
  result.mean_r2 = sum / valid;
  return result;
}

RegressionDataset build_vote_dataset(const InteractionMatrix& state_to_outlet,
                                     const MediaRegistry& registry,
                                     const std::vector<std::pair<std::string, double>>& votes,
                                     std::size_t top_n_per_leaning, bool log_scale) {
  if (state_to_outlet.row_kind() != KeyKind::state ||
      state_to_outlet.col_kind() != KeyKind::outlet) {
    throw RegressionError("build_vote_dataset needs a state-to-outlet matrix");
  }

  // top-N outlets per leaning by received interactions
  const auto col_totals = state_to_outlet.col_sums();
  std::map<Ideology, std::vector<std::pair<std::string, Mass>>> by_leaning;
  for (const auto& [outlet_id, mass] : col_totals) {
    const MediaOutlet* outlet = registry.outlet_by_id(outlet_id);
    if (!outlet) continue;
    by_leaning[outlet->ideology].emplace_back(outlet_id, mass);
  }
  std::vector<std::string> selected;
  for (auto& [leaning, outlets] : by_leaning) {
    std::sort(outlets.begin(), outlets.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (std::size_t i = 0; i < std::min(top_n_per_leaning, outlets.size()); ++i) {
      selected.push_back(outlets[i].first);
    }
  }
  std::sort(selected.begin(), selected.end());

  RegressionDataset dataset;
  dataset.feature_names = selected;
  for (const auto& [state, share] : votes) {
    auto row_it = state_to_outlet.rows().find(state);
    std::vector<double> features(selected.size(), 0.0);
    if (row_it != state_to_outlet.rows().end()) {
      for (std::size_t f = 0; f < selected.size(); ++f) {
        if (auto cell = row_it->second.find(selected[f]); cell != row_it->second.end()) {
          double value = mass_to_double(cell->second);
          features[f] = log_scale ? std::log10(1.0 + value) : value;
        }
      }
    }
    dataset.states.push_back(state);
    dataset.X.push_back(std::move(features));
    dataset.y.push_back(share);
  }
  return dataset;
}

}  // namespace mediaflow
