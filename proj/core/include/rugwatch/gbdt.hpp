#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rugwatch/common.hpp"
#include "rugwatch/random.hpp"

namespace rugwatch::gbdt {

/// Dense row-major matrix; NaN marks a missing value.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  Matrix select_rows(std::span<const std::size_t> idx) const;
};

struct Hyperparams {
  int max_depth = 6;
  double subsample = 1.0;
  double learning_rate = 0.3;
  double gamma = 0.0;
  double lambda = 1.0;
  double alpha = 0.0;
  double min_child_weight = 1.0;
  int n_rounds = 100;

  nlohmann::ordered_json to_json() const;
  static Hyperparams from_json(const nlohmann::json& j);
  bool operator==(const Hyperparams&) const = default;
};

/// Draws one configuration: max_depth uniform in [3, 10], subsample uniform
/// in [0.5, 1], learning_rate uniform in [1e-5, 1], gamma/lambda/alpha
/// log-uniform in [1e-8, 1e2].
Hyperparams sample_hyperparams(Rng& rng);

/// Split: feature >= 0, `x < threshold` goes left, NaN follows missing_left.
/// Leaf: feature == -1.
struct Node {
  int feature = -1;
  double threshold = 0.0;
  bool missing_left = true;
  int left = -1;
  int right = -1;
  double weight = 0.0;
  double gain = 0.0;
  double cover = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const Node&) const = default;
};

struct Tree {
  std::vector<Node> nodes;

  double value(std::span<const double> row) const;
  int depth() const;
  bool operator==(const Tree&) const = default;
};

struct Model {
  std::vector<Tree> trees;
  double base_score = 0.0;
  Hyperparams hp;
  std::uint64_t seed = 0;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;

  /// base_score + learning_rate * sum of tree outputs. Throws WidthMismatch.
  double margin(std::span<const double> row) const;
  double predict(std::span<const double> row) const;
  std::vector<double> predict(const Matrix& x) const;

  nlohmann::ordered_json to_json() const;
  static Model from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

  bool operator==(const Model&) const = default;
};

double sigmoid(double x);

/// Soft-threshold T_alpha(g) = sign(g) max(|g| - alpha, 0).
double soft_threshold(double g, double alpha);
/// -T_alpha(G) / (H + lambda).
double leaf_weight(double g, double h, const Hyperparams& hp);
/// T_alpha(G)^2 / (H + lambda).
double node_score(double g, double h, const Hyperparams& hp);
/// 1/2 [score(L) + score(R) - score(L + R)] - gamma.
double split_gain(double gl, double hl, double gr, double hr, const Hyperparams& hp);

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  bool missing_left = true;
  double gain = 0.0;
};

/// Best root split for the given gradients over all rows, or nullopt when no
/// candidate has positive gain. Candidates are midpoints between consecutive
/// distinct values; ties go to the lowest feature, then lowest threshold,
/// then missing-left.
std::optional<SplitChoice> best_split(const Matrix& x, std::span<const double> grad,
                                      std::span<const double> hess, const Hyperparams& hp);

struct Validation {
  const Matrix* x = nullptr;
  std::span<const int> y;
  int patience = 20;
};

struct TrainResult {
  Model model;
  /// Rounds kept (after early stopping the best-F1 prefix).
  int rounds = 0;
  std::vector<double> train_logloss;
  std::vector<double> valid_f1;
};

/// Newton boosting on logistic loss. With `validation` the model is cut to
/// the round with the best holdout F1 and stops after `patience` rounds
/// without improvement. Throws DegenerateData unless both classes occur.
TrainResult train(const Matrix& x, std::span<const int> y, const Hyperparams& hp,
                  std::uint64_t seed, const std::optional<Validation>& validation = std::nullopt);

struct Metrics {
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

/// Positive class 1; predicted positive iff probability >= 0.5.
Metrics evaluate(std::span<const double> prob, std::span<const int> y);

/// Fold index per input token. Tokens are ordered by address before each
/// class is shuffled and dealt round-robin, so the result does not depend on
/// input order. Throws TooFewTokens if a class has fewer than k tokens.
std::vector<int> stratified_kfold(std::span<const std::pair<Address, int>> tokens, int k,
                                  std::uint64_t seed);

struct Dataset {
  Matrix x;
  std::vector<int> y;
  std::vector<Address> group;
  std::vector<std::string> feature_names;

  Dataset subset(std::span<const std::size_t> rows) const;
};

struct SearchConfig {
  int n_trials = 30;
  int max_rounds = 200;
  int patience = 20;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct SearchResult {
  Hyperparams hp;
  int trial = 0;
  double holdout_f1 = 0.0;
};

/// Random search with an inner token-grouped stratified holdout; the best
/// trial is the highest holdout F1 (ties: lowest trial index). hp.n_rounds
/// is the early-stopped round count.
SearchResult search(const Dataset& data, const SearchConfig& config);

struct FoldReport {
  int fold = 0;
  Metrics metrics;
  Hyperparams hp;
  std::size_t n_train = 0;
  std::size_t n_valid = 0;
};

struct CvReport {
  std::vector<FoldReport> folds;
  Metrics mean;
  Metrics std;
  std::vector<Model> models;

  nlohmann::ordered_json to_json() const;
};

/// Grouped stratified k-fold: per fold a search on the fold-training rows,
/// the winner retrained on all of them, metrics on the fold-validation rows.
/// std uses the sample (n - 1) convention.
CvReport cross_validate(const Dataset& data, const SearchConfig& config, int k = 5);

/// Total split gain per feature.
std::vector<double> gain_importance(const Model& model);
/// Mean F1 drop over `repeats` seeded shuffles of each column.
std::vector<double> permutation_importance(const Model& model, const Matrix& x,
                                           std::span<const int> y, int repeats,
                                           std::uint64_t seed);

}  // namespace rugwatch::gbdt
