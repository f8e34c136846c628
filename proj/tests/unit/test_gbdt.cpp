#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>

#include "builders.hpp"
#include "oracles.hpp"
#include "rugwatch/gbdt.hpp"

using namespace rugwatch;
using namespace rugwatch::gbdt;
using rugwatch::testing::addr;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix column(const std::vector<double>& v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m.at(i, 0) = v[i];
  return m;
}

Hyperparams plain() {
  Hyperparams hp;
  hp.learning_rate = 1.0;
  hp.lambda = 1.0;
  hp.alpha = 0.0;
  hp.gamma = 0.0;
  hp.min_child_weight = 0.0;
  return hp;
}

// Two informative columns, one noise column, some missing values.
Dataset synthetic(int n_tokens, int rows_per_token, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.x = Matrix(static_cast<std::size_t>(n_tokens * rows_per_token), 3);
  d.feature_names = {"signal", "weak", "noise"};
  std::size_t r = 0;
  for (int t = 0; t < n_tokens; ++t) {
    const int y = t % 4 == 0 ? 1 : 0;
    Address::Bytes b{};
    b[18] = static_cast<std::uint8_t>(t >> 8);
    b[19] = static_cast<std::uint8_t>(t);
    for (int k = 0; k < rows_per_token; ++k, ++r) {
      d.x.at(r, 0) = (y ? 1.0 : -1.0) + rng.uniform(-0.8, 0.8);
      d.x.at(r, 1) = rng.bernoulli(0.1) ? kNaN : y + rng.uniform(-2.0, 2.0);
      d.x.at(r, 2) = rng.uniform();
      d.y.push_back(y);
      d.group.push_back(Address(b));
    }
  }
  return d;
}

}  // namespace

TEST(LeafWeight, ClosedFormNewtonStep) {
  Hyperparams hp;
  hp.lambda = 2.0;
  hp.alpha = 0.5;
  EXPECT_NEAR(leaf_weight(3.0, 4.0, hp), -(3.0 - 0.5) / (4.0 + 2.0), 1e-12);
  EXPECT_NEAR(leaf_weight(-3.0, 4.0, hp), (3.0 - 0.5) / (4.0 + 2.0), 1e-12);
  EXPECT_EQ(leaf_weight(0.3, 4.0, hp), 0.0);
  EXPECT_EQ(soft_threshold(-0.2, 0.5), 0.0);
}

TEST(LeafWeight, SingleLeafTreeMatchesHandComputation) {
  // Constant feature: no split possible, the one tree is a single leaf.
  const Matrix x = column({1, 1, 1, 1, 1});
  const std::vector<int> y{1, 0, 0, 1, 1};
  auto hp = plain();
  hp.n_rounds = 1;
  hp.lambda = 0.7;
  hp.alpha = 0.1;
  const auto model = train(x, y, hp, 1).model;
  ASSERT_EQ(model.trees.size(), 1u);
  ASSERT_EQ(model.trees[0].nodes.size(), 1u);
  const double p = 3.0 / 5.0;
  EXPECT_NEAR(model.base_score, std::log(p / (1 - p)), 1e-12);
  double g = 0, h = 0;
  for (int v : y) {
    g += p - v;
    h += p * (1 - p);
  }
  const double tg = g > 0 ? std::max(g - 0.1, 0.0) : -std::max(-g - 0.1, 0.0);
  EXPECT_NEAR(model.trees[0].nodes[0].weight, -tg / (h + 0.7), 1e-12);
}

TEST(Split, MatchesExhaustiveSearchOnSmallData) {
  Rng rng(41);
  int with_split = 0;
  int near_ties = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto rows = static_cast<std::size_t>(rng.uniform_int(2, 8));
    const auto cols = static_cast<std::size_t>(rng.uniform_int(1, 4));
    Matrix x(rows, cols);
    for (auto& v : x.data) {
      v = rng.bernoulli(0.15) ? kNaN : static_cast<double>(rng.uniform_int(0, 5));
    }
    std::vector<double> g(rows), h(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      g[i] = rng.uniform(-1, 1);
      h[i] = rng.uniform(0.05, 0.25);
    }
    Hyperparams hp = plain();
    hp.lambda = rng.log_uniform(1e-3, 10);
    hp.alpha = rng.bernoulli(0.5) ? 0.0 : rng.uniform(0, 0.3);
    hp.gamma = rng.bernoulli(0.5) ? 0.0 : rng.uniform(0, 0.1);
    const auto got = best_split(x, g, h, hp);
    const auto want = rugwatch::testing::brute_split(x, g, h, hp);
    ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
    if (!got) continue;
    ++with_split;
    ASSERT_NEAR(got->gain, want->gain, 1e-12) << "trial " << trial;
    const auto realized = rugwatch::testing::split_gain(x, g, h, hp, *got);
    ASSERT_TRUE(realized.has_value());
    ASSERT_NEAR(*realized, got->gain, 1e-12);
    // Candidates whose gains agree to rounding noise may resolve either way.
    if (got->feature != want->feature || got->threshold != want->threshold ||
        got->missing_left != want->missing_left) {
      ++near_ties;
    }
  }
  EXPECT_GT(with_split, 100);
  EXPECT_LT(near_ties, with_split / 10);
}

TEST(Predict, EmptyModelIsSigmoidOfBase) {
  Model m;
  m.base_score = 0.4;
  m.n_features = 2;
  const std::vector<double> row{1, 2};
  EXPECT_DOUBLE_EQ(m.predict(std::span<const double>(row)), 1.0 / (1.0 + std::exp(-0.4)));
}

TEST(Predict, HandBuiltStump) {
  Model m;
  m.n_features = 1;
  m.hp.learning_rate = 1.0;
  Tree t;
  t.nodes = {Node{0, 0.5, true, 1, 2}, Node{}, Node{}};
  t.nodes[1].weight = -2.0;
  t.nodes[2].weight = 2.0;
  m.trees.push_back(t);
  const std::vector<double> hi{0.9}, lo{0.1}, missing{kNaN};
  EXPECT_NEAR(m.predict(std::span<const double>(hi)), 0.8807970779778823, 1e-15);
  EXPECT_NEAR(m.predict(std::span<const double>(lo)), 1.0 - 0.8807970779778823, 1e-15);
  EXPECT_NEAR(m.predict(std::span<const double>(missing)), 1.0 - 0.8807970779778823, 1e-15);
  const std::vector<double> wide{1, 2};
  try {
    m.predict(std::span<const double>(wide));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WidthMismatch);
  }
}

TEST(Train, SeparableDataReachesPerfectAccuracy) {
  std::vector<double> v;
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    const double xv = -1.0 + 0.1 * i + 0.05;
    v.push_back(xv);
    y.push_back(xv > 0 ? 1 : 0);
  }
  Hyperparams hp;
  hp.n_rounds = 50;
  const auto model = train(column(v), y, hp, 3).model;
  const auto m = evaluate(model.predict(column(v)), y);
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(Train, SingleClassIsDegenerate) {
  try {
    train(column({1, 2, 3}), std::vector<int>{1, 1, 1}, Hyperparams{}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateData);
  }
}

TEST(Train, LargeGammaKeepsBaseRate) {
  Rng rng(2);
  std::vector<double> v;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    v.push_back(1.0 + rng.uniform(0, 1e-3));
    y.push_back(i % 3 == 0);
  }
  Hyperparams hp;
  hp.gamma = 100;
  hp.n_rounds = 20;
  const auto model = train(column(v), y, hp, 5).model;
  for (const auto& t : model.trees) EXPECT_EQ(t.nodes.size(), 1u);
  const double base = 14.0 / 40.0;
  for (double p : model.predict(column(v))) EXPECT_NEAR(p, base, 0.02);
}

TEST(Train, LogLossNonIncreasingWithoutSubsampling) {
  const auto d = synthetic(60, 3, 9);
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    auto hp = sample_hyperparams(rng);
    hp.subsample = 1.0;
    hp.n_rounds = 40;
    const auto r = train(d.x, d.y, hp, 11);
    for (std::size_t i = 1; i < r.train_logloss.size(); ++i) {
      ASSERT_LE(r.train_logloss[i], r.train_logloss[i - 1] + 1e-12) << "round " << i;
    }
  }
}

TEST(Train, SameSeedIdenticalModel) {
  const auto d = synthetic(40, 2, 12);
  Hyperparams hp;
  hp.subsample = 0.7;
  hp.n_rounds = 25;
  const auto a = train(d.x, d.y, hp, 99).model;
  const auto b = train(d.x, d.y, hp, 99).model;
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  const auto c = train(d.x, d.y, hp, 100).model;
  EXPECT_NE(a.to_json().dump(), c.to_json().dump());
}

TEST(Train, DepthBoundedByMaxDepth) {
  const auto d = synthetic(80, 2, 13);
  for (int depth = 1; depth <= 4; ++depth) {
    Hyperparams hp;
    hp.max_depth = depth;
    hp.n_rounds = 5;
    for (const auto& t : train(d.x, d.y, hp, 1).model.trees) ASSERT_LE(t.depth(), depth);
  }
}

TEST(Model, SaveLoadPredictsBitIdentically) {
  const auto d = synthetic(50, 2, 14);
  Hyperparams hp;
  hp.n_rounds = 30;
  auto model = train(d.x, d.y, hp, 5).model;
  model.feature_names = d.feature_names;
  rugwatch::testing::TempDir dir("model");
  model.save(dir / "m.json");
  const auto loaded = Model::load(dir / "m.json");
  const auto a = model.predict(d.x);
  const auto b = loaded.predict(d.x);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);
  EXPECT_EQ(loaded.to_json().dump(), model.to_json().dump());
  EXPECT_EQ(loaded.feature_names, d.feature_names);
}

TEST(Model, UnsplitColumnsCanBePermuted) {
  auto d = synthetic(50, 2, 15);
  Hyperparams hp;
  hp.n_rounds = 10;
  const auto model = train(d.x, d.y, hp, 5).model;
  const auto gain = gain_importance(model);
  const auto before = model.predict(d.x);
  Rng rng(1);
  for (std::size_t f = 0; f < d.x.cols; ++f) {
    if (gain[f] != 0.0) continue;
    std::vector<double> col;
    for (std::size_t r = 0; r < d.x.rows; ++r) col.push_back(d.x.at(r, f));
    rng.shuffle(col);
    for (std::size_t r = 0; r < d.x.rows; ++r) d.x.at(r, f) = col[r];
  }
  EXPECT_EQ(model.predict(d.x), before);
}

TEST(Importance, InformativeFeatureDominates) {
  std::vector<double> v;
  std::vector<int> y;
  Rng rng(3);
  Matrix x(60, 3);
  for (std::size_t r = 0; r < 60; ++r) {
    const int label = r % 2;
    x.at(r, 0) = 1.0;                              // constant
    x.at(r, 1) = label + rng.uniform(-0.3, 0.3);   // informative
    x.at(r, 2) = rng.uniform();                    // noise
    y.push_back(label);
  }
  Hyperparams hp;
  hp.n_rounds = 20;
  hp.max_depth = 2;
  const auto model = train(x, y, hp, 4).model;
  const auto gain = gain_importance(model);
  EXPECT_EQ(gain[0], 0.0);
  EXPECT_GT(gain[1], gain[2]);
  const auto perm = permutation_importance(model, x, y, 5, 6);
  EXPECT_NEAR(perm[0], 0.0, 0.02);
  EXPECT_GT(perm[1], perm[2]);
  EXPECT_EQ(perm, permutation_importance(model, x, y, 5, 6));
}

TEST(Evaluate, ThresholdAndZeroDivision) {
  const std::vector<double> p{0.5, 0.49, 0.9, 0.1};
  const std::vector<int> y{1, 1, 0, 0};
  const auto m = evaluate(p, y);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, 0.5);
  const auto none = evaluate(std::vector<double>{0.1}, std::vector<int>{0});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.f1, 0.0);
}

TEST(StratifiedKFold, ExactDivisibility) {
  std::vector<std::pair<Address, int>> tokens;
  for (int i = 0; i < 10; ++i) tokens.push_back({addr(static_cast<std::uint8_t>(i)), 0});
  for (int i = 10; i < 15; ++i) tokens.push_back({addr(static_cast<std::uint8_t>(i)), 1});
  const auto folds = stratified_kfold(tokens, 5, 3);
  std::map<int, std::pair<int, int>> counts;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    (tokens[i].second ? counts[folds[i]].second : counts[folds[i]].first) += 1;
  }
  ASSERT_EQ(counts.size(), 5u);
  for (const auto& [f, c] : counts) {
    EXPECT_EQ(c.first, 2);
    EXPECT_EQ(c.second, 1);
  }
}

TEST(StratifiedKFold, BalancedWithinOneAndOrderIndependent) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = static_cast<int>(rng.uniform_int(2, 6));
    const int n0 = static_cast<int>(rng.uniform_int(k, 60));
    const int n1 = static_cast<int>(rng.uniform_int(k, 30));
    std::vector<std::pair<Address, int>> tokens;
    for (int i = 0; i < n0 + n1; ++i) {
      Address::Bytes b{};
      b[0] = static_cast<std::uint8_t>(rng.next());
      b[19] = static_cast<std::uint8_t>(i);
      b[18] = static_cast<std::uint8_t>(i >> 8);
      tokens.push_back({Address(b), i < n0 ? 0 : 1});
    }
    const auto folds = stratified_kfold(tokens, k, 77);
    std::vector<std::array<int, 2>> counts(static_cast<std::size_t>(k), {0, 0});
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      ++counts[static_cast<std::size_t>(folds[i])][static_cast<std::size_t>(tokens[i].second)];
    }
    for (int c = 0; c < 2; ++c) {
      int lo = 1 << 30, hi = 0;
      for (const auto& f : counts) {
        lo = std::min(lo, f[static_cast<std::size_t>(c)]);
        hi = std::max(hi, f[static_cast<std::size_t>(c)]);
      }
      ASSERT_LE(hi - lo, 1);
    }
    auto reversed = tokens;
    std::reverse(reversed.begin(), reversed.end());
    const auto folds_rev = stratified_kfold(reversed, k, 77);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      ASSERT_EQ(folds[i], folds_rev[tokens.size() - 1 - i]);
    }
  }
}

TEST(StratifiedKFold, TooFewTokens) {
  std::vector<std::pair<Address, int>> tokens{{addr(1), 0}, {addr(2), 0}, {addr(3), 0},
                                              {addr(4), 1}, {addr(5), 1}};
  try {
    stratified_kfold(tokens, 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewTokens);
  }
}

TEST(CrossValidate, TokensNeverStraddleFolds) {
  const auto d = synthetic(60, 5, 16);
  SearchConfig sc;
  sc.n_trials = 3;
  sc.max_rounds = 30;
  sc.patience = 5;
  sc.seed = 4;
  sc.threads = 4;
  const auto report = cross_validate(d, sc, 5);
  ASSERT_EQ(report.folds.size(), 5u);
  std::size_t valid_total = 0;
  for (const auto& f : report.folds) {
    valid_total += f.n_valid;
    EXPECT_EQ(f.n_train + f.n_valid, d.y.size());
    EXPECT_EQ(f.n_valid % 5, 0u);  // whole tokens only
  }
  EXPECT_EQ(valid_total, d.y.size());
  EXPECT_GT(report.mean.accuracy, 0.9);
  const auto again = cross_validate(d, sc, 5);
  EXPECT_EQ(report.to_json().dump(), again.to_json().dump());
  sc.threads = 1;
  EXPECT_EQ(report.to_json().dump(), cross_validate(d, sc, 5).to_json().dump());
}

TEST(Search, SingleTrialStillReports) {
  const auto d = synthetic(40, 2, 17);
  SearchConfig sc;
  sc.n_trials = 1;
  sc.max_rounds = 20;
  sc.seed = 8;
  const auto r = search(d, sc);
  EXPECT_EQ(r.trial, 0);
  EXPECT_GE(r.hp.n_rounds, 1);
  EXPECT_LE(r.hp.n_rounds, 20);
  const auto cv = cross_validate(d, sc, 5);
  EXPECT_EQ(cv.folds.size(), 5u);
}

TEST(Hyperparams, SampledWithinRanges) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const auto hp = sample_hyperparams(rng);
    ASSERT_GE(hp.max_depth, 3);
    ASSERT_LE(hp.max_depth, 10);
    ASSERT_GE(hp.subsample, 0.5);
    ASSERT_LE(hp.subsample, 1.0);
    ASSERT_GE(hp.learning_rate, 1e-5);
    ASSERT_LE(hp.learning_rate, 1.0);
    for (double v : {hp.gamma, hp.lambda, hp.alpha}) {
      ASSERT_GE(v, 1e-8 * (1 - 1e-12));
      ASSERT_LE(v, 1e2 * (1 + 1e-12));
    }
  }
  const auto hp = sample_hyperparams(rng);
  EXPECT_EQ(Hyperparams::from_json(nlohmann::json::parse(hp.to_json().dump())), hp);
}
