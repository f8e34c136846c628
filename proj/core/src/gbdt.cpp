#include "rugwatch/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "rugwatch/parallel.hpp"

namespace rugwatch::gbdt {

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
  Matrix out(idx.size(), cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(idx[r] * cols), cols,
                out.data.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return out;
}

nlohmann::ordered_json Hyperparams::to_json() const {
  nlohmann::ordered_json j;
  j["max_depth"] = max_depth;
  j["subsample"] = subsample;
  j["learning_rate"] = learning_rate;
  j["gamma"] = gamma;
  j["lambda"] = lambda;
  j["alpha"] = alpha;
  j["min_child_weight"] = min_child_weight;
  j["n_rounds"] = n_rounds;
  return j;
}

Hyperparams Hyperparams::from_json(const nlohmann::json& j) {
  Hyperparams hp;
  hp.max_depth = j.at("max_depth").get<int>();
  hp.subsample = j.at("subsample").get<double>();
  hp.learning_rate = j.at("learning_rate").get<double>();
  hp.gamma = j.at("gamma").get<double>();
  hp.lambda = j.at("lambda").get<double>();
  hp.alpha = j.at("alpha").get<double>();
  hp.min_child_weight = j.at("min_child_weight").get<double>();
  hp.n_rounds = j.at("n_rounds").get<int>();
  return hp;
}

Hyperparams sample_hyperparams(Rng& rng) {
  Hyperparams hp;
  hp.max_depth = static_cast<int>(rng.uniform_int(3, 10));
  hp.subsample = rng.uniform(0.5, 1.0);
  hp.learning_rate = rng.uniform(1e-5, 1.0);
  hp.gamma = rng.log_uniform(1e-8, 1e2);
  hp.lambda = rng.log_uniform(1e-8, 1e2);
  hp.alpha = rng.log_uniform(1e-8, 1e2);
  return hp;
}

double Tree::value(std::span<const double> row) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    const double v = row[static_cast<std::size_t>(n.feature)];
    if (std::isnan(v)) {
      i = n.missing_left ? n.left : n.right;
    } else {
      i = v < n.threshold ? n.left : n.right;
    }
  }
  return nodes[static_cast<std::size_t>(i)].weight;
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double Model::margin(std::span<const double> row) const {
  if (row.size() != n_features) {
    throw Error(ErrorCode::WidthMismatch, "row has " + std::to_string(row.size()) +
                                              " features, model expects " +
                                              std::to_string(n_features));
  }
  double m = base_score;
  for (const auto& t : trees) m += hp.learning_rate * t.value(row);
  return m;
}

double Model::predict(std::span<const double> row) const { return sigmoid(margin(row)); }

std::vector<double> Model::predict(const Matrix& x) const {
  std::vector<double> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict(x.row(r));
  return out;
}

nlohmann::ordered_json Model::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "rugwatch-gbdt";
  j["version"] = 1;
  j["seed"] = seed;
  j["n_features"] = n_features;
  j["feature_names"] = feature_names;
  j["base_score"] = base_score;
  j["learning_rate"] = hp.learning_rate;
  j["hyperparameters"] = hp.to_json();
  nlohmann::ordered_json ts = nlohmann::ordered_json::array();
  for (const auto& t : trees) {
    nlohmann::ordered_json ns = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
      nlohmann::ordered_json nj;
      if (n.is_leaf()) {
        nj["leaf"] = n.weight;
        nj["cover"] = n.cover;
      } else {
        nj["feature"] = n.feature;
        nj["threshold"] = n.threshold;
        nj["missing_left"] = n.missing_left;
        nj["left"] = n.left;
        nj["right"] = n.right;
        nj["gain"] = n.gain;
        nj["cover"] = n.cover;
      }
      ns.push_back(std::move(nj));
    }
    ts.push_back(std::move(ns));
  }
  j["trees"] = std::move(ts);
  return j;
}

Model Model::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "rugwatch-gbdt") {
      throw Error(ErrorCode::SchemaViolation, "not a rugwatch model");
    }
    Model m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.base_score = j.at("base_score").get<double>();
    m.hp = Hyperparams::from_json(j.at("hyperparameters"));
    m.hp.learning_rate = j.at("learning_rate").get<double>();
    for (const auto& tj : j.at("trees")) {
      Tree t;
      for (const auto& nj : tj) {
        Node n;
        n.cover = nj.at("cover").get<double>();
        if (nj.contains("leaf")) {
          n.weight = nj.at("leaf").get<double>();
        } else {
          n.feature = nj.at("feature").get<int>();
          n.threshold = nj.at("threshold").get<double>();
          n.missing_left = nj.at("missing_left").get<bool>();
          n.left = nj.at("left").get<int>();
          n.right = nj.at("right").get<int>();
          n.gain = nj.at("gain").get<double>();
        }
        t.nodes.push_back(n);
      }
      const auto size = static_cast<int>(t.nodes.size());
      if (size == 0) throw Error(ErrorCode::SchemaViolation, "empty tree");
      for (int i = 0; i < size; ++i) {
        const auto& n = t.nodes[static_cast<std::size_t>(i)];
        if (n.is_leaf()) continue;
        if (n.left <= i || n.right <= i || n.left >= size || n.right >= size ||
            static_cast<std::size_t>(n.feature) >= m.n_features || !std::isfinite(n.threshold)) {
          throw Error(ErrorCode::SchemaViolation, "malformed split node");
        }
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("model JSON: ") + e.what());
  }
}

void Model::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

Model Model::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
}

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double leaf_weight(double g, double h, const Hyperparams& hp) {
  return -soft_threshold(g, hp.alpha) / (h + hp.lambda);
}

double node_score(double g, double h, const Hyperparams& hp) {
  const double t = soft_threshold(g, hp.alpha);
  return t * t / (h + hp.lambda);
}

double split_gain(double gl, double hl, double gr, double hr, const Hyperparams& hp) {
  return 0.5 * (node_score(gl, hl, hp) + node_score(gr, hr, hp) -
                node_score(gl + gr, hl + hr, hp)) -
         hp.gamma;
}

namespace {

/// Row indices with a defined value, sorted by (value, row).
std::vector<std::vector<std::uint32_t>> presort(const Matrix& x) {
  std::vector<std::vector<std::uint32_t>> order(x.cols);
  for (std::size_t f = 0; f < x.cols; ++f) {
    auto& o = order[f];
    for (std::size_t r = 0; r < x.rows; ++r) {
      if (!std::isnan(x.at(r, f))) o.push_back(static_cast<std::uint32_t>(r));
    }
    std::stable_sort(o.begin(), o.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x.at(a, f) < x.at(b, f); });
  }
  return order;
}

struct Stats {
  double g = 0.0;
  double h = 0.0;
  std::size_t n = 0;
};

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  bool missing_left = true;
  double gain = 0.0;
};

/// Scans one feature for every open node; updates `best` with strictly
/// better candidates so the first (lowest threshold) maximum wins.
void scan_feature(const Matrix& x, std::size_t f, std::span<const std::uint32_t> order,
                  std::span<const int> slot, std::span<const Stats> totals,
                  std::span<const char> open, std::span<const double> grad,
                  std::span<const double> hess, const Hyperparams& hp,
                  std::vector<Candidate>& best) {
  const std::size_t n_nodes = totals.size();
  std::vector<Stats> present(n_nodes);
  for (auto r : order) {
    const int a = slot[r];
    if (a < 0 || !open[static_cast<std::size_t>(a)]) continue;
    auto& s = present[static_cast<std::size_t>(a)];
    s.g += grad[r];
    s.h += hess[r];
    ++s.n;
  }
  std::vector<Stats> left(n_nodes);
  std::vector<double> last(n_nodes, 0.0);
  std::vector<char> seen(n_nodes, 0);
  for (auto r : order) {
    const int ai = slot[r];
    if (ai < 0 || !open[static_cast<std::size_t>(ai)]) continue;
    const auto a = static_cast<std::size_t>(ai);
    const double v = x.at(r, f);
    if (seen[a] && v > last[a]) {
      double thr = last[a] + (v - last[a]) / 2.0;
      if (!(thr > last[a])) thr = v;
      const Stats& tot = totals[a];
      const double miss_g = tot.g - present[a].g;
      const double miss_h = tot.h - present[a].h;
      const std::size_t miss_n = tot.n - present[a].n;
      const auto consider = [&](double gl, double hl, bool missing_left) {
        const double gr = tot.g - gl;
        const double hr = tot.h - hl;
        if (hl < hp.min_child_weight || hr < hp.min_child_weight) return;
        const double gain = split_gain(gl, hl, gr, hr, hp);
        if (gain > best[a].gain) {
          best[a] = {static_cast<int>(f), thr, missing_left, gain};
        }
      };
      consider(left[a].g + miss_g, left[a].h + miss_h, true);
      if (miss_n > 0) consider(left[a].g, left[a].h, false);
    }
    left[a].g += grad[r];
    left[a].h += hess[r];
    ++left[a].n;
    last[a] = v;
    seen[a] = 1;
  }
}

Tree build_tree(const Matrix& x, const std::vector<std::vector<std::uint32_t>>& order,
                std::span<const double> grad, std::span<const double> hess,
                std::span<const char> sampled, const Hyperparams& hp) {
  Tree tree;
  tree.nodes.emplace_back();
  std::vector<int> slot(x.rows, -1);
  Stats root;
  for (std::size_t r = 0; r < x.rows; ++r) {
    if (!sampled[r]) continue;
    slot[r] = 0;
    root.g += grad[r];
    root.h += hess[r];
    ++root.n;
  }
  std::vector<int> node_of{0};
  std::vector<Stats> totals{root};
  int depth = 0;
  while (!node_of.empty()) {
    const std::size_t n_open = node_of.size();
    std::vector<char> open(n_open, depth < hp.max_depth ? 1 : 0);
    std::vector<Candidate> best(n_open);
    if (depth < hp.max_depth) {
      for (std::size_t f = 0; f < x.cols; ++f) {
        scan_feature(x, f, order[f], slot, totals, open, grad, hess, hp, best);
      }
    }
    std::vector<int> next_node_of;
    std::vector<Stats> next_totals;
    std::vector<int> child_slot(n_open, -1);
    for (std::size_t a = 0; a < n_open; ++a) {
      const auto id = static_cast<std::size_t>(node_of[a]);
      const Stats& s = totals[a];
      if (best[a].feature < 0) {
        tree.nodes[id].weight = leaf_weight(s.g, s.h, hp);
        tree.nodes[id].cover = s.h;
        continue;
      }
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& n = tree.nodes[id];
      n.feature = best[a].feature;
      n.threshold = best[a].threshold;
      n.missing_left = best[a].missing_left;
      n.gain = best[a].gain;
      n.cover = s.h;
      n.left = left;
      n.right = left + 1;
      child_slot[a] = static_cast<int>(next_node_of.size());
      next_node_of.push_back(left);
      next_node_of.push_back(left + 1);
      next_totals.emplace_back();
      next_totals.emplace_back();
    }
    for (std::size_t r = 0; r < x.rows; ++r) {
      if (slot[r] < 0) continue;
      const auto a = static_cast<std::size_t>(slot[r]);
      if (child_slot[a] < 0) {
        slot[r] = -1;
        continue;
      }
      const auto& n = tree.nodes[static_cast<std::size_t>(node_of[a])];
      const double v = x.at(r, static_cast<std::size_t>(n.feature));
      const bool go_left = std::isnan(v) ? n.missing_left : v < n.threshold;
      const int c = child_slot[a] + (go_left ? 0 : 1);
      slot[r] = c;
      auto& t = next_totals[static_cast<std::size_t>(c)];
      t.g += grad[r];
      t.h += hess[r];
      ++t.n;
    }
    node_of = std::move(next_node_of);
    totals = std::move(next_totals);
    ++depth;
  }
  return tree;
}

void check_labels(std::span<const int> y, std::size_t rows) {
  if (y.size() != rows) throw Error(ErrorCode::WidthMismatch, "label count differs from row count");
  std::size_t pos = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorCode::InvalidParams, "labels must be 0 or 1");
    pos += static_cast<std::size_t>(v);
  }
  if (rows < 2 || pos == 0 || pos == rows) {
    throw Error(ErrorCode::DegenerateData, "training data needs at least two rows of both classes");
  }
}

double logloss(std::span<const double> margin, std::span<const int> y) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = std::clamp(sigmoid(margin[i]), 1e-15, 1.0 - 1e-15);
    total -= y[i] ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(y.size());
}

void check_hyperparams(const Hyperparams& hp) {
  if (hp.max_depth < 0 || hp.n_rounds < 0 || !(hp.subsample > 0.0 && hp.subsample <= 1.0) ||
      !(hp.learning_rate > 0.0) || hp.gamma < 0.0 || hp.lambda < 0.0 || hp.alpha < 0.0 ||
      hp.min_child_weight < 0.0) {
    throw Error(ErrorCode::InvalidParams, "hyperparameters out of range: " + hp.to_json().dump());
  }
}

}  // namespace

std::optional<SplitChoice> best_split(const Matrix& x, std::span<const double> grad,
                                      std::span<const double> hess, const Hyperparams& hp) {
  const auto order = presort(x);
  std::vector<int> slot(x.rows, 0);
  Stats tot;
  for (std::size_t r = 0; r < x.rows; ++r) {
    tot.g += grad[r];
    tot.h += hess[r];
    ++tot.n;
  }
  std::vector<Stats> totals{tot};
  std::vector<char> open{1};
  std::vector<Candidate> best(1);
  for (std::size_t f = 0; f < x.cols; ++f) {
    scan_feature(x, f, order[f], slot, totals, open, grad, hess, hp, best);
  }
  if (best[0].feature < 0) return std::nullopt;
  return SplitChoice{best[0].feature, best[0].threshold, best[0].missing_left, best[0].gain};
}

TrainResult train(const Matrix& x, std::span<const int> y, const Hyperparams& hp,
                  std::uint64_t seed, const std::optional<Validation>& validation) {
  check_labels(y, x.rows);
  check_hyperparams(hp);
  if (validation && validation->x->cols != x.cols) {
    throw Error(ErrorCode::WidthMismatch, "validation width differs from training width");
  }
  const double prevalence =
      static_cast<double>(std::accumulate(y.begin(), y.end(), 0)) / static_cast<double>(y.size());

  TrainResult result;
  Model& model = result.model;
  model.base_score = std::log(prevalence / (1.0 - prevalence));
  model.hp = hp;
  model.seed = seed;
  model.n_features = x.cols;

  const auto order = presort(x);
  std::vector<double> margin(x.rows, model.base_score);
  std::vector<double> grad(x.rows), hess(x.rows);
  std::vector<char> sampled(x.rows, 1);
  Rng rng(seed);

  std::vector<double> valid_margin;
  if (validation) valid_margin.assign(validation->x->rows, model.base_score);
  std::vector<double> valid_prob;
  double best_f1 = -1.0;
  int best_round = 0;

  for (int round = 0; round < hp.n_rounds; ++round) {
    for (std::size_t r = 0; r < x.rows; ++r) {
      const double p = sigmoid(margin[r]);
      grad[r] = p - y[r];
      hess[r] = p * (1.0 - p);
    }
    if (hp.subsample < 1.0) {
      for (std::size_t r = 0; r < x.rows; ++r) sampled[r] = rng.bernoulli(hp.subsample) ? 1 : 0;
    }
    Tree tree = build_tree(x, order, grad, hess, sampled, hp);
    for (std::size_t r = 0; r < x.rows; ++r) margin[r] += hp.learning_rate * tree.value(x.row(r));
    result.train_logloss.push_back(logloss(margin, y));
    model.trees.push_back(std::move(tree));

    if (validation) {
      const Matrix& vx = *validation->x;
      valid_prob.resize(vx.rows);
      for (std::size_t r = 0; r < vx.rows; ++r) {
        valid_margin[r] += hp.learning_rate * model.trees.back().value(vx.row(r));
        valid_prob[r] = sigmoid(valid_margin[r]);
      }
      const double f1 = evaluate(valid_prob, validation->y).f1;
      result.valid_f1.push_back(f1);
      if (f1 > best_f1) {
        best_f1 = f1;
        best_round = round + 1;
      } else if (round + 1 - best_round >= validation->patience) {
        break;
      }
    }
  }
  if (validation) model.trees.resize(static_cast<std::size_t>(best_round));
  result.rounds = static_cast<int>(model.trees.size());
  model.hp.n_rounds = result.rounds;
  return result;
}

Metrics evaluate(std::span<const double> prob, std::span<const int> y) {
  if (prob.size() != y.size()) throw Error(ErrorCode::WidthMismatch, "prediction count mismatch");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool pred = prob[i] >= 0.5;
    if (pred && y[i]) ++tp;
    else if (pred) ++fp;
    else if (y[i]) ++fn;
    else ++tn;
  }
  Metrics m;
  const auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  m.accuracy = ratio(tp + tn, y.size());
  m.recall = ratio(tp, tp + fn);
  m.precision = ratio(tp, tp + fp);
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

std::vector<int> stratified_kfold(std::span<const std::pair<Address, int>> tokens, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidParams, "k must be at least 2");
  std::vector<std::size_t> idx(tokens.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return tokens[a].first < tokens[b].first; });
  for (std::size_t i = 1; i < idx.size(); ++i) {
    if (tokens[idx[i]].first == tokens[idx[i - 1]].first) {
      throw Error(ErrorCode::Precondition, "duplicate token " + tokens[idx[i]].first.to_string());
    }
  }
  std::vector<std::size_t> by_class[2];
  for (auto i : idx) {
    const int label = tokens[i].second;
    if (label != 0 && label != 1) throw Error(ErrorCode::InvalidParams, "labels must be 0 or 1");
    by_class[label].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorCode::TooFewTokens, "class " + std::to_string(c) + " has " +
                                               std::to_string(by_class[c].size()) +
                                               " tokens, fewer than k = " + std::to_string(k));
    }
  }
  Rng rng(seed);
  std::vector<int> fold(tokens.size(), 0);
  std::size_t dealt = 0;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (std::size_t j = 0; j < members.size(); ++j) {
      fold[members[j]] = static_cast<int>((dealt + j) % static_cast<std::size_t>(k));
    }
    dealt += members.size();
  }
  return fold;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = x.select_rows(rows);
  out.feature_names = feature_names;
  out.y.reserve(rows.size());
  out.group.reserve(rows.size());
  for (auto r : rows) {
    out.y.push_back(y[r]);
    out.group.push_back(group[r]);
  }
  return out;
}

namespace {

/// Distinct groups in address order with the label of their first row.
std::vector<std::pair<Address, int>> group_labels(const Dataset& data) {
  std::map<Address, int> labels;
  for (std::size_t r = 0; r < data.y.size(); ++r) labels.emplace(data.group[r], data.y[r]);
  return {labels.begin(), labels.end()};
}

/// Row indices whose group maps to `selected`.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(
    const Dataset& data, const std::map<Address, bool>& selected) {
  std::vector<std::size_t> in, out;
  for (std::size_t r = 0; r < data.y.size(); ++r) {
    (selected.at(data.group[r]) ? in : out).push_back(r);
  }
  return {std::move(in), std::move(out)};
}

Metrics metric_op(const std::vector<FoldReport>& folds,
                  double (*reduce)(const std::vector<double>&)) {
  const auto column = [&](double Metrics::*field) {
    std::vector<double> v;
    for (const auto& f : folds) v.push_back(f.metrics.*field);
    return reduce(v);
  };
  return {column(&Metrics::accuracy), column(&Metrics::recall), column(&Metrics::precision),
          column(&Metrics::f1)};
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["recall"] = m.recall;
  j["precision"] = m.precision;
  j["f1"] = m.f1;
  return j;
}

}  // namespace

SearchResult search(const Dataset& data, const SearchConfig& config) {
  if (config.n_trials < 1) throw Error(ErrorCode::InvalidParams, "n_trials must be positive");
  const auto groups = group_labels(data);

  // Token-grouped stratified holdout.
  std::vector<Address> by_class[2];
  for (const auto& [a, label] : groups) by_class[label].push_back(a);
  Rng split_rng(mix_seed(config.seed, 0x686f6c646f7574ULL));
  std::map<Address, bool> is_train;
  for (auto& members : by_class) {
    split_rng.shuffle(members);
    std::size_t n_hold = 0;
    if (members.size() >= 2) {
      n_hold = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::llround(config.holdout_fraction * static_cast<double>(members.size()))));
      n_hold = std::min(n_hold, members.size() - 1);
    }
    for (std::size_t j = 0; j < members.size(); ++j) is_train[members[j]] = j >= n_hold;
  }
  const auto [train_rows, hold_rows] = split_rows(data, is_train);
  const Dataset tr = data.subset(train_rows);
  const Dataset ho = data.subset(hold_rows);

  struct Trial {
    Hyperparams hp;
    double f1 = -1.0;
  };
  std::vector<Trial> trials(static_cast<std::size_t>(config.n_trials));
  parallel_for(trials.size(), config.threads, [&](std::size_t t) {
    const std::uint64_t trial_seed = mix_seed(config.seed, t + 1);
    Rng rng(trial_seed);
    Hyperparams hp = sample_hyperparams(rng);
    hp.n_rounds = config.max_rounds;
    std::optional<Validation> val;
    if (ho.x.rows > 0) val = Validation{&ho.x, ho.y, config.patience};
    auto res = train(tr.x, tr.y, hp, trial_seed, val);
    trials[t].hp = res.model.hp;
    trials[t].f1 = res.valid_f1.empty() ? 0.0 : res.valid_f1[static_cast<std::size_t>(res.rounds) - 1];
  });
  SearchResult best;
  best.holdout_f1 = -1.0;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    if (trials[t].f1 > best.holdout_f1) {
      best = {trials[t].hp, static_cast<int>(t), trials[t].f1};
    }
  }
  return best;
}

CvReport cross_validate(const Dataset& data, const SearchConfig& config, int k) {
  const auto groups = group_labels(data);
  const auto folds = stratified_kfold(groups, k, mix_seed(config.seed, 0x666f6c64ULL));
  std::map<Address, int> fold_of;
  for (std::size_t i = 0; i < groups.size(); ++i) fold_of[groups[i].first] = folds[i];

  CvReport report;
  for (int f = 0; f < k; ++f) {
    std::map<Address, bool> is_train;
    for (const auto& [a, fold] : fold_of) is_train[a] = fold != f;
    const auto [train_rows, valid_rows] = split_rows(data, is_train);
    const Dataset tr = data.subset(train_rows);
    const Dataset va = data.subset(valid_rows);

    SearchConfig sc = config;
    sc.seed = mix_seed(config.seed, 100 + static_cast<std::uint64_t>(f));
    const auto best = search(tr, sc);
    auto model = train(tr.x, tr.y, best.hp, mix_seed(sc.seed, 0x66696e616cULL)).model;
    model.feature_names = data.feature_names;

    FoldReport fr;
    fr.fold = f;
    fr.hp = best.hp;
    fr.n_train = tr.y.size();
    fr.n_valid = va.y.size();
    fr.metrics = evaluate(model.predict(va.x), va.y);
    report.folds.push_back(fr);
    report.models.push_back(std::move(model));
  }
  report.mean = metric_op(report.folds, mean_of);
  report.std = metric_op(report.folds, std_of);
  return report;
}

nlohmann::ordered_json CvReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json fs = nlohmann::ordered_json::array();
  for (const auto& f : folds) {
    nlohmann::ordered_json fj;
    fj["fold"] = f.fold;
    fj["n_train"] = f.n_train;
    fj["n_valid"] = f.n_valid;
    fj["metrics"] = metrics_json(f.metrics);
    fj["hyperparameters"] = f.hp.to_json();
    fs.push_back(std::move(fj));
  }
  j["folds"] = std::move(fs);
  j["mean"] = metrics_json(mean);
  j["std"] = metrics_json(std);
  return j;
}

std::vector<double> gain_importance(const Model& model) {
  std::vector<double> out(model.n_features, 0.0);
  for (const auto& t : model.trees) {
    for (const auto& n : t.nodes) {
      if (!n.is_leaf()) out[static_cast<std::size_t>(n.feature)] += n.gain;
    }
  }
  return out;
}

std::vector<double> permutation_importance(const Model& model, const Matrix& x,
                                           std::span<const int> y, int repeats,
                                           std::uint64_t seed) {
  if (repeats < 1) throw Error(ErrorCode::InvalidParams, "repeats must be positive");
  const double base = evaluate(model.predict(x), y).f1;
  std::vector<double> out(x.cols, 0.0);
  Matrix shuffled = x;
  for (std::size_t f = 0; f < x.cols; ++f) {
    std::vector<double> column(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) column[r] = x.at(r, f);
    double drop = 0.0;
    for (int s = 0; s < repeats; ++s) {
      Rng rng(mix_seed(seed, f * static_cast<std::uint64_t>(repeats) + static_cast<std::uint64_t>(s)));
      auto perm = column;
      rng.shuffle(perm);
      for (std::size_t r = 0; r < x.rows; ++r) shuffled.at(r, f) = perm[r];
      drop += base - evaluate(model.predict(shuffled), y).f1;
    }
    for (std::size_t r = 0; r < x.rows; ++r) shuffled.at(r, f) = column[r];
    out[f] = drop / repeats;
  }
  return out;
}

}  // namespace rugwatch::gbdt
