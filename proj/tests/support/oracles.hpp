#pragma once

// Slow reference implementations used to check the production code.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "rugwatch/common.hpp"
#include "rugwatch/gbdt.hpp"
#include "rugwatch/random.hpp"

namespace rugwatch::testing {

// --- swap math --------------------------------------------------------------

inline bool product_holds(const Amount& x, const Amount& y, const BigInt& dx, const BigInt& dy,
                          const Rational& fee) {
  const BigInt p = mp::numerator(fee);
  const BigInt q = mp::denominator(fee);
  return (BigInt(x) * q + (q - p) * dx) * (BigInt(y) - dy) >= BigInt(x) * BigInt(y) * q;
}

/// Smallest dx satisfying the product inequality, by bisection.
inline Amount bisect_exact_out(const Amount& x, const Amount& y, const Amount& dy,
                               const Rational& fee) {
  BigInt lo = 0, hi = 1;
  while (!product_holds(x, y, hi, BigInt(dy), fee)) hi *= 2;
  while (lo < hi) {
    const BigInt mid = (lo + hi) / 2;
    if (product_holds(x, y, mid, BigInt(dy), fee)) hi = mid;
    else lo = mid + 1;
  }
  return Amount(lo);
}

/// Largest dy < y satisfying the product inequality, by bisection.
inline Amount bisect_exact_in(const Amount& x, const Amount& y, const Amount& dx,
                              const Rational& fee) {
  BigInt lo = 0, hi = BigInt(y) - 1;
  if (hi < 0) return Amount(0);
  while (lo < hi) {
    const BigInt mid = (lo + hi + 1) / 2;
    if (product_holds(x, y, BigInt(dx), mid, fee)) lo = mid;
    else hi = mid - 1;
  }
  return Amount(lo);
}

struct SwapCase {
  Amount x, y, dy, dx;
  Rational fee;
};

inline Amount random_amount(Rng& rng, int max_digits) {
  const int digits = static_cast<int>(rng.uniform_int(1, max_digits));
  BigInt v = rng.uniform_int(1, 9);
  for (int i = 1; i < digits; ++i) v = v * 10 + rng.uniform_int(0, 9);
  return Amount(v);
}

inline SwapCase random_swap_case(Rng& rng) {
  SwapCase c;
  c.x = random_amount(rng, 30);
  do c.y = random_amount(rng, 30); while (c.y < 2);
  const BigInt ymax = BigInt(c.y) - 1;
  c.dy = Amount(1 + (BigInt(random_amount(rng, 30)) % ymax));
  c.dx = random_amount(rng, 30);
  switch (rng.uniform_int(0, 2)) {
    case 0: c.fee = Rational(0); break;
    case 1: c.fee = Rational(3, 1000); break;
    default: c.fee = Rational(rng.uniform_int(0, 999), 1000); break;
  }
  return c;
}

// --- maximum drop / recovery -------------------------------------------------

struct DropOracle {
  std::optional<double> md;
  std::size_t h = 0;
  std::size_t l = 0;
  double rc = 0.0;
};

/// Quadratic scan: h is the earliest index no other value exceeds, l the
/// earliest index of [h, n) no later value undercuts.
inline DropOracle brute_drop(const std::vector<double>& s) {
  DropOracle o;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    bool is_max = true;
    for (std::size_t j = 0; j < n && is_max; ++j) {
      if (s[j] > s[i] || (j < i && s[j] == s[i])) is_max = false;
    }
    if (is_max) {
      o.h = i;
      break;
    }
  }
  for (std::size_t i = o.h; i < n; ++i) {
    bool is_min = true;
    for (std::size_t j = o.h; j < n && is_min; ++j) {
      if (s[j] < s[i] || (j < i && s[j] == s[i])) is_min = false;
    }
    if (is_min) {
      o.l = i;
      break;
    }
  }
  if (s[o.h] > 0) o.md = (s[o.h] - s[o.l]) / s[o.h];
  if (s[o.h] > s[o.l]) {
    o.rc = std::clamp((s.back() - s[o.l]) / (s[o.h] - s[o.l]), 0.0, 1.0);
  }
  return o;
}

/// max over every h of (X_h - min of the suffix from h) / X_h.
inline double best_drop_over_all_peaks(const std::vector<double>& s) {
  double best = 0.0;
  for (std::size_t h = 0; h < s.size(); ++h) {
    if (!(s[h] > 0)) continue;
    double low = s[h];
    for (std::size_t l = h; l < s.size(); ++l) low = std::min(low, s[l]);
    best = std::max(best, (s[h] - low) / s[h]);
  }
  return best;
}

// --- clustering ------------------------------------------------------------

struct RawEdge {
  int from;
  int to;
  double weight;
};

/// Dense cubic enumeration over ordered neighbor pairs.
inline double brute_acc(int n_nodes, const std::vector<RawEdge>& edges) {
  std::vector<std::vector<double>> w(n_nodes, std::vector<double>(n_nodes, 0.0));
  for (const auto& e : edges) {
    if (e.from == e.to) continue;
    w[e.from][e.to] += e.weight;
    w[e.to][e.from] += e.weight;
  }
  double max_w = 0.0;
  for (const auto& row : w) for (double v : row) max_w = std::max(max_w, v);
  if (max_w == 0.0) return 0.0;
  double total = 0.0;
  for (int u = 0; u < n_nodes; ++u) {
    int deg = 0;
    for (int v = 0; v < n_nodes; ++v) deg += w[u][v] > 0;
    if (deg < 2) continue;
    double sum = 0.0;
    for (int v = 0; v < n_nodes; ++v) {
      for (int x = 0; x < n_nodes; ++x) {
        if (v == x || w[u][v] == 0 || w[v][x] == 0 || w[x][u] == 0) continue;
        sum += std::cbrt((w[u][v] / max_w) * (w[v][x] / max_w) * (w[x][u] / max_w));
      }
    }
    total += sum / (deg * (deg - 1.0));
  }
  return total / n_nodes;
}

// --- split search ----------------------------------------------------------

/// Every (feature, threshold, missing side) on a small matrix, scored with
/// the regularized gain written out from first principles.
/// Gain of one given split, summed row by row; nullopt when a child falls
/// below min_child_weight.
inline std::optional<double> split_gain(const gbdt::Matrix& x, const std::vector<double>& g,
                                        const std::vector<double>& h, const gbdt::Hyperparams& hp,
                                        const gbdt::SplitChoice& c) {
  auto t = [&](double v) {
    const double m = std::max(std::abs(v) - hp.alpha, 0.0);
    return v > 0 ? m : (v < 0 ? -m : 0.0);
  };
  auto score = [&](double gs, double hs) { return t(gs) * t(gs) / (hs + hp.lambda); };
  double gl = 0, hl = 0, g_all = 0, h_all = 0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double xv = x.at(i, static_cast<std::size_t>(c.feature));
    g_all += g[i];
    h_all += h[i];
    if (std::isnan(xv) ? c.missing_left : xv < c.threshold) {
      gl += g[i];
      hl += h[i];
    }
  }
  const double gr = g_all - gl, hr = h_all - hl;
  if (hl < hp.min_child_weight || hr < hp.min_child_weight) return std::nullopt;
  return 0.5 * (score(gl, hl) + score(gr, hr) - score(g_all, h_all)) - hp.gamma;
}

inline std::optional<gbdt::SplitChoice> brute_split(const gbdt::Matrix& x,
                                                    const std::vector<double>& g,
                                                    const std::vector<double>& h,
                                                    const gbdt::Hyperparams& hp) {
  auto t = [&](double v) {
    const double m = std::max(std::abs(v) - hp.alpha, 0.0);
    return v > 0 ? m : (v < 0 ? -m : 0.0);
  };
  auto score = [&](double gs, double hs) { return t(gs) * t(gs) / (hs + hp.lambda); };
  double g_all = 0, h_all = 0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    g_all += g[i];
    h_all += h[i];
  }
  std::optional<gbdt::SplitChoice> best;
  for (std::size_t f = 0; f < x.cols; ++f) {
    std::set<double> values;
    bool any_missing = false;
    for (std::size_t i = 0; i < x.rows; ++i) {
      if (std::isnan(x.at(i, f))) any_missing = true;
      else values.insert(x.at(i, f));
    }
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      double thr = v[k] + (v[k + 1] - v[k]) / 2;
      if (!(thr > v[k])) thr = v[k + 1];
      for (bool missing_left : {true, false}) {
        if (!missing_left && !any_missing) continue;
        double gl = 0, hl = 0;
        for (std::size_t i = 0; i < x.rows; ++i) {
          const double xv = x.at(i, f);
          const bool left = std::isnan(xv) ? missing_left : xv < thr;
          if (left) {
            gl += g[i];
            hl += h[i];
          }
        }
        const double gr = g_all - gl, hr = h_all - hl;
        if (hl < hp.min_child_weight || hr < hp.min_child_weight) continue;
        const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(g_all, h_all)) - hp.gamma;
        if (!(gain > 0)) continue;
        if (!best || gain > best->gain) {
          best = gbdt::SplitChoice{static_cast<int>(f), thr, missing_left, gain};
        }
      }
    }
  }
  return best;
}

}  // namespace rugwatch::testing
