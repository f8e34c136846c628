#include "rugwatch/txgraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rugwatch::txgraph {

namespace {

std::int64_t period_of(BlockNumber block, BlockNumber origin, BlockNumber period_blocks) {
  const BlockNumber offset = block - origin;
  // floor division; blocks before the origin land in negative periods.
  return offset >= 0 ? offset / period_blocks : -((-offset + period_blocks - 1) / period_blocks);
}

/// Undirected simple graph in CSR form with normalized weights.
struct Projection {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> neighbors;
  std::vector<double> weights;

  std::size_t degree(std::size_t u) const { return offsets[u + 1] - offsets[u]; }
};

Projection project(const PeriodGraph& g) {
  const auto index_of = [&](const Address& a) {
    return static_cast<std::uint32_t>(
        std::lower_bound(g.nodes.begin(), g.nodes.end(), a) - g.nodes.begin());
  };
  std::map<std::pair<std::uint32_t, std::uint32_t>, BigInt> merged;
  for (const auto& [key, w] : g.edges) {
    if (key.first == key.second) continue;
    auto u = index_of(key.first);
    auto v = index_of(key.second);
    if (u > v) std::swap(u, v);
    merged[{u, v}] += BigInt(w);
  }
  BigInt max_weight = 0;
  for (const auto& [key, w] : merged) max_weight = std::max(max_weight, w);

  const std::size_t n = g.nodes.size();
  Projection p;
  p.offsets.assign(n + 1, 0);
  for (const auto& [key, w] : merged) {
    ++p.offsets[key.first + 1];
    ++p.offsets[key.second + 1];
  }
  std::partial_sum(p.offsets.begin(), p.offsets.end(), p.offsets.begin());
  p.neighbors.resize(p.offsets[n]);
  p.weights.resize(p.offsets[n]);
  std::vector<std::size_t> fill(p.offsets.begin(), p.offsets.end() - 1);
  const double max_w = max_weight == 0 ? 1.0 : max_weight.convert_to<double>();
  for (const auto& [key, w] : merged) {
    const double nw = w.convert_to<double>() / max_w;
    p.neighbors[fill[key.first]] = key.second;
    p.weights[fill[key.first]++] = nw;
    p.neighbors[fill[key.second]] = key.first;
    p.weights[fill[key.second]++] = nw;
  }
  // merged is ordered by (u, v), so every adjacency list is already sorted.
  return p;
}

/// Per-node sums of (w_uv w_vw w_wu)^(1/3) over unordered triangles.
std::vector<double> triangle_sums(const Projection& p) {
  const std::size_t n = p.offsets.size() - 1;
  // Orient each edge toward the higher (degree, index) endpoint so every
  // triangle is enumerated exactly once.
  auto ranks_below = [&](std::size_t a, std::size_t b) {
    const auto da = p.degree(a);
    const auto db = p.degree(b);
    return da != db ? da < db : a < b;
  };
  std::vector<std::size_t> out_offsets(n + 1, 0);
  std::vector<std::uint32_t> out_neighbors;
  std::vector<double> out_weights;
  out_neighbors.reserve(p.neighbors.size() / 2);
  out_weights.reserve(p.neighbors.size() / 2);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t e = p.offsets[u]; e < p.offsets[u + 1]; ++e) {
      if (ranks_below(u, p.neighbors[e])) {
        out_neighbors.push_back(p.neighbors[e]);
        out_weights.push_back(p.weights[e]);
      }
    }
    out_offsets[u + 1] = out_neighbors.size();
  }

  std::vector<double> sums(n, 0.0);
  std::vector<double> mark(n, -1.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t e = out_offsets[u]; e < out_offsets[u + 1]; ++e) {
      mark[out_neighbors[e]] = out_weights[e];
    }
    for (std::size_t e = out_offsets[u]; e < out_offsets[u + 1]; ++e) {
      const std::uint32_t v = out_neighbors[e];
      const double w_uv = out_weights[e];
      for (std::size_t f = out_offsets[v]; f < out_offsets[v + 1]; ++f) {
        const std::uint32_t w = out_neighbors[f];
        const double w_uw = mark[w];
        if (w_uw < 0.0) continue;
        const double t = std::cbrt(w_uv * out_weights[f] * w_uw);
        sums[u] += t;
        sums[v] += t;
        sums[w] += t;
      }
    }
    for (std::size_t e = out_offsets[u]; e < out_offsets[u + 1]; ++e) {
      mark[out_neighbors[e]] = -1.0;
    }
  }
  return sums;
}

std::vector<double> coefficients(const PeriodGraph& g) {
  const Projection p = project(g);
  const std::vector<double> sums = triangle_sums(p);
  std::vector<double> c(g.nodes.size(), 0.0);
  for (std::size_t u = 0; u < c.size(); ++u) {
    const auto d = static_cast<double>(p.degree(u));
    // Each unordered triangle appears twice among ordered neighbor pairs.
    if (d >= 2) c[u] = 2.0 * sums[u] / (d * (d - 1.0));
  }
  return c;
}

}  // namespace

std::vector<PeriodGraph> build_periods(std::span<const EventRecord> transfers,
                                       BlockNumber period_blocks, BlockNumber origin) {
  if (period_blocks <= 0) throw Error(ErrorCode::InvalidParams, "period_blocks must be positive");
  std::map<std::int64_t, PeriodGraph> periods;
  for (const auto& ev : transfers) {
    const auto* t = ev.as<evdecode::Transfer>();
    if (!t) continue;
    const auto k = period_of(ev.block, origin, period_blocks);
    auto& g = periods[k];
    g.period_index = k;
    ++g.n_tx;
    g.volume += t->amount;
    g.nodes.push_back(t->from);
    g.nodes.push_back(t->to);
    if (t->from != t->to) g.edges[{t->from, t->to}] += t->amount;
  }
  std::vector<PeriodGraph> out;
  out.reserve(periods.size());
  for (auto& [k, g] : periods) {
    std::sort(g.nodes.begin(), g.nodes.end());
    g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());
    out.push_back(std::move(g));
  }
  return out;
}

ClusteringResult avg_clustering(const PeriodGraph& graph) {
  ClusteringResult result;
  if (graph.nodes.empty()) return result;
  const auto c = coefficients(graph);
  double total = 0.0;
  for (std::size_t u = 0; u < c.size(); ++u) {
    result.per_node.emplace_hint(result.per_node.end(), graph.nodes[u], c[u]);
    total += c[u];
  }
  result.acc = total / static_cast<double>(c.size());
  return result;
}

double average_clustering_coefficient(const PeriodGraph& graph) {
  if (graph.nodes.empty()) return 0.0;
  const auto c = coefficients(graph);
  double total = 0.0;
  for (double v : c) total += v;
  return total / static_cast<double>(c.size());
}

void write_period_csv(std::ostream& out, std::span<const PeriodGraph> periods) {
  out << "period,n_tx,n_addr,volume,acc\n";
  for (const auto& g : periods) {
    out << g.period_index << ',' << g.n_tx << ',' << g.n_addr() << ',' << to_decimal(g.volume)
        << ',' << format_double(average_clustering_coefficient(g)) << '\n';
  }
}

}  // namespace rugwatch::txgraph
