#pragma once

#include <map>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "rugwatch/common.hpp"
#include "rugwatch/evdecode.hpp"

namespace rugwatch::txgraph {

using evdecode::EventRecord;

/// Transfers of one period as a directed weighted graph. Parallel transfers
/// between the same ordered pair accumulate into one edge.
struct PeriodGraph {
  std::int64_t period_index = 0;
  std::vector<Address> nodes;  // sorted, unique
  std::map<std::pair<Address, Address>, Amount> edges;
  std::int64_t n_tx = 0;
  Amount volume;

  std::size_t n_addr() const { return nodes.size(); }
};

struct ClusteringResult {
  double acc = 0.0;
  std::map<Address, double> per_node;
};

/// Groups Transfer events (other kinds are ignored) into periods of
/// `period_blocks` blocks counted from `origin`; period index is
/// floor((block - origin) / period_blocks). Only non-empty periods are
/// returned, in increasing index. Self transfers add to n_tx and volume but
/// create no edge.
std::vector<PeriodGraph> build_periods(std::span<const EventRecord> transfers,
                                       BlockNumber period_blocks, BlockNumber origin = 0);

/// Weighted average clustering on the undirected projection (u->v and v->u
/// weights summed), weights normalized by the largest edge weight:
///   c_u = sum over ordered neighbor pairs (v, w) of (w_uv w_vw w_wu)^(1/3)
///         / (deg(u) (deg(u) - 1)),
/// and acc is the mean of c_u over all nodes of the period.
ClusteringResult avg_clustering(const PeriodGraph& graph);

/// Same value as avg_clustering(graph).acc without the per-node map.
double average_clustering_coefficient(const PeriodGraph& graph);

/// CSV `period,n_tx,n_addr,volume,acc`.
void write_period_csv(std::ostream& out, std::span<const PeriodGraph> periods);

}  // namespace rugwatch::txgraph
