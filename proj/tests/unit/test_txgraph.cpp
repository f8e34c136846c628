#include <gtest/gtest.h>

#include <sstream>

#include "builders.hpp"
#include "oracles.hpp"
#include "rugwatch/txgraph.hpp"

using namespace rugwatch;
using namespace rugwatch::txgraph;
using rugwatch::testing::addr;
using rugwatch::testing::RawEdge;

namespace {

const Address kToken = addr(0x77);

PeriodGraph graph_of(const std::vector<RawEdge>& edges, int n_nodes = 0) {
  rugwatch::testing::StreamBuilder sb;
  for (const auto& e : edges) {
    sb.transfer(1, kToken, addr(static_cast<std::uint8_t>(e.from + 1)),
                addr(static_cast<std::uint8_t>(e.to + 1)), Amount(static_cast<std::int64_t>(e.weight)));
  }
  // Isolated nodes join through zero-amount self transfers.
  for (int u = 0; u < n_nodes; ++u) {
    sb.transfer(1, kToken, addr(static_cast<std::uint8_t>(u + 1)),
                addr(static_cast<std::uint8_t>(u + 1)), 0);
  }
  auto periods = build_periods(sb.events(), 100);
  return periods.empty() ? PeriodGraph{} : periods.front();
}

}  // namespace

TEST(BuildPeriods, EmptyStreamGivesNoPeriods) {
  EXPECT_TRUE(build_periods({}, 100).empty());
}

TEST(BuildPeriods, ParallelTransfersAccumulate) {
  const auto g = graph_of({{0, 1, 1}, {0, 1, 2}, {0, 1, 3}});
  EXPECT_EQ(g.n_tx, 3);
  EXPECT_EQ(g.volume, Amount(6));
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges.begin()->second, Amount(6));
}

TEST(BuildPeriods, AssignsByBlockFromOrigin) {
  rugwatch::testing::StreamBuilder sb;
  sb.transfer(99, kToken, addr(1), addr(2), 1)
      .transfer(100, kToken, addr(1), addr(2), 1)
      .transfer(249, kToken, addr(2), addr(3), 1)
      .sync(250, addr(9), 1, 1);
  const auto p = build_periods(sb.events(), 50, 100);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].period_index, -1);
  EXPECT_EQ(p[1].period_index, 0);
  EXPECT_EQ(p[2].period_index, 2);
}

TEST(BuildPeriods, SelfTransferCountsButAddsNoEdge) {
  const auto g = graph_of({{0, 0, 5}, {0, 1, 1}});
  EXPECT_EQ(g.n_tx, 2);
  EXPECT_EQ(g.volume, Amount(6));
  EXPECT_EQ(g.edges.size(), 1u);
}

TEST(Clustering, StarGraphIsZero) {
  std::vector<RawEdge> star;
  for (int leaf = 1; leaf < 12; ++leaf) star.push_back({0, leaf, static_cast<double>(leaf * 7)});
  for (int leaf = 1; leaf < 12; leaf += 2) star.push_back({leaf, 0, 3});
  EXPECT_EQ(avg_clustering(graph_of(star)).acc, 0.0);
}

TEST(Clustering, EqualWeightTriangleIsOne) {
  const auto r = avg_clustering(graph_of({{0, 1, 4}, {1, 2, 4}, {2, 0, 4}}));
  EXPECT_DOUBLE_EQ(r.acc, 1.0);
  for (const auto& [a, c] : r.per_node) EXPECT_DOUBLE_EQ(c, 1.0);
}

TEST(Clustering, DirectionIsMergedBySumming) {
  // u->v 1 and v->u 3 merge into one edge of weight 4.
  const auto merged = avg_clustering(graph_of({{0, 1, 1}, {1, 0, 3}, {1, 2, 4}, {2, 0, 4}}));
  EXPECT_DOUBLE_EQ(merged.acc, 1.0);
}

TEST(Clustering, MatchesCubicOracleOnRandomGraphs) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 15));
    std::vector<RawEdge> edges;
    const int m = static_cast<int>(rng.uniform_int(1, n * (n - 1)));
    for (int i = 0; i < m; ++i) {
      edges.push_back({static_cast<int>(rng.uniform_int(0, n - 1)),
                       static_cast<int>(rng.uniform_int(0, n - 1)),
                       static_cast<double>(rng.uniform_int(1, 1000))});
    }
    const auto g = graph_of(edges, n);
    const double want = rugwatch::testing::brute_acc(n, edges);
    ASSERT_NEAR(avg_clustering(g).acc, want, 1e-12);
    ASSERT_DOUBLE_EQ(average_clustering_coefficient(g), avg_clustering(g).acc);
  }
}

TEST(Clustering, InvariantUnderScalingAndReversal) {
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(3, 12));
    std::vector<RawEdge> edges, scaled, flipped;
    for (int i = 0; i < 3 * n; ++i) {
      RawEdge e{static_cast<int>(rng.uniform_int(0, n - 1)),
                static_cast<int>(rng.uniform_int(0, n - 1)),
                static_cast<double>(rng.uniform_int(1, 500))};
      edges.push_back(e);
      scaled.push_back({e.from, e.to, e.weight * 1024});
      flipped.push_back({e.to, e.from, e.weight});
    }
    const double base = avg_clustering(graph_of(edges, n)).acc;
    ASSERT_EQ(avg_clustering(graph_of(scaled, n)).acc, base);
    ASSERT_EQ(avg_clustering(graph_of(flipped, n)).acc, base);
  }
}

TEST(Clustering, CoefficientsStayInUnitInterval) {
  Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(3, 20));
    std::vector<RawEdge> edges;
    for (int i = 0; i < 4 * n; ++i) {
      edges.push_back({static_cast<int>(rng.uniform_int(0, n - 1)),
                       static_cast<int>(rng.uniform_int(0, n - 1)),
                       static_cast<double>(rng.uniform_int(1, 100))});
    }
    for (const auto& [a, c] : avg_clustering(graph_of(edges, n)).per_node) {
      ASSERT_GE(c, 0.0);
      ASSERT_LE(c, 1.0 + 1e-12);
    }
  }
}

TEST(PeriodCsv, Header) {
  std::ostringstream out;
  const auto g = graph_of({{0, 1, 2}});
  write_period_csv(out, std::span(&g, 1));
  EXPECT_EQ(out.str(), "period,n_tx,n_addr,volume,acc\n0,1,2,2,0\n");
}
