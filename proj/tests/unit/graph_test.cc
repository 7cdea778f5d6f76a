#include "consensus_fdi/graph.h"

#include <random>

#include <gtest/gtest.h>

#include "consensus_fdi/errors.h"
#include "test_graphs.h"

namespace consensus_fdi {
namespace {

using testing::EdgeList;

GTEST_TEST(GraphTest, BuildsGridWithSortedNeighbors) {
  const EdgeList edges = testing::GridEdges();
  const Graph g = Graph::Build(9, edges);
  EXPECT_EQ(g.size(), 9);
  EXPECT_EQ(g.edges().size(), 12u);
  // Center of the lattice (agent 5).
  EXPECT_EQ(g.neighbors(4), (std::vector<int>{1, 3, 5, 7}));
  EXPECT_EQ(g.degree(0), 2);
  EXPECT_EQ(g.max_degree(), 4);
  EXPECT_TRUE(g.adjacent(4, 7));
  EXPECT_FALSE(g.adjacent(0, 8));
  for (const auto& [a, b] : g.edges()) EXPECT_LT(a, b);
}

GTEST_TEST(GraphTest, RejectsBadInput) {
  const EdgeList loop = {{1, 2}, {2, 2}};
  EXPECT_THROW(Graph::Build(2, loop), SelfLoop);
  const EdgeList dup = {{1, 2}, {2, 1}};
  EXPECT_THROW(Graph::Build(2, dup), DuplicateEdge);
  const EdgeList split = {{1, 2}, {3, 4}};
  EXPECT_THROW(Graph::Build(4, split), DisconnectedGraph);
  const EdgeList range = {{1, 3}};
  EXPECT_THROW(Graph::Build(2, range), ValidationError);
  const EdgeList zero = {{0, 1}};
  EXPECT_THROW(Graph::Build(2, zero), ValidationError);
  const EdgeList none;
  EXPECT_THROW(Graph::Build(1, none), ValidationError);
}

GTEST_TEST(GraphTest, DisconnectedReportsEdgeField) {
  const EdgeList split = {{1, 2}, {3, 4}};
  try {
    Graph::Build(4, split);
    FAIL() << "expected DisconnectedGraph";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "graph.edges");
  }
}

GTEST_TEST(GraphTest, LaplacianStructure) {
  const Graph g = Graph::Build(9, testing::GridEdges());
  const Eigen::MatrixXd lap = Laplacian(g);
  EXPECT_TRUE(lap.isApprox(lap.transpose()));
  EXPECT_LT((lap * Eigen::VectorXd::Ones(9)).cwiseAbs().maxCoeff(), 1e-15);
  for (int i = 0; i < 9; ++i) EXPECT_EQ(lap(i, i), g.degree(i));
  EXPECT_EQ(lap(0, 1), -1.0);
  EXPECT_EQ(lap(0, 8), 0.0);
}

GTEST_TEST(GraphTest, GeodesicsMatchFloydWarshall) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 14;
    const Graph g = testing::RandomConnectedGraph(n, 0.15, gen);
    EXPECT_EQ(Geodesics(g), testing::FloydWarshall(g)) << "trial " << trial;
  }
}

GTEST_TEST(GraphTest, PathGeodesics) {
  const Graph g = Graph::Build(5, testing::PathEdges(5));
  const Eigen::MatrixXi d = Geodesics(g);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) EXPECT_EQ(d(i, j), std::abs(i - j));
  }
}

GTEST_TEST(GraphTest, RandomGraphInvariants) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 20;
    const Graph g = testing::RandomConnectedGraph(n, 0.1, gen);
    const Eigen::MatrixXd lap = Laplacian(g);
    // Integer entries, so these hold exactly.
    EXPECT_EQ(lap, lap.transpose());
    for (int i = 0; i < n; ++i) EXPECT_EQ(lap.row(i).sum(), 0.0);
    const Eigen::MatrixXi d = Geodesics(g);
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(d(i, i), 0);
      EXPECT_GE(g.degree(i), 1);
      for (int j = 0; j < n; ++j) {
        EXPECT_EQ(d(i, j), d(j, i));
        EXPECT_EQ(d(i, j) == 1, g.adjacent(i, j));
        for (int k = 0; k < n; ++k) EXPECT_LE(d(i, k), d(i, j) + d(j, k));
      }
    }
  }
}

}  // namespace
}  // namespace consensus_fdi
