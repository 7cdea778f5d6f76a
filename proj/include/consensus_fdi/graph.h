#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace consensus_fdi {

/// Undirected, connected, unweighted interaction topology.
///
/// Agents are 0-based inside the library. Build() takes the 1-based edge list
/// used by configuration files and converts it once.
class Graph {
 public:
  /// Validates and builds the graph. `edges` holds 1-based agent pairs; order
  /// within a pair is irrelevant.
  ///
  /// Throws IndexOutOfRange, SelfLoop, DuplicateEdge or DisconnectedGraph.
  static Graph Build(int n, std::span<const std::pair<int, int>> edges);

  int size() const { return static_cast<int>(neighbors_.size()); }

  /// Neighbors of `agent` (0-based), ascending.
  const std::vector<int>& neighbors(int agent) const {
    return neighbors_.at(agent);
  }
  int degree(int agent) const { return static_cast<int>(neighbors(agent).size()); }
  int max_degree() const;

  /// 0-based edges with first < second, sorted.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool adjacent(int a, int b) const;

 private:
  Graph() = default;

  std::vector<std::vector<int>> neighbors_;
  std::vector<std::pair<int, int>> edges_;
};

/// Dense graph Laplacian: degree on the diagonal, -1 for each edge.
Eigen::MatrixXd Laplacian(const Graph& graph);

/// All-pairs hop distances by breadth-first search from every node.
Eigen::MatrixXi Geodesics(const Graph& graph);

}  // namespace consensus_fdi
