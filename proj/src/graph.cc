#include "consensus_fdi/graph.h"

#include <algorithm>
#include <deque>
#include <set>
#include <string>

#include "consensus_fdi/errors.h"

namespace consensus_fdi {

Graph Graph::Build(int n, std::span<const std::pair<int, int>> edges) {
  if (n < 2) {
    throw ValidationError("graph.n", "need at least 2 agents, got " + std::to_string(n));
  }
  Graph g;
  g.neighbors_.resize(n);
  std::set<std::pair<int, int>> seen;
  for (const auto& [a1, b1] : edges) {
    if (a1 < 1 || a1 > n || b1 < 1 || b1 > n) {
      throw IndexOutOfRange("edge (" + std::to_string(a1) + "," +
                            std::to_string(b1) + ") outside 1.." +
                            std::to_string(n));
    }
    if (a1 == b1) {
      throw SelfLoop("self-loop on agent " + std::to_string(a1));
    }
    const int a = std::min(a1, b1) - 1;
    const int b = std::max(a1, b1) - 1;
    if (!seen.emplace(a, b).second) {
      throw DuplicateEdge("duplicate edge (" + std::to_string(a + 1) + "," +
                          std::to_string(b + 1) + ")");
    }
    g.neighbors_[a].push_back(b);
    g.neighbors_[b].push_back(a);
  }
  g.edges_.assign(seen.begin(), seen.end());
  for (auto& nb : g.neighbors_) std::sort(nb.begin(), nb.end());

  std::vector<bool> reached(n, false);
  std::deque<int> queue{0};
  reached[0] = true;
  int count = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : g.neighbors_[v]) {
      if (!reached[w]) {
        reached[w] = true;
        ++count;
        queue.push_back(w);
      }
    }
  }
  if (count != n) {
    const auto it = std::find(reached.begin(), reached.end(), false);
    throw DisconnectedGraph("agent " + std::to_string(it - reached.begin() + 1) +
                            " is not reachable from agent 1");
  }
  return g;
}

int Graph::max_degree() const {
  int m = 0;
  for (const auto& nb : neighbors_) m = std::max(m, static_cast<int>(nb.size()));
  return m;
}

bool Graph::adjacent(int a, int b) const {
  const auto& nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

Eigen::MatrixXd Laplacian(const Graph& graph) {
  const int n = graph.size();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [a, b] : graph.edges()) {
    lap(a, b) = -1.0;
    lap(b, a) = -1.0;
  }
  for (int i = 0; i < n; ++i) lap(i, i) = graph.degree(i);
  return lap;
}

Eigen::MatrixXi Geodesics(const Graph& graph) {
  const int n = graph.size();
  Eigen::MatrixXi dist = Eigen::MatrixXi::Constant(n, n, -1);
  for (int source = 0; source < n; ++source) {
    std::deque<int> queue{source};
    dist(source, source) = 0;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int w : graph.neighbors(v)) {
        if (dist(source, w) < 0) {
          dist(source, w) = dist(source, v) + 1;
          queue.push_back(w);
        }
      }
    }
  }
  return dist;
}

}  // namespace consensus_fdi
