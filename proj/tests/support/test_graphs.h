#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "consensus_fdi/graph.h"

namespace consensus_fdi::testing {

using EdgeList = std::vector<std::pair<int, int>>;

// 3x3 lattice used by the presets, 1-based.
inline EdgeList GridEdges() {
  return {{1, 2}, {2, 3}, {4, 5}, {5, 6}, {7, 8}, {8, 9},
          {1, 4}, {4, 7}, {2, 5}, {5, 8}, {3, 6}, {6, 9}};
}

inline EdgeList PathEdges(int n) {
  EdgeList e;
  for (int i = 1; i < n; ++i) e.emplace_back(i, i + 1);
  return e;
}

// Random spanning tree plus extra edges, 1-based.
inline EdgeList RandomConnectedEdges(int n, double extra_density, std::mt19937_64& gen) {
  std::set<std::pair<int, int>> edges;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i + 1;
  std::shuffle(order.begin(), order.end(), gen);
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    const int a = order[i], b = order[pick(gen)];
    edges.emplace(std::min(a, b), std::max(a, b));
  }
  std::bernoulli_distribution coin(extra_density);
  for (int a = 1; a <= n; ++a) {
    for (int b = a + 1; b <= n; ++b) {
      if (coin(gen)) edges.emplace(a, b);
    }
  }
  return {edges.begin(), edges.end()};
}

inline Graph RandomConnectedGraph(int n, double extra_density, std::mt19937_64& gen) {
  return Graph::Build(n, RandomConnectedEdges(n, extra_density, gen));
}

// All-pairs hop distances by Floyd-Warshall, independent of the BFS code.
inline Eigen::MatrixXi FloydWarshall(const Graph& g) {
  const int n = g.size();
  const int inf = n + 1;
  Eigen::MatrixXi d = Eigen::MatrixXi::Constant(n, n, inf);
  for (int i = 0; i < n; ++i) d(i, i) = 0;
  for (const auto& [a, b] : g.edges()) d(a, b) = d(b, a) = 1;
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
    }
  }
  return d;
}

// Lifted matrix M (x) I_2.
inline Eigen::MatrixXd Lift(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * m.rows(), 2 * m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out(2 * i, 2 * j) = m(i, j);
      out(2 * i + 1, 2 * j + 1) = m(i, j);
    }
  }
  return out;
}

// Stacks an n x 2 block as [x_1, y_1, x_2, y_2, ...].
inline Eigen::VectorXd Stack(const Eigen::MatrixXd& p) {
  Eigen::VectorXd v(2 * p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    v(2 * i) = p(i, 0);
    v(2 * i + 1) = p(i, 1);
  }
  return v;
}

inline Eigen::MatrixXd RandomPositions(int n, std::mt19937_64& gen, double spread = 1.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  Eigen::MatrixXd p(n, 2);
  for (int i = 0; i < n; ++i) p.row(i) << u(gen), u(gen);
  return p;
}

}  // namespace consensus_fdi::testing
