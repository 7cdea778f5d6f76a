#pragma once

#include <optional>
#include <span>

#include <Eigen/Core>

#include "consensus_fdi/graph.h"

namespace consensus_fdi {

/// Planar positions, one row per agent.
using Positions = Eigen::Matrix<double, Eigen::Dynamic, 2>;

enum class ModelKind { kConsensus, kFormation };

/// Desired formation given as target positions in an arbitrary frame.
struct FormationSpec {
  Positions targets;
};

/// Discrete-time consensus (or formation) model x' = A x + eps*phi.
///
/// Every system matrix has the form M (x) I_2, so the model stores the n x n
/// factor and applies it to the x and y columns of a Positions block. The
/// lifted 2n x 2n matrices are never formed.
class SystemModel {
 public:
  /// Throws ValidationError when eps <= 0 or the formation has the wrong
  /// number of targets. A step larger than 1/max degree is accepted and
  /// flagged through step_too_large().
  SystemModel(Graph graph, double eps, std::optional<FormationSpec> formation = {});

  const Graph& graph() const { return graph_; }
  int size() const { return graph_.size(); }
  double eps() const { return eps_; }
  ModelKind kind() const { return kind_; }

  /// I - eps * L.
  const Eigen::MatrixXd& a_reduced() const { return a_; }
  /// phi_i = sum over neighbors j of (target_i - target_j); zero for consensus.
  const Positions& phi() const { return phi_; }

  /// True when a_reduced() is row stochastic (rows sum to one, entries in
  /// [0, 1]); holds whenever eps <= 1/max degree.
  bool stochastic() const { return stochastic_; }
  bool step_too_large() const { return step_too_large_; }

 private:
  Graph graph_;
  double eps_;
  ModelKind kind_;
  Eigen::MatrixXd a_;
  Positions phi_;
  bool stochastic_ = false;
  bool step_too_large_ = false;
};

struct StateVector {
  Positions x;
  int k = 0;
};

/// Constant additive fault on one agent, active for k >= onset.
struct FaultEvent {
  int agent = 0;
  Eigen::Vector2d delta = Eigen::Vector2d::Zero();
  int onset = 0;
};

/// Leader velocity input, applied unscaled as e_l * u^T.
struct LeaderInput {
  int leader = 0;
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
};

/// One update x' = A x + eps*phi + eps*e_f*delta^T [k >= onset] + e_l*u^T.
StateVector Step(const SystemModel& model, const StateVector& state,
                 const std::optional<FaultEvent>& fault = {},
                 const std::optional<LeaderInput>& input = {});

/// Reduced measurement matrix of `agent`: one row per neighbor j (ascending),
/// +1 in column `agent`, -1 in column j.
Eigen::MatrixXd MeasurementMatrix(const Graph& graph, int agent);

/// Relative measurements x_agent - x_j for each neighbor j, ascending.
Positions Measurement(const SystemModel& model, const Positions& x, int agent);

/// Equivalent state-level fault of per-neighbor measurement biases on one
/// agent: delta = -sum_j bias_j.
Eigen::Vector2d FaultyMeasurementBias(std::span<const Eigen::Vector2d> biases);

Eigen::Vector2d Centroid(const Positions& x);

/// Row stochasticity within `tol`.
bool IsRowStochastic(const Eigen::MatrixXd& a, double tol = 1e-14);

}  // namespace consensus_fdi
