#include "consensus_fdi/dynamics.h"

#include <cmath>
#include <string>

#include "consensus_fdi/errors.h"

namespace consensus_fdi {

SystemModel::SystemModel(Graph graph, double eps,
                         std::optional<FormationSpec> formation)
    : graph_(std::move(graph)), eps_(eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw ValidationError("eps", "step size must be positive and finite");
  }
  const int n = graph_.size();
  a_ = Eigen::MatrixXd::Identity(n, n) - eps * Laplacian(graph_);
  phi_ = Positions::Zero(n, 2);
  kind_ = ModelKind::kConsensus;
  if (formation) {
    if (formation->targets.rows() != n) {
      throw ValidationError("formation.targets",
                            "expected " + std::to_string(n) + " targets, got " +
                                std::to_string(formation->targets.rows()));
    }
    if (!formation->targets.allFinite()) {
      throw ValidationError("formation.targets", "non-finite target");
    }
    kind_ = ModelKind::kFormation;
    for (int i = 0; i < n; ++i) {
      for (int j : graph_.neighbors(i)) {
        phi_.row(i) += formation->targets.row(i) - formation->targets.row(j);
      }
    }
  }
  step_too_large_ = eps * graph_.max_degree() > 1.0;
  stochastic_ = IsRowStochastic(a_);
}

bool IsRowStochastic(const Eigen::MatrixXd& a, double tol) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (std::abs(a.row(i).sum() - 1.0) > tol) return false;
    if ((a.row(i).array() < -tol).any() || (a.row(i).array() > 1.0 + tol).any()) {
      return false;
    }
  }
  return true;
}

StateVector Step(const SystemModel& model, const StateVector& state,
                 const std::optional<FaultEvent>& fault,
                 const std::optional<LeaderInput>& input) {
  StateVector next;
  next.k = state.k + 1;
  next.x = model.a_reduced() * state.x;
  if (model.kind() == ModelKind::kFormation) next.x += model.eps() * model.phi();
  if (fault && state.k >= fault->onset) {
    next.x.row(fault->agent) += model.eps() * fault->delta.transpose();
  }
  if (input) next.x.row(input->leader) += input->u.transpose();
  return next;
}

Eigen::MatrixXd MeasurementMatrix(const Graph& graph, int agent) {
  const auto& nb = graph.neighbors(agent);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb.size()),
                                            graph.size());
  for (std::size_t r = 0; r < nb.size(); ++r) {
    c(r, agent) = 1.0;
    c(r, nb[r]) = -1.0;
  }
  return c;
}

Positions Measurement(const SystemModel& model, const Positions& x, int agent) {
  const auto& nb = model.graph().neighbors(agent);
  Positions y(static_cast<Eigen::Index>(nb.size()), 2);
  for (std::size_t r = 0; r < nb.size(); ++r) {
    y.row(r) = x.row(agent) - x.row(nb[r]);
  }
  return y;
}

Eigen::Vector2d FaultyMeasurementBias(std::span<const Eigen::Vector2d> biases) {
  Eigen::Vector2d delta = Eigen::Vector2d::Zero();
  for (const auto& b : biases) delta -= b;
  return delta;
}

Eigen::Vector2d Centroid(const Positions& x) {
  return x.colwise().mean().transpose();
}

}  // namespace consensus_fdi
