#include "consensus_fdi/accommodation.h"

#include <cmath>
#include <string>

#include <Eigen/LU>

#include "consensus_fdi/errors.h"
#include "consensus_fdi/numerics.h"

namespace consensus_fdi {

GramianFactors Gramian(const SystemModel& model, int leader, int horizon) {
  const int n = model.size();
  if (horizon < 1) throw ValidationError("accommodation.horizon", "must be >= 1");
  if (leader < 0 || leader >= n) throw IndexOutOfRange("leader index out of range");

  GramianFactors g;
  g.row_factors.reserve(horizon);
  // M A^tau, advanced one power at a time.
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Constant(n, 1.0 / n);
  double sum = 0.0;
  for (int tau = 0; tau < horizon; ++tau) {
    const double factor = model.eps() * row(leader);
    g.row_factors.push_back(factor);
    sum += factor * factor;
    row = row * model.a_reduced();
  }
  const double nominal = horizon * model.eps() * model.eps() / (double(n) * n);
  if (!std::isfinite(sum) || sum <= 1e-12 * nominal) {
    throw SingularGramian("centroid is not controllable from agent " +
                          std::to_string(leader + 1));
  }
  g.core = sum * Eigen::Matrix2d::Identity();
  return g;
}

AccommodationController::AccommodationController(const SystemModel& model,
                                                 int leader, Eigen::Vector2d target,
                                                 AccommodationOptions options)
    : leader_(leader),
      eps_(model.eps()),
      target_(std::move(target)),
      options_(options),
      gramian_(Gramian(model, leader, options.horizon)),
      phi_(model.phi()) {
  const int n = model.size();
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Constant(n, 1.0 / n);
  disturbance_row_ = Eigen::RowVectorXd::Zero(n);
  for (int s = 0; s < options_.horizon; ++s) {
    disturbance_row_ += row;
    row = row * model.a_reduced();
  }
  disturbance_row_ *= eps_;
  free_row_ = row;
}

Eigen::Vector2d AccommodationController::Residual(
    const Positions& xhat, int faulty_agent, const Eigen::Vector2d& delta_hat) const {
  Eigen::Vector2d free = (free_row_ * xhat).transpose();
  free += disturbance_row_(faulty_agent) * delta_hat;
  free += (disturbance_row_ * phi_).transpose();
  return target_ - free;
}

ControlSample AccommodationController::OptimalControl(
    int k, const Positions& xhat, int faulty_agent,
    const Eigen::Vector2d& delta_hat) const {
  const Eigen::Vector2d r = Residual(xhat, faulty_agent, delta_hat);
  const double first = gramian_.row_factors.back();
  ControlSample s;
  s.k = k;
  // L* M^T (M W_c M^T)^{-1} r with L* M^T = (M A^{N-1} B_l)^T.
  s.u = first * gramian_.core.inverse() * r;
  s.u_applied = ToApplied(s.u);
  s.centroid_hat = Centroid(xhat);
  s.terminal_centroid = target_ - r + gramian_.core * gramian_.core.inverse() * r;
  s.error_hat = (s.centroid_hat - target_).norm();
  return s;
}

std::vector<Eigen::Vector2d> AccommodationController::OpenLoopSequence(
    const Positions& xhat, int faulty_agent, const Eigen::Vector2d& delta_hat) const {
  const Eigen::Vector2d lambda =
      gramian_.core.inverse() * Residual(xhat, faulty_agent, delta_hat);
  const int horizon = options_.horizon;
  std::vector<Eigen::Vector2d> u;
  u.reserve(horizon);
  for (int tau = 0; tau < horizon; ++tau) {
    u.push_back(gramian_.row_factors[horizon - 1 - tau] * lambda);
  }
  return u;
}

Eigen::Vector2d EstimateCentroid(const Positions& xhat, int leader,
                                 const Eigen::Vector2d& leader_measured) {
  return Centroid(xhat) - xhat.row(leader).transpose() + leader_measured;
}

LeaderFilter::LeaderFilter(const SystemModel& model, const FaultFilter& matched,
                           int leader, const Eigen::Vector2d& delta_hat,
                           Positions initial_estimate)
    : a_(model.a_reduced()),
      c_(matched.measurement_matrix()),
      gain_(matched.gain()),
      eps_(model.eps()),
      leader_(leader),
      xhat_(std::move(initial_estimate)) {
  feedthrough_ = model.eps() * model.phi();
  feedthrough_.row(matched.target()) += model.eps() * delta_hat.transpose();
}

void LeaderFilter::Step(const Positions& y, const Eigen::Vector2d& u) {
  Positions next = a_ * xhat_ + gain_ * (y - c_ * xhat_) + feedthrough_;
  next.row(leader_) += eps_ * u.transpose();
  xhat_ = std::move(next);
}

Positions LeaderFilter::Corrected(const Eigen::Vector2d& leader_measured) const {
  Positions corrected = xhat_;
  const Eigen::RowVector2d shift = leader_measured.transpose() - xhat_.row(leader_);
  corrected.rowwise() += shift;
  return corrected;
}

Positions HandoffEstimate(const SystemModel& model, const FaultFilter& matched,
                          const Eigen::Vector2d& delta_hat) {
  const int n = model.size();
  Eigen::VectorXd column = model.eps() * Eigen::VectorXd::Unit(n, matched.target());
  Eigen::VectorXd lag = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < matched.rho(); ++s) {
    lag += column;
    column = model.a_reduced() * column;
  }
  return matched.estimate() + lag * delta_hat.transpose();
}

AccommodationTrace AccommodateLoop(const AccommodationController& controller,
                                   LeaderFilter& estimator, AccommodationPlant& plant,
                                   int faulty_agent, const Eigen::Vector2d& delta_hat) {
  const AccommodationOptions& opts = controller.options();
  AccommodationTrace trace;
  int settled = 0;
  for (int i = 0; i < opts.max_steps; ++i) {
    const Positions y = plant.ObserverMeasurement();
    const Positions xhat = estimator.Corrected(plant.LeaderPosition());
    ControlSample s = controller.OptimalControl(plant.step(), xhat, faulty_agent, delta_hat);
    settled = s.error_hat < opts.stop_tol ? settled + 1 : 0;
    plant.Advance(s.u_applied);
    estimator.Step(y, s.u);
    trace.samples.push_back(std::move(s));
    if (settled >= opts.settle_steps) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

}  // namespace consensus_fdi
