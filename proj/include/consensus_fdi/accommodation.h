#pragma once

#include <vector>

#include <Eigen/Core>

#include "consensus_fdi/dynamics.h"
#include "consensus_fdi/fif.h"

namespace consensus_fdi {

/// Centroid projection of the N-step controllability Gramian for a single
/// leader with B_l = eps * (e_l (x) I_2).
struct GramianFactors {
  /// M W_c M^T; a multiple of I_2.
  Eigen::Matrix2d core;
  /// Scalar factor of M A^tau B_l for tau = 0..N-1.
  std::vector<double> row_factors;
};

/// Throws SingularGramian when the centroid cannot be steered from `leader`.
GramianFactors Gramian(const SystemModel& model, int leader, int horizon);

struct AccommodationOptions {
  int horizon = 20;
  double stop_tol = 1e-3;
  int max_steps = 5000;
  /// Consecutive steps within stop_tol before the loop stops.
  int settle_steps = 50;
};

/// One receding-horizon decision. `u` uses the B_l = eps * e_l convention;
/// `u_applied` is the velocity handed to the simulator (eps * u).
struct ControlSample {
  int k = 0;
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  Eigen::Vector2d u_applied = Eigen::Vector2d::Zero();
  Eigen::Vector2d centroid_hat = Eigen::Vector2d::Zero();
  /// M x(k+N) under the full optimal open-loop sequence.
  Eigen::Vector2d terminal_centroid = Eigen::Vector2d::Zero();
  double error_hat = 0.0;
};

/// Minimum-energy leader control that steers the centroid to `target` at the
/// end of the horizon while a known constant fault acts on `faulty_agent`.
class AccommodationController {
 public:
  AccommodationController(const SystemModel& model, int leader,
                          Eigen::Vector2d target, AccommodationOptions options = {});

  int leader() const { return leader_; }
  const Eigen::Vector2d& target() const { return target_; }
  const AccommodationOptions& options() const { return options_; }
  const GramianFactors& gramian() const { return gramian_; }

  /// First element of the optimal sequence for the state estimate `xhat`.
  ControlSample OptimalControl(int k, const Positions& xhat, int faulty_agent,
                               const Eigen::Vector2d& delta_hat) const;

  /// Whole optimal open-loop sequence u(k), ..., u(k+N-1), B_l convention.
  std::vector<Eigen::Vector2d> OpenLoopSequence(const Positions& xhat,
                                                int faulty_agent,
                                                const Eigen::Vector2d& delta_hat) const;

  /// Simulator velocity for a control in the B_l convention.
  Eigen::Vector2d ToApplied(const Eigen::Vector2d& u) const { return eps_ * u; }

 private:
  /// target - M x(k+N) with zero input.
  Eigen::Vector2d Residual(const Positions& xhat, int faulty_agent,
                           const Eigen::Vector2d& delta_hat) const;

  int leader_;
  double eps_;
  Eigen::Vector2d target_;
  AccommodationOptions options_;
  GramianFactors gramian_;
  /// M A^N and eps * sum_{s<N} M A^s, as 1 x n rows.
  Eigen::RowVectorXd free_row_;
  Eigen::RowVectorXd disturbance_row_;
  Positions phi_;
};

/// Translation-corrected centroid: shifts the estimate so the leader's own
/// estimated position equals its measured one, then averages.
Eigen::Vector2d EstimateCentroid(const Positions& xhat, int leader,
                                 const Eigen::Vector2d& leader_measured);

/// Leader state estimator driven by the observer's measurements with the
/// matched filter gain, the control feed-through and the identified fault:
///
///   xhat <- (A - K C) xhat + K y + eps e_l u^T + eps e_f delta^T + eps phi
///
/// The measured y replaces the self-estimate of the textbook form, which
/// would make the innovation vanish identically.
class LeaderFilter {
 public:
  LeaderFilter(const SystemModel& model, const FaultFilter& matched, int leader,
               const Eigen::Vector2d& delta_hat, Positions initial_estimate);

  const Positions& estimate() const { return xhat_; }
  int leader() const { return leader_; }

  void Step(const Positions& y, const Eigen::Vector2d& u);

  /// Corrected estimate (see EstimateCentroid) as a full state.
  Positions Corrected(const Eigen::Vector2d& leader_measured) const;

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd c_;
  Eigen::MatrixXd gain_;
  Positions feedthrough_;
  double eps_;
  int leader_;
  Positions xhat_;
};

/// Estimate handed from the matched filter to the leader filter. The matched
/// filter sees the fault rho steps late; the missing
/// sum_{s<rho} A^s eps e_f delta^T is added back.
Positions HandoffEstimate(const SystemModel& model, const FaultFilter& matched,
                          const Eigen::Vector2d& delta_hat);

/// What the accommodation loop needs from the running system.
class AccommodationPlant {
 public:
  virtual ~AccommodationPlant() = default;
  virtual int step() const = 0;
  virtual Positions ObserverMeasurement() const = 0;
  virtual Eigen::Vector2d LeaderPosition() const = 0;
  virtual void Advance(const Eigen::Vector2d& u_applied) = 0;
};

struct AccommodationTrace {
  std::vector<ControlSample> samples;
  bool converged = false;
};

/// Receding-horizon loop: estimate, solve, apply the first input, repeat.
/// Stops after `settle_steps` consecutive estimates within `stop_tol` of the
/// target, or after `max_steps` (converged stays false).
AccommodationTrace AccommodateLoop(const AccommodationController& controller,
                                   LeaderFilter& estimator,
                                   AccommodationPlant& plant, int faulty_agent,
                                   const Eigen::Vector2d& delta_hat);

}  // namespace consensus_fdi
