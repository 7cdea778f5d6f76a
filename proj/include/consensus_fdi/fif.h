#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "consensus_fdi/dynamics.h"

namespace consensus_fdi {

/// Choice of the free gain Kbar, which multiplies the decoupled residual.
enum class GainPolicy {
  /// Kbar = 0; the filter gain reduces to omega * Pi.
  kZero,
  /// Kbar = scale * pinv(C_o) * beta^T: feeds the decoupled residual back
  /// through the least-squares inverse of the measurement map.
  kScaledIdentityProjection,
};

struct GainOptions {
  GainPolicy policy = GainPolicy::kZero;
  double scale = 0.5;
};

/// Residuals of one filter at step k. `gamma` has one row per decoupled
/// direction (degree(observer) - 1 rows) and may be empty.
struct ResidualSample {
  int k = 0;
  Eigen::Vector2d alpha = Eigen::Vector2d::Zero();
  Positions gamma;

  double alpha_norm() const { return alpha.norm(); }
  double gamma_norm() const { return gamma.size() == 0 ? 0.0 : gamma.norm(); }
};

/// Fault detectability index of `target` seen from `observer`: the smallest
/// v >= 1 with C_o A^{v-1} e_target != 0. Entries are compared against
/// 1e-12 * min(1, eps)^{v-1}, the scale of the smallest structurally non-zero
/// entry. Throws NotDetectable after n steps.
int DetectabilityIndex(const SystemModel& model, int observer, int target);

/// Directional fault-isolation filter for one candidate faulty agent.
///
/// All quantities are the n-dimensional factors of the lifted matrices
/// (X (x) I_2): psi, omega are n-vectors, the detectability matrix d is an
/// m_o-vector, Pi is its pseudoinverse (1 x m_o) and Sigma is
/// (m_o - 1) x m_o. With these, Pi d = 1, Sigma d = 0 and
/// (A - K C_o) psi = 0.
class FaultFilter {
 public:
  /// Throws NotDetectable, or SynthesisRankFailure if d vanishes.
  FaultFilter(const SystemModel& model, int observer, int target,
              GainOptions gain = {});

  int observer() const { return observer_; }
  int target() const { return target_; }
  int rho() const { return rho_; }

  const Eigen::VectorXd& psi() const { return psi_; }
  const Eigen::VectorXd& detectability() const { return d_; }
  const Eigen::RowVectorXd& pi() const { return pi_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::VectorXd& omega() const { return omega_; }
  const Eigen::MatrixXd& kbar() const { return kbar_; }
  /// K = omega * Pi + Kbar * Sigma, n x m_o.
  const Eigen::MatrixXd& gain() const { return gain_; }
  const Eigen::MatrixXd& measurement_matrix() const { return c_; }

  /// Spectral radius of A - K C_o on the quotient by the all-ones direction,
  /// which C_o cannot see and which always carries eigenvalue 1.
  double observer_spectral_radius() const { return spectral_radius_; }

  /// Synthesis residuals, max-abs over entries (identical for the lifted
  /// matrices).
  double pi_d_error() const;
  double sigma_d_error() const;
  double constraint_error() const;
  /// Rank of the lifted Sigma, 2 * (m_o - 1) when well formed.
  int sigma_rank() const;

  const Positions& estimate() const { return xhat_; }
  void set_estimate(const Positions& xhat) { xhat_ = xhat; }
  int k() const { return k_; }

  /// Consumes the observer measurement y_o(k), returns the residuals computed
  /// from the pre-update innovation, then advances the estimate:
  /// xhat <- A xhat + omega alpha^T + Kbar gamma + eps phi.
  ResidualSample Step(const Positions& y_observer);

 private:
  int observer_;
  int target_;
  int rho_;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd c_;
  Positions eps_phi_;
  Eigen::VectorXd psi_;
  Eigen::VectorXd d_;
  Eigen::RowVectorXd pi_;
  Eigen::MatrixXd sigma_;
  Eigen::VectorXd omega_;
  Eigen::MatrixXd kbar_;
  Eigen::MatrixXd gain_;
  double spectral_radius_ = 0.0;
  Positions xhat_;
  int k_ = 0;
};

/// One filter per agent, all driven by the observer's measurements.
class FilterBank {
 public:
  FilterBank(const SystemModel& model, int observer, GainOptions gain = {});

  int observer() const { return observer_; }
  std::span<const FaultFilter> filters() const { return filters_; }
  const FaultFilter& filter(int target) const { return filters_.at(target); }

  std::vector<ResidualSample> Step(const Positions& y_observer);

 private:
  int observer_;
  std::vector<FaultFilter> filters_;
};

struct DetectionThresholds {
  double kappa1 = 0.5;
  double kappa2 = 0.1;
  /// Bound on ||gamma|| of the selected filter.
  double gamma_tol = 1e-3;
  /// Consecutive steps the condition must hold for the same filter.
  int debounce = 3;
};

/// Throws ValidationError unless 0 < kappa2 < kappa1, gamma_tol > 0 and
/// debounce >= 1.
void Validate(const DetectionThresholds& thresholds);

enum class DetectionRule {
  /// Exactly one ||alpha_i|| > kappa1 with ||gamma_i|| < gamma_tol, every
  /// other ||alpha_j|| < kappa2.
  kStrict,
  /// As kStrict, except another filter j may keep ||alpha_j|| >= kappa2 when
  /// its own ||gamma_j|| >= gamma_tol, i.e. it cannot explain the residual.
  kConsistencyGated,
};

struct ConditionOutcome {
  enum class Kind { kNone, kUnique, kAmbiguous };
  Kind kind = Kind::kNone;
  /// Index into the sample list when kind == kUnique.
  int filter = -1;
};

/// Instantaneous detection condition over one step of bank residuals.
/// Ambiguous when two or more filters have ||alpha|| > kappa1 together with
/// ||gamma|| < gamma_tol.
ConditionOutcome EvaluateDetectionCondition(
    std::span<const ResidualSample> samples,
    const DetectionThresholds& thresholds,
    DetectionRule rule = DetectionRule::kStrict);

struct DetectionResult {
  /// 0-based.
  int faulty_agent = -1;
  Eigen::Vector2d delta_hat = Eigen::Vector2d::Zero();
  /// First step of the streak on which the condition held.
  int k_detect = 0;
  /// Step at which the streak reached the debounce length.
  int k_declared = 0;
  /// k_detect - rho.
  int k_d_hat = 0;
  int rho = 0;
};

/// Debounced detection over a stream of bank residuals.
class Detector {
 public:
  explicit Detector(DetectionThresholds thresholds = {},
                    DetectionRule rule = DetectionRule::kStrict);

  /// `samples[i]` comes from `filters[i]`. Returns a result on the step the
  /// condition has held for `debounce` consecutive steps on the same filter;
  /// the estimate is alpha of that last step.
  std::optional<DetectionResult> Update(std::span<const ResidualSample> samples,
                                        std::span<const FaultFilter> filters);

  int ambiguous_steps() const { return ambiguous_steps_; }
  const DetectionThresholds& thresholds() const { return thresholds_; }
  DetectionRule rule() const { return rule_; }

 private:
  DetectionThresholds thresholds_;
  DetectionRule rule_;
  int streak_filter_ = -1;
  int streak_start_ = 0;
  int streak_length_ = 0;
  int ambiguous_steps_ = 0;
};

/// Change-point estimate of the fault onset from the observer's raw
/// measurements, `measurements[k]` = y_o(k) for k = 0, 1, .... For every
/// candidate onset the unknown initial state is fitted by least squares with
/// the fault `delta_hat` on `faulty_agent` removed; the onset with the
/// smallest residual wins (earliest on ties).
int EstimateOnset(const SystemModel& model, int observer, int faulty_agent,
                  const Eigen::Vector2d& delta_hat, std::span<const Positions> measurements);

}  // namespace consensus_fdi
