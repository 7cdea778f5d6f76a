#include "consensus_fdi/fif.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "consensus_fdi/errors.h"
#include "consensus_fdi/numerics.h"

namespace consensus_fdi {

int DetectabilityIndex(const SystemModel& model, int observer, int target) {
  const int n = model.size();
  if (observer < 0 || observer >= n || target < 0 || target >= n) {
    throw IndexOutOfRange("agent index outside 0.." + std::to_string(n - 1));
  }
  const Eigen::MatrixXd c = MeasurementMatrix(model.graph(), observer);
  const double shrink = std::min(1.0, model.eps());
  Eigen::VectorXd column = Eigen::VectorXd::Unit(n, target);
  double scale = 1.0;
  for (int v = 1; v <= n; ++v) {
    if ((c * column).cwiseAbs().maxCoeff() > 1e-12 * scale) return v;
    column = model.a_reduced() * column;
    scale *= shrink;
  }
  throw NotDetectable("fault at agent " + std::to_string(target + 1) +
                      " never reaches observer " + std::to_string(observer + 1));
}

FaultFilter::FaultFilter(const SystemModel& model, int observer, int target,
                         GainOptions gain)
    : observer_(observer),
      target_(target),
      rho_(DetectabilityIndex(model, observer, target)),
      a_(model.a_reduced()),
      c_(MeasurementMatrix(model.graph(), observer)),
      eps_phi_(model.eps() * model.phi()) {
  const int n = model.size();
  const int m = static_cast<int>(c_.rows());

  psi_ = model.eps() * (MatrixPower(a_, rho_ - 1) * Eigen::VectorXd::Unit(n, target));
  d_ = c_ * psi_;
  if (d_.cwiseAbs().maxCoeff() == 0.0) {
    throw SynthesisRankFailure("detectability matrix vanishes for agent " +
                               std::to_string(target + 1));
  }
  pi_ = PseudoInverse(d_);
  if (std::abs(pi_.dot(d_) - 1.0) > 1e-8) {
    throw SynthesisRankFailure("detectability matrix lost rank for agent " +
                               std::to_string(target + 1));
  }
  const Eigen::MatrixXd beta = LeftNullBasis(d_);
  sigma_ = beta * (Eigen::MatrixXd::Identity(m, m) - d_ * pi_);
  omega_ = a_ * psi_;

  switch (gain.policy) {
    case GainPolicy::kZero:
      kbar_ = Eigen::MatrixXd::Zero(n, m - 1);
      break;
    case GainPolicy::kScaledIdentityProjection:
      kbar_ = gain.scale * PseudoInverse(c_) * beta.transpose();
      break;
  }
  gain_ = omega_ * pi_ + kbar_ * sigma_;

  const Eigen::MatrixXd translation_free =
      LeftNullBasis(Eigen::MatrixXd::Ones(n, 1));
  spectral_radius_ = SpectralRadius(translation_free * (a_ - gain_ * c_) *
                                    translation_free.transpose());
  xhat_ = Positions::Zero(n, 2);
}

double FaultFilter::pi_d_error() const { return std::abs(pi_.dot(d_) - 1.0); }

double FaultFilter::sigma_d_error() const {
  return sigma_.rows() == 0 ? 0.0 : (sigma_ * d_).cwiseAbs().maxCoeff();
}

double FaultFilter::constraint_error() const {
  return ((a_ - gain_ * c_) * psi_).cwiseAbs().maxCoeff();
}

int FaultFilter::sigma_rank() const {
  return sigma_.rows() == 0 ? 0 : 2 * NumericalRank(sigma_);
}

ResidualSample FaultFilter::Step(const Positions& y_observer) {
  const Positions innovation = y_observer - c_ * xhat_;
  ResidualSample sample;
  sample.k = k_;
  sample.alpha = (pi_ * innovation).transpose();
  sample.gamma = sigma_ * innovation;
  xhat_ = a_ * xhat_ + omega_ * sample.alpha.transpose() + eps_phi_;
  if (kbar_.cols() > 0) xhat_ += kbar_ * sample.gamma;
  ++k_;
  return sample;
}

FilterBank::FilterBank(const SystemModel& model, int observer, GainOptions gain)
    : observer_(observer) {
  filters_.reserve(model.size());
  for (int target = 0; target < model.size(); ++target) {
    filters_.emplace_back(model, observer, target, gain);
  }
}

std::vector<ResidualSample> FilterBank::Step(const Positions& y_observer) {
  std::vector<ResidualSample> samples;
  samples.reserve(filters_.size());
  for (auto& f : filters_) samples.push_back(f.Step(y_observer));
  return samples;
}

void Validate(const DetectionThresholds& t) {
  if (!(t.kappa2 > 0.0)) throw ValidationError("thresholds.kappa2", "must be positive");
  if (!(t.kappa1 > t.kappa2)) {
    throw ValidationError("thresholds.kappa1", "must exceed kappa2");
  }
  if (!(t.gamma_tol > 0.0)) {
    throw ValidationError("thresholds.gamma_tol", "must be positive");
  }
  if (t.debounce < 1) throw ValidationError("thresholds.debounce", "must be >= 1");
}

ConditionOutcome EvaluateDetectionCondition(
    std::span<const ResidualSample> samples, const DetectionThresholds& t,
    DetectionRule rule) {
  ConditionOutcome outcome;
  int consistent = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].alpha_norm() > t.kappa1 && samples[i].gamma_norm() < t.gamma_tol) {
      ++consistent;
      outcome.filter = static_cast<int>(i);
    }
  }
  if (consistent == 0) return {};
  if (consistent > 1) return {ConditionOutcome::Kind::kAmbiguous, -1};

  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (static_cast<int>(j) == outcome.filter) continue;
    const bool quiet = samples[j].alpha_norm() < t.kappa2;
    const bool inconsistent = samples[j].gamma_norm() >= t.gamma_tol;
    const bool excluded =
        rule == DetectionRule::kStrict ? quiet : (quiet || inconsistent);
    if (!excluded) return {};
  }
  outcome.kind = ConditionOutcome::Kind::kUnique;
  return outcome;
}

Detector::Detector(DetectionThresholds thresholds, DetectionRule rule)
    : thresholds_(thresholds), rule_(rule) {
  Validate(thresholds_);
}

std::optional<DetectionResult> Detector::Update(
    std::span<const ResidualSample> samples, std::span<const FaultFilter> filters) {
  if (samples.size() != filters.size()) {
    throw Error("Detector::Update: one sample per filter required");
  }
  const ConditionOutcome outcome =
      EvaluateDetectionCondition(samples, thresholds_, rule_);
  if (outcome.kind == ConditionOutcome::Kind::kAmbiguous) ++ambiguous_steps_;
  if (outcome.kind != ConditionOutcome::Kind::kUnique) {
    streak_filter_ = -1;
    streak_length_ = 0;
    return std::nullopt;
  }
  const int k = samples[outcome.filter].k;
  if (outcome.filter == streak_filter_) {
    ++streak_length_;
  } else {
    streak_filter_ = outcome.filter;
    streak_start_ = k;
    streak_length_ = 1;
  }
  if (streak_length_ < thresholds_.debounce) return std::nullopt;

  const FaultFilter& f = filters[outcome.filter];
  DetectionResult result;
  result.faulty_agent = f.target();
  result.delta_hat = samples[outcome.filter].alpha;
  result.k_detect = streak_start_;
  result.k_declared = k;
  result.rho = f.rho();
  result.k_d_hat = streak_start_ - f.rho();
  return result;
}

int EstimateOnset(const SystemModel& model, int observer, int faulty_agent,
                  const Eigen::Vector2d& delta_hat, std::span<const Positions> measurements) {
  const int n = model.size();
  const int steps = static_cast<int>(measurements.size());
  if (faulty_agent < 0 || faulty_agent >= n) {
    throw IndexOutOfRange("faulty agent outside 0.." + std::to_string(n - 1));
  }
  if (steps == 0) return 0;
  const Eigen::MatrixXd& a = model.a_reduced();
  const Eigen::MatrixXd c = MeasurementMatrix(model.graph(), observer);
  const int m = static_cast<int>(c.rows());
  const double eps = model.eps();

  // Stacked regressor C A^k for the unknown initial state, and the
  // measurements with the known formation drift removed.
  Eigen::MatrixXd regressor(m * steps, n);
  Eigen::MatrixXd data(m * steps, 2);
  // fault_response.col(j) = C * eps * sum_{i<j} A^i e_f: the response j steps
  // after onset to a unit fault.
  Eigen::MatrixXd fault_response(m, steps);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Positions drift = Positions::Zero(n, 2);
  Eigen::VectorXd spread = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < steps; ++k) {
    if (measurements[k].rows() != m) {
      throw ValidationError("measurements", "expected " + std::to_string(m) + " rows");
    }
    regressor.middleRows(k * m, m) = c * power;
    data.middleRows(k * m, m) = measurements[k] - c * drift;
    fault_response.col(k) = c * spread;
    drift = a * drift + eps * model.phi();
    spread = a * spread + eps * Eigen::VectorXd::Unit(n, faulty_agent);
    power = a * power;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(regressor, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  int rank = 0;
  while (rank < sv.size() && sv(rank) > kDefaultRankTol * sv(0)) ++rank;
  const Eigen::MatrixXd basis = svd.matrixU().leftCols(rank);

  int best = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd rhs(m * steps, 2);
  for (int onset = 0; onset < steps; ++onset) {
    rhs = data;
    for (int k = onset + 1; k < steps; ++k) {
      rhs.middleRows(k * m, m) -= fault_response.col(k - onset) * delta_hat.transpose();
    }
    const double residual = (rhs - basis * (basis.transpose() * rhs)).norm();
    if (residual < best_residual) {
      best_residual = residual;
      best = onset;
    }
  }
  return best;
}

}  // namespace consensus_fdi
