#include <algorithm>
#include <limits>
#include <utility>

#include "consensus_fdi/errors.h"
#include "consensus_fdi/scenario.h"

namespace consensus_fdi {
namespace {

SystemModel BuildModel(const ScenarioConfig& c) {
  std::optional<FormationSpec> formation;
  if (c.kind == ModelKind::kFormation) formation = FormationSpec{*c.formation_targets};
  return SystemModel(Graph::Build(c.n, c.edges), c.eps, std::move(formation));
}

// Live system during accommodation; records what the loop does to it.
class RecordingPlant : public AccommodationPlant {
 public:
  RecordingPlant(const SystemModel& model, StateVector state,
                 std::optional<FaultEvent> fault, int observer, int leader)
      : model_(model), state_(std::move(state)), fault_(std::move(fault)),
        observer_(observer), leader_(leader) {}

  int step() const override { return state_.k; }
  Positions ObserverMeasurement() const override {
    return Measurement(model_, state_.x, observer_);
  }
  Eigen::Vector2d LeaderPosition() const override {
    return state_.x.row(leader_).transpose();
  }
  void Advance(const Eigen::Vector2d& u_applied) override {
    positions_.push_back(state_.x);
    state_ = Step(model_, state_, fault_, LeaderInput{leader_, u_applied});
  }

  const StateVector& state() const { return state_; }
  const std::vector<Positions>& positions() const { return positions_; }

 private:
  const SystemModel& model_;
  StateVector state_;
  std::optional<FaultEvent> fault_;
  int observer_;
  int leader_;
  std::vector<Positions> positions_;
};

double FormationResidual(const SystemModel& model, const Positions& x) {
  const Eigen::MatrixXd lap = Laplacian(model.graph());
  return (lap * x - model.phi()).norm();
}

}  // namespace

RunResult Run(const ScenarioConfig& config) {
  RunResult result;
  result.config = config;
  RunReport& report = result.report;
  report.name = config.name;

  const SystemModel model = BuildModel(config);
  const int n = model.size();
  report.stochastic = model.stochastic();
  report.step_too_large = model.step_too_large();

  StateVector state{InitialPositions(config), 0};
  StateVector twin = state;
  report.initial_centroid = Centroid(state.x);
  report.final_centroid = report.initial_centroid;
  report.final_centroid_hat = report.initial_centroid;
  report.peak_alpha.assign(n, 0.0);

  try {
    FilterBank bank(model, config.observer, config.gain);
    FilterBank twin_bank(model, config.observer, config.gain);
    for (const FaultFilter& f : bank.filters()) report.rho.push_back(f.rho());
    Detector detector(config.thresholds, config.rule);
    std::vector<Positions> measurements;
    const int true_faulty = config.fault ? config.fault->agent : -1;
    if (config.fault) report.decoupling_deviation = 0.0;

    // Filter whose residual is most consistent so far; its estimate feeds
    // the monitoring-phase centroid estimate.
    int best_filter = 0;
    for (int k = 0; k < config.steps; ++k) {
      result.positions.push_back(state.x);
      const Eigen::Vector2d leader_pos = state.x.row(config.leader).transpose();
      result.centroid.push_back(
          {k, Centroid(state.x),
           EstimateCentroid(bank.filter(best_filter).estimate(), config.leader,
                            leader_pos)});
      if (config.fault && k + 1 == config.fault->onset) {
        report.prefault_formation_residual = FormationResidual(model, state.x);
      }

      measurements.push_back(Measurement(model, state.x, config.observer));
      const std::vector<ResidualSample> samples = bank.Step(measurements.back());
      const std::vector<ResidualSample> twin_samples =
          twin_bank.Step(Measurement(model, twin.x, config.observer));
      double best_gamma = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        const ResidualSample& s = samples[i];
        result.residuals.push_back({k, i, s.alpha, s.alpha_norm(), s.gamma_norm()});
        const ResidualSample& t = twin_samples[i];
        result.twin_residuals.push_back({k, i, t.alpha, t.alpha_norm(), t.gamma_norm()});
        report.peak_alpha[i] = std::max(report.peak_alpha[i], s.alpha_norm());
        if (s.gamma_norm() < best_gamma) {
          best_gamma = s.gamma_norm();
          best_filter = i;
        }
      }
      if (true_faulty >= 0) {
        const double dev = (samples[true_faulty].gamma - twin_samples[true_faulty].gamma).norm();
        report.decoupling_deviation = std::max(*report.decoupling_deviation, dev);
        report.matched_gamma_final = samples[true_faulty].gamma_norm();
      }

      const std::optional<DetectionResult> hit = detector.Update(samples, bank.filters());
      state = Step(model, state, config.fault);
      twin = Step(model, twin);
      ++report.monitoring_steps;
      if (hit) {
        report.detection = hit;
        break;
      }
    }
    report.ambiguous_steps = detector.ambiguous_steps();

    if (report.detection) {
      const DetectionResult& d = *report.detection;
      report.onset_hat = EstimateOnset(model, config.observer, d.faulty_agent, d.delta_hat,
                                       measurements);
      if (config.fault) report.latency = d.k_detect - config.fault->onset;
    }
    if (config.fault && config.fault->onset > 0 &&
        config.fault->onset <= static_cast<int>(result.positions.size())) {
      report.true_prefault_centroid = Centroid(result.positions[config.fault->onset - 1]);
    }

    if (report.detection && config.accommodate) {
      const DetectionResult& d = *report.detection;
      const FaultFilter& matched = bank.filter(d.faulty_agent);
      const Positions handoff = HandoffEstimate(model, matched, d.delta_hat);
      const Eigen::Vector2d leader_pos = state.x.row(config.leader).transpose();

      Eigen::Vector2d target = config.target;
      switch (config.target_mode) {
        case TargetMode::kHold: {
          // Undo the drift accumulated since the estimated onset.
          const Eigen::Vector2d c_hat = EstimateCentroid(handoff, config.leader, leader_pos);
          const int exposed = state.k - *report.onset_hat;
          target = c_hat - exposed * model.eps() * d.delta_hat / n;
          break;
        }
        case TargetMode::kOrigin:
          target = Eigen::Vector2d::Zero();
          break;
        case TargetMode::kPoint:
          break;
      }
      report.target = target;
      report.accommodation_started = true;

      AccommodationController controller(model, config.leader, target, config.accommodation);
      LeaderFilter estimator(model, matched, config.leader, d.delta_hat, handoff);
      RecordingPlant plant(model, state, config.fault, config.observer, config.leader);
      AccommodationTrace trace;
      try {
        trace = AccommodateLoop(controller, estimator, plant, d.faulty_agent, d.delta_hat);
      } catch (...) {
        state = plant.state();
        throw;
      }
      for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const ControlSample& s = trace.samples[i];
        const Positions& x = plant.positions()[i];
        result.positions.push_back(x);
        result.centroid.push_back({s.k, Centroid(x), s.centroid_hat});
        result.control.push_back({s.k, s.u_applied});
      }
      report.accommodation_converged = trace.converged;
      state = plant.state();
      report.final_centroid_hat = EstimateCentroid(
          estimator.Corrected(state.x.row(config.leader).transpose()), config.leader,
          state.x.row(config.leader).transpose());
    }
  } catch (const Error& e) {
    report.error = e.what();
  }

  report.steps = static_cast<int>(result.positions.size());
  report.final_centroid = Centroid(state.x);
  if (!report.accommodation_started && !result.centroid.empty()) {
    report.final_centroid_hat = result.centroid.back().centroid_hat;
  }
  if (report.target) report.final_centroid_error = (report.final_centroid - *report.target).norm();
  report.final_centroid_drift = (report.final_centroid - report.initial_centroid).norm();
  return result;
}

}  // namespace consensus_fdi
