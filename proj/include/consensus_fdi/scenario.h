#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "consensus_fdi/accommodation.h"
#include "consensus_fdi/dynamics.h"
#include "consensus_fdi/fif.h"

namespace consensus_fdi {

enum class InitialMode { kRandom, kExplicit, kFormation };
enum class TargetMode { kHold, kOrigin, kPoint };

/// Validated scenario. Agent indices are 0-based here; the JSON document
/// uses 1-based indices.
struct ScenarioConfig {
  std::string name = "scenario";
  int n = 0;
  /// 1-based pairs, as written in the document.
  std::vector<std::pair<int, int>> edges;
  double eps = 0.0;
  ModelKind kind = ModelKind::kConsensus;
  std::optional<Positions> formation_targets;

  InitialMode initial_mode = InitialMode::kRandom;
  Positions initial_positions;
  Eigen::Vector2d initial_center = Eigen::Vector2d::Zero();
  double initial_spread = 1.0;
  std::uint64_t seed = 0;

  std::optional<FaultEvent> fault;
  int observer = 0;
  int leader = 0;

  DetectionThresholds thresholds;
  DetectionRule rule = DetectionRule::kConsistencyGated;
  GainOptions gain;

  bool accommodate = true;
  AccommodationOptions accommodation;
  TargetMode target_mode = TargetMode::kHold;
  Eigen::Vector2d target = Eigen::Vector2d::Zero();

  /// Length of the monitoring phase; accommodation, once started, runs
  /// until it settles or hits accommodation.max_steps.
  int steps = 1000;
  std::string output_dir = "out";

  /// Dotted paths of fields filled from defaults.
  std::vector<std::string> defaulted;
};

/// Parses a JSON scenario document strictly: unknown keys and wrong types
/// raise ValidationError naming the dotted field path; malformed text raises
/// ParseError.
ScenarioConfig ParseScenario(std::string_view text);
ScenarioConfig LoadScenario(const nlohmann::json& doc);

/// Sets `path` (dotted, e.g. "fault.k_d") in a scenario document. The value
/// is read as JSON when it parses, otherwise as a string.
void ApplyOverride(nlohmann::json& doc, std::string_view path, std::string_view value);

/// Parses "key=value" and applies it. Throws ValidationError when malformed.
void ApplyOverride(nlohmann::json& doc, std::string_view assignment);

/// Canonical document for a config (1-based indices, all defaults explicit).
nlohmann::ordered_json ToJson(const ScenarioConfig& config);

std::vector<std::string> PresetNames();
/// Throws ValidationError for unknown names.
nlohmann::json PresetDocument(std::string_view name);

/// Initial positions: explicit, random around a center, or the formation
/// targets shifted so their centroid sits at the center.
Positions InitialPositions(const ScenarioConfig& config);

struct ResidualRow {
  int k;
  int filter;
  Eigen::Vector2d alpha;
  double alpha_norm;
  double gamma_norm;
};

struct CentroidRow {
  int k;
  Eigen::Vector2d centroid;
  Eigen::Vector2d centroid_hat;
};

struct ControlRow {
  int k;
  Eigen::Vector2d u;
};

struct RunReport {
  std::string name;
  std::optional<DetectionResult> detection;
  std::optional<int> onset_hat;
  /// k_detect - k_d when both a fault and a detection exist.
  std::optional<int> latency;
  bool stochastic = false;
  bool step_too_large = false;
  std::vector<double> peak_alpha;
  std::vector<int> rho;
  int ambiguous_steps = 0;
  /// max_k ||gamma_i*(k) - gamma_twin_i*(k)|| of the true faulty agent's
  /// filter against the fault-free twin, over the monitoring phase.
  std::optional<double> decoupling_deviation;
  double matched_gamma_final = 0.0;

  bool accommodation_started = false;
  bool accommodation_converged = false;
  std::optional<Eigen::Vector2d> target;
  std::optional<Eigen::Vector2d> true_prefault_centroid;
  Eigen::Vector2d initial_centroid = Eigen::Vector2d::Zero();
  Eigen::Vector2d final_centroid = Eigen::Vector2d::Zero();
  Eigen::Vector2d final_centroid_hat = Eigen::Vector2d::Zero();
  /// ||final centroid - target|| when accommodation ran.
  std::optional<double> final_centroid_error;
  double final_centroid_drift = 0.0;
  /// ||L x - phi|| (Frobenius) at the step before the fault, when there is one.
  std::optional<double> prefault_formation_residual;
  int steps = 0;
  int monitoring_steps = 0;
  std::string error;
};

struct RunResult {
  ScenarioConfig config;
  RunReport report;
  /// positions[k] is the state at step k, for k in [0, report.steps).
  std::vector<Positions> positions;
  std::vector<ResidualRow> residuals;
  std::vector<CentroidRow> centroid;
  std::vector<ControlRow> control;
  /// alpha and gamma norm of every filter on the twin, same layout as
  /// residuals; kept for decoupling checks.
  std::vector<ResidualRow> twin_residuals;
};

/// Simulates the faulty system and a fault-free twin, runs the filter bank
/// on the observer until detection, then (if enabled) hands over to the
/// leader's accommodation loop. Module errors raised after the run has
/// started are caught and stored in report.error together with the partial
/// traces; configuration errors propagate.
RunResult Run(const ScenarioConfig& config);

nlohmann::ordered_json ReportJson(const RunReport& report);

/// JSON text with every floating-point number printed to 17 significant
/// digits.
std::string DumpJson(const nlohmann::ordered_json& doc, int indent = 2);

/// Writes positions.csv, residuals.csv, centroid.csv, control.csv and
/// report.json into `dir` (created if needed), plus plots.gp when
/// `emit_plots`. Throws IoError.
void EmitTraces(const RunResult& result, const std::filesystem::path& dir,
                bool emit_plots = false);

}  // namespace consensus_fdi
