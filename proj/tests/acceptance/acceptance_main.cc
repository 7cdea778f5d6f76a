// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <fmt/format.h>

#include "cli.h"
#include "consensus_fdi/accommodation.h"
#include "consensus_fdi/dynamics.h"
#include "consensus_fdi/fif.h"
#include "consensus_fdi/numerics.h"
#include "consensus_fdi/scenario.h"
#include "test_graphs.h"

namespace consensus_fdi {
namespace {

namespace fs = std::filesystem;
using testing::FloydWarshall;
using testing::Lift;
using testing::RandomConnectedGraph;

struct Verdict {
  bool pass = true;
  std::string detail;

  // Records one sub-check; all of them must hold.
  void Check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

// 1. Synthesis identities for every observer/target pair.
Verdict SynthesisIdentities() {
  std::mt19937_64 gen(1001);
  double pi = 0, sigma = 0, constraint = 0;
  int rank_mismatch = 0, pairs = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 11;
    const Graph g = RandomConnectedGraph(n, 0.25, gen);
    const SystemModel model(g, 0.9 / g.max_degree());
    const Eigen::MatrixXd a = model.a_reduced();
    for (int o = 0; o < n; ++o) {
      const FilterBank bank(model, o);
      for (const FaultFilter& f : bank.filters()) {
        ++pairs;
        const Eigen::MatrixXd d = Lift(f.detectability());
        pi = std::max(pi, (Lift(f.pi()) * d - Eigen::Matrix2d::Identity()).norm());
        if (f.sigma().rows() > 0) {
          sigma = std::max(sigma, (Lift(f.sigma()) * d).norm());
          if (NumericalRank(Lift(f.sigma())) != 2 * g.degree(o) - 2) ++rank_mismatch;
        } else if (g.degree(o) != 1) {
          ++rank_mismatch;
        }
        constraint = std::max(
            constraint,
            (Lift(a - f.gain() * f.measurement_matrix()) * Lift(f.psi())).norm());
      }
    }
  }
  Verdict v;
  v.Check(pi <= 1e-10, fmt::format("max |Pi D - I| = {:.2e}", pi));
  v.Check(sigma <= 1e-10, fmt::format("max |Sigma D| = {:.2e}", sigma));
  v.Check(constraint <= 1e-10, fmt::format("max |(A-KC)Psi| = {:.2e}", constraint));
  v.Check(rank_mismatch == 0, fmt::format("rank mismatches {} of {} pairs", rank_mismatch, pairs));
  return v;
}

// 2. Detectability index equals hop distance.
Verdict DetectabilityEqualsDistance() {
  std::mt19937_64 gen(1002);
  std::uniform_real_distribution<double> frac(0.01, 1.0);
  int mismatches = 0, pairs = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 11;
    const Graph g = RandomConnectedGraph(n, 0.15, gen);
    const SystemModel model(g, frac(gen) / g.max_degree());
    const Eigen::MatrixXi dist = FloydWarshall(g);
    for (int o = 0; o < n; ++o) {
      for (int t = 0; t < n; ++t) {
        if (t == o) continue;
        ++pairs;
        if (DetectabilityIndex(model, o, t) != dist(o, t)) ++mismatches;
      }
    }
  }
  Verdict v;
  v.Check(mismatches == 0, fmt::format("{} mismatches over {} pairs", mismatches, pairs));
  return v;
}

// 3. Row stochasticity under the step bound; flag above it.
Verdict StochasticityBound() {
  std::mt19937_64 gen(1003);
  std::uniform_real_distribution<double> frac(0.01, 1.0);
  double row_err = 0, min_entry = 1;
  int missed = 0, false_flags = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Graph g = RandomConnectedGraph(2 + trial % 15, 0.3, gen);
    const double bound = 1.0 / g.max_degree();
    for (double eps : {bound * frac(gen), bound}) {
      const SystemModel m(g, eps);
      row_err = std::max(row_err, (m.a_reduced().rowwise().sum().array() - 1.0).abs().maxCoeff());
      min_entry = std::min(min_entry, m.a_reduced().minCoeff());
      if (m.step_too_large()) ++false_flags;
    }
    const SystemModel big(g, bound * (1.0 + frac(gen)));
    if (!big.step_too_large()) ++missed;
  }
  Verdict v;
  v.Check(row_err <= 1e-14, fmt::format("max row-sum error {:.2e}", row_err));
  v.Check(min_entry >= -1e-15, fmt::format("min entry {:.2e}", min_entry));
  v.Check(false_flags == 0, fmt::format("{} spurious flags", false_flags));
  v.Check(missed == 0, fmt::format("{} missed flags above the bound", missed));
  return v;
}

// 4. Consensus preset: detection and estimate quality.
Verdict ConsensusDetection() {
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = Run(LoadScenario(PresetDocument("consensus-fig2")));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Verdict v;
  if (!r.report.detection) {
    v.Check(false, "no detection");
    return v;
  }
  const DetectionResult& d = *r.report.detection;
  const Eigen::Vector2d delta(2.0, 1.0);
  const int fault_agent = r.config.fault->agent;
  v.Check(d.faulty_agent == fault_agent, fmt::format("isolated agent {}", d.faulty_agent + 1));
  const double alpha_err = (d.delta_hat - delta).cwiseAbs().maxCoeff();
  v.Check(alpha_err <= 1e-3, fmt::format("alpha = ({:.6f}, {:.6f})", d.delta_hat.x(),
                                         d.delta_hat.y()));
  double matched_gamma = 0, unmatched_alpha = 0;
  int worst = -1;
  for (const ResidualRow& row : r.residuals) {
    if (row.k != d.k_declared) continue;
    if (row.filter == fault_agent) {
      matched_gamma = row.gamma_norm;
    } else if (row.alpha_norm > unmatched_alpha) {
      unmatched_alpha = row.alpha_norm;
      worst = row.filter;
    }
  }
  v.Check(matched_gamma < 1e-3, fmt::format("matched |gamma| = {:.2e}", matched_gamma));
  v.Check(unmatched_alpha < 0.1, fmt::format("max unmatched |alpha| = {:.3f} (filter {})",
                                             unmatched_alpha, worst + 1));
  v.Check(r.report.latency && *r.report.latency >= d.rho,
          fmt::format("latency {} >= rho {}", r.report.latency.value_or(-1), d.rho));
  v.Check(secs < 1.0, fmt::format("{:.3f} s", secs));
  return v;
}

// 5. Matched gamma equals the fault-free twin's.
Verdict DirectionalDecoupling() {
  std::mt19937_64 gen(1005);
  std::uniform_real_distribution<double> frac(0.2, 1.0), u(-3.0, 3.0);
  double worst = 0;
  int runs = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 10;
    const auto edges = testing::RandomConnectedEdges(n, 0.2, gen);
    const Graph g = Graph::Build(n, edges);
    nlohmann::json doc;
    doc["graph"] = {{"n", n}, {"edges", edges}};
    doc["eps"] = frac(gen) / g.max_degree();
    doc["seed"] = trial;
    doc["observer"] = 1 + trial % n;
    doc["fault"] = {{"agent", 1 + (trial * 7 + 2) % n},
                    {"delta", {u(gen), u(gen)}},
                    {"k_d", 1 + trial}};
    doc["accommodation"] = {{"enabled", false}};
    doc["steps"] = 300;
    const RunResult r = Run(LoadScenario(doc));
    if (r.report.decoupling_deviation) {
      worst = std::max(worst, *r.report.decoupling_deviation);
      ++runs;
    }
  }
  Verdict v;
  v.Check(runs == 20 && worst <= 1e-9,
          fmt::format("max deviation {:.2e} over {} scenarios", worst, runs));
  return v;
}

// 6. Hold accommodation, and linear drift without it.
Verdict HoldAccommodation() {
  const auto start = std::chrono::steady_clock::now();
  const nlohmann::json doc = PresetDocument("accommodation-fig5");
  const RunResult r = Run(LoadScenario(doc));
  nlohmann::json off = doc;
  off["accommodation"]["enabled"] = false;
  const RunResult drift = Run(LoadScenario(off));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Verdict v;
  const Eigen::Vector2d reference =
      r.report.true_prefault_centroid.value_or(Eigen::Vector2d::Constant(1e9));
  const double err = (r.report.final_centroid - reference).norm();
  v.Check(r.report.accommodation_started && err < 1e-2,
          fmt::format("|centroid - prefault centroid| = {:.2e}", err));
  v.Check(r.report.final_centroid_error && *r.report.final_centroid_error < 1e-2,
          fmt::format("|centroid - x_f| = {:.2e}", r.report.final_centroid_error.value_or(-1)));

  const FaultEvent& fault = *drift.config.fault;
  const double slope = drift.config.eps * fault.delta.norm() / drift.config.n;
  double slope_err = 0;
  for (std::size_t k = fault.onset + 1; k < drift.positions.size(); ++k) {
    const double step =
        (Centroid(drift.positions[k]) - Centroid(drift.positions[k - 1])).norm();
    slope_err = std::max(slope_err, std::abs(step - slope));
  }
  v.Check(drift.positions.size() > static_cast<std::size_t>(fault.onset) + 10 &&
              slope_err <= 1e-10,
          fmt::format("drift slope error {:.2e} (slope {:.6f})", slope_err, slope));
  v.Check(secs < 2.0, fmt::format("{:.3f} s", secs));
  return v;
}

// 7. Closed-form sequence against an equality-constrained least squares.
Verdict OptimalControlOracle() {
  std::mt19937_64 gen(1007);
  std::uniform_real_distribution<double> u(-2.0, 2.0), frac(0.2, 1.0);
  double terminal = 0, energy_rel = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 8;
    const int horizon = 1 + (trial * 11) % 20;
    const Graph g = RandomConnectedGraph(n, 0.3, gen);
    const SystemModel model(g, frac(gen) / g.max_degree());
    const int leader = trial % n, faulty = (trial * 3 + 1) % n;
    const Eigen::Vector2d target(u(gen), u(gen)), delta(u(gen), u(gen));
    const Positions x0 = testing::RandomPositions(n, gen, 2.0);
    const AccommodationController ctl(model, leader, target, {horizon, 1e-3, 1, 1});
    const std::vector<Eigen::Vector2d> seq = ctl.OpenLoopSequence(x0, faulty, delta);

    StateVector s{x0, 0};
    for (const Eigen::Vector2d& v : seq) {
      s = Step(model, s, FaultEvent{faulty, delta, 0}, LeaderInput{leader, ctl.ToApplied(v)});
    }
    terminal = std::max(terminal, (Centroid(s.x) - target).norm());

    const Eigen::MatrixXd a = Lift(model.a_reduced());
    const Eigen::MatrixXd b = model.eps() * Lift(Eigen::VectorXd::Unit(n, leader));
    const Eigen::MatrixXd m = Lift(Eigen::RowVectorXd::Constant(n, 1.0 / n));
    const Eigen::VectorXd w =
        model.eps() * testing::Stack(Eigen::VectorXd::Unit(n, faulty) * delta.transpose());
    Eigen::MatrixXd e(2, 2 * horizon);
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    Eigen::VectorXd forced = Eigen::VectorXd::Zero(2 * n);
    for (int tau = horizon - 1; tau >= 0; --tau) {
      e.middleCols(2 * tau, 2) = m * p * b;
      forced += p * w;
      p = p * a;
    }
    const Eigen::Vector2d rhs = target - m * (p * testing::Stack(x0) + forced);
    const int dim = 2 * horizon;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim + 2, dim + 2);
    kkt.topLeftCorner(dim, dim) = 2.0 * Eigen::MatrixXd::Identity(dim, dim);
    kkt.topRightCorner(dim, 2) = e.transpose();
    kkt.bottomLeftCorner(2, dim) = e;
    Eigen::VectorXd krhs = Eigen::VectorXd::Zero(dim + 2);
    krhs.tail<2>() = rhs;
    const double oracle = kkt.fullPivLu().solve(krhs).head(dim).squaredNorm();
    double energy = 0;
    for (const Eigen::Vector2d& v : seq) energy += v.squaredNorm();
    energy_rel = std::max(energy_rel, std::abs(energy - oracle) / std::max(oracle, 1e-300));
  }
  Verdict v;
  v.Check(terminal <= 1e-8, fmt::format("max terminal error {:.2e}", terminal));
  v.Check(energy_rel <= 1e-6, fmt::format("max energy rel. error {:.2e}", energy_rel));
  return v;
}

// 8. Gramian closed form for stochastic A.
Verdict GramianClosedForm() {
  std::mt19937_64 gen(1008);
  std::uniform_real_distribution<double> frac(0.05, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = RandomConnectedGraph(2 + trial % 11, 0.25, gen);
    const SystemModel model(g, frac(gen) / g.max_degree());
    const int n = g.size(), horizon = 1 + trial % 40;
    const GramianFactors w = Gramian(model, trial % n, horizon);
    const double closed = horizon * model.eps() * model.eps() / (double(n) * n);
    worst = std::max(worst, (w.core - closed * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff());
  }
  Verdict v;
  v.Check(worst <= 1e-12, fmt::format("max deviation {:.2e}", worst));
  return v;
}

// 9. Formation preset recovers to the origin.
Verdict FormationRecovery() {
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = Run(LoadScenario(PresetDocument("formation-fig7")));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Verdict v;
  v.Check(r.report.accommodation_started && r.report.final_centroid.norm() < 1e-2,
          fmt::format("final |centroid| = {:.2e}", r.report.final_centroid.norm()));
  const double res = r.report.prefault_formation_residual.value_or(1e9);
  v.Check(res < 1e-6, fmt::format("prefault |Lx - phi| = {:.2e}", res));
  v.Check(secs < 2.0, fmt::format("{:.3f} s", secs));
  return v;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// 10. Same preset and seed, byte-identical artifacts.
Verdict Determinism() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / "cfdi_acceptance_determinism";
  fs::remove_all(root);
  for (const std::string& preset : PresetNames()) {
    std::vector<fs::path> dirs = {root / (preset + "_a"), root / (preset + "_b")};
    bool ran = true;
    for (const fs::path& dir : dirs) {
      std::ostringstream out, err;
      ran = ran && cli::Main({"run", "--preset", preset, "--seed", "3", "--out", dir.string()},
                             out, err) == 0;
    }
    int differing = 0;
    for (const char* f :
         {"positions.csv", "residuals.csv", "centroid.csv", "control.csv", "report.json"}) {
      const std::string a = Slurp(dirs[0] / f), b = Slurp(dirs[1] / f);
      if (a.empty() || a != b) ++differing;
    }
    v.Check(ran && differing == 0, fmt::format("{}: {} differing files", preset, differing));
  }
  fs::remove_all(root);
  return v;
}

}  // namespace
}  // namespace consensus_fdi

int main() {
  using consensus_fdi::Verdict;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"synthesis identities", consensus_fdi::SynthesisIdentities},
      {"detectability equals hop distance", consensus_fdi::DetectabilityEqualsDistance},
      {"row stochastic under the step bound", consensus_fdi::StochasticityBound},
      {"consensus preset detection", consensus_fdi::ConsensusDetection},
      {"directional decoupling", consensus_fdi::DirectionalDecoupling},
      {"hold accommodation and drift", consensus_fdi::HoldAccommodation},
      {"minimum-energy control oracle", consensus_fdi::OptimalControlOracle},
      {"gramian closed form", consensus_fdi::GramianClosedForm},
      {"formation recovery", consensus_fdi::FormationRecovery},
      {"determinism", consensus_fdi::Determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.Check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failed;
    std::cout << fmt::format("[{}] {:2d} {} ({:.2f} s): {}\n", v.pass ? "PASS" : "FAIL", i + 1,
                             criteria[i].first, secs, v.detail);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed,
                           criteria.size());
  return failed == 0 ? 0 : 1;
}
