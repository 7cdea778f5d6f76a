#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "consensus_fdi/accommodation.h"
#include "consensus_fdi/errors.h"
#include "consensus_fdi/fif.h"
#include "consensus_fdi/graph.h"
#include "consensus_fdi/scenario.h"

namespace py = pybind11;
namespace cf = consensus_fdi;

namespace {

std::string RunScenario(const std::string& text, const std::optional<std::string>& out_dir,
                        bool emit_plots) {
  const cf::RunResult result = cf::Run(cf::ParseScenario(text));
  if (out_dir) cf::EmitTraces(result, *out_dir, emit_plots);
  return cf::DumpJson(cf::ReportJson(result.report));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fault detection, isolation and accommodation for planar consensus networks";

  py::register_exception<cf::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<cf::ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::class_<cf::Graph>(m, "Graph")
      .def(py::init([](int n, const std::vector<std::pair<int, int>>& edges) {
             return cf::Graph::Build(n, edges);
           }),
           py::arg("n"), py::arg("edges"), "Undirected connected graph; edges are 1-based.")
      .def_property_readonly("size", &cf::Graph::size)
      .def_property_readonly("edges", &cf::Graph::edges)
      .def_property_readonly("max_degree", &cf::Graph::max_degree)
      .def("neighbors", &cf::Graph::neighbors, py::arg("agent"))
      .def("degree", &cf::Graph::degree, py::arg("agent"))
      .def("laplacian", [](const cf::Graph& g) { return cf::Laplacian(g); })
      .def("geodesics", [](const cf::Graph& g) { return cf::Geodesics(g); });

  py::class_<cf::SystemModel>(m, "SystemModel")
      .def(py::init([](const cf::Graph& g, double eps,
                       const std::optional<cf::Positions>& targets) {
             std::optional<cf::FormationSpec> f;
             if (targets) f = cf::FormationSpec{*targets};
             return cf::SystemModel(g, eps, f);
           }),
           py::arg("graph"), py::arg("eps"), py::arg("formation_targets") = py::none())
      .def_property_readonly("size", &cf::SystemModel::size)
      .def_property_readonly("eps", &cf::SystemModel::eps)
      .def_property_readonly("a_reduced", &cf::SystemModel::a_reduced)
      .def_property_readonly("phi", &cf::SystemModel::phi)
      .def_property_readonly("stochastic", &cf::SystemModel::stochastic)
      .def_property_readonly("step_too_large", &cf::SystemModel::step_too_large)
      .def(
          "step",
          [](const cf::SystemModel& model, const cf::Positions& x, int k,
             std::optional<int> fault_agent, const Eigen::Vector2d& delta, int onset,
             std::optional<int> leader, const Eigen::Vector2d& u) {
            std::optional<cf::FaultEvent> fault;
            if (fault_agent) fault = cf::FaultEvent{*fault_agent, delta, onset};
            std::optional<cf::LeaderInput> input;
            if (leader) input = cf::LeaderInput{*leader, u};
            return cf::Step(model, {x, k}, fault, input).x;
          },
          py::arg("x"), py::arg("k") = 0, py::arg("fault_agent") = py::none(),
          py::arg("delta") = Eigen::Vector2d::Zero(), py::arg("onset") = 0,
          py::arg("leader") = py::none(), py::arg("u") = Eigen::Vector2d::Zero(),
          "One update from step k; agent indices are 0-based.")
      .def(
          "measurement",
          [](const cf::SystemModel& model, const cf::Positions& x, int agent) {
            return cf::Measurement(model, x, agent);
          },
          py::arg("x"), py::arg("agent"));

  m.def("measurement_matrix", &cf::MeasurementMatrix, py::arg("graph"), py::arg("agent"));
  m.def("detectability_index", &cf::DetectabilityIndex, py::arg("model"),
        py::arg("observer"), py::arg("target"));

  py::class_<cf::FaultFilter>(m, "FaultFilter")
      .def(py::init([](const cf::SystemModel& model, int observer, int target,
                       const std::string& policy, double scale) {
             cf::GainOptions g;
             g.scale = scale;
             if (policy == "zero") {
               g.policy = cf::GainPolicy::kZero;
             } else if (policy == "scaled_identity_projection") {
               g.policy = cf::GainPolicy::kScaledIdentityProjection;
             } else {
               throw cf::ValidationError("gain.policy", "unknown policy " + policy);
             }
             return cf::FaultFilter(model, observer, target, g);
           }),
           py::arg("model"), py::arg("observer"), py::arg("target"),
           py::arg("policy") = "zero", py::arg("scale") = 0.5)
      .def_property_readonly("rho", &cf::FaultFilter::rho)
      .def_property_readonly("psi", &cf::FaultFilter::psi)
      .def_property_readonly("detectability", &cf::FaultFilter::detectability)
      .def_property_readonly("pi", &cf::FaultFilter::pi)
      .def_property_readonly("sigma", &cf::FaultFilter::sigma)
      .def_property_readonly("omega", &cf::FaultFilter::omega)
      .def_property_readonly("gain", &cf::FaultFilter::gain)
      .def_property_readonly("spectral_radius", &cf::FaultFilter::observer_spectral_radius)
      .def_property_readonly("constraint_error", &cf::FaultFilter::constraint_error)
      .def_property_readonly("estimate", &cf::FaultFilter::estimate)
      .def(
          "step",
          [](cf::FaultFilter& f, const cf::Positions& y) {
            const cf::ResidualSample s = f.Step(y);
            return py::make_tuple(Eigen::Vector2d(s.alpha), cf::Positions(s.gamma));
          },
          py::arg("y"), "Consumes y_o(k); returns (alpha, gamma).");

  m.def(
      "gramian",
      [](const cf::SystemModel& model, int leader, int horizon) {
        return Eigen::Matrix2d(cf::Gramian(model, leader, horizon).core);
      },
      py::arg("model"), py::arg("leader"), py::arg("horizon"));
  m.def(
      "open_loop_sequence",
      [](const cf::SystemModel& model, int leader, const Eigen::Vector2d& target,
         int horizon, const cf::Positions& xhat, int faulty_agent,
         const Eigen::Vector2d& delta) {
        cf::AccommodationOptions opts;
        opts.horizon = horizon;
        const cf::AccommodationController ctl(model, leader, target, opts);
        const std::vector<Eigen::Vector2d> seq = ctl.OpenLoopSequence(xhat, faulty_agent, delta);
        Eigen::MatrixXd out(seq.size(), 2);
        for (std::size_t i = 0; i < seq.size(); ++i) out.row(i) = seq[i].transpose();
        return out;
      },
      py::arg("model"), py::arg("leader"), py::arg("target"), py::arg("horizon"),
      py::arg("xhat"), py::arg("faulty_agent"), py::arg("delta"),
      "Minimum-energy inputs u(k..k+N-1), one row each (simulator velocity is eps * u).");

  m.def("preset_names", &cf::PresetNames);
  m.def(
      "preset", [](const std::string& name) { return cf::PresetDocument(name).dump(); },
      py::arg("name"), "Scenario document of a built-in preset, as JSON text.");
  m.def("run_scenario", &RunScenario, py::arg("config"), py::arg("out_dir") = py::none(),
        py::arg("emit_plots") = false,
        "Runs a scenario given as JSON text; returns the report as JSON text.");
}
