#include "cli.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "consensus_fdi/errors.h"
#include "consensus_fdi/fif.h"
#include "consensus_fdi/scenario.h"

namespace consensus_fdi::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct SourceArgs {
  std::string preset;
  std::string config;
  std::vector<std::string> overrides;
  std::optional<long long> seed;
};

void AddSourceOptions(CLI::App* cmd, SourceArgs& a) {
  auto* preset = cmd->add_option("--preset", a.preset, "Built-in scenario (see `presets`)");
  auto* config = cmd->add_option("--config,config", a.config, "Scenario JSON file");
  preset->excludes(config);
  cmd->add_option("--set", a.overrides, "Override a field, e.g. fault.k_d=8 (repeatable)")
      ->allow_extra_args(false);
  cmd->add_option("--seed", a.seed, "RNG seed (overrides the scenario seed)");
}

json LoadDocument(const SourceArgs& a) {
  json doc;
  if (!a.preset.empty()) {
    doc = PresetDocument(a.preset);
  } else if (!a.config.empty()) {
    std::ifstream in(a.config, std::ios::binary);
    if (!in) throw ValidationError("config", "cannot read " + a.config);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(a.config + ": " + e.what());
    }
  } else {
    throw ValidationError("config", "give --preset NAME or a config file");
  }
  for (const std::string& o : a.overrides) ApplyOverride(doc, o);
  if (a.seed) doc["seed"] = *a.seed;
  return doc;
}

std::filesystem::path ResolveOutDir(const std::string& flag, const ScenarioConfig& cfg) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return cfg.output_dir;
}

std::string Vec(const Eigen::Vector2d& v) {
  return fmt::format("({:.6g}, {:.6g})", v.x(), v.y());
}

std::string Summary(const RunReport& r) {
  std::string s = r.name + ": ";
  if (r.detection) {
    const DetectionResult& d = *r.detection;
    s += fmt::format("fault on agent {} delta_hat={} k_detect={}", d.faulty_agent + 1,
                     Vec(d.delta_hat), d.k_detect);
    s += r.latency ? fmt::format(" latency={}", *r.latency) : " latency=n/a";
  } else {
    s += "no fault detected";
  }
  if (r.final_centroid_error) {
    s += fmt::format(" final_centroid_error={:.3e}", *r.final_centroid_error);
    s += r.accommodation_converged ? " (converged)" : " (not converged)";
  } else {
    s += " final_centroid_error=n/a";
  }
  s += fmt::format(" steps={}", r.steps);
  return s;
}

int CmdRun(const SourceArgs& src, const std::string& out_flag, bool plots,
           std::ostream& out, std::ostream& err) {
  const ScenarioConfig cfg = LoadScenario(LoadDocument(src));
  const RunResult result = Run(cfg);
  const std::filesystem::path dir = ResolveOutDir(out_flag, cfg);
  EmitTraces(result, dir, plots);
  out << Summary(result.report) << '\n';
  if (!result.report.error.empty()) {
    err << "error: " << result.report.error << '\n';
    return 2;
  }
  return 0;
}

int CmdSynth(const SourceArgs& src, const std::string& json_path, bool json_stdout,
             std::ostream& out) {
  const ScenarioConfig cfg = LoadScenario(LoadDocument(src));
  std::optional<FormationSpec> formation;
  if (cfg.formation_targets) formation = FormationSpec{*cfg.formation_targets};
  const SystemModel model(Graph::Build(cfg.n, cfg.edges), cfg.eps, formation);
  const FilterBank bank(model, cfg.observer, cfg.gain);
  const Eigen::MatrixXi geo = Geodesics(model.graph());

  ordered_json rows = ordered_json::array();
  std::string table = fmt::format("observer {}  eps {}  stochastic {}\n", cfg.observer + 1,
                                  cfg.eps, model.stochastic() ? "yes" : "no");
  table += fmt::format("{:>6} {:>4} {:>8} {:>12} {:>12} {:>12} {:>10} {:>12}\n", "target",
                       "rho", "distance", "|(A-KC)psi|", "|Pi d - 1|", "|Sigma d|",
                       "rank Sigma", "radius");
  for (const FaultFilter& f : bank.filters()) {
    const int distance = geo(cfg.observer, f.target());
    table += fmt::format("{:>6} {:>4} {:>8} {:>12.3e} {:>12.3e} {:>12.3e} {:>10} {:>12.9f}\n",
                         f.target() + 1, f.rho(), distance, f.constraint_error(),
                         f.pi_d_error(), f.sigma_d_error(), f.sigma_rank(),
                         f.observer_spectral_radius());
    rows.push_back({{"target", f.target() + 1},
                    {"rho", f.rho()},
                    {"distance", distance},
                    {"constraint_error", f.constraint_error()},
                    {"pi_d_error", f.pi_d_error()},
                    {"sigma_d_error", f.sigma_d_error()},
                    {"sigma_rank", f.sigma_rank()},
                    {"spectral_radius", f.observer_spectral_radius()}});
  }
  ordered_json doc = {{"observer", cfg.observer + 1},
                      {"eps", cfg.eps},
                      {"stochastic", model.stochastic()},
                      {"filters", rows}};
  if (json_stdout) {
    out << DumpJson(doc) << '\n';
  } else {
    out << table;
  }
  if (!json_path.empty()) {
    std::ofstream f(json_path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + json_path);
    f << DumpJson(doc) << '\n';
  }
  return 0;
}

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

// Splits on commas outside brackets, so list values like [1,2] survive.
std::vector<std::string> SplitValues(std::string_view text) {
  std::vector<std::string> parts;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '[' || c == '{') ++depth;
    if (c == ']' || c == '}') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

GridAxis ParseAxis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("grid", "expected key=v1,v2,... got \"" + spec + "\"");
  }
  GridAxis axis{spec.substr(0, eq), SplitValues(std::string_view(spec).substr(eq + 1))};
  for (const std::string& v : axis.values) {
    if (v.empty()) throw ValidationError("grid." + axis.key, "empty value");
  }
  return axis;
}

std::string CsvField(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::string Num(double v) { return fmt::format("{:.17g}", v); }

int CmdSweep(const SourceArgs& src, const std::vector<std::string>& grid_specs, int jobs,
             const std::string& out_flag, std::ostream& out, std::ostream& err) {
  std::vector<GridAxis> axes;
  for (const std::string& g : grid_specs) axes.push_back(ParseAxis(g));
  if (axes.empty()) throw ValidationError("grid", "empty grid; pass --grid key=v1,v2");

  const json base = LoadDocument(src);
  const ScenarioConfig base_cfg = LoadScenario(base);
  const std::filesystem::path dir = ResolveOutDir(out_flag, base_cfg);

  std::size_t total = 1;
  for (const GridAxis& a : axes) total *= a.values.size();

  struct Row {
    std::vector<std::string> values;
    std::optional<RunReport> report;
    std::string error;
  };
  std::vector<Row> rows(total);
  for (std::size_t r = 0; r < total; ++r) {
    std::size_t rem = r;
    rows[r].values.resize(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      rows[r].values[a] = axes[a].values[rem % axes[a].values.size()];
      rem /= axes[a].values.size();
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < total; r = next++) {
      try {
        json doc = base;
        for (std::size_t a = 0; a < axes.size(); ++a) {
          ApplyOverride(doc, axes[a].key, rows[r].values[a]);
        }
        RunReport report = Run(LoadScenario(doc)).report;
        if (!report.error.empty()) rows[r].error = report.error;
        rows[r].report = std::move(report);
      } catch (const std::exception& e) {
        rows[r].error = e.what();
      }
    }
  };
  const int threads = std::clamp<int>(jobs, 1, static_cast<int>(total));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ofstream csv(dir / "sweep.csv", std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError("cannot open " + (dir / "sweep.csv").string());
  csv << "row";
  for (const GridAxis& a : axes) csv << ',' << CsvField(a.key);
  csv << ",detected,faulty_agent,delta_hat_x,delta_hat_y,k_detect,latency,"
         "final_centroid_error,accommodation_converged,error\n";
  int ok = 0;
  for (std::size_t r = 0; r < total; ++r) {
    const Row& row = rows[r];
    csv << r;
    for (const std::string& v : row.values) csv << ',' << CsvField(v);
    if (row.report) {
      const RunReport& rep = *row.report;
      const auto& d = rep.detection;
      csv << ',' << (d ? 1 : 0) << ',' << (d ? std::to_string(d->faulty_agent + 1) : "")
          << ',' << (d ? Num(d->delta_hat.x()) : "") << ','
          << (d ? Num(d->delta_hat.y()) : "") << ','
          << (d ? std::to_string(d->k_detect) : "") << ','
          << (rep.latency ? std::to_string(*rep.latency) : "") << ','
          << (rep.final_centroid_error ? Num(*rep.final_centroid_error) : "") << ','
          << (rep.accommodation_converged ? 1 : 0);
      std::ofstream rj(dir / fmt::format("sweep-row-{:03d}.json", r),
                       std::ios::binary | std::ios::trunc);
      rj << DumpJson(ReportJson(rep)) << '\n';
    } else {
      csv << ",,,,,,,,";
    }
    csv << ',' << CsvField(row.error) << '\n';
    if (row.error.empty()) {
      ++ok;
    } else {
      err << fmt::format("row {}: {}\n", r, row.error);
    }
  }
  if (!csv) throw IoError("failed writing sweep.csv");
  out << fmt::format("{} of {} rows succeeded; wrote {}\n", ok, total,
                     (dir / "sweep.csv").string());
  return ok > 0 ? 0 : 2;
}

int CmdPresets(const std::string& show, std::ostream& out) {
  if (!show.empty()) {
    out << PresetDocument(show).dump(2) << '\n';
    return 0;
  }
  for (const std::string& name : PresetNames()) out << name << '\n';
  return 0;
}

}  // namespace

int Main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fault detection, isolation and accommodation for multi-agent consensus"};
  app.name("cfdi");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SourceArgs run_src, synth_src, sweep_src;
  std::string out_dir, sweep_out, synth_json, show;
  bool plots = false, synth_stdout_json = false;
  std::vector<std::string> grid;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "Simulate, detect and accommodate; write traces");
  AddSourceOptions(run, run_src);
  run->add_option("--out", out_dir,
                  fmt::format("Output directory (overrides ${} and the config)", kOutDirEnv));
  run->add_flag("--emit-plots", plots, "Also write a gnuplot script for the traces");

  auto* synth = app.add_subcommand("synth", "Print the filter bank synthesis diagnostics");
  AddSourceOptions(synth, synth_src);
  synth->add_flag("--json", synth_stdout_json, "Print JSON instead of a table");
  synth->add_option("--json-out", synth_json, "Also write the JSON to this file");

  auto* sweep = app.add_subcommand("sweep", "Run a grid of overrides; write sweep.csv");
  AddSourceOptions(sweep, sweep_src);
  sweep->add_option("--grid", grid, "Grid axis key=v1,v2,... (repeatable; cartesian product)");
  sweep->add_option("--jobs", jobs, "Rows run concurrently")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out,
                    fmt::format("Output directory (overrides ${} and the config)", kOutDirEnv));

  auto* presets = app.add_subcommand("presets", "List built-in scenarios");
  presets->add_option("--show", show, "Print one preset document");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, x;
    const int code = app.exit(e, o, x);
    out << o.str();
    err << x.str();
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return CmdRun(run_src, out_dir, plots, out, err);
    if (synth->parsed()) return CmdSynth(synth_src, synth_json, synth_stdout_json, out);
    if (sweep->parsed()) return CmdSweep(sweep_src, grid, jobs, sweep_out, out, err);
    if (presets->parsed()) return CmdPresets(show, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace consensus_fdi::cli
