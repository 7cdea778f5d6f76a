#include <cmath>
#include <fstream>
#include <system_error>

#include <fmt/format.h>

#include "consensus_fdi/errors.h"
#include "consensus_fdi/scenario.h"

namespace consensus_fdi {
namespace {

using nlohmann::ordered_json;

std::string Number(double v) {
  if (!std::isfinite(v)) return "null";
  std::string s = fmt::format("{:.17g}", v);
  // Keep integral-valued doubles recognisable as floating point.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void Dump(const ordered_json& v, int indent, int depth, std::string& out) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case ordered_json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : v.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += ordered_json(key).dump();
        out += indent < 0 ? ":" : ": ";
        Dump(value, indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case ordered_json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& value : v) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        Dump(value, indent, depth + 1, out);
      }
      newline(depth);
      out += ']';
      return;
    }
    case ordered_json::value_t::number_float:
      out += Number(v.get<double>());
      return;
    default:
      out += v.dump();
  }
}

ordered_json Vec(const Eigen::Vector2d& p) { return ordered_json::array({p.x(), p.y()}); }

template <typename T>
ordered_json OrNull(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json OrNull(const std::optional<Eigen::Vector2d>& v) {
  return v ? Vec(*v) : ordered_json(nullptr);
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, std::string_view header) : path_(path) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    out_ << header << '\n';
  }
  template <typename... Args>
  void Row(fmt::format_string<Args...> f, Args&&... args) {
    out_ << fmt::format(f, std::forward<Args>(args)...) << '\n';
  }
  void Close() {
    out_.close();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

constexpr std::string_view kPlots = R"(# gnuplot script; run from the directory holding the CSV files.
set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 900,600

set output 'residuals.png'
set title 'Filter residual magnitude'
set xlabel 'k'
set ylabel '|alpha|'
plot for [i=1:{n}] 'residuals.csv' using ($2==i ? $1 : 1/0):5 with lines title sprintf('filter %d', i)

set output 'gamma.png'
set title 'Decoupled residual magnitude'
set ylabel '|gamma|'
set logscale y
plot for [i=1:{n}] 'residuals.csv' using ($2==i ? $1 : 1/0):6 with lines title sprintf('filter %d', i)
unset logscale y

set output 'centroid.png'
set title 'Centroid'
set ylabel 'position'
plot 'centroid.csv' using 1:2 with lines title 'cx', \
     '' using 1:3 with lines title 'cy', \
     '' using 1:4 with lines dashtype 2 title 'cx estimate', \
     '' using 1:5 with lines dashtype 2 title 'cy estimate'

set output 'control.png'
set title 'Leader input'
set ylabel 'u'
plot 'control.csv' using 1:2 with lines title 'ux', '' using 1:3 with lines title 'uy'

set output 'positions.png'
set title 'Trajectories'
set xlabel 'x'
set ylabel 'y'
set size ratio -1
plot for [i=1:{n}] 'positions.csv' using ($2==i ? $3 : 1/0):4 with lines title sprintf('agent %d', i)
)";

}  // namespace

std::string DumpJson(const ordered_json& doc, int indent) {
  std::string out;
  Dump(doc, indent, 0, out);
  return out;
}

ordered_json ReportJson(const RunReport& r) {
  ordered_json j;
  j["name"] = r.name;
  if (r.detection) {
    const DetectionResult& d = *r.detection;
    j["detection"] = {{"faulty_agent", d.faulty_agent + 1},
                      {"delta_hat", Vec(d.delta_hat)},
                      {"k_detect", d.k_detect},
                      {"k_declared", d.k_declared},
                      {"k_d_hat", d.k_d_hat},
                      {"rho", d.rho}};
  } else {
    j["detection"] = nullptr;
  }
  j["onset_hat"] = OrNull(r.onset_hat);
  j["latency"] = OrNull(r.latency);
  j["stochastic"] = r.stochastic;
  j["step_too_large"] = r.step_too_large;
  j["peak_alpha"] = r.peak_alpha;
  j["rho"] = r.rho;
  j["ambiguous_steps"] = r.ambiguous_steps;
  j["decoupling_deviation"] = OrNull(r.decoupling_deviation);
  j["matched_gamma_final"] = r.matched_gamma_final;
  j["accommodation_started"] = r.accommodation_started;
  j["accommodation_converged"] = r.accommodation_converged;
  j["target"] = OrNull(r.target);
  j["true_prefault_centroid"] = OrNull(r.true_prefault_centroid);
  j["initial_centroid"] = Vec(r.initial_centroid);
  j["final_centroid"] = Vec(r.final_centroid);
  j["final_centroid_hat"] = Vec(r.final_centroid_hat);
  j["final_centroid_error"] = OrNull(r.final_centroid_error);
  j["final_centroid_drift"] = r.final_centroid_drift;
  j["prefault_formation_residual"] = OrNull(r.prefault_formation_residual);
  j["steps"] = r.steps;
  j["monitoring_steps"] = r.monitoring_steps;
  j["error"] = r.error.empty() ? ordered_json(nullptr) : ordered_json(r.error);
  return j;
}

void EmitTraces(const RunResult& result, const std::filesystem::path& dir, bool emit_plots) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  CsvFile positions(dir / "positions.csv", "k,agent,x,y");
  for (std::size_t k = 0; k < result.positions.size(); ++k) {
    const Positions& x = result.positions[k];
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      positions.Row("{},{},{},{}", k, i + 1, Number(x(i, 0)), Number(x(i, 1)));
    }
  }
  positions.Close();

  CsvFile residuals(dir / "residuals.csv",
                    "k,filter,alpha_x,alpha_y,alpha_norm,gamma_norm");
  for (const ResidualRow& r : result.residuals) {
    residuals.Row("{},{},{},{},{},{}", r.k, r.filter + 1, Number(r.alpha.x()),
                  Number(r.alpha.y()), Number(r.alpha_norm), Number(r.gamma_norm));
  }
  residuals.Close();

  CsvFile centroid(dir / "centroid.csv", "k,cx,cy,cx_hat,cy_hat");
  for (const CentroidRow& r : result.centroid) {
    centroid.Row("{},{},{},{},{}", r.k, Number(r.centroid.x()), Number(r.centroid.y()),
                 Number(r.centroid_hat.x()), Number(r.centroid_hat.y()));
  }
  centroid.Close();

  CsvFile control(dir / "control.csv", "k,ux,uy");
  for (const ControlRow& r : result.control) {
    control.Row("{},{},{}", r.k, Number(r.u.x()), Number(r.u.y()));
  }
  control.Close();

  std::ofstream report(dir / "report.json", std::ios::binary | std::ios::trunc);
  if (!report) throw IoError("cannot open " + (dir / "report.json").string());
  report << DumpJson(ReportJson(result.report)) << '\n';
  if (!report) throw IoError("failed writing report.json");

  if (emit_plots) {
    std::ofstream plots(dir / "plots.gp", std::ios::binary | std::ios::trunc);
    if (!plots) throw IoError("cannot open " + (dir / "plots.gp").string());
    plots << fmt::format(fmt::runtime(kPlots),
                         fmt::arg("n", result.config.n));
    if (!plots) throw IoError("failed writing plots.gp");
  }
}

}  // namespace consensus_fdi
