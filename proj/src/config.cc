#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "consensus_fdi/errors.h"
#include "consensus_fdi/rng.h"
#include "consensus_fdi/scenario.h"

namespace consensus_fdi {
namespace {

using nlohmann::json;

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Strict view over one JSON object: every key must be consumed.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path, std::vector<std::string>* defaulted)
      : obj_(obj), path_(std::move(path)), defaulted_(defaulted) {
    if (!obj_.is_object()) {
      throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
    }
  }

  bool Has(const std::string& key) const {
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  const json& Raw(const std::string& key) {
    if (!obj_.contains(key)) throw ValidationError(PathOf(key), "required");
    seen_.insert(key);
    return obj_.at(key);
  }

  std::string PathOf(const std::string& key) const { return Join(path_, key); }

  double Number(const std::string& key, std::optional<double> fallback = {}) {
    if (!Present(key, fallback.has_value())) return *fallback;
    const json& v = Raw(key);
    if (!v.is_number()) throw ValidationError(PathOf(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(PathOf(key), "must be finite");
    return d;
  }

  long long Integer(const std::string& key, std::optional<long long> fallback = {}) {
    if (!Present(key, fallback.has_value())) return *fallback;
    const json& v = Raw(key);
    if (!v.is_number_integer()) throw ValidationError(PathOf(key), "expected an integer");
    return v.get<long long>();
  }

  bool Boolean(const std::string& key, bool fallback) {
    if (!Present(key, true)) return fallback;
    const json& v = Raw(key);
    if (!v.is_boolean()) throw ValidationError(PathOf(key), "expected true or false");
    return v.get<bool>();
  }

  std::string String(const std::string& key, std::optional<std::string> fallback = {}) {
    if (!Present(key, fallback.has_value())) return *fallback;
    const json& v = Raw(key);
    if (!v.is_string()) throw ValidationError(PathOf(key), "expected a string");
    return v.get<std::string>();
  }

  void Finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key) && !value.is_null()) {
        throw ValidationError(PathOf(key), "unknown key");
      }
    }
  }

 private:
  bool Present(const std::string& key, bool has_default) {
    if (Has(key)) return true;
    seen_.insert(key);
    if (!has_default) throw ValidationError(PathOf(key), "required");
    if (defaulted_) defaulted_->push_back(PathOf(key));
    return false;
  }

  const json& obj_;
  std::string path_;
  std::vector<std::string>* defaulted_;
  std::set<std::string> seen_;
};

Eigen::Vector2d ReadPoint(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ValidationError(path, "expected [x, y]");
  }
  Eigen::Vector2d p(v[0].get<double>(), v[1].get<double>());
  if (!p.allFinite()) throw ValidationError(path, "must be finite");
  return p;
}

Positions ReadPoints(const json& v, const std::string& path, int expected) {
  if (!v.is_array()) throw ValidationError(path, "expected a list of [x, y]");
  if (static_cast<int>(v.size()) != expected) {
    throw ValidationError(path, "expected " + std::to_string(expected) +
                                    " points, got " + std::to_string(v.size()));
  }
  Positions p(expected, 2);
  for (int i = 0; i < expected; ++i) {
    p.row(i) = ReadPoint(v[i], path + "[" + std::to_string(i) + "]").transpose();
  }
  return p;
}

int ReadAgent(ObjectReader& r, const std::string& key, int n,
              std::optional<int> fallback_one_based = {}) {
  const long long a = r.Integer(key, fallback_one_based);
  if (a < 1 || a > n) {
    throw ValidationError(r.PathOf(key), "agent " + std::to_string(a) +
                                             " outside 1.." + std::to_string(n));
  }
  return static_cast<int>(a) - 1;
}

json PointJson(const Eigen::Vector2d& p) { return json::array({p.x(), p.y()}); }

json PointsJson(const Positions& p) {
  json a = json::array();
  for (Eigen::Index i = 0; i < p.rows(); ++i) a.push_back(json::array({p(i, 0), p(i, 1)}));
  return a;
}

// 3x3 lattice, agents numbered row by row; the center agent 5 has degree 4.
json GridEdges() {
  return json::parse(
      "[[1,2],[2,3],[4,5],[5,6],[7,8],[8,9],[1,4],[4,7],[2,5],[5,8],[3,6],[6,9]]");
}

json ConsensusBase(const std::string& name) {
  json doc;
  doc["name"] = name;
  doc["graph"] = {{"n", 9}, {"edges", GridEdges()}};
  doc["eps"] = 0.02;
  doc["kind"] = "consensus";
  doc["initial"] = {{"mode", "random"}, {"center", {0.5, 0.25}}, {"spread", 1.0}};
  doc["seed"] = 1;
  doc["observer"] = 5;
  doc["leader"] = 5;
  return doc;
}

}  // namespace

ScenarioConfig ParseScenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed scenario document: ") + e.what());
  }
  return LoadScenario(doc);
}

ScenarioConfig LoadScenario(const json& doc) {
  ScenarioConfig cfg;
  ObjectReader root(doc, "", &cfg.defaulted);
  cfg.name = root.String("name", std::string("scenario"));

  {
    ObjectReader g(root.Raw("graph"), "graph", nullptr);
    const long long n = g.Integer("n");
    if (n < 2 || n > 10000) throw ValidationError("graph.n", "must be in 2..10000");
    cfg.n = static_cast<int>(n);
    const json& edges = g.Raw("edges");
    if (!edges.is_array()) throw ValidationError("graph.edges", "expected a list of pairs");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const json& e = edges[i];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
          !e[1].is_number_integer()) {
        throw ValidationError("graph.edges[" + std::to_string(i) + "]",
                              "expected [i, j] with integer agents");
      }
      cfg.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    g.Finish();
  }
  // Topology errors carry the graph.edges path.
  Graph::Build(cfg.n, cfg.edges);

  cfg.eps = root.Number("eps");
  if (!(cfg.eps > 0.0)) throw ValidationError("eps", "must be positive");

  const std::string kind = root.String("kind", std::string("consensus"));
  if (kind == "consensus") {
    cfg.kind = ModelKind::kConsensus;
  } else if (kind == "formation") {
    cfg.kind = ModelKind::kFormation;
  } else {
    throw ValidationError("kind", "expected \"consensus\" or \"formation\"");
  }
  if (root.Has("formation")) {
    if (cfg.kind != ModelKind::kFormation) {
      throw ValidationError("formation", "only allowed with kind \"formation\"");
    }
    ObjectReader f(root.Raw("formation"), "formation", nullptr);
    cfg.formation_targets = ReadPoints(f.Raw("targets"), "formation.targets", cfg.n);
    f.Finish();
  } else if (cfg.kind == ModelKind::kFormation) {
    throw ValidationError("formation", "required when kind is \"formation\"");
  }

  if (root.Has("initial")) {
    ObjectReader in(root.Raw("initial"), "initial", &cfg.defaulted);
    const std::string mode = in.String("mode", std::string("random"));
    if (mode == "random") {
      cfg.initial_mode = InitialMode::kRandom;
    } else if (mode == "explicit") {
      cfg.initial_mode = InitialMode::kExplicit;
    } else if (mode == "formation") {
      cfg.initial_mode = InitialMode::kFormation;
    } else {
      throw ValidationError("initial.mode",
                            "expected \"random\", \"explicit\" or \"formation\"");
    }
    if (cfg.initial_mode == InitialMode::kExplicit) {
      cfg.initial_positions = ReadPoints(in.Raw("positions"), "initial.positions", cfg.n);
    } else {
      cfg.initial_center = in.Has("center")
                               ? ReadPoint(in.Raw("center"), "initial.center")
                               : Eigen::Vector2d::Zero();
    }
    if (cfg.initial_mode == InitialMode::kRandom) {
      cfg.initial_spread = in.Number("spread", 1.0);
      if (!(cfg.initial_spread >= 0.0)) {
        throw ValidationError("initial.spread", "must be non-negative");
      }
    }
    if (cfg.initial_mode == InitialMode::kFormation && !cfg.formation_targets) {
      throw ValidationError("initial.mode", "\"formation\" needs formation targets");
    }
    in.Finish();
  } else {
    cfg.defaulted.push_back("initial");
  }

  const long long seed = root.Integer("seed", 0);
  if (seed < 0) throw ValidationError("seed", "must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);

  if (root.Has("fault")) {
    ObjectReader f(root.Raw("fault"), "fault", nullptr);
    FaultEvent fault;
    fault.agent = ReadAgent(f, "agent", cfg.n);
    fault.delta = ReadPoint(f.Raw("delta"), "fault.delta");
    const long long k_d = f.Integer("k_d");
    if (k_d < 0) throw ValidationError("fault.k_d", "must be non-negative");
    fault.onset = static_cast<int>(k_d);
    f.Finish();
    cfg.fault = fault;
  }

  cfg.observer = ReadAgent(root, "observer", cfg.n, 1);
  cfg.leader = ReadAgent(root, "leader", cfg.n, cfg.observer + 1);

  if (root.Has("thresholds")) {
    ObjectReader t(root.Raw("thresholds"), "thresholds", &cfg.defaulted);
    DetectionThresholds d;
    d.kappa1 = t.Number("kappa1", d.kappa1);
    d.kappa2 = t.Number("kappa2", d.kappa2);
    d.gamma_tol = t.Number("gamma_tol", d.gamma_tol);
    d.debounce = static_cast<int>(t.Integer("debounce", d.debounce));
    const std::string rule = t.String("rule", std::string("consistency_gated"));
    if (rule == "strict") {
      cfg.rule = DetectionRule::kStrict;
    } else if (rule == "consistency_gated") {
      cfg.rule = DetectionRule::kConsistencyGated;
    } else {
      throw ValidationError("thresholds.rule",
                            "expected \"strict\" or \"consistency_gated\"");
    }
    t.Finish();
    cfg.thresholds = d;
  } else {
    cfg.defaulted.push_back("thresholds");
  }
  Validate(cfg.thresholds);

  if (root.Has("gain")) {
    ObjectReader g(root.Raw("gain"), "gain", &cfg.defaulted);
    const std::string policy = g.String("policy", std::string("zero"));
    if (policy == "zero") {
      cfg.gain.policy = GainPolicy::kZero;
    } else if (policy == "scaled_identity_projection") {
      cfg.gain.policy = GainPolicy::kScaledIdentityProjection;
    } else {
      throw ValidationError("gain.policy",
                            "expected \"zero\" or \"scaled_identity_projection\"");
    }
    cfg.gain.scale = g.Number("scale", cfg.gain.scale);
    g.Finish();
  } else {
    cfg.defaulted.push_back("gain");
  }

  if (root.Has("accommodation")) {
    ObjectReader a(root.Raw("accommodation"), "accommodation", &cfg.defaulted);
    cfg.accommodate = a.Boolean("enabled", true);
    AccommodationOptions& o = cfg.accommodation;
    o.horizon = static_cast<int>(a.Integer("horizon", o.horizon));
    o.stop_tol = a.Number("stop_tol", o.stop_tol);
    o.max_steps = static_cast<int>(a.Integer("max_steps", o.max_steps));
    o.settle_steps = static_cast<int>(a.Integer("settle_steps", o.settle_steps));
    if (o.horizon < 1) throw ValidationError("accommodation.horizon", "must be >= 1");
    if (!(o.stop_tol > 0.0)) throw ValidationError("accommodation.stop_tol", "must be positive");
    if (o.max_steps < 1) throw ValidationError("accommodation.max_steps", "must be >= 1");
    if (o.settle_steps < 1) {
      throw ValidationError("accommodation.settle_steps", "must be >= 1");
    }
    if (a.Has("target")) {
      const json& t = a.Raw("target");
      if (t.is_string() && t.get<std::string>() == "hold") {
        cfg.target_mode = TargetMode::kHold;
      } else if (t.is_string() && t.get<std::string>() == "origin") {
        cfg.target_mode = TargetMode::kOrigin;
      } else if (t.is_array()) {
        cfg.target_mode = TargetMode::kPoint;
        cfg.target = ReadPoint(t, "accommodation.target");
      } else {
        throw ValidationError("accommodation.target",
                              "expected \"hold\", \"origin\" or [x, y]");
      }
    } else {
      cfg.defaulted.push_back("accommodation.target");
    }
    a.Finish();
  } else {
    cfg.defaulted.push_back("accommodation");
  }

  const long long steps = root.Integer("steps", 1000);
  if (steps < 0) throw ValidationError("steps", "must be non-negative");
  cfg.steps = static_cast<int>(steps);
  cfg.output_dir = root.String("output_dir", std::string("out"));
  root.Finish();
  return cfg;
}

void ApplyOverride(json& doc, std::string_view path, std::string_view value) {
  if (path.empty()) throw ValidationError("", "empty override key");
  json parsed;
  try {
    parsed = json::parse(value.begin(), value.end());
  } catch (const json::parse_error&) {
    parsed = std::string(value);
  }
  json* node = &doc;
  std::string_view rest = path;
  while (true) {
    const auto dot = rest.find('.');
    const std::string key(rest.substr(0, dot));
    if (key.empty()) throw ValidationError(std::string(path), "malformed override key");
    if (!node->is_object()) {
      if (!node->is_null()) {
        throw ValidationError(std::string(path), "cannot descend into a non-object");
      }
      *node = json::object();
    }
    if (dot == std::string_view::npos) {
      (*node)[key] = parsed;
      return;
    }
    node = &(*node)[key];
    rest = rest.substr(dot + 1);
  }
}

void ApplyOverride(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ValidationError(std::string(assignment), "override must look like key=value");
  }
  ApplyOverride(doc, assignment.substr(0, eq), assignment.substr(eq + 1));
}

nlohmann::ordered_json ToJson(const ScenarioConfig& c) {
  nlohmann::ordered_json doc;
  doc["name"] = c.name;
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const auto& [a, b] : c.edges) edges.push_back({a, b});
  doc["graph"] = {{"n", c.n}, {"edges", edges}};
  doc["eps"] = c.eps;
  doc["kind"] = c.kind == ModelKind::kFormation ? "formation" : "consensus";
  if (c.formation_targets) {
    doc["formation"] = {{"targets", PointsJson(*c.formation_targets)}};
  }
  switch (c.initial_mode) {
    case InitialMode::kRandom:
      doc["initial"] = {{"mode", "random"},
                        {"center", PointJson(c.initial_center)},
                        {"spread", c.initial_spread}};
      break;
    case InitialMode::kExplicit:
      doc["initial"] = {{"mode", "explicit"}, {"positions", PointsJson(c.initial_positions)}};
      break;
    case InitialMode::kFormation:
      doc["initial"] = {{"mode", "formation"}, {"center", PointJson(c.initial_center)}};
      break;
  }
  doc["seed"] = c.seed;
  if (c.fault) {
    doc["fault"] = {{"agent", c.fault->agent + 1},
                    {"delta", PointJson(c.fault->delta)},
                    {"k_d", c.fault->onset}};
  } else {
    doc["fault"] = nullptr;
  }
  doc["observer"] = c.observer + 1;
  doc["leader"] = c.leader + 1;
  doc["thresholds"] = {
      {"kappa1", c.thresholds.kappa1},
      {"kappa2", c.thresholds.kappa2},
      {"gamma_tol", c.thresholds.gamma_tol},
      {"debounce", c.thresholds.debounce},
      {"rule", c.rule == DetectionRule::kStrict ? "strict" : "consistency_gated"}};
  doc["gain"] = {{"policy", c.gain.policy == GainPolicy::kZero
                                ? "zero"
                                : "scaled_identity_projection"},
                 {"scale", c.gain.scale}};
  nlohmann::ordered_json target;
  switch (c.target_mode) {
    case TargetMode::kHold: target = "hold"; break;
    case TargetMode::kOrigin: target = "origin"; break;
    case TargetMode::kPoint: target = {c.target.x(), c.target.y()}; break;
  }
  doc["accommodation"] = {{"enabled", c.accommodate},
                          {"horizon", c.accommodation.horizon},
                          {"target", target},
                          {"stop_tol", c.accommodation.stop_tol},
                          {"max_steps", c.accommodation.max_steps},
                          {"settle_steps", c.accommodation.settle_steps}};
  doc["steps"] = c.steps;
  doc["output_dir"] = c.output_dir;
  return doc;
}

std::vector<std::string> PresetNames() {
  return {"consensus-fig2", "accommodation-fig5", "formation-fig7", "fault-free"};
}

json PresetDocument(std::string_view name) {
  if (name == "consensus-fig2") {
    json doc = ConsensusBase("consensus-fig2");
    doc["fault"] = {{"agent", 7}, {"delta", {2.0, 1.0}}, {"k_d", 8}};
    doc["accommodation"] = {{"enabled", false}};
    doc["steps"] = 600;
    return doc;
  }
  if (name == "accommodation-fig5") {
    json doc = ConsensusBase("accommodation-fig5");
    doc["fault"] = {{"agent", 8}, {"delta", {2.0, 1.0}}, {"k_d", 8}};
    doc["accommodation"] = {{"enabled", true}, {"horizon", 20}, {"target", "hold"}};
    doc["steps"] = 1500;
    return doc;
  }
  if (name == "formation-fig7") {
    json doc = ConsensusBase("formation-fig7");
    doc["kind"] = "formation";
    // Three rows of three, 0.6 apart, with the middle row shifted sideways.
    doc["formation"] = {{"targets", json::parse(
                                        "[[-0.6,0.6],[0.0,0.6],[0.6,0.6],"
                                        "[-0.3,0.0],[0.3,0.0],[0.9,0.0],"
                                        "[-0.6,-0.6],[0.0,-0.6],[0.6,-0.6]]")}};
    doc["initial"] = {{"mode", "formation"}, {"center", {1.2, 0.8}}};
    doc["fault"] = {{"agent", 7}, {"delta", {2.0, 1.0}}, {"k_d", 45}};
    doc["accommodation"] = {{"enabled", true}, {"horizon", 20}, {"target", "origin"}};
    doc["steps"] = 1500;
    return doc;
  }
  if (name == "fault-free") {
    json doc = ConsensusBase("fault-free");
    doc["accommodation"] = {{"enabled", false}};
    doc["steps"] = 1000;
    return doc;
  }
  throw ValidationError("preset", "unknown preset \"" + std::string(name) + "\"");
}

Positions InitialPositions(const ScenarioConfig& c) {
  switch (c.initial_mode) {
    case InitialMode::kExplicit:
      return c.initial_positions;
    case InitialMode::kFormation: {
      Positions p = *c.formation_targets;
      const Eigen::RowVector2d shift = c.initial_center.transpose() - p.colwise().mean();
      p.rowwise() += shift;
      return p;
    }
    case InitialMode::kRandom:
      break;
  }
  Rng rng(c.seed, "initial");
  Positions p(c.n, 2);
  for (int i = 0; i < c.n; ++i) {
    for (int j = 0; j < 2; ++j) {
      p(i, j) = c.initial_center(j) + rng.Uniform(-c.initial_spread, c.initial_spread);
    }
  }
  return p;
}

}  // namespace consensus_fdi
