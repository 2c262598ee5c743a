#include "jumpflow/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "jumpflow/errors.hpp"
#include "jumpflow/report.hpp"

namespace jumpflow {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

void require_map(const YAML::Node& node, const std::string& field) {
  if (!node.IsMap()) throw ScenarioError(field, line_of(node), "expected a mapping");
}

void reject_unknown(const YAML::Node& node, const std::string& section,
                    const std::set<std::string>& allowed) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ScenarioError(section.empty() ? key : section + "." + key, line_of(kv.first),
                          "unknown key (expected one of: " + list + ")");
    }
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ScenarioError(field, line_of(node), "cannot convert '" + YAML::Dump(node) + "' to the expected type");
  }
}

double positive(const YAML::Node& node, const std::string& field) {
  const double v = scalar<double>(node, field);
  if (!(v > 0.0)) throw ScenarioError(field, line_of(node), "must be positive");
  return v;
}

std::vector<double> vector_of(const YAML::Node& node, const std::string& field) {
  if (node.IsScalar()) return {scalar<double>(node, field)};
  if (!node.IsSequence()) throw ScenarioError(field, line_of(node), "expected a number or a list");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(scalar<double>(node[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void parse_model(const YAML::Node& node, Scenario& s) {
  require_map(node, "model");
  reject_unknown(node, "model", {"key", "params", "atoms"});
  if (!node["key"]) throw ScenarioError("model.key", line_of(node), "missing");
  s.model.key = scalar<std::string>(node["key"], "model.key");
  const auto keys = registry_keys();
  if (std::find(keys.begin(), keys.end(), s.model.key) == keys.end()) {
    throw ScenarioError("model.key", line_of(node["key"]), "unknown model '" + s.model.key + "'");
  }
  if (node["params"]) {
    require_map(node["params"], "model.params");
    const auto defaults = registry_defaults(s.model.key);
    for (const auto& kv : node["params"]) {
      const auto name = kv.first.as<std::string>();
      if (!defaults.count(name)) {
        throw ScenarioError("model.params." + name, line_of(kv.first),
                            "unknown parameter for model '" + s.model.key + "'");
      }
      s.model.params[name] = scalar<double>(kv.second, "model.params." + name);
    }
  }
  if (node["atoms"]) {
    const auto& atoms = node["atoms"];
    if (!atoms.IsSequence()) throw ScenarioError("model.atoms", line_of(atoms), "expected a list");
    std::vector<MarkAtom> list;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string field = "model.atoms[" + std::to_string(i) + "]";
      require_map(atoms[i], field);
      reject_unknown(atoms[i], field, {"mark", "rate"});
      if (!atoms[i]["mark"] || !atoms[i]["rate"]) {
        throw ScenarioError(field, line_of(atoms[i]), "needs both 'mark' and 'rate'");
      }
      const auto mark = vector_of(atoms[i]["mark"], field + ".mark");
      MarkAtom a;
      a.mark = Eigen::Map<const Vec>(mark.data(), static_cast<Eigen::Index>(mark.size()));
      a.rate = positive(atoms[i]["rate"], field + ".rate");
      list.push_back(a);
    }
    s.model.atoms = list;
  }
}

void build_echo(Scenario& s) {
  auto list = [](const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out + "]";
  };
  auto& e = s.echo;
  e.clear();
  e.emplace_back("scenario", s.name);
  e.emplace_back("model.key", s.model.key);
  const auto model = make_model(s.model);
  auto params = registry_defaults(s.model.key);
  for (const auto& [k, v] : s.model.params) params[k] = v;
  for (const auto& [k, v] : params) e.emplace_back("model.params." + k, format_double(v));
  for (std::size_t i = 0; i < model.marks.atoms.size(); ++i) {
    const auto& a = model.marks.atoms[i];
    std::vector<double> mark(a.mark.data(), a.mark.data() + a.mark.size());
    e.emplace_back("model.atoms[" + std::to_string(i) + "]", "mark=" + list(mark) + " rate=" + format_double(a.rate));
  }
  e.emplace_back("time.t0", format_double(s.t0));
  e.emplace_back("time.T", format_double(s.T));
  e.emplace_back("time.steps", s.steps > 0 ? std::to_string(s.steps) : "auto");
  e.emplace_back("time.refinement_levels", std::to_string(s.refinement_levels));
  e.emplace_back("space.lo", format_double(s.lo));
  e.emplace_back("space.hi", format_double(s.hi));
  e.emplace_back("space.points", std::to_string(s.points));
  e.emplace_back("seeds.base", std::to_string(s.seed));
  e.emplace_back("seeds.count", std::to_string(s.seed_count));
  e.emplace_back("x0", list(s.x0));
  e.emplace_back("initial.kind", s.initial.kind);
  e.emplace_back("initial.mean", list(s.initial.mean));
  e.emplace_back("initial.variance", format_double(s.initial.variance));
  e.emplace_back("candidate", s.candidate);
  e.emplace_back("ito_wentzell.field", s.iw_field);
  e.emplace_back("ito_wentzell.Q", format_double(s.iw_q));
  e.emplace_back("ito_wentzell.D", format_double(s.iw_d));
  std::string phi;
  for (const auto& p : s.phi) phi += (phi.empty() ? "" : ", ") + p;
  e.emplace_back("backward.phi", "[" + phi + "]");
  e.emplace_back("chapman.s_fraction", format_double(s.s_fraction));
  e.emplace_back("chapman.bin_cells", std::to_string(s.bin_cells));
  e.emplace_back("monte_carlo.paths", std::to_string(s.mc_paths));
  e.emplace_back("monte_carlo.bins", std::to_string(s.mc_bins));
  e.emplace_back("monte_carlo.samples", std::to_string(s.mc_samples));
  e.emplace_back("monte_carlo.kernel_members", std::to_string(s.kernel_members));
  e.emplace_back("output.snapshots", list(s.snapshot_times));
  for (const auto& [k, v] : s.tolerances) e.emplace_back("tolerances." + k, format_double(v));
}

}  // namespace

std::vector<std::string> tolerance_keys() {
  return {"max_drift",      "fitted_order",  "control_ratio", "jacobian_gap",  "iw_max_residual",
          "iw_order",       "mass_gap",      "pathwise_residual", "global_se_multiple",
          "global_abs",     "forward_mass",  "compensation",  "backward_const", "duality",
          "chapman",        "mc_l1"};
}

SpatialGrid Scenario::space() const {
  const auto model = make_model(this->model);
  return model.dim == 1 ? SpatialGrid::line(lo, hi, points) : SpatialGrid::square(lo, hi, points);
}

Vec Scenario::start() const {
  return Eigen::Map<const Vec>(x0.data(), static_cast<Eigen::Index>(x0.size()));
}

double Scenario::tolerance(const std::string& key, double fallback) const {
  const auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError("<document>", e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) throw ScenarioError("<document>", 0, "scenario must be a mapping");
  reject_unknown(root, "", {"name", "model", "time", "space", "seeds", "x0", "initial", "candidate",
                            "ito_wentzell", "backward", "chapman", "monte_carlo", "output",
                            "tolerances", "pipeline"});
  Scenario s;
  if (root["name"]) s.name = scalar<std::string>(root["name"], "name");
  if (!root["model"]) throw ScenarioError("model", 0, "missing");
  parse_model(root["model"], s);

  if (const auto n = root["time"]) {
    require_map(n, "time");
    reject_unknown(n, "time", {"t0", "T", "steps", "refinement_levels"});
    if (n["t0"]) s.t0 = scalar<double>(n["t0"], "time.t0");
    if (n["T"]) s.T = scalar<double>(n["T"], "time.T");
    if (n["steps"]) {
      if (n["steps"].IsScalar() && n["steps"].as<std::string>() == "auto") {
        s.steps = 0;
      } else {
        s.steps = scalar<int>(n["steps"], "time.steps");
        if (s.steps < 1) throw ScenarioError("time.steps", line_of(n["steps"]), "must be >= 1 or 'auto'");
      }
    }
    if (n["refinement_levels"]) {
      s.refinement_levels = scalar<int>(n["refinement_levels"], "time.refinement_levels");
      if (s.refinement_levels < 0 || s.refinement_levels > 8) {
        throw ScenarioError("time.refinement_levels", line_of(n["refinement_levels"]), "must be in [0, 8]");
      }
    }
    if (!(s.T > s.t0)) throw ScenarioError("time.T", line_of(n), "must exceed time.t0");
  }
  if (const auto n = root["space"]) {
    require_map(n, "space");
    reject_unknown(n, "space", {"lo", "hi", "points"});
    if (n["lo"]) s.lo = scalar<double>(n["lo"], "space.lo");
    if (n["hi"]) s.hi = scalar<double>(n["hi"], "space.hi");
    if (n["points"]) s.points = scalar<int>(n["points"], "space.points");
    if (!(s.hi > s.lo)) throw ScenarioError("space.hi", line_of(n), "must exceed space.lo");
    if (s.points < 8) throw ScenarioError("space.points", line_of(n), "must be >= 8");
  }
  if (const auto n = root["seeds"]) {
    require_map(n, "seeds");
    reject_unknown(n, "seeds", {"base", "count"});
    if (n["base"]) s.seed = scalar<std::uint64_t>(n["base"], "seeds.base");
    if (n["count"]) s.seed_count = scalar<int>(n["count"], "seeds.count");
    if (s.seed_count < 1) throw ScenarioError("seeds.count", line_of(n), "must be >= 1");
  }

  JumpDiffusionModel model;
  try {
    model = make_model(s.model);
    validate_marks(model.marks);
  } catch (const InvalidModelError& e) {
    throw ScenarioError("model", line_of(root["model"]), e.what());
  }
  s.x0 = std::vector<double>(static_cast<std::size_t>(model.dim), 0.0);
  if (root["x0"]) {
    s.x0 = vector_of(root["x0"], "x0");
    if (static_cast<int>(s.x0.size()) != model.dim) {
      throw ScenarioError("x0", line_of(root["x0"]), "needs " + std::to_string(model.dim) + " entries");
    }
  }
  s.initial.mean = s.x0;
  if (const auto n = root["initial"]) {
    require_map(n, "initial");
    reject_unknown(n, "initial", {"kind", "mean", "variance"});
    if (n["kind"]) s.initial.kind = scalar<std::string>(n["kind"], "initial.kind");
    if (s.initial.kind != "gaussian" && s.initial.kind != "delta") {
      throw ScenarioError("initial.kind", line_of(n["kind"]), "must be 'gaussian' or 'delta'");
    }
    if (n["mean"]) s.initial.mean = vector_of(n["mean"], "initial.mean");
    if (n["variance"]) s.initial.variance = positive(n["variance"], "initial.variance");
    if (static_cast<int>(s.initial.mean.size()) != model.dim) {
      throw ScenarioError("initial.mean", line_of(n), "needs " + std::to_string(model.dim) + " entries");
    }
  }
  if (root["candidate"]) {
    s.candidate = scalar<std::string>(root["candidate"], "candidate");
    if (s.candidate != "registry" && s.candidate != "coordinate") {
      throw ScenarioError("candidate", line_of(root["candidate"]), "must be 'registry' or 'coordinate'");
    }
  }
  if (const auto n = root["ito_wentzell"]) {
    require_map(n, "ito_wentzell");
    reject_unknown(n, "ito_wentzell", {"field", "Q", "D"});
    if (n["field"]) s.iw_field = scalar<std::string>(n["field"], "ito_wentzell.field");
    if (s.iw_field != "linear" && s.iw_field != "sine") {
      throw ScenarioError("ito_wentzell.field", line_of(n["field"]), "must be 'linear' or 'sine'");
    }
    if (n["Q"]) s.iw_q = scalar<double>(n["Q"], "ito_wentzell.Q");
    if (n["D"]) s.iw_d = scalar<double>(n["D"], "ito_wentzell.D");
  }
  if (const auto n = root["backward"]) {
    require_map(n, "backward");
    reject_unknown(n, "backward", {"phi"});
    if (n["phi"]) {
      s.phi.clear();
      const auto& list = n["phi"];
      if (list.IsScalar()) {
        s.phi.push_back(scalar<std::string>(list, "backward.phi"));
      } else {
        for (std::size_t i = 0; i < list.size(); ++i) s.phi.push_back(scalar<std::string>(list[i], "backward.phi"));
      }
      for (const auto& p : s.phi) {
        if (p != "one" && p != "x" && p != "cos") {
          throw ScenarioError("backward.phi", line_of(list), "unknown terminal function '" + p + "' (one, x, cos)");
        }
      }
    }
  }
  if (const auto n = root["chapman"]) {
    require_map(n, "chapman");
    reject_unknown(n, "chapman", {"s_fraction", "bin_cells"});
    if (n["s_fraction"]) s.s_fraction = scalar<double>(n["s_fraction"], "chapman.s_fraction");
    if (n["bin_cells"]) s.bin_cells = scalar<int>(n["bin_cells"], "chapman.bin_cells");
    if (!(s.s_fraction >= 0.0 && s.s_fraction <= 1.0)) {
      throw ScenarioError("chapman.s_fraction", line_of(n), "must be in [0, 1]");
    }
    if (s.bin_cells < 1) throw ScenarioError("chapman.bin_cells", line_of(n), "must be >= 1");
  }
  if (const auto n = root["monte_carlo"]) {
    require_map(n, "monte_carlo");
    reject_unknown(n, "monte_carlo", {"paths", "bins", "samples", "kernel_members"});
    if (n["paths"]) s.mc_paths = scalar<std::size_t>(n["paths"], "monte_carlo.paths");
    if (n["bins"]) s.mc_bins = scalar<int>(n["bins"], "monte_carlo.bins");
    if (n["samples"]) s.mc_samples = scalar<std::size_t>(n["samples"], "monte_carlo.samples");
    if (n["kernel_members"]) s.kernel_members = scalar<int>(n["kernel_members"], "monte_carlo.kernel_members");
    if (s.mc_paths < 1000) throw ScenarioError("monte_carlo.paths", line_of(n), "must be >= 1000");
    if (s.mc_bins < 1) throw ScenarioError("monte_carlo.bins", line_of(n), "must be >= 1");
  }
  if (const auto n = root["output"]) {
    require_map(n, "output");
    reject_unknown(n, "output", {"dir", "snapshots"});
    if (n["dir"]) s.out_dir = scalar<std::string>(n["dir"], "output.dir");
    if (n["snapshots"]) s.snapshot_times = vector_of(n["snapshots"], "output.snapshots");
  }
  if (const auto n = root["tolerances"]) {
    require_map(n, "tolerances");
    std::set<std::string> known;
    for (const auto& k : tolerance_keys()) known.insert(k);
    reject_unknown(n, "tolerances", known);
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      s.tolerances[key] = scalar<double>(kv.second, "tolerances." + key);
    }
  }
  if (root["pipeline"]) s.pipeline = scalar<std::string>(root["pipeline"], "pipeline");

  build_echo(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("--scenario", 0, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace jumpflow
