#include "qgnls/experiment.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qgnls/error.hpp"

namespace qgnls {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::Parse, "config: " + what); }

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    parse_fail("bad value for '" + key + "'");
  }
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) parse_fail(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) parse_fail("unknown key '" + key + "' in " + where);
  }
}

const char* cutoff_name(CutoffKind k) { return k == CutoffKind::Cosine ? "cosine" : "quintic"; }

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    parse_fail(e.what());
  }
  check_keys(root,
             {"graph", "mu", "peaks", "alpha", "b", "shift", "radius", "cutoff", "lambda_schedule", "mesh",
              "truncation", "solver", "output_dir"},
             "config");
  ExperimentConfig c;
  c.base_dir = base_dir;
  if (!root.contains("graph")) parse_fail("missing 'graph'");
  const json& g = root["graph"];
  if (g.is_string()) {
    c.graph_path = g.get<std::string>();
  } else if (g.is_object()) {
    c.graph = parse_graph_description(g.dump());
  } else {
    parse_fail("'graph' must be a path or an inline graph object");
  }
  if (root.contains("mu")) c.mu = get_as<double>(root["mu"], "mu");
  if (root.contains("peaks")) c.peaks = get_as<std::vector<std::string>>(root["peaks"], "peaks");
  if (root.contains("alpha")) c.alpha = get_as<double>(root["alpha"], "alpha");
  if (root.contains("b")) c.b = get_as<std::map<std::string, std::vector<double>>>(root["b"], "b");
  if (root.contains("shift")) c.shift = get_as<std::map<std::string, double>>(root["shift"], "shift");
  if (root.contains("radius")) c.radius = get_as<std::map<std::string, double>>(root["radius"], "radius");
  if (root.contains("cutoff")) {
    const auto name = get_as<std::string>(root["cutoff"], "cutoff");
    if (name == "cosine") c.cutoff = CutoffKind::Cosine;
    else if (name == "quintic") c.cutoff = CutoffKind::Quintic;
    else parse_fail("cutoff must be 'cosine' or 'quintic'");
  }
  if (root.contains("lambda_schedule")) {
    c.lambda_schedule = get_as<std::vector<double>>(root["lambda_schedule"], "lambda_schedule");
  }
  if (root.contains("mesh")) {
    const json& m = root["mesh"];
    check_keys(m, {"nodes_per_width", "coarse_factor", "min_intervals", "growth_reference", "refinement"}, "mesh");
    if (m.contains("nodes_per_width")) c.nodes_per_width = get_as<double>(m["nodes_per_width"], "nodes_per_width");
    if (m.contains("coarse_factor")) c.coarse_factor = get_as<double>(m["coarse_factor"], "coarse_factor");
    if (m.contains("min_intervals")) c.min_intervals = get_as<int>(m["min_intervals"], "min_intervals");
    if (m.contains("growth_reference")) {
      c.growth_reference = get_as<double>(m["growth_reference"], "growth_reference");
    }
    if (m.contains("refinement")) c.refinement = get_as<double>(m["refinement"], "refinement");
  }
  if (root.contains("truncation")) c.truncation = get_as<double>(root["truncation"], "truncation");
  if (root.contains("solver")) {
    const json& s = root["solver"];
    check_keys(s, {"newton_tol", "max_iters", "damping", "armijo", "pin_kernel"}, "solver");
    if (s.contains("newton_tol")) c.newton_tol = get_as<double>(s["newton_tol"], "newton_tol");
    if (s.contains("max_iters")) c.max_iters = get_as<int>(s["max_iters"], "max_iters");
    if (s.contains("damping")) c.damping = get_as<double>(s["damping"], "damping");
    if (s.contains("armijo")) c.armijo = get_as<double>(s["armijo"], "armijo");
    if (s.contains("pin_kernel")) c.pin_kernel = get_as<bool>(s["pin_kernel"], "pin_kernel");
  }
  if (root.contains("output_dir")) c.output_dir = get_as<std::string>(root["output_dir"], "output_dir");
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), fs::path(path).parent_path().string());
}

double default_truncation(const std::vector<double>& lambda_schedule) {
  if (lambda_schedule.empty()) return 10.0;
  double lmin = lambda_schedule.front();
  for (double l : lambda_schedule) lmin = std::min(lmin, l);
  if (!(lmin > 0.0)) return 10.0;
  return std::max(10.0, 30.0 / std::sqrt(lmin));
}

PreparedExperiment prepare_experiment(const ExperimentConfig& config) {
  const ExperimentConfig& c = config;
  if (!(c.mu >= 0.5)) throw Error(ErrorCode::InvalidArgument, "mu must be >= 1/2");
  if (c.lambda_schedule.empty()) throw Error(ErrorCode::InvalidArgument, "lambda schedule is empty");
  for (std::size_t i = 0; i < c.lambda_schedule.size(); ++i) {
    if (!(c.lambda_schedule[i] > 0.0) || (i > 0 && !(c.lambda_schedule[i] > c.lambda_schedule[i - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "lambda schedule must be positive and increasing");
    }
  }
  if (!(c.alpha > 0.0 && c.alpha <= 0.5)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1/2]");
  if (c.peaks.empty()) throw Error(ErrorCode::InvalidArgument, "no peak vertices given");
  if (!(c.nodes_per_width > 0.0) || !(c.coarse_factor >= 1.0) || c.min_intervals < 1 ||
      !(c.growth_reference >= 0.0) || !(c.refinement > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "mesh parameters out of range");
  }
  if (c.truncation && !(*c.truncation > 0.0)) throw Error(ErrorCode::InvalidArgument, "truncation must be positive");

  PreparedExperiment p;
  p.config = c;
  GraphDescription desc;
  if (c.graph) {
    desc = *c.graph;
  } else {
    if (c.graph_path.empty()) throw Error(ErrorCode::InvalidArgument, "no graph given");
    fs::path path(c.graph_path);
    if (path.is_relative() && !c.base_dir.empty()) path = fs::path(c.base_dir) / path;
    desc = load_graph_description(path.string());
  }
  if (c.truncation) desc.truncation = c.truncation;
  const double fallback = default_truncation(c.lambda_schedule);
  p.graph = std::make_shared<const MetricGraph>(MetricGraph::build(desc, fallback));
  p.truncation = p.graph->truncation_length();

  // Names first, so a typo fails before anything is assembled.
  std::vector<VertexId> ids;
  for (const auto& name : c.peaks) ids.push_back(p.graph->vertex_id(name));
  for (const auto* table : {&c.shift, &c.radius}) {
    for (const auto& [name, v] : *table) {
      (void)v;
      p.graph->vertex_id(name);
    }
  }
  for (const auto& [name, v] : c.b) {
    (void)v;
    p.graph->vertex_id(name);
  }

  AnsatzSpec ans;
  ans.mu = c.mu;
  ans.lambda = c.lambda_schedule.front();
  ans.alpha = c.alpha;
  ans.cutoff = c.cutoff;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    PeakSpec ps;
    ps.vertex = ids[i];
    const std::string& name = c.peaks[i];
    if (auto it = c.b.find(name); it != c.b.end()) ps.b = it->second;
    if (auto it = c.shift.find(name); it != c.shift.end()) ps.shift = it->second;
    if (auto it = c.radius.find(name); it != c.radius.end()) ps.radius = it->second;
    ans.peaks.push_back(ps);
    const int deg = p.graph->degree(ids[i]);
    p.peak_weight += 0.5 * deg;
    if (deg < 3 || deg % 2 == 0) {
      p.warnings.push_back("peak '" + name + "' has degree " + std::to_string(deg) +
                           ": outside existence hypotheses, run is exploratory");
    }
  }
  for (const auto& [name, v] : c.b) {
    (void)v;
    bool listed = false;
    for (const auto& peak : c.peaks) listed = listed || peak == name;
    if (!listed) throw Error(ErrorCode::InvalidArgument, "coefficients given for non-peak vertex '" + name + "'");
  }

  p.sweep.graph = p.graph;
  p.sweep.ansatz = ans;
  p.sweep.mesh.nodes_per_width = c.nodes_per_width;
  p.sweep.mesh.coarse_factor = c.coarse_factor;
  p.sweep.mesh.min_intervals = c.min_intervals;
  p.sweep.growth_reference = c.growth_reference;
  p.sweep.refinement = c.refinement;
  // Overlap and coefficient checks on the graph that will actually be meshed.
  resolve_peaks(*sweep_graph(p.sweep), ans);

  p.solve.mu = c.mu;
  p.solve.newton_tol = c.newton_tol;
  p.solve.max_iters = c.max_iters;
  p.solve.damping = c.damping;
  p.solve.armijo = c.armijo;
  p.solve.pin_kernel = c.pin_kernel;
  p.solve.lambda_schedule = c.lambda_schedule;
  if (!(c.newton_tol > 0.0) || c.max_iters < 1 || !(c.damping > 0.0 && c.damping < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "solver parameters out of range");
  }
  return p;
}

DiagnosticsRow diagnostics_row(const BoundStateResult& r, double mu, double peak_weight) {
  DiagnosticsRow row;
  row.lambda = r.lambda;
  row.converged = r.converged;
  row.iterations = r.iterations;
  row.residual_norm = r.residual_norm;
  row.correction_norm = r.correction_norm;
  row.kernel_norm = r.kernel_component_norm;
  row.orthogonal_norm = r.orthogonal_component_norm;
  row.gram_offdiag_ratio = r.gram_offdiag_ratio;
  row.min_value = r.min_value;
  row.exploratory = r.exploratory;
  row.message = r.message;
  row.dofs = static_cast<int>(r.u.values.size());
  if (r.op) {
    const FunctionalReport f = evaluate_functionals(*r.op, mu, r.u);
    row.mass = f.mass;
    row.action = f.action;
    row.energy = f.energy;
  }
  const SolitonReference ref = soliton_reference(mu);
  row.correction_ratio = r.correction_norm / std::pow(r.lambda, 0.25 + 0.5 / mu);
  row.mass_ratio = row.mass / (std::pow(r.lambda, 1.0 / mu - 0.5) * peak_weight * ref.mass);
  row.action_ratio = row.action / (std::pow(r.lambda, 1.0 / mu + 0.5) * peak_weight * ref.action);
  for (const PeakLocation& loc : r.peak_locations) {
    if (loc.distance >= row.max_peak_offset) {
      row.max_peak_offset = loc.distance;
      row.max_peak_cell = loc.cell;
    }
  }
  return row;
}

ExperimentRun run_experiment(const PreparedExperiment& prepared) {
  ExperimentRun run;
  run.prepared = prepared;
  run.results = continuation_sweep(prepared.sweep, prepared.solve);
  for (const auto& r : run.results) run.rows.push_back(diagnostics_row(r, prepared.config.mu, prepared.peak_weight));
  return run;
}

namespace {

json manifest_object(const PreparedExperiment& p) {
  const ExperimentConfig& c = p.config;
  json m;
  if (c.graph) {
    m["graph"] = "<inline>";
  } else {
    m["graph"] = c.graph_path;
  }
  m["graph_vertices"] = p.graph->vertex_count();
  m["graph_edges"] = p.graph->edge_count();
  m["truncation"] = p.truncation;
  m["truncation_rule"] = "config, else graph file, else max(10, 30/sqrt(lambda_min))";
  m["mu"] = c.mu;
  m["alpha"] = c.alpha;
  m["cutoff"] = cutoff_name(c.cutoff);
  m["lambda_schedule"] = c.lambda_schedule;
  const auto graph = sweep_graph(p.sweep);
  const auto resolved = resolve_peaks(*graph, p.sweep.ansatz);
  json peaks = json::array();
  for (std::size_t i = 0; i < resolved.size(); ++i) {
    json pk;
    pk["vertex"] = c.peaks[i];
    pk["degree"] = resolved[i].star.degree;
    pk["radius"] = resolved[i].star.radius;
    pk["b"] = resolved[i].b;
    pk["shift"] = resolved[i].shift;
    peaks.push_back(pk);
  }
  m["peaks"] = peaks;
  m["peak_mode"] = resolved.size() > 1 ? "multi" : "single";
  m["peak_weight"] = p.peak_weight;
  m["mesh"] = {{"nodes_per_width", c.nodes_per_width},
               {"coarse_factor", c.coarse_factor},
               {"min_intervals", c.min_intervals},
               {"growth_reference", c.growth_reference},
               {"refinement", c.refinement},
               {"element", "P1, lumped mass"}};
  m["solver"] = {{"newton_tol", c.newton_tol},
                 {"max_iters", c.max_iters},
                 {"damping", c.damping},
                 {"armijo", c.armijo},
                 {"pin_kernel", c.pin_kernel},
                 {"tolerance_scale", "max(1, ||u||_lambda)"}};
  m["output_dir"] = c.output_dir;
  m["warnings"] = p.warnings;
  return m;
}

}  // namespace

std::string manifest_json(const PreparedExperiment& prepared) { return manifest_object(prepared).dump(2); }

std::string config_hash(const PreparedExperiment& prepared) {
  const std::string text = manifest_object(prepared).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string resolve_output_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv("QGNLS_OUTPUT_DIR"); env && *env) return env;
  return config.output_dir;
}

void write_artifacts(const ExperimentRun& run, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + dir + "': " + ec.message());
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + (fs::path(dir) / name).string() + "'");
    return out;
  };

  {
    std::ofstream out = open("manifest.json");
    out << manifest_json(run.prepared) << '\n';
  }
  {
    std::ofstream out = open("diagnostics.csv");
    out << "# config_hash=" << config_hash(run.prepared) << '\n';
    out << "lambda,converged,iterations,residual_norm,mass,action,energy,correction_norm,correction_ratio,"
           "mass_ratio,action_ratio,kernel_norm,orthogonal_norm,gram_offdiag_ratio,min_value,max_peak_offset,"
           "max_peak_cell,dofs,exploratory\n";
    for (const DiagnosticsRow& r : run.rows) {
      out << fmt(r.lambda) << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << ',' << fmt(r.residual_norm)
          << ',' << fmt(r.mass) << ',' << fmt(r.action) << ',' << fmt(r.energy) << ',' << fmt(r.correction_norm)
          << ',' << fmt(r.correction_ratio) << ',' << fmt(r.mass_ratio) << ',' << fmt(r.action_ratio) << ','
          << fmt(r.kernel_norm) << ',' << fmt(r.orthogonal_norm) << ',' << fmt(r.gram_offdiag_ratio) << ','
          << fmt(r.min_value) << ',' << fmt(r.max_peak_offset) << ',' << fmt(r.max_peak_cell) << ',' << r.dofs
          << ',' << (r.exploratory ? 1 : 0) << '\n';
    }
  }
  for (const BoundStateResult& r : run.results) {
    std::ofstream out = open("solution_lambda_" + short_fmt(r.lambda) + ".txt");
    const Mesh& mesh = *r.u.mesh;
    const MetricGraph& g = mesh.graph();
    out << "# lambda=" << fmt(r.lambda) << " converged=" << (r.converged ? 1 : 0) << '\n';
    for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
      const Edge& edge = g.edge(e);
      out << "# edge " << edge.name << " from " << g.vertex(edge.from).name << " to "
          << (edge.is_half_line() ? std::string("inf") : g.vertex(edge.to).name) << " length " << fmt(edge.length)
          << '\n';
      const MeshEdge& me = mesh.edge(e);
      const std::vector<double> vals = r.u.edge_values(e);
      for (int k = 0; k <= me.intervals; ++k) out << fmt(me.coordinate(k)) << ' ' << fmt(vals[k]) << '\n';
      out << '\n';
    }
  }
}

std::string format_reduced_energy(const ReducedEnergyReport& report) {
  std::ostringstream out;
  auto vec = [&](const Eigen::VectorXd& v) {
    out << '[';
    for (int i = 0; i < v.size(); ++i) out << (i ? ", " : "") << short_fmt(v[i]);
    out << ']';
  };
  out << "N = " << report.n << "\n";
  if (report.n % 2 == 1) {
    out << "eps = " << short_fmt(report.eps) << "\n";
    out << "critical points: " << report.critical_points.size() << "\n";
    for (const CriticalPoint& cp : report.critical_points) {
      out << "  x = ";
      vec(cp.x);
      out << "  b = ";
      vec(cp.b);
      out << "  hessian sign " << (cp.hessian_sign > 0 ? "+1" : (cp.hessian_sign < 0 ? "-1" : "0")) << "\n";
    }
    out << "newton zeros: " << report.newton_zeros << " (extra: " << report.newton_extras << ")\n";
    out << "degree: " << (report.local_degree ? std::to_string(*report.local_degree) : std::string("?")) << "\n";
  } else {
    out << "critical directions: " << report.even_case_lines.size() << "\n";
    for (const Eigen::VectorXd& s : report.even_case_lines) {
      out << "  s = ";
      vec(s);
      out << "\n";
    }
    out << "distinct lines: " << report.distinct_lines << "\n";
    out << "degree undefined (degenerate lines)\n";
  }
  return out.str();
}

}  // namespace qgnls
