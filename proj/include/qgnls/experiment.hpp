#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qgnls/functionals.hpp"
#include "qgnls/graph.hpp"
#include "qgnls/profiles.hpp"
#include "qgnls/reduced_energy.hpp"
#include "qgnls/solver.hpp"

namespace qgnls {

/// Everything a `solve` run needs. Vertex references are by name so a config
/// stays valid when the graph file is reordered.
struct ExperimentConfig {
  std::string graph_path;                 // relative paths resolve against base_dir
  std::optional<GraphDescription> graph;  // inline graph, wins over graph_path
  std::string base_dir;
  double mu = 1.0;
  std::vector<std::string> peaks;
  double alpha = 0.25;
  std::map<std::string, std::vector<double>> b;  // kernel coefficients per peak
  std::map<std::string, double> shift;           // even-degree shift per peak
  std::map<std::string, double> radius;          // cutoff radius override per peak
  CutoffKind cutoff = CutoffKind::Cosine;
  std::vector<double> lambda_schedule{25.0, 50.0, 100.0, 200.0, 400.0};
  double nodes_per_width = 40.0;
  double coarse_factor = 4.0;
  int min_intervals = 4;
  double growth_reference = 25.0;
  double refinement = 1.0;
  std::optional<double> truncation;  // default: max(10, 30/sqrt(lambda_min))
  double newton_tol = 1e-10;
  int max_iters = 50;
  double damping = 0.5;
  double armijo = 1e-4;
  bool pin_kernel = true;
  std::string output_dir = "qgnls_out";
};

/// Strict JSON reader; unknown keys raise ErrorCode::Parse.
ExperimentConfig parse_experiment_config(std::string_view json_text, const std::string& base_dir = "");
ExperimentConfig load_experiment_config(const std::string& path);

/// Truncation length when neither the config nor the graph file sets one.
double default_truncation(const std::vector<double>& lambda_schedule);

/// A validated config: graph built, peaks resolved on the meshed graph.
struct PreparedExperiment {
  ExperimentConfig config;
  std::shared_ptr<const MetricGraph> graph;
  double truncation = 0.0;
  SweepSpec sweep;
  SolveConfig solve;
  double peak_weight = 0.0;  // sum of N_i / 2
  std::vector<std::string> warnings;
};

/// Validates everything that can fail before a solve: graph, vertex names,
/// schedule, coefficient lengths and peak overlap.
PreparedExperiment prepare_experiment(const ExperimentConfig& config);

/// One diagnostics record per lambda.
struct DiagnosticsRow {
  double lambda = 0.0;
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
  double mass = 0.0;
  double action = 0.0;
  double energy = 0.0;
  double correction_norm = 0.0;
  double correction_ratio = 0.0;  // ||Phi||_lambda / lambda^{1/4 + 1/(2mu)}
  double mass_ratio = 0.0;        // mass / (lambda^{1/mu - 1/2} W ||phi||^2)
  double action_ratio = 0.0;      // J / (lambda^{1/mu + 1/2} W J_1(phi))
  double kernel_norm = 0.0;
  double orthogonal_norm = 0.0;
  double gram_offdiag_ratio = 0.0;
  double min_value = 0.0;
  double max_peak_offset = 0.0;  // largest argmax distance over peaks
  double max_peak_cell = 0.0;    // mesh spacing at that argmax
  int dofs = 0;
  bool exploratory = false;
  std::string message;
};

struct ExperimentRun {
  PreparedExperiment prepared;
  std::vector<BoundStateResult> results;
  std::vector<DiagnosticsRow> rows;
};

DiagnosticsRow diagnostics_row(const BoundStateResult& r, double mu, double peak_weight);
ExperimentRun run_experiment(const PreparedExperiment& prepared);

/// The manifest echoes every resolved parameter, defaults included.
std::string manifest_json(const PreparedExperiment& prepared);
/// 64-bit FNV-1a of the manifest, as 16 hex digits.
std::string config_hash(const PreparedExperiment& prepared);

/// QGNLS_OUTPUT_DIR, when set and nonempty, replaces config.output_dir.
std::string resolve_output_dir(const ExperimentConfig& config);

/// Writes diagnostics.csv, manifest.json and solution_lambda_<lambda>.txt.
void write_artifacts(const ExperimentRun& run, const std::string& dir);

/// Human-readable reduced-energy report for the CLI.
std::string format_reduced_energy(const ReducedEnergyReport& report);

}  // namespace qgnls
