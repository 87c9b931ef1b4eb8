#include "qgnls/qgnls.h"

#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "qgnls/error.hpp"
#include "qgnls/experiment.hpp"
#include "qgnls/verify.hpp"

struct qgnls_graph {
  qgnls::MetricGraph graph;
};

struct qgnls_config {
  qgnls::ExperimentConfig config;
};

struct qgnls_run {
  qgnls::ExperimentRun run;
  std::string hash;
  std::string output_dir;
};

struct qgnls_report {
  qgnls::ReducedEnergyReport report;
  std::string text;
};

struct qgnls_verify {
  std::vector<qgnls::CriterionResult> results;
  std::vector<std::string> lines;
};

namespace {

thread_local std::string last_error;

qgnls_status fail(qgnls_status s, const char* what) {
  last_error = what;
  return s;
}

// Runs `body`, mapping exceptions onto status codes.
template <class F>
qgnls_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return QGNLS_OK;
  } catch (const qgnls::Error& e) {
    return fail(static_cast<qgnls_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(QGNLS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QGNLS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QGNLS_ERR_INTERNAL, "unknown failure");
  }
}

qgnls_status null_arg(const char* what) { return fail(QGNLS_ERR_INVALID_ARGUMENT, what); }

std::vector<qgnls::VertexId> odd_vertices(const qgnls_graph* g, int min_degree) {
  return qgnls::odd_degree_vertices(g->graph, min_degree);
}

}  // namespace

extern "C" {

const char* qgnls_version(void) { return "1.0.0"; }

const char* qgnls_status_name(qgnls_status status) {
  if (status == QGNLS_OK) return "Ok";
  if (status < QGNLS_ERR_INVALID_ARGUMENT || status > QGNLS_ERR_INTERNAL) return "Unknown";
  return qgnls::error_code_name(static_cast<qgnls::ErrorCode>(static_cast<int>(status))).data();
}

const char* qgnls_last_error(void) { return last_error.c_str(); }

qgnls_status qgnls_graph_load(const char* path, qgnls_graph** out) {
  if (!path || !out) return null_arg("path and out must be non-null");
  *out = nullptr;
  return guarded([&] { *out = new qgnls_graph{qgnls::load_graph(path)}; });
}

qgnls_status qgnls_graph_parse(const char* json, qgnls_graph** out) {
  if (!json || !out) return null_arg("json and out must be non-null");
  *out = nullptr;
  return guarded([&] { *out = new qgnls_graph{qgnls::MetricGraph::build(qgnls::parse_graph_description(json))}; });
}

void qgnls_graph_free(qgnls_graph* graph) { delete graph; }

size_t qgnls_graph_vertex_count(const qgnls_graph* graph) { return graph ? graph->graph.vertex_count() : 0; }

size_t qgnls_graph_edge_count(const qgnls_graph* graph) { return graph ? graph->graph.edge_count() : 0; }

const char* qgnls_graph_vertex_name(const qgnls_graph* graph, size_t index) {
  if (!graph || index >= graph->graph.vertex_count()) return nullptr;
  return graph->graph.vertex(index).name.c_str();
}

qgnls_status qgnls_graph_degree(const qgnls_graph* graph, const char* vertex, int* out) {
  if (!graph || !vertex || !out) return null_arg("graph, vertex and out must be non-null");
  return guarded([&] { *out = graph->graph.degree(graph->graph.vertex_id(vertex)); });
}

size_t qgnls_graph_odd_vertex_count(const qgnls_graph* graph, int min_degree) {
  return graph ? odd_vertices(graph, min_degree).size() : 0;
}

const char* qgnls_graph_odd_vertex(const qgnls_graph* graph, int min_degree, size_t index) {
  if (!graph) return nullptr;
  const auto ids = odd_vertices(graph, min_degree);
  return index < ids.size() ? graph->graph.vertex(ids[index]).name.c_str() : nullptr;
}

qgnls_status qgnls_config_load(const char* path, qgnls_config** out) {
  if (!path || !out) return null_arg("path and out must be non-null");
  *out = nullptr;
  return guarded([&] { *out = new qgnls_config{qgnls::load_experiment_config(path)}; });
}

qgnls_status qgnls_config_parse(const char* json, const char* base_dir, qgnls_config** out) {
  if (!json || !out) return null_arg("json and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    *out = new qgnls_config{qgnls::parse_experiment_config(json, base_dir ? base_dir : "")};
  });
}

qgnls_status qgnls_config_default_tripod(qgnls_config** out) {
  if (!out) return null_arg("out must be non-null");
  return guarded([&] { *out = new qgnls_config{qgnls::default_tripod_config()}; });
}

void qgnls_config_free(qgnls_config* config) { delete config; }

qgnls_status qgnls_config_set_graph_path(qgnls_config* config, const char* path) {
  if (!config || !path) return null_arg("config and path must be non-null");
  config->config.graph_path = path;
  config->config.graph.reset();
  return QGNLS_OK;
}

qgnls_status qgnls_config_set_mu(qgnls_config* config, double mu) {
  if (!config) return null_arg("config must be non-null");
  if (!(mu >= 0.5)) return fail(QGNLS_ERR_INVALID_ARGUMENT, "mu must be >= 1/2");
  config->config.mu = mu;
  return QGNLS_OK;
}

qgnls_status qgnls_config_set_alpha(qgnls_config* config, double alpha) {
  if (!config) return null_arg("config must be non-null");
  config->config.alpha = alpha;
  return QGNLS_OK;
}

qgnls_status qgnls_config_set_peaks(qgnls_config* config, const char* const* names, size_t count) {
  if (!config || (count && !names)) return null_arg("config and names must be non-null");
  std::vector<std::string> peaks;
  for (size_t i = 0; i < count; ++i) {
    if (!names[i]) return null_arg("peak name must be non-null");
    peaks.emplace_back(names[i]);
  }
  config->config.peaks = std::move(peaks);
  return QGNLS_OK;
}

qgnls_status qgnls_config_set_kernel_coefficients(qgnls_config* config, const char* vertex, const double* b,
                                                  size_t count) {
  if (!config || !vertex || (count && !b)) return null_arg("config, vertex and b must be non-null");
  config->config.b[vertex] = std::vector<double>(b, b + count);
  return QGNLS_OK;
}

qgnls_status qgnls_config_set_lambda_schedule(qgnls_config* config, const double* lambdas, size_t count) {
  if (!config || (count && !lambdas)) return null_arg("config and lambdas must be non-null");
  config->config.lambda_schedule.assign(lambdas, lambdas + count);
  return QGNLS_OK;
}

qgnls_status qgnls_config_set_nodes_per_width(qgnls_config* config, double nodes_per_width) {
  if (!config) return null_arg("config must be non-null");
  if (!(nodes_per_width > 0.0)) return fail(QGNLS_ERR_INVALID_ARGUMENT, "nodes_per_width must be positive");
  config->config.nodes_per_width = nodes_per_width;
  return QGNLS_OK;
}

qgnls_status qgnls_config_set_truncation(qgnls_config* config, double truncation) {
  if (!config) return null_arg("config must be non-null");
  if (!(truncation > 0.0)) return fail(QGNLS_ERR_INVALID_ARGUMENT, "truncation must be positive");
  config->config.truncation = truncation;
  return QGNLS_OK;
}

qgnls_status qgnls_config_set_cutoff(qgnls_config* config, qgnls_cutoff cutoff) {
  if (!config) return null_arg("config must be non-null");
  if (cutoff == QGNLS_CUTOFF_COSINE) config->config.cutoff = qgnls::CutoffKind::Cosine;
  else if (cutoff == QGNLS_CUTOFF_QUINTIC) config->config.cutoff = qgnls::CutoffKind::Quintic;
  else return fail(QGNLS_ERR_INVALID_ARGUMENT, "unknown cutoff kind");
  return QGNLS_OK;
}

qgnls_status qgnls_config_set_output_dir(qgnls_config* config, const char* dir) {
  if (!config || !dir) return null_arg("config and dir must be non-null");
  config->config.output_dir = dir;
  return QGNLS_OK;
}

qgnls_status qgnls_config_validate(const qgnls_config* config) {
  if (!config) return null_arg("config must be non-null");
  return guarded([&] { qgnls::prepare_experiment(config->config); });
}

qgnls_status qgnls_config_manifest(const qgnls_config* config, char** out_json) {
  if (!config || !out_json) return null_arg("config and out_json must be non-null");
  *out_json = nullptr;
  return guarded([&] {
    const std::string text = qgnls::manifest_json(qgnls::prepare_experiment(config->config));
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_json = buf;
  });
}

void qgnls_string_free(char* s) { delete[] s; }

qgnls_status qgnls_run_solve(const qgnls_config* config, qgnls_run** out) {
  if (!config || !out) return null_arg("config and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto run = std::make_unique<qgnls_run>();
    run->run = qgnls::run_experiment(qgnls::prepare_experiment(config->config));
    run->hash = qgnls::config_hash(run->run.prepared);
    run->output_dir = qgnls::resolve_output_dir(config->config);
    *out = run.release();
  });
}

void qgnls_run_free(qgnls_run* run) { delete run; }

size_t qgnls_run_row_count(const qgnls_run* run) { return run ? run->run.rows.size() : 0; }

qgnls_status qgnls_run_row(const qgnls_run* run, size_t index, qgnls_diagnostics* out) {
  if (!run || !out) return null_arg("run and out must be non-null");
  if (index >= run->run.rows.size()) return fail(QGNLS_ERR_INDEX_OUT_OF_RANGE, "row index out of range");
  const qgnls::DiagnosticsRow& r = run->run.rows[index];
  out->lambda = r.lambda;
  out->converged = r.converged ? 1 : 0;
  out->iterations = r.iterations;
  out->residual_norm = r.residual_norm;
  out->mass = r.mass;
  out->action = r.action;
  out->energy = r.energy;
  out->correction_norm = r.correction_norm;
  out->correction_ratio = r.correction_ratio;
  out->mass_ratio = r.mass_ratio;
  out->action_ratio = r.action_ratio;
  out->kernel_norm = r.kernel_norm;
  out->orthogonal_norm = r.orthogonal_norm;
  out->gram_offdiag_ratio = r.gram_offdiag_ratio;
  out->min_value = r.min_value;
  out->max_peak_offset = r.max_peak_offset;
  out->max_peak_cell = r.max_peak_cell;
  out->dofs = r.dofs;
  out->exploratory = r.exploratory ? 1 : 0;
  return QGNLS_OK;
}

const char* qgnls_run_message(const qgnls_run* run, size_t index) {
  if (!run || index >= run->run.rows.size()) return nullptr;
  return run->run.rows[index].message.c_str();
}

size_t qgnls_run_warning_count(const qgnls_run* run) { return run ? run->run.prepared.warnings.size() : 0; }

const char* qgnls_run_warning(const qgnls_run* run, size_t index) {
  if (!run || index >= run->run.prepared.warnings.size()) return nullptr;
  return run->run.prepared.warnings[index].c_str();
}

const char* qgnls_run_config_hash(const qgnls_run* run) { return run ? run->hash.c_str() : nullptr; }

qgnls_status qgnls_run_write(const qgnls_run* run, const char* dir) {
  if (!run) return null_arg("run must be non-null");
  return guarded([&] { qgnls::write_artifacts(run->run, dir ? std::string(dir) : run->output_dir); });
}

const char* qgnls_run_output_dir(const qgnls_run* run) { return run ? run->output_dir.c_str() : nullptr; }

qgnls_status qgnls_reduced_energy(int n, double eps, qgnls_report** out) {
  if (!out) return null_arg("out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto rep = std::make_unique<qgnls_report>();
    rep->report = qgnls::reduced_energy_report(n, eps);
    rep->text = qgnls::format_reduced_energy(rep->report);
    *out = rep.release();
  });
}

void qgnls_report_free(qgnls_report* report) { delete report; }

size_t qgnls_report_critical_point_count(const qgnls_report* report) {
  return report ? report->report.critical_points.size() : 0;
}

int qgnls_report_degree(const qgnls_report* report, long long* out) {
  if (!report || !report->report.local_degree) return 0;
  if (out) *out = *report->report.local_degree;
  return 1;
}

size_t qgnls_report_line_count(const qgnls_report* report) {
  return report ? report->report.even_case_lines.size() : 0;
}

const char* qgnls_report_text(const qgnls_report* report) { return report ? report->text.c_str() : nullptr; }

qgnls_status qgnls_verify_run(const qgnls_config* suite, const int* criteria, size_t count, qgnls_verify** out) {
  if (!out || (count && !criteria)) return null_arg("out and criteria must be non-null");
  *out = nullptr;
  return guarded([&] {
    qgnls::VerifyOptions options;
    if (suite) options.suite = suite->config;
    for (size_t i = 0; i < count; ++i) {
      if (criteria[i] < 1 || criteria[i] > 9) throw qgnls::Error(qgnls::ErrorCode::InvalidArgument, "criteria are numbered 1 to 9");
      options.criteria.push_back(criteria[i]);
    }
    auto v = std::make_unique<qgnls_verify>();
    v->results = qgnls::run_verification(options);
    for (const auto& r : v->results) v->lines.push_back(qgnls::format_criterion(r));
    *out = v.release();
  });
}

void qgnls_verify_free(qgnls_verify* verify) { delete verify; }

size_t qgnls_verify_count(const qgnls_verify* verify) { return verify ? verify->results.size() : 0; }

qgnls_status qgnls_verify_item(const qgnls_verify* verify, size_t index, qgnls_criterion* out) {
  if (!verify || !out) return null_arg("verify and out must be non-null");
  if (index >= verify->results.size()) return fail(QGNLS_ERR_INDEX_OUT_OF_RANGE, "criterion index out of range");
  const auto& r = verify->results[index];
  out->id = r.id;
  out->status = static_cast<qgnls_criterion_status>(static_cast<int>(r.status));
  out->name = r.name.c_str();
  out->measured = r.measured.c_str();
  out->detail = r.detail.c_str();
  return QGNLS_OK;
}

const char* qgnls_verify_line(const qgnls_verify* verify, size_t index) {
  if (!verify || index >= verify->lines.size()) return nullptr;
  return verify->lines[index].c_str();
}

int qgnls_verify_passed(const qgnls_verify* verify) {
  if (!verify) return 0;
  for (const auto& r : verify->results)
    if (r.status == qgnls::CriterionStatus::Fail) return 0;
  return 1;
}

}  // extern "C"
