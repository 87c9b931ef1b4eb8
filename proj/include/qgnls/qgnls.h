/* C interface to the qgnls library: peaked bound states of the nonlinear
 * Schroedinger equation on metric graphs with Kirchhoff vertex conditions.
 *
 * Every object is an opaque handle released by its matching _free function.
 * Functions that can fail return a qgnls_status; on failure the message is
 * available from qgnls_last_error() on the calling thread. Strings returned by
 * accessors stay valid until the owning handle is freed. */
#ifndef QGNLS_H
#define QGNLS_H

#include <stddef.h>

#if defined(QGNLS_BUILDING_LIBRARY)
#define QGNLS_API __attribute__((visibility("default")))
#else
#define QGNLS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qgnls_status {
  QGNLS_OK = 0,
  QGNLS_ERR_INVALID_ARGUMENT = 1,
  QGNLS_ERR_IO,
  QGNLS_ERR_PARSE,
  QGNLS_ERR_DISCONNECTED_GRAPH,
  QGNLS_ERR_NONPOSITIVE_EDGE_LENGTH,
  QGNLS_ERR_DANGLING_ENDPOINT,
  QGNLS_ERR_UNKNOWN_VERTEX,
  QGNLS_ERR_OVERLAPPING_PEAKS,
  QGNLS_ERR_ODD_N_WITH_SHIFT,
  QGNLS_ERR_INDEX_OUT_OF_RANGE,
  QGNLS_ERR_QUADRATURE_NOT_CONVERGED,
  QGNLS_ERR_DIMENSION_MISMATCH,
  QGNLS_ERR_EVEN_N,
  QGNLS_ERR_ODD_N,
  QGNLS_ERR_INDEFINITE_OPERATOR,
  QGNLS_ERR_SOLVE_FAILURE,
  QGNLS_ERR_EIGEN_SOLVE_FAILURE,
  QGNLS_ERR_NEGATIVE_FORM,
  QGNLS_ERR_SINGULAR_JACOBIAN,
  QGNLS_ERR_NOT_CONVERGED,
  QGNLS_ERR_INTERNAL
} qgnls_status;

typedef enum qgnls_cutoff { QGNLS_CUTOFF_COSINE = 0, QGNLS_CUTOFF_QUINTIC = 1 } qgnls_cutoff;

typedef enum qgnls_criterion_status {
  QGNLS_CRITERION_PASS = 0,
  QGNLS_CRITERION_FAIL = 1,
  QGNLS_CRITERION_SKIP = 2
} qgnls_criterion_status;

typedef struct qgnls_graph qgnls_graph;
typedef struct qgnls_config qgnls_config;
typedef struct qgnls_run qgnls_run;
typedef struct qgnls_report qgnls_report;
typedef struct qgnls_verify qgnls_verify;

/* One diagnostics record of a sweep. */
typedef struct qgnls_diagnostics {
  double lambda;
  int converged;
  int iterations;
  double residual_norm;
  double mass;
  double action;
  double energy;
  double correction_norm;
  double correction_ratio;
  double mass_ratio;
  double action_ratio;
  double kernel_norm;
  double orthogonal_norm;
  double gram_offdiag_ratio;
  double min_value;
  double max_peak_offset;
  double max_peak_cell;
  int dofs;
  int exploratory;
} qgnls_diagnostics;

typedef struct qgnls_criterion {
  int id;
  qgnls_criterion_status status;
  const char* name;
  const char* measured;
  const char* detail;
} qgnls_criterion;

QGNLS_API const char* qgnls_version(void);
QGNLS_API const char* qgnls_status_name(qgnls_status status);
/* Message of the last failure on this thread; empty when none. */
QGNLS_API const char* qgnls_last_error(void);

/* Graphs. */
QGNLS_API qgnls_status qgnls_graph_load(const char* path, qgnls_graph** out);
QGNLS_API qgnls_status qgnls_graph_parse(const char* json, qgnls_graph** out);
QGNLS_API void qgnls_graph_free(qgnls_graph* graph);
QGNLS_API size_t qgnls_graph_vertex_count(const qgnls_graph* graph);
QGNLS_API size_t qgnls_graph_edge_count(const qgnls_graph* graph);
QGNLS_API const char* qgnls_graph_vertex_name(const qgnls_graph* graph, size_t index);
QGNLS_API qgnls_status qgnls_graph_degree(const qgnls_graph* graph, const char* vertex, int* out);
/* Odd-degree vertices of degree >= min_degree; names via qgnls_graph_odd_vertex. */
QGNLS_API size_t qgnls_graph_odd_vertex_count(const qgnls_graph* graph, int min_degree);
QGNLS_API const char* qgnls_graph_odd_vertex(const qgnls_graph* graph, int min_degree, size_t index);

/* Experiment configuration. */
QGNLS_API qgnls_status qgnls_config_load(const char* path, qgnls_config** out);
QGNLS_API qgnls_status qgnls_config_parse(const char* json, const char* base_dir, qgnls_config** out);
/* Unit tripod, mu = 1, peak at its center, lambda in {25, 50, 100, 200, 400}. */
QGNLS_API qgnls_status qgnls_config_default_tripod(qgnls_config** out);
QGNLS_API void qgnls_config_free(qgnls_config* config);
QGNLS_API qgnls_status qgnls_config_set_graph_path(qgnls_config* config, const char* path);
QGNLS_API qgnls_status qgnls_config_set_mu(qgnls_config* config, double mu);
QGNLS_API qgnls_status qgnls_config_set_alpha(qgnls_config* config, double alpha);
QGNLS_API qgnls_status qgnls_config_set_peaks(qgnls_config* config, const char* const* names, size_t count);
QGNLS_API qgnls_status qgnls_config_set_kernel_coefficients(qgnls_config* config, const char* vertex,
                                                            const double* b, size_t count);
QGNLS_API qgnls_status qgnls_config_set_lambda_schedule(qgnls_config* config, const double* lambdas,
                                                        size_t count);
QGNLS_API qgnls_status qgnls_config_set_nodes_per_width(qgnls_config* config, double nodes_per_width);
QGNLS_API qgnls_status qgnls_config_set_truncation(qgnls_config* config, double truncation);
QGNLS_API qgnls_status qgnls_config_set_cutoff(qgnls_config* config, qgnls_cutoff cutoff);
QGNLS_API qgnls_status qgnls_config_set_output_dir(qgnls_config* config, const char* dir);
/* Runs every check that precedes a solve. */
QGNLS_API qgnls_status qgnls_config_validate(const qgnls_config* config);
/* Resolved manifest as JSON; release with qgnls_string_free. */
QGNLS_API qgnls_status qgnls_config_manifest(const qgnls_config* config, char** out_json);
QGNLS_API void qgnls_string_free(char* s);

/* Continuation sweeps. */
QGNLS_API qgnls_status qgnls_run_solve(const qgnls_config* config, qgnls_run** out);
QGNLS_API void qgnls_run_free(qgnls_run* run);
QGNLS_API size_t qgnls_run_row_count(const qgnls_run* run);
QGNLS_API qgnls_status qgnls_run_row(const qgnls_run* run, size_t index, qgnls_diagnostics* out);
QGNLS_API const char* qgnls_run_message(const qgnls_run* run, size_t index);
QGNLS_API size_t qgnls_run_warning_count(const qgnls_run* run);
QGNLS_API const char* qgnls_run_warning(const qgnls_run* run, size_t index);
QGNLS_API const char* qgnls_run_config_hash(const qgnls_run* run);
/* Writes diagnostics.csv, manifest.json and per-lambda solution dumps. A NULL
 * dir means QGNLS_OUTPUT_DIR if set, else the configured output_dir. */
QGNLS_API qgnls_status qgnls_run_write(const qgnls_run* run, const char* dir);
/* The directory a NULL dir resolves to. */
QGNLS_API const char* qgnls_run_output_dir(const qgnls_run* run);

/* Reduced energy of the N-star kernel coordinates. */
QGNLS_API qgnls_status qgnls_reduced_energy(int n, double eps, qgnls_report** out);
QGNLS_API void qgnls_report_free(qgnls_report* report);
QGNLS_API size_t qgnls_report_critical_point_count(const qgnls_report* report);
/* 1 and the degree in *out for odd N; 0 for even N. */
QGNLS_API int qgnls_report_degree(const qgnls_report* report, long long* out);
QGNLS_API size_t qgnls_report_line_count(const qgnls_report* report);
QGNLS_API const char* qgnls_report_text(const qgnls_report* report);

/* Acceptance suite. A NULL suite uses the default tripod; a NULL or empty
 * criteria list runs all nine. */
QGNLS_API qgnls_status qgnls_verify_run(const qgnls_config* suite, const int* criteria, size_t count,
                                        qgnls_verify** out);
QGNLS_API void qgnls_verify_free(qgnls_verify* verify);
QGNLS_API size_t qgnls_verify_count(const qgnls_verify* verify);
QGNLS_API qgnls_status qgnls_verify_item(const qgnls_verify* verify, size_t index, qgnls_criterion* out);
QGNLS_API const char* qgnls_verify_line(const qgnls_verify* verify, size_t index);
/* 1 when no criterion failed. */
QGNLS_API int qgnls_verify_passed(const qgnls_verify* verify);

#ifdef __cplusplus
}
#endif

#endif /* QGNLS_H */
