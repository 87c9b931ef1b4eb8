// Command-line front end. Talks to the library only through qgnls.h.
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qgnls/qgnls.h"

namespace {

constexpr int kExitError = 2;
constexpr int kExitNotConverged = 3;

// Machine-readable error record on stderr.
int report_error(qgnls_status s) {
  nlohmann::json rec{{"error", qgnls_status_name(s)}, {"code", static_cast<int>(s)}, {"message", qgnls_last_error()}};
  std::fprintf(stderr, "%s\n", rec.dump().c_str());
  return kExitError;
}

struct ConfigFlags {
  std::string config_path;
  std::string graph_path;
  std::optional<double> mu;
  std::optional<double> alpha;
  std::vector<std::string> peaks;
  std::vector<double> lambdas;
  std::optional<double> nodes_per_width;
  std::optional<double> truncation;
  std::string cutoff;
  std::vector<std::string> coefficients;  // vertex=b1,b2,...
  std::string output_dir;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool with_output) {
  cmd->add_option("-c,--config", f.config_path, "experiment config (JSON)");
  cmd->add_option("-g,--graph", f.graph_path, "graph file (JSON)");
  cmd->add_option("--mu", f.mu, "nonlinearity exponent mu >= 1/2");
  cmd->add_option("--alpha", f.alpha, "kernel coefficient scaling exponent");
  cmd->add_option("-p,--peaks", f.peaks, "peak vertex names")->delimiter(',');
  cmd->add_option("-l,--lambdas", f.lambdas, "increasing lambda schedule")->delimiter(',');
  cmd->add_option("--nodes-per-width", f.nodes_per_width, "mesh nodes per soliton width");
  cmd->add_option("--truncation", f.truncation, "length of truncated half-lines");
  cmd->add_option("--cutoff", f.cutoff, "cutoff family")->check(CLI::IsMember({"cosine", "quintic"}));
  cmd->add_option("--b", f.coefficients, "kernel coefficients, vertex=b1,b2,...");
  if (with_output) cmd->add_option("-o,--output-dir", f.output_dir, "artifact directory (QGNLS_OUTPUT_DIR overrides)");
}

// Builds a config from the flags; prints the error record and returns null on failure.
qgnls_config* build_config(const ConfigFlags& f) {
  qgnls_config* cfg = nullptr;
  qgnls_status s = f.config_path.empty() ? qgnls_config_default_tripod(&cfg) : qgnls_config_load(f.config_path.c_str(), &cfg);
  auto check = [&](qgnls_status st) {
    if (st != QGNLS_OK && s == QGNLS_OK) s = st;
  };
  if (s == QGNLS_OK && !f.graph_path.empty()) {
    check(qgnls_config_set_graph_path(cfg, f.graph_path.c_str()));
    if (f.peaks.empty() && f.config_path.empty()) {
      check(qgnls_config_set_peaks(cfg, nullptr, 0));  // a new graph needs its own peaks
    }
  }
  if (s == QGNLS_OK && f.mu) check(qgnls_config_set_mu(cfg, *f.mu));
  if (s == QGNLS_OK && f.alpha) check(qgnls_config_set_alpha(cfg, *f.alpha));
  if (s == QGNLS_OK && !f.peaks.empty()) {
    std::vector<const char*> names;
    for (const auto& p : f.peaks) names.push_back(p.c_str());
    check(qgnls_config_set_peaks(cfg, names.data(), names.size()));
  }
  if (s == QGNLS_OK && !f.lambdas.empty()) check(qgnls_config_set_lambda_schedule(cfg, f.lambdas.data(), f.lambdas.size()));
  if (s == QGNLS_OK && f.nodes_per_width) check(qgnls_config_set_nodes_per_width(cfg, *f.nodes_per_width));
  if (s == QGNLS_OK && f.truncation) check(qgnls_config_set_truncation(cfg, *f.truncation));
  if (s == QGNLS_OK && !f.cutoff.empty()) {
    check(qgnls_config_set_cutoff(cfg, f.cutoff == "quintic" ? QGNLS_CUTOFF_QUINTIC : QGNLS_CUTOFF_COSINE));
  }
  for (const auto& spec : f.coefficients) {
    if (s != QGNLS_OK) break;
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "{\"error\":\"InvalidArgument\",\"code\":1,\"message\":\"--b expects vertex=b1,b2,...\"}\n");
      qgnls_config_free(cfg);
      return nullptr;
    }
    std::vector<double> b;
    std::stringstream ss(spec.substr(eq + 1));
    std::string item;
    try {
      while (std::getline(ss, item, ',')) b.push_back(std::stod(item));
    } catch (const std::exception&) {
      std::fprintf(stderr, "{\"error\":\"InvalidArgument\",\"code\":1,\"message\":\"bad number in --b\"}\n");
      qgnls_config_free(cfg);
      return nullptr;
    }
    check(qgnls_config_set_kernel_coefficients(cfg, spec.substr(0, eq).c_str(), b.data(), b.size()));
  }
  if (s == QGNLS_OK && !f.output_dir.empty()) check(qgnls_config_set_output_dir(cfg, f.output_dir.c_str()));
  if (s != QGNLS_OK) {
    report_error(s);
    qgnls_config_free(cfg);
    return nullptr;
  }
  return cfg;
}

int cmd_solve(const ConfigFlags& f) {
  qgnls_config* cfg = build_config(f);
  if (!cfg) return kExitError;
  // Validation first, so bad input never reaches a solve.
  qgnls_status s = qgnls_config_validate(cfg);
  qgnls_run* run = nullptr;
  if (s == QGNLS_OK) s = qgnls_run_solve(cfg, &run);
  qgnls_config_free(cfg);
  if (s != QGNLS_OK) return report_error(s);

  for (size_t i = 0; i < qgnls_run_warning_count(run); ++i) std::fprintf(stderr, "warning: %s\n", qgnls_run_warning(run, i));
  std::printf("# config_hash=%s\n", qgnls_run_config_hash(run));
  std::printf("%10s %5s %5s %12s %14s %14s %14s %12s %12s %12s %12s\n", "lambda", "conv", "iter", "residual",
              "mass", "action", "energy", "|Phi|_lam", "Phi ratio", "mass ratio", "peak offset");
  bool all_converged = true;
  for (size_t i = 0; i < qgnls_run_row_count(run); ++i) {
    qgnls_diagnostics d;
    qgnls_run_row(run, i, &d);
    all_converged = all_converged && d.converged;
    std::printf("%10g %5s %5d %12.3e %14.8g %14.8g %14.8g %12.4e %12.4e %12.8f %12.3e\n", d.lambda,
                d.converged ? "yes" : "no", d.iterations, d.residual_norm, d.mass, d.action, d.energy,
                d.correction_norm, d.correction_ratio, d.mass_ratio, d.max_peak_offset);
    const char* msg = qgnls_run_message(run, i);
    if (msg && *msg) std::fprintf(stderr, "lambda=%g: %s\n", d.lambda, msg);
  }
  s = qgnls_run_write(run, nullptr);
  if (s == QGNLS_OK) std::printf("# artifacts in %s\n", qgnls_run_output_dir(run));
  qgnls_run_free(run);
  if (s != QGNLS_OK) return report_error(s);
  return all_converged ? 0 : kExitNotConverged;
}

int cmd_reduced_energy(int n, double eps) {
  qgnls_report* rep = nullptr;
  const qgnls_status s = qgnls_reduced_energy(n, eps, &rep);
  if (s != QGNLS_OK) return report_error(s);
  std::fputs(qgnls_report_text(rep), stdout);
  qgnls_report_free(rep);
  return 0;
}

int cmd_verify(const ConfigFlags& f, const std::vector<int>& criteria) {
  qgnls_config* cfg = build_config(f);
  if (!cfg) return kExitError;
  qgnls_verify* v = nullptr;
  const qgnls_status s = qgnls_verify_run(cfg, criteria.data(), criteria.size(), &v);
  qgnls_config_free(cfg);
  if (s != QGNLS_OK) return report_error(s);
  for (size_t i = 0; i < qgnls_verify_count(v); ++i) std::printf("%s\n", qgnls_verify_line(v, i));
  const bool ok = qgnls_verify_passed(v);
  qgnls_verify_free(v);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peaked NLS bound states on metric graphs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qgnls_version());

  ConfigFlags solve_flags;
  CLI::App* solve = app.add_subcommand("solve", "continuation sweep from the cutoff star-soliton ansatz");
  add_config_flags(solve, solve_flags, true);

  int n = 0;
  double eps = 0.1;
  CLI::App* reduced = app.add_subcommand("reduced-energy", "critical points and degree of the reduced energy");
  reduced->add_option("N,-n,--n", n, "star degree N >= 2")->required();
  reduced->add_option("--eps", eps, "perturbation eps > 0 (odd N)");

  ConfigFlags verify_flags;
  std::vector<int> criteria;
  CLI::App* verify = app.add_subcommand("verify", "acceptance suite, one line per criterion");
  add_config_flags(verify, verify_flags, false);
  verify->add_option("--criteria", criteria, "subset of criteria 1-9")->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  if (*solve) return cmd_solve(solve_flags);
  if (*reduced) return cmd_reduced_energy(n, eps);
  if (*verify) return cmd_verify(verify_flags, criteria);
  return kExitError;
}
