#pragma once

#include <string>
#include <vector>

#include "qgnls/experiment.hpp"

namespace qgnls {

enum class CriterionStatus { Pass, Fail, Skip };

const char* criterion_status_name(CriterionStatus s) noexcept;

struct CriterionResult {
  int id = 0;
  std::string name;
  CriterionStatus status = CriterionStatus::Fail;
  std::string measured;
  std::string detail;
};

/// Tripod: center "c", three unit edges to "a", "b", "d"; mu = 1, peak at "c".
ExperimentConfig default_tripod_config();
/// Two degree-3 vertices "a", "b" joined by a unit edge, each with two more
/// unit edges; peaks at both.
ExperimentConfig default_double_tripod_config();

struct VerifyOptions {
  ExperimentConfig suite = default_tripod_config();         // criteria 4, 5, 6, 8, 9
  ExperimentConfig multi = default_double_tripod_config();  // criterion 7
  std::vector<int> criteria;                                // empty runs all nine
};

/// Lowest eigenvalues of the linearization at Psi_N on a truncated N-star.
CriterionResult check_kernel_dimension(const std::vector<int>& ns = {2, 3, 4, 5});
CriterionResult check_reduced_energy_degree(const std::vector<int>& ns = {3, 5, 7, 9});
CriterionResult check_even_structure(const std::vector<int>& ns = {4, 6});

/// Criteria 4, 5, 6 and 8 share the suite sweep; each takes the finished run.
CriterionResult check_existence(const ExperimentRun& run);
/// `refined` is the same sweep at half the spacing; its Richardson
/// extrapolation decides the monotone approach.
CriterionResult check_mass_asymptotics(const ExperimentRun& run, const ExperimentRun& refined);
CriterionResult check_correction_rate(const ExperimentRun& run);
CriterionResult check_multi_peak(const ExperimentRun& run);
/// `mu2` is the suite rerun with mu = 2.
CriterionResult check_not_ground_state(const ExperimentRun& run, const ExperimentRun& mu2);

/// Manufactured-solution order, resolvent symmetry and Jacobian consistency.
/// The manufactured test uses spacings 1/nodes_per_width and half that.
CriterionResult check_numerical_hygiene(double nodes_per_width, double mu);

/// Manufactured-solution error ratio e(h)/e(h/2) on a 3-star truncated at 25,
/// lambda = 1, exact solution Psi_3.
double manufactured_order_factor(double h, double mu = 1.0);

/// True when every peak sits at an odd-degree vertex of degree >= 3.
bool within_hypotheses(const PreparedExperiment& prepared);

std::vector<CriterionResult> run_verification(const VerifyOptions& options);

/// "PASS  4 existence  measured ...  (detail)".
std::string format_criterion(const CriterionResult& r);

}  // namespace qgnls
