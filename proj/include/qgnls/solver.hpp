#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qgnls/discrete.hpp"
#include "qgnls/profiles.hpp"

namespace qgnls {

struct SolveConfig {
  double mu = 1.0;
  /// Convergence when the dual residual norm is below newton_tol * max(1, ||u||_lambda).
  double newton_tol = 1e-10;
  int max_iters = 50;
  double damping = 0.5;   // backtracking factor
  double armijo = 1e-4;   // sufficient-decrease constant
  /// Solve with the kernel coordinates split off (pinned_newton_solve); plain
  /// Newton otherwise.
  bool pin_kernel = true;
  std::vector<double> lambda_schedule;
};

struct PeakLocation {
  VertexId vertex = 0;
  double distance = 0.0;  // graph distance from the vertex to the argmax node
  double cell = 0.0;      // mesh spacing at the argmax node
  double peak_value = 0.0;
  bool within_one_cell() const noexcept { return distance <= cell * (1.0 + 1e-9); }
};

struct BoundStateResult {
  DiscreteField u;
  DiscreteField ansatz;
  std::shared_ptr<const KirchhoffOperator> op;
  double lambda = 0.0;
  bool converged = false;
  int iterations = 0;
  int pinned_iterations = 0;
  int reduced_iterations = 0;  // outer steps on the kernel coordinates
  double residual_norm = 0.0;  // relative dual norm, comparable with newton_tol
  double correction_norm = 0.0;
  double kernel_component_norm = 0.0;
  double orthogonal_component_norm = 0.0;
  double gram_offdiag_ratio = 0.0;
  double min_value = 0.0;
  std::vector<PeakLocation> peak_locations;
  bool exploratory = false;  // a peak sits at a vertex outside the odd-degree hypothesis
  std::string message;
};

/// Weak residual S u + lambda M u - M f(u) with f(u) = (u^+)^{2mu+1}.
Eigen::VectorXd nonlinear_residual(const KirchhoffOperator& op, double mu, const Eigen::VectorXd& u);
DiscreteField nonlinear_residual(const KirchhoffOperator& op, double mu, const DiscreteField& u);

/// S + lambda M - M diag(f'(u)), f'(u) = (2mu+1)(u^+)^{2mu}.
SparseMatrix jacobian(const KirchhoffOperator& op, double mu, const Eigen::VectorXd& u);

/// sqrt(r^T (S + lambda M)^{-1} r): the lambda-norm of the Riesz representative.
double dual_norm(const KirchhoffOperator& op, const Eigen::VectorXd& r);

/// Damped Newton with Armijo backtracking on the dual residual norm.
/// Non-convergence is reported in the result; a singular Jacobian throws
/// SingularJacobian.
BoundStateResult newton_solve(std::shared_ptr<const KirchhoffOperator> op, double mu,
                              const DiscreteField& u0, const SolveConfig& cfg);

/// Lyapunov-Schmidt Newton. The inner solve is Newton on the bordered system
///   R(u) - sum_k c_k (S + lambda M) zeta_k = 0,  <zeta_k, u - w>_lambda = t_k,
/// which keeps the near-kernel directions spanned by `zeta` out of the
/// Jacobian. The outer loop is Newton on the reduced equation c(t) = 0 with
/// the exact sensitivity dc/dt from the factored bordered matrix.
BoundStateResult pinned_newton_solve(std::shared_ptr<const KirchhoffOperator> op, double mu,
                                     const DiscreteField& seed, const DiscreteField& w,
                                     const std::vector<Eigen::VectorXd>& zeta,
                                     const SolveConfig& cfg);

struct KernelSplit {
  double kernel_norm = 0.0;
  double orthogonal_norm = 0.0;
  double gram_offdiag_ratio = 0.0;  // max |G_ij| / sqrt(G_ii G_jj), i != j
  Eigen::VectorXd coefficients;
};

/// Lambda-orthogonal split of phi onto span{zeta} by an exact Gram solve.
KernelSplit kernel_split(const KirchhoffOperator& op, const Eigen::VectorXd& phi,
                         const std::vector<Eigen::VectorXd>& zeta);

/// Split of Phi = u - W for a converged result. Throws NotConverged.
KernelSplit kernel_projection_diagnostics(const BoundStateResult& result, const AnsatzSpec& ansatz);

/// Per-peak argmax of u inside the peak's cutoff support.
std::vector<PeakLocation> locate_peaks(const DiscreteField& u, const AnsatzSpec& ansatz);

/// Everything a sweep needs besides the schedule: the graph as given (shared
/// edges between peaks are split inside), the ansatz template (its lambda is
/// ignored) and the mesh template.
struct SweepSpec {
  std::shared_ptr<const MetricGraph> graph;
  AnsatzSpec ansatz;
  MeshOptions mesh;
  /// Resolution grows like sqrt(lambda / growth_reference) above this lambda;
  /// 0 keeps nodes_per_width fixed.
  double growth_reference = 25.0;
  /// Extra spacing divisor, used for the half-spacing comparison run.
  double refinement = 1.0;
};

/// The graph a sweep actually meshes: shared edges between peaks split.
std::shared_ptr<const MetricGraph> sweep_graph(const SweepSpec& spec);

/// Mesh options used at a given lambda.
MeshOptions sweep_mesh_options(const SweepSpec& spec, double lambda);

/// Solves along cfg.lambda_schedule. The first point and every point after a
/// failure are seeded with W_lambda; the others with W_lambda plus the previous
/// correction, rescaled by (lambda_new/lambda_old)^{1/2mu} and resampled.
std::vector<BoundStateResult> continuation_sweep(const SweepSpec& spec, const SolveConfig& cfg);

}  // namespace qgnls
