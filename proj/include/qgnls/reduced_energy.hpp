#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace qgnls {

/// G(b) = sum_{j=1}^{N} (sum_k b_k e^k_j)^3 with the e^k of make_kernel_basis.
/// Throws DimensionMismatch unless b has N-1 entries.
double eval_G(int n, const Eigen::VectorXd& b);

/// Gbar(x) = sum x_j^3 - (sum x_j)^3 on R^{N-1}.
double eval_G_bar(int n, const Eigen::VectorXd& x);

/// The (N-1)x(N-1) matrix A with A(j,i) = e^i_j, so that G(b) = Gbar(A b).
Eigen::MatrixXd change_of_variables(int n);

struct GradHess {
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Exact gradient 3x_k^2 - 3(sum x)^2 - eps^2 and Hessian of
/// Gbar_eps(x) = Gbar(x) - eps^2 sum x.
GradHess grad_hessian_G_bar_eps(int n, double eps, const Eigen::VectorXd& x);

struct CriticalPoint {
  Eigen::VectorXd x;          // changed variables
  Eigen::VectorXd b;          // original coefficients, A^{-1} x
  int hessian_sign = 0;       // sign of det Hessian
  double gradient_norm = 0.0;
};

struct ReducedEnergyReport {
  int n = 0;
  double eps = 0.0;
  std::vector<CriticalPoint> critical_points;
  /// Critical points the Newton sweep found beyond the closed-form set.
  int newton_extras = 0;
  /// Distinct zeros the Newton sweep found in total.
  int newton_zeros = 0;
  std::optional<long long> local_degree;
  /// Even N: every sign direction sigma whose line t*sigma is critical for Gbar.
  std::vector<Eigen::VectorXd> even_case_lines;
  /// Even N: lines after identifying sigma with -sigma.
  int distinct_lines = 0;
};

long long binomial(int n, int k);

/// Odd N: all critical points of Gbar_eps, sign patterns with (N-1)/2 minus
/// signs scaled to solve the gradient equation, each verified, plus a Newton
/// sweep from a sign-pattern grid looking for extras. The local degree is the
/// sum of Hessian determinant signs. Throws EvenN for even N.
ReducedEnergyReport enumerate_critical_points(int n, double eps = 0.1);

/// Even N: sign directions sigma in {-1,1}^{N-1} with (N-1-2n_neg)^2 = 1.
/// Throws OddN for odd N.
std::vector<Eigen::VectorXd> even_case_lines(int n);

/// Report for either parity: enumerate_critical_points for odd N, lines only
/// (no degree) for even N.
ReducedEnergyReport reduced_energy_report(int n, double eps = 0.1);

}  // namespace qgnls
