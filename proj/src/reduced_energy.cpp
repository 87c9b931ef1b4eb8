#include "qgnls/reduced_energy.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "qgnls/error.hpp"
#include "qgnls/profiles.hpp"

namespace qgnls {

namespace {

constexpr int kMaxN = 25;

void check_n(int n) {
  if (n < 2 || n > kMaxN) {
    throw Error(ErrorCode::InvalidArgument, "N must lie in [2, " + std::to_string(kMaxN) + "]");
  }
}

void check_size(int n, const Eigen::VectorXd& v) {
  if (v.size() != n - 1) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(n - 1) + " coordinates, got " + std::to_string(v.size()));
  }
}

Eigen::VectorXd sign_vector(int dim, unsigned mask) {
  Eigen::VectorXd s(dim);
  for (int k = 0; k < dim; ++k) s[k] = (mask >> k) & 1u ? -1.0 : 1.0;
  return s;
}

int det_sign(const Eigen::MatrixXd& h) {
  const double det = h.fullPivLu().determinant();
  return det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
}

}  // namespace

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

double eval_G(int n, const Eigen::VectorXd& b) {
  check_n(n);
  check_size(n, b);
  const KernelBasis basis = make_kernel_basis(n);
  double g = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int k = 0; k < n - 1; ++k) s += b[k] * basis.e[k][j];
    g += s * s * s;
  }
  return g;
}

double eval_G_bar(int n, const Eigen::VectorXd& x) {
  check_n(n);
  check_size(n, x);
  const double s = x.sum();
  return x.array().cube().sum() - s * s * s;
}

Eigen::MatrixXd change_of_variables(int n) {
  check_n(n);
  const KernelBasis basis = make_kernel_basis(n);
  Eigen::MatrixXd a(n - 1, n - 1);
  for (int j = 0; j < n - 1; ++j)
    for (int i = 0; i < n - 1; ++i) a(j, i) = basis.e[i][j];
  return a;
}

GradHess grad_hessian_G_bar_eps(int n, double eps, const Eigen::VectorXd& x) {
  check_n(n);
  check_size(n, x);
  if (eps < 0.0) throw Error(ErrorCode::InvalidArgument, "eps must be >= 0");
  const double s = x.sum();
  GradHess out;
  out.gradient = 3.0 * x.array().square() - 3.0 * s * s - eps * eps;
  out.hessian = Eigen::MatrixXd::Constant(n - 1, n - 1, -6.0 * s);
  out.hessian.diagonal() += 6.0 * x;
  return out;
}

ReducedEnergyReport enumerate_critical_points(int n, double eps) {
  check_n(n);
  if (n % 2 == 0) {
    throw Error(ErrorCode::EvenN, "even N has lines of critical points; use even_case_lines");
  }
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  const int dim = n - 1;
  const int negatives = dim / 2;
  // With sum x = 0 the gradient equation reads 3 t^2 = eps^2.
  const double t = eps / std::sqrt(3.0);
  const Eigen::MatrixXd a = change_of_variables(n);
  const auto a_lu = a.fullPivLu();

  ReducedEnergyReport report;
  report.n = n;
  report.eps = eps;
  long long degree = 0;
  for (unsigned mask = 0; mask < (1u << dim); ++mask) {
    if (std::popcount(mask) != negatives) continue;
    CriticalPoint cp;
    cp.x = t * sign_vector(dim, mask);
    const GradHess gh = grad_hessian_G_bar_eps(n, eps, cp.x);
    cp.gradient_norm = gh.gradient.norm();
    if (cp.gradient_norm >= 1e-10) {
      throw Error(ErrorCode::Internal, "closed-form critical point failed verification");
    }
    cp.hessian_sign = det_sign(gh.hessian);
    cp.b = a_lu.solve(cp.x);
    degree += cp.hessian_sign;
    report.critical_points.push_back(std::move(cp));
  }
  report.local_degree = degree;

  // Newton sweep from a grid of sign patterns in {-1,0,1}^{N-1}, two radii.
  std::vector<Eigen::VectorXd> zeros;
  const int grid = static_cast<int>(std::pow(3.0, dim));
  for (double radius : {0.6 * t, 1.7 * t}) {
    for (int code = 0; code < grid; ++code) {
      Eigen::VectorXd x(dim);
      int c = code;
      for (int k = 0; k < dim; ++k, c /= 3) x[k] = radius * ((c % 3) - 1 + 0.01 * (k + 1));
      bool ok = false;
      for (int it = 0; it < 80; ++it) {
        const GradHess gh = grad_hessian_G_bar_eps(n, eps, x);
        if (gh.gradient.norm() < 1e-13 * std::max(1.0, eps * eps)) {
          ok = true;
          break;
        }
        const auto lu = gh.hessian.fullPivLu();
        if (!lu.isInvertible()) break;
        x -= lu.solve(gh.gradient);
        if (!x.allFinite() || x.norm() > 1e6 * std::max(eps, 1.0)) break;
      }
      if (!ok) continue;
      bool fresh = true;
      for (const auto& z : zeros) fresh = fresh && (z - x).norm() > 1e-7 * eps;
      if (fresh) zeros.push_back(x);
    }
  }
  report.newton_zeros = static_cast<int>(zeros.size());
  for (const auto& z : zeros) {
    bool known = false;
    for (const auto& cp : report.critical_points) known = known || (cp.x - z).norm() <= 1e-7 * eps;
    if (!known) ++report.newton_extras;
  }
  return report;
}

std::vector<Eigen::VectorXd> even_case_lines(int n) {
  check_n(n);
  if (n % 2 == 1) throw Error(ErrorCode::OddN, "odd N has an isolated critical point; use enumerate_critical_points");
  const int dim = n - 1;
  std::vector<Eigen::VectorXd> lines;
  for (unsigned mask = 0; mask < (1u << dim); ++mask) {
    const int neg = std::popcount(mask);
    const int c = dim - 2 * neg;
    if (c * c == 1) lines.push_back(sign_vector(dim, mask));
  }
  return lines;
}

ReducedEnergyReport reduced_energy_report(int n, double eps) {
  check_n(n);
  if (n % 2 == 1) return enumerate_critical_points(n, eps);
  ReducedEnergyReport report;
  report.n = n;
  report.eps = eps;
  report.even_case_lines = even_case_lines(n);
  for (const auto& s : report.even_case_lines) {
    if (s[0] > 0.0) ++report.distinct_lines;
  }
  return report;
}

}  // namespace qgnls
