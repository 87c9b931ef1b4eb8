#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qgnls/discrete.hpp"
#include "qgnls/graph.hpp"

namespace qgnls {

/// Whether the soliton is evaluated on the line or restricted to [a, inf)
/// (the half-soliton).
enum class SolitonDomain { Line, HalfLine };

struct SolitonParams {
  double mu = 1.0;
  double shift = 0.0;  // a in phi_a(x) = phi(x - a)
  SolitonDomain domain = SolitonDomain::Line;
};

/// phi(x) = (mu+1)^{1/(2mu)} sech^{1/mu}(mu x), shifted by `shift`.
double eval_soliton(const SolitonParams& p, double x);
double eval_soliton_d1(const SolitonParams& p, double x);
double eval_soliton_d2(const SolitonParams& p, double x);

/// Point on the N-star: half-line index in [0, N) and distance x >= 0 from the
/// center.
struct StarPoint {
  int edge = 0;
  double x = 0.0;
};

/// Psi_N at `pt`: phi on every half-line for shift 0, or the split family with
/// phi(x - a) on the first N/2 half-lines and phi(x + a) on the rest.
/// Throws OddNWithShift for a nonzero shift with odd N.
double eval_star_solution(int n, double mu, const StarPoint& pt, double shift = 0.0);
double eval_star_solution_d1(int n, double mu, const StarPoint& pt, double shift = 0.0);

/// Vectors e^1..e^{N-1}; e^j has ones in its first j slots, -j in slot j+1 and
/// zeros after.
struct KernelBasis {
  int n = 0;
  std::vector<std::vector<int>> e;
};
KernelBasis make_kernel_basis(int n);

/// Component e^j_i phi'(x) of Z^{(j)} at `pt`; `j` is 1-based. Throws
/// IndexOutOfRange for j outside [1, N-1].
double eval_kernel_function(const KernelBasis& basis, int j, double mu, const StarPoint& pt);

enum class CutoffKind { Cosine, Quintic };

/// 1 on [0, l], 0 on [2l, inf). Cosine: cos^2(pi(x-l)/(2l)) in between (C^1).
/// Quintic: 1 - smoothstep5((x-l)/l) in between (C^2).
double eval_cutoff(CutoffKind kind, double l, double x);
double eval_cutoff_d1(CutoffKind kind, double l, double x);

/// (mu(2mu+1)/3) * int_0^inf phi^{2mu-1} (phi')^3 dx by adaptive Gauss-Kronrod.
double compute_constant_A(double mu);

struct PeakSpec {
  VertexId vertex = 0;
  std::vector<double> b;          // kernel coefficients, length deg-1 (empty = zeros)
  double shift = 0.0;             // even-degree family parameter
  std::optional<double> radius;   // overrides the default cutoff radius
};

struct AnsatzSpec {
  std::vector<PeakSpec> peaks;
  double mu = 1.0;
  double lambda = 1.0;
  double alpha = 0.25;
  CutoffKind cutoff = CutoffKind::Cosine;
};

/// A peak with its star neighborhood and full coefficient vector.
struct ResolvedPeak {
  StarNeighborhood star;
  std::vector<double> b;
  double shift = 0.0;
};

/// Validates the spec against the graph and computes each peak's star. More
/// than one peak selects the multi-peak radius rule. Throws DimensionMismatch,
/// OddNWithShift, OverlappingPeaks or InvalidArgument.
std::vector<ResolvedPeak> resolve_peaks(const MetricGraph& g, const AnsatzSpec& spec);

/// Samples of W_lambda = sum_i chi_i (Psi_{N_i,lambda} + sum_j b_j lambda^{-alpha} Z_lambda^{(j)}).
DiscreteField assemble_ansatz(std::shared_ptr<const Mesh> mesh, const AnsatzSpec& spec);

/// Samples of chi_i Z_lambda^{(j)} for every peak i and j = 1..N_i-1, in that
/// order.
std::vector<Eigen::VectorXd> kernel_fields(const Mesh& mesh, const AnsatzSpec& spec);

}  // namespace qgnls
