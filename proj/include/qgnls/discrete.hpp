#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "qgnls/graph.hpp"

namespace qgnls {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Uniform grid on one edge. Node k sits at arc-length k*h from the `from`
/// end. `dof[k]` is the global unknown of node k, or -1 for the Dirichlet end
/// of a truncated half-line.
struct MeshEdge {
  EdgeId edge = 0;
  int intervals = 0;
  double h = 0.0;
  std::vector<int> dof;

  double coordinate(int k) const noexcept { return k * h; }
};

/// Resolution rule: edges touching a `refine_vertices` entry get spacing
/// 1/(nodes_per_width*sqrt(lambda)); the others get min(|e|/4, coarse_factor
/// times that). Every edge has at least `min_intervals` intervals. A set
/// `uniform_h` overrides the rule on every edge.
struct MeshOptions {
  double lambda = 1.0;
  double nodes_per_width = 40.0;
  double coarse_factor = 4.0;
  int min_intervals = 4;
  std::vector<VertexId> refine_vertices;
  std::optional<double> uniform_h;
};

/// Where a global unknown lives: a representative (edge, node) pair, and the
/// graph vertex when the unknown is a vertex value.
struct DofLocation {
  EdgeId edge;
  int node;
  VertexId vertex;  // kNoVertex for interior nodes
};

class Mesh {
 public:
  static std::shared_ptr<const Mesh> build(std::shared_ptr<const MetricGraph> graph,
                                           const MeshOptions& options);

  const MetricGraph& graph() const noexcept { return *graph_; }
  std::shared_ptr<const MetricGraph> graph_ptr() const noexcept { return graph_; }
  const MeshOptions& options() const noexcept { return options_; }
  const MeshEdge& edge(EdgeId e) const { return edges_.at(e); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  int dof_count() const noexcept { return dof_count_; }
  int vertex_dof(VertexId v) const { return vertex_dof_.at(v); }
  const DofLocation& location(int dof) const { return locations_.at(dof); }
  double min_spacing() const noexcept;
  double max_spacing() const noexcept;

  /// Graph distance from `source` to every unknown.
  Eigen::VectorXd distances_from(VertexId source) const;

 private:
  Mesh() = default;

  std::shared_ptr<const MetricGraph> graph_;
  MeshOptions options_;
  std::vector<MeshEdge> edges_;
  std::vector<int> vertex_dof_;
  std::vector<DofLocation> locations_;
  int dof_count_ = 0;
};

/// Nodal values of a continuous piecewise-linear function on a mesh.
struct DiscreteField {
  std::shared_ptr<const Mesh> mesh;
  Eigen::VectorXd values;

  static DiscreteField zeros(std::shared_ptr<const Mesh> mesh);
  /// Node values along edge `e`, including both endpoints (0 at a Dirichlet end).
  std::vector<double> edge_values(EdgeId e) const;
  /// Piecewise-linear value at arc-length `s` from the `from` end of `e`.
  double value_at(EdgeId e, double s) const;
};

/// Interpolates `field` onto `target`, edge by edge. Both meshes must be built
/// on graphs with the same edge list.
DiscreteField resample(const DiscreteField& field, std::shared_ptr<const Mesh> target);

/// Kirchhoff Laplacian in weak form on a mesh: stiffness S (int u'v'), lumped
/// diagonal mass M (int uv by the trapezoidal rule), and the shift lambda.
/// Kirchhoff flux balance is the natural condition of the form.
class KirchhoffOperator {
 public:
  static KirchhoffOperator assemble(std::shared_ptr<const Mesh> mesh, double lambda);

  const Mesh& mesh() const noexcept { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const noexcept { return mesh_; }
  double lambda() const noexcept { return lambda_; }
  const SparseMatrix& stiffness() const noexcept { return stiffness_; }
  const Eigen::VectorXd& mass_diagonal() const noexcept { return mass_; }
  /// S + lambda*M.
  SparseMatrix shifted() const;

  /// u^T (S + lambda M) v.
  double form(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  /// u^T M v.
  double l2_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  Eigen::VectorXd apply_shifted(const Eigen::VectorXd& v) const;
  /// Solves (S + lambda M) x = rhs. Throws IndefiniteOperator when the shifted
  /// form is not positive definite and SolveFailure when the residual check
  /// fails.
  Eigen::VectorXd solve_shifted(const Eigen::VectorXd& rhs) const;

 private:
  struct Factor;

  std::shared_ptr<const Mesh> mesh_;
  double lambda_ = 0.0;
  SparseMatrix stiffness_;
  Eigen::VectorXd mass_;
  mutable std::shared_ptr<Factor> factor_;
};

/// v = i*_lambda(g): the weak solution of -v'' + lambda v = g with Kirchhoff
/// conditions.
DiscreteField resolvent_apply(const KirchhoffOperator& op, const DiscreteField& g);

/// sqrt(||u'||^2 + lambda ||u||^2). Throws NegativeForm if the quadratic form
/// is negative at u.
double lambda_norm(const KirchhoffOperator& op, const DiscreteField& u);
double lambda_norm(const KirchhoffOperator& op, const Eigen::VectorXd& u);

/// Generalized eigenpairs of (A, diag(m)) nearest to `shift`, by shift-invert
/// block subspace iteration with Rayleigh-Ritz. Eigenvalues come back sorted
/// ascending; eigenvectors are M-orthonormal.
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
EigenPairs nearest_generalized_eigenpairs(const SparseMatrix& a, const Eigen::VectorXd& m,
                                          int count, double shift, double tol = 1e-11,
                                          int max_iters = 500);

/// Bottom of the spectrum of the Kirchhoff Laplacian on the mesh: the smallest
/// generalized eigenvalue of (S, M).
double spectral_bottom(const Mesh& mesh);

}  // namespace qgnls
