#include "qgnls/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "qgnls/error.hpp"

namespace qgnls {

std::shared_ptr<const Mesh> Mesh::build(std::shared_ptr<const MetricGraph> graph,
                                        const MeshOptions& options) {
  if (!graph) throw Error(ErrorCode::InvalidArgument, "mesh needs a graph");
  if (options.min_intervals < 4) {
    throw Error(ErrorCode::InvalidArgument, "every edge needs at least 3 interior nodes");
  }
  if (options.uniform_h && !(*options.uniform_h > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "uniform mesh spacing must be positive");
  }
  if (!options.uniform_h && (!(options.lambda > 0.0) || !(options.nodes_per_width > 0.0))) {
    throw Error(ErrorCode::InvalidArgument, "graded mesh needs lambda > 0 and nodes_per_width > 0");
  }

  std::shared_ptr<Mesh> mesh(new Mesh());
  mesh->graph_ = graph;
  mesh->options_ = options;
  const MetricGraph& g = *graph;

  const double h_fine =
      options.uniform_h ? *options.uniform_h : 1.0 / (options.nodes_per_width * std::sqrt(options.lambda));
  auto refined = [&](const Edge& e) {
    if (options.refine_vertices.empty()) return true;
    for (VertexId v : options.refine_vertices) {
      if (e.from == v || e.to == v) return true;
    }
    return false;
  };

  mesh->vertex_dof_.resize(g.vertex_count());
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    mesh->vertex_dof_[v] = static_cast<int>(v);
    const Incidence& inc = g.incidences(v).front();
    const int node = inc.end == EdgeEnd::From ? 0 : -1;  // patched below once n is known
    mesh->locations_.push_back({inc.edge, node, v});
  }
  int next = static_cast<int>(g.vertex_count());

  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    const Edge& e = g.edge(id);
    double target = h_fine;
    if (!options.uniform_h && !refined(e)) {
      target = std::min(e.length / options.min_intervals, options.coarse_factor * h_fine);
    }
    const int n = std::max(options.min_intervals, static_cast<int>(std::ceil(e.length / target - 1e-9)));
    MeshEdge me;
    me.edge = id;
    me.intervals = n;
    me.h = e.length / n;
    me.dof.resize(n + 1);
    me.dof[0] = mesh->vertex_dof_[e.from];
    for (int k = 1; k < n; ++k) {
      me.dof[k] = next++;
      mesh->locations_.push_back({id, k, kNoVertex});
    }
    me.dof[n] = e.is_half_line() ? -1 : mesh->vertex_dof_[e.to];
    mesh->edges_.push_back(std::move(me));
  }
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    DofLocation& loc = mesh->locations_[v];
    if (loc.node < 0) loc.node = mesh->edges_[loc.edge].intervals;
  }
  mesh->dof_count_ = next;
  return mesh;
}

double Mesh::min_spacing() const noexcept {
  double h = std::numeric_limits<double>::infinity();
  for (const auto& e : edges_) h = std::min(h, e.h);
  return h;
}

double Mesh::max_spacing() const noexcept {
  double h = 0.0;
  for (const auto& e : edges_) h = std::max(h, e.h);
  return h;
}

Eigen::VectorXd Mesh::distances_from(VertexId source) const {
  const auto dist = vertex_distances(*graph_, source);
  Eigen::VectorXd out = Eigen::VectorXd::Constant(dof_count_, std::numeric_limits<double>::infinity());
  for (const MeshEdge& me : edges_) {
    const Edge& e = graph_->edge(me.edge);
    for (int k = 0; k <= me.intervals; ++k) {
      if (me.dof[k] < 0) continue;
      const double s = me.coordinate(k);
      double d = dist[e.from] + s;
      if (!e.is_half_line()) d = std::min(d, dist[e.to] + (e.length - s));
      out[me.dof[k]] = std::min(out[me.dof[k]], d);
    }
  }
  return out;
}

DiscreteField DiscreteField::zeros(std::shared_ptr<const Mesh> mesh) {
  const int n = mesh->dof_count();
  return {std::move(mesh), Eigen::VectorXd::Zero(n)};
}

std::vector<double> DiscreteField::edge_values(EdgeId e) const {
  const MeshEdge& me = mesh->edge(e);
  std::vector<double> out(me.intervals + 1);
  for (int k = 0; k <= me.intervals; ++k) out[k] = me.dof[k] < 0 ? 0.0 : values[me.dof[k]];
  return out;
}

double DiscreteField::value_at(EdgeId e, double s) const {
  const MeshEdge& me = mesh->edge(e);
  const double t = std::clamp(s / me.h, 0.0, static_cast<double>(me.intervals));
  const int k = std::min(static_cast<int>(t), me.intervals - 1);
  const double w = t - k;
  auto at = [&](int i) { return me.dof[i] < 0 ? 0.0 : values[me.dof[i]]; };
  return (1.0 - w) * at(k) + w * at(k + 1);
}

DiscreteField resample(const DiscreteField& field, std::shared_ptr<const Mesh> target) {
  const MetricGraph& gs = field.mesh->graph();
  const MetricGraph& gt = target->graph();
  if (gs.edge_count() != gt.edge_count() || gs.vertex_count() != gt.vertex_count()) {
    throw Error(ErrorCode::DimensionMismatch, "resample needs meshes on the same graph");
  }
  DiscreteField out = DiscreteField::zeros(target);
  for (EdgeId e = 0; e < gt.edge_count(); ++e) {
    const double ls = gs.edge(e).length;
    const double lt = gt.edge(e).length;
    if (std::abs(ls - lt) > 1e-12 * std::max(1.0, lt)) {
      throw Error(ErrorCode::DimensionMismatch, "resample needs matching edge lengths");
    }
    const MeshEdge& me = target->edge(e);
    for (int k = 0; k <= me.intervals; ++k) {
      if (me.dof[k] >= 0) out.values[me.dof[k]] = field.value_at(e, me.coordinate(k));
    }
  }
  return out;
}

struct KirchhoffOperator::Factor {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  SparseMatrix matrix;
  bool definite = false;
};

KirchhoffOperator KirchhoffOperator::assemble(std::shared_ptr<const Mesh> mesh, double lambda) {
  KirchhoffOperator op;
  op.mesh_ = mesh;
  op.lambda_ = lambda;
  const int n = mesh->dof_count();
  op.mass_ = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trips;
  for (EdgeId e = 0; e < mesh->edge_count(); ++e) {
    const MeshEdge& me = mesh->edge(e);
    const double k = 1.0 / me.h;
    for (int i = 0; i < me.intervals; ++i) {
      const int a = me.dof[i];
      const int b = me.dof[i + 1];
      if (a >= 0) {
        trips.emplace_back(a, a, k);
        op.mass_[a] += 0.5 * me.h;
      }
      if (b >= 0) {
        trips.emplace_back(b, b, k);
        op.mass_[b] += 0.5 * me.h;
      }
      if (a >= 0 && b >= 0) {
        trips.emplace_back(a, b, -k);
        trips.emplace_back(b, a, -k);
      }
    }
  }
  op.stiffness_.resize(n, n);
  op.stiffness_.setFromTriplets(trips.begin(), trips.end());
  op.stiffness_.makeCompressed();
  return op;
}

SparseMatrix KirchhoffOperator::shifted() const {
  SparseMatrix a = stiffness_;
  for (int i = 0; i < a.rows(); ++i) a.coeffRef(i, i) += lambda_ * mass_[i];
  a.makeCompressed();
  return a;
}

double KirchhoffOperator::form(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  return u.dot(stiffness_ * v) + lambda_ * u.dot(mass_.cwiseProduct(v));
}

double KirchhoffOperator::l2_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  return u.dot(mass_.cwiseProduct(v));
}

Eigen::VectorXd KirchhoffOperator::apply_shifted(const Eigen::VectorXd& v) const {
  return stiffness_ * v + lambda_ * mass_.cwiseProduct(v);
}

Eigen::VectorXd KirchhoffOperator::solve_shifted(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != stiffness_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "right-hand side has the wrong length");
  }
  if (!factor_) {
    auto f = std::make_shared<Factor>();
    f->matrix = shifted();
    f->ldlt.compute(f->matrix);
    f->definite = f->ldlt.info() == Eigen::Success && f->ldlt.vectorD().minCoeff() > 0.0;
    factor_ = f;
  }
  if (!factor_->definite) {
    throw Error(ErrorCode::IndefiniteOperator,
                "shifted Kirchhoff form is not positive definite at lambda=" + std::to_string(lambda_));
  }
  Eigen::VectorXd x = factor_->ldlt.solve(rhs);
  const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
  Eigen::VectorXd r = rhs - factor_->matrix * x;
  for (int pass = 0; pass < 2 && r.norm() > 1e-10 * scale; ++pass) {
    x += factor_->ldlt.solve(r);
    r = rhs - factor_->matrix * x;
  }
  if (!x.allFinite() || r.norm() > 1e-10 * scale) {
    throw Error(ErrorCode::SolveFailure, "resolvent solve missed the 1e-10 relative residual");
  }
  return x;
}

DiscreteField resolvent_apply(const KirchhoffOperator& op, const DiscreteField& g) {
  if (g.values.size() != op.mesh().dof_count()) {
    throw Error(ErrorCode::DimensionMismatch, "field does not live on the operator's mesh");
  }
  return {op.mesh_ptr(), op.solve_shifted(op.mass_diagonal().cwiseProduct(g.values))};
}

double lambda_norm(const KirchhoffOperator& op, const Eigen::VectorXd& u) {
  const double q = op.form(u, u);
  const double scale = u.dot(op.stiffness() * u) + std::abs(op.lambda()) * op.l2_inner(u, u);
  if (q < -1e-12 * scale) {
    throw Error(ErrorCode::NegativeForm, "shifted form is negative; lambda is below the spectrum");
  }
  return std::sqrt(std::max(q, 0.0));
}

double lambda_norm(const KirchhoffOperator& op, const DiscreteField& u) {
  return lambda_norm(op, u.values);
}

EigenPairs nearest_generalized_eigenpairs(const SparseMatrix& a, const Eigen::VectorXd& m,
                                          int count, double shift, double tol, int max_iters) {
  const int n = static_cast<int>(a.rows());
  if (count < 1 || count > n) throw Error(ErrorCode::InvalidArgument, "bad eigenpair count");
  const int block = std::min(n, count + 4);

  SparseMatrix k = a;
  for (int i = 0; i < n; ++i) k.coeffRef(i, i) -= shift * m[i];
  k.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(k);
  lu.factorize(k);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::EigenSolveFailure, "shift-invert factorization failed: " + lu.lastErrorMessage());
  }

  std::mt19937 rng(20240611);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, block);
  for (int j = 0; j < block; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = normal(rng);

  Eigen::VectorXd previous = Eigen::VectorXd::Constant(count, std::numeric_limits<double>::infinity());
  Eigen::VectorXd theta;
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::MatrixXd y = lu.solve(m.asDiagonal() * x);
    // M-orthonormalize the block before the Ritz step.
    Eigen::MatrixXd gram = y.transpose() * m.asDiagonal() * y;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::EigenSolveFailure, "subspace iteration lost rank");
    }
    y = llt.matrixU().solve<Eigen::OnTheRight>(y);
    Eigen::MatrixXd reduced = y.transpose() * (a * y);
    reduced = 0.5 * (reduced + reduced.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(reduced);
    if (ritz.info() != Eigen::Success) throw Error(ErrorCode::EigenSolveFailure, "Ritz step failed");

    std::vector<int> order(block);
    for (int j = 0; j < block; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](int l, int r) {
      return std::abs(ritz.eigenvalues()[l] - shift) < std::abs(ritz.eigenvalues()[r] - shift);
    });
    Eigen::MatrixXd basis = y * ritz.eigenvectors();
    for (int j = 0; j < block; ++j) x.col(j) = basis.col(order[j]);
    theta.resize(count);
    for (int j = 0; j < count; ++j) theta[j] = ritz.eigenvalues()[order[j]];

    bool done = iter >= 2;
    for (int j = 0; j < count && done; ++j) {
      const double ref = std::abs(theta[j]) + std::abs(shift) + std::numeric_limits<double>::min();
      done = std::abs(theta[j] - previous[j]) <= tol * ref;
    }
    previous = theta;
    if (done) {
      std::vector<int> asc(count);
      for (int j = 0; j < count; ++j) asc[j] = j;
      std::sort(asc.begin(), asc.end(), [&](int l, int r) { return theta[l] < theta[r]; });
      EigenPairs out;
      out.values.resize(count);
      out.vectors.resize(n, count);
      for (int j = 0; j < count; ++j) {
        out.values[j] = theta[asc[j]];
        out.vectors.col(j) = x.col(asc[j]);
      }
      return out;
    }
  }
  throw Error(ErrorCode::EigenSolveFailure, "subspace iteration did not converge");
}

double spectral_bottom(const Mesh& mesh) {
  auto shared = std::shared_ptr<const Mesh>(std::shared_ptr<const Mesh>{}, &mesh);
  const KirchhoffOperator op = KirchhoffOperator::assemble(shared, 0.0);
  const EigenPairs pairs = nearest_generalized_eigenpairs(op.stiffness(), op.mass_diagonal(), 1, -1e-3);
  // S is positive semidefinite by construction; clip round-off below zero.
  return std::max(pairs.values[0], 0.0);
}

}  // namespace qgnls
