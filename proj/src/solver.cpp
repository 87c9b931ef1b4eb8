#include "qgnls/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <Eigen/SparseLU>

#include "qgnls/error.hpp"

namespace qgnls {

namespace {

double positive_power(double u, double p) { return u > 0.0 ? std::pow(u, p) : 0.0; }

void check_config(const SolveConfig& cfg) {
  if (!(cfg.newton_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "newton_tol must be positive");
  if (cfg.max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  if (!(cfg.damping > 0.0 && cfg.damping < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "damping must lie in (0,1)");
  }
  if (!(cfg.mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "mu must be positive");
}

}  // namespace

Eigen::VectorXd nonlinear_residual(const KirchhoffOperator& op, double mu, const Eigen::VectorXd& u) {
  const double p = 2.0 * mu + 1.0;
  Eigen::VectorXd f = u.unaryExpr([p](double v) { return positive_power(v, p); });
  return op.apply_shifted(u) - op.mass_diagonal().cwiseProduct(f);
}

DiscreteField nonlinear_residual(const KirchhoffOperator& op, double mu, const DiscreteField& u) {
  return {u.mesh, nonlinear_residual(op, mu, u.values)};
}

SparseMatrix jacobian(const KirchhoffOperator& op, double mu, const Eigen::VectorXd& u) {
  SparseMatrix j = op.shifted();
  const double p = 2.0 * mu;
  for (int i = 0; i < j.rows(); ++i) {
    j.coeffRef(i, i) -= op.mass_diagonal()[i] * (p + 1.0) * positive_power(u[i], p);
  }
  return j;
}

double dual_norm(const KirchhoffOperator& op, const Eigen::VectorXd& r) {
  return std::sqrt(std::max(r.dot(op.solve_shifted(r)), 0.0));
}

namespace {

struct Iterate {
  Eigen::VectorXd u;
  Eigen::VectorXd r;
  double rn = 0.0;
};

Iterate evaluate(const KirchhoffOperator& op, double mu, Eigen::VectorXd u) {
  Iterate it;
  it.r = nonlinear_residual(op, mu, u);
  it.rn = dual_norm(op, it.r);
  it.u = std::move(u);
  return it;
}

double tolerance_scale(const KirchhoffOperator& op, const Eigen::VectorXd& u) {
  return std::max(1.0, lambda_norm(op, u));
}

// Plain damped Newton; returns iterations used and leaves the final iterate in `it`.
int plain_newton(const KirchhoffOperator& op, double mu, Iterate& it, const SolveConfig& cfg,
                 bool& converged) {
  converged = false;
  Eigen::SparseLU<SparseMatrix> lu;
  bool analyzed = false;
  int used = 0;
  for (; used <= cfg.max_iters; ++used) {
    if (it.rn <= cfg.newton_tol * tolerance_scale(op, it.u)) {
      converged = true;
      return used;
    }
    if (used == cfg.max_iters) break;
    const SparseMatrix j = jacobian(op, mu, it.u);
    if (!analyzed) {
      lu.analyzePattern(j);
      analyzed = true;
    }
    lu.factorize(j);
    if (lu.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularJacobian, "Newton Jacobian is singular: " + lu.lastErrorMessage());
    }
    const Eigen::VectorXd delta = lu.solve(-it.r);
    if (!delta.allFinite()) throw Error(ErrorCode::SingularJacobian, "Newton step is not finite");

    double t = 1.0;
    Iterate trial = evaluate(op, mu, it.u + delta);
    while (trial.rn > (1.0 - cfg.armijo * t) * it.rn && t > 1e-12) {
      t *= cfg.damping;
      trial = evaluate(op, mu, it.u + t * delta);
    }
    if (trial.rn >= it.rn) break;  // line search stalled
    it = std::move(trial);
  }
  return used;
}

void finish(BoundStateResult& res, const KirchhoffOperator& op, const Iterate& it) {
  res.u.values = it.u;
  res.residual_norm = it.rn / tolerance_scale(op, it.u);
  res.min_value = it.u.size() ? it.u.minCoeff() : 0.0;
}

}  // namespace

BoundStateResult newton_solve(std::shared_ptr<const KirchhoffOperator> op, double mu,
                              const DiscreteField& u0, const SolveConfig& cfg) {
  SolveConfig c = cfg;
  c.mu = mu;
  check_config(c);
  if (u0.values.size() != op->mesh().dof_count() || !u0.values.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "initial guess must be finite and live on the operator's mesh");
  }
  BoundStateResult res;
  res.op = op;
  res.lambda = op->lambda();
  res.u = u0;
  Iterate it = evaluate(*op, mu, u0.values);
  bool converged = false;
  res.iterations = plain_newton(*op, mu, it, c, converged);
  res.converged = converged;
  finish(res, *op, it);
  if (!converged) res.message = "Newton did not reach the residual tolerance";
  return res;
}

namespace {

// Newton on the bordered system
//   F1 = R(u) - B c = 0,   F2 = B^T (u - w) - t = 0,   B = (S + lambda M) zeta,
// for fixed targets t. F2 fixes the lambda-products of u - w with the kernel
// fields, which removes the near-singular directions from the Jacobian.
class BorderedSystem {
 public:
  struct State {
    Eigen::VectorXd u, c;
    double f1n = 0.0, f2n = 0.0;
  };

  BorderedSystem(const KirchhoffOperator& op, double mu, const Eigen::VectorXd& w,
                 const std::vector<Eigen::VectorXd>& zeta)
      : op_(op), mu_(mu), w_(w), n_(static_cast<int>(w.size())), m_(static_cast<int>(zeta.size())) {
    b_.resize(n_, m_);
    norms_.resize(m_);
    for (int k = 0; k < m_; ++k) {
      if (zeta[k].size() != n_) throw Error(ErrorCode::DimensionMismatch, "kernel field has the wrong length");
      b_.col(k) = op.apply_shifted(zeta[k]);
      norms_[k] = std::max(std::sqrt(std::max(zeta[k].dot(b_.col(k)), 0.0)), 1e-300);
    }
  }

  const Eigen::MatrixXd& b() const { return b_; }
  const Eigen::VectorXd& zeta_norms() const { return norms_; }

  State evaluate(Eigen::VectorXd u, Eigen::VectorXd c, const Eigen::VectorXd& t, Eigen::VectorXd* f1,
                 Eigen::VectorXd* f2) const {
    State s;
    Eigen::VectorXd r1 = nonlinear_residual(op_, mu_, u) - b_ * c;
    Eigen::VectorXd r2 = b_.transpose() * (u - w_) - t;
    s.f1n = dual_norm(op_, r1);
    s.f2n = r2.cwiseQuotient(norms_).norm();
    if (f1) *f1 = std::move(r1);
    if (f2) *f2 = std::move(r2);
    s.u = std::move(u);
    s.c = std::move(c);
    return s;
  }

  // Block elimination through the Schur complement B^T J^{-1} B, with two
  // refinement passes on the full bordered residual; J alone factors with
  // little fill. An exactly singular J falls back to LU of the bordered matrix.
  void factor(const Eigen::VectorXd& u) {
    jac_ = jacobian(op_, mu_, u);
    if (!j_analyzed_) {
      jlu_.analyzePattern(jac_);
      j_analyzed_ = true;
    }
    jlu_.factorize(jac_);
    bordered_ = jlu_.info() != Eigen::Success;
    if (!bordered_) {
      jinv_b_ = jlu_.solve(b_);
      schur_ = Eigen::MatrixXd(b_.transpose() * jinv_b_).fullPivLu();
      bordered_ = !jinv_b_.allFinite() || !schur_.isInvertible();
    }
    if (bordered_) factor_bordered();
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x;
    if (bordered_) {
      x = lu_.solve(rhs);
    } else {
      x = eliminate(rhs);
      for (int pass = 0; pass < 2; ++pass) x += eliminate(rhs - apply(x));
    }
    if (!x.allFinite()) throw Error(ErrorCode::SingularJacobian, "bordered Newton step is not finite");
    return x;
  }

  // Damped Newton at fixed targets; returns the iterations used.
  int newton(State& s, const Eigen::VectorXd& t, const SolveConfig& cfg, double tol, bool& ok) {
    ok = false;
    Eigen::VectorXd f1, f2;
    s = evaluate(s.u, s.c, t, &f1, &f2);
    int used = 0;
    for (; used <= cfg.max_iters; ++used) {
      const double scale = tolerance_scale(op_, s.u);
      if (s.f1n <= tol * scale && s.f2n <= tol * scale) {
        ok = true;
        return used;
      }
      if (used == cfg.max_iters) break;
      factor(s.u);
      Eigen::VectorXd rhs(n_ + m_);
      rhs << -f1, -f2;
      const Eigen::VectorXd step = solve(rhs);
      const double merit = s.f1n + s.f2n;
      double tau = 1.0;
      Eigen::VectorXd g1, g2;
      State trial = evaluate(s.u + step.head(n_), s.c + step.tail(m_), t, &g1, &g2);
      while (trial.f1n + trial.f2n > (1.0 - cfg.armijo * tau) * merit && tau > 1e-12) {
        tau *= cfg.damping;
        trial = evaluate(s.u + tau * step.head(n_), s.c + tau * step.tail(m_), t, &g1, &g2);
      }
      if (trial.f1n + trial.f2n >= merit) break;
      s = std::move(trial);
      f1 = std::move(g1);
      f2 = std::move(g2);
    }
    return used;
  }

  // d(u, c)/dt at the last factored state.
  void sensitivities(Eigen::MatrixXd& du, Eigen::MatrixXd& dc) const {
    du.resize(n_, m_);
    dc.resize(m_, m_);
    for (int k = 0; k < m_; ++k) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_ + m_);
      rhs[n_ + k] = 1.0;
      const Eigen::VectorXd x = solve(rhs);
      du.col(k) = x.head(n_);
      dc.col(k) = x.tail(m_);
    }
  }

 private:
  Eigen::VectorXd eliminate(const Eigen::VectorXd& rhs) const {
    const Eigen::VectorXd x0 = jlu_.solve(rhs.head(n_));
    const Eigen::VectorXd y = schur_.solve(Eigen::VectorXd(b_.transpose() * x0 - rhs.tail(m_)));
    Eigen::VectorXd out(n_ + m_);
    out.head(n_) = x0 - jinv_b_ * y;
    out.tail(m_) = -y;
    return out;
  }

  // [[J, -B], [B^T, 0]] times x.
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(n_ + m_);
    out.head(n_) = jac_ * x.head(n_) - b_ * x.tail(m_);
    out.tail(m_) = b_.transpose() * x.head(n_);
    return out;
  }

  void factor_bordered() {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(jac_.nonZeros() + 2 * static_cast<std::size_t>(n_) * m_);
    for (int col = 0; col < jac_.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(jac_, col); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < m_; ++k) {
      for (int i = 0; i < n_; ++i) {
        if (b_(i, k) == 0.0) continue;
        trips.emplace_back(i, n_ + k, -b_(i, k));
        trips.emplace_back(n_ + k, i, b_(i, k));
      }
    }
    SparseMatrix big(n_ + m_, n_ + m_);
    big.setFromTriplets(trips.begin(), trips.end());
    big.makeCompressed();
    if (!analyzed_) {
      lu_.analyzePattern(big);
      analyzed_ = true;
    }
    lu_.factorize(big);
    if (lu_.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularJacobian, "bordered Jacobian is singular: " + lu_.lastErrorMessage());
    }
  }

  const KirchhoffOperator& op_;
  double mu_;
  const Eigen::VectorXd& w_;
  int n_, m_;
  Eigen::MatrixXd b_;
  Eigen::VectorXd norms_;
  SparseMatrix jac_;
  Eigen::SparseLU<SparseMatrix> jlu_;
  bool j_analyzed_ = false;
  Eigen::MatrixXd jinv_b_;
  Eigen::FullPivLU<Eigen::MatrixXd> schur_;
  bool bordered_ = false;
  Eigen::SparseLU<SparseMatrix> lu_;
  bool analyzed_ = false;
};

// Roots of the quadratic model c + D d + 1/2 sum_k d_k Q_k d, where Q_k is the
// derivative of D along t_k. Newton from a grid of sign patterns in the scaled
// coordinates z = d ./ w; returns the root with the smallest |z|.
std::optional<Eigen::VectorXd> nearest_model_root(const Eigen::VectorXd& c, const Eigen::MatrixXd& d,
                                                  const std::vector<Eigen::MatrixXd>& q,
                                                  const Eigen::VectorXd& w) {
  const int m = static_cast<int>(c.size());
  // Symmetrize the mixed second derivatives.
  std::vector<Eigen::MatrixXd> qs(m, Eigen::MatrixXd::Zero(m, m));
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i) qs[k].col(i) = 0.5 * (q[k].col(i) + q[i].col(k));
  double qnorm = 0.0;
  for (int k = 0; k < m; ++k) qnorm = std::max(qnorm, (qs[k] * w.asDiagonal()).norm() * w[k]);
  const double cnorm = c.norm();
  if (!(qnorm > 0.0) || !(cnorm > 0.0)) return std::nullopt;
  const double rho = std::sqrt(cnorm / qnorm);

  auto model = [&](const Eigen::VectorXd& x, Eigen::MatrixXd& jac) {
    Eigen::MatrixXd curv = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k) curv += x[k] * qs[k];
    jac = d + curv;
    return Eigen::VectorXd(c + d * x + 0.5 * curv * x);
  };

  std::vector<Eigen::VectorXd> starts;
  if (m <= 6) {
    int grid = 1;
    for (int k = 0; k < m; ++k) grid *= 3;
    for (double r : {0.5 * rho, 2.0 * rho}) {
      for (int code = 0; code < grid; ++code) {
        Eigen::VectorXd z(m);
        int cc = code;
        for (int k = 0; k < m; ++k, cc /= 3) z[k] = r * ((cc % 3) - 1 + 0.013 * (k + 1));
        starts.push_back(z);
      }
    }
  } else {
    std::mt19937 rng(7);
    std::normal_distribution<double> normal;
    for (int s = 0; s < 2000; ++s) {
      Eigen::VectorXd z(m);
      for (int k = 0; k < m; ++k) z[k] = rho * normal(rng);
      starts.push_back(z);
    }
  }

  std::optional<Eigen::VectorXd> best;
  double best_norm = std::numeric_limits<double>::infinity();
  for (const auto& z0 : starts) {
    Eigen::VectorXd x = w.cwiseProduct(z0);
    Eigen::MatrixXd jac;
    for (int iter = 0; iter < 60; ++iter) {
      const Eigen::VectorXd r = model(x, jac);
      if (r.norm() <= 1e-10 * cnorm) {
        const double zn = x.cwiseQuotient(w).norm();
        if (zn < best_norm) {
          best_norm = zn;
          best = x;
        }
        break;
      }
      const auto lu = jac.fullPivLu();
      if (!lu.isInvertible()) break;
      x -= lu.solve(r);
      if (!x.allFinite()) break;
    }
  }
  return best;
}

}  // namespace

BoundStateResult pinned_newton_solve(std::shared_ptr<const KirchhoffOperator> op, double mu,
                                     const DiscreteField& seed, const DiscreteField& w,
                                     const std::vector<Eigen::VectorXd>& zeta,
                                     const SolveConfig& cfg) {
  SolveConfig c = cfg;
  c.mu = mu;
  check_config(c);
  const int n = op->mesh().dof_count();
  if (seed.values.size() != n || w.values.size() != n || !seed.values.allFinite()) {
    throw Error(ErrorCode::DimensionMismatch, "seed and ansatz must be finite and live on the operator's mesh");
  }
  if (zeta.empty()) return newton_solve(op, mu, seed, cfg);

  BorderedSystem sys(*op, mu, w.values, zeta);
  const int m = static_cast<int>(zeta.size());
  // The inner solve leaves F1 well below the target so that R = F1 + B c is
  // controlled by c alone.
  const double inner_tol = 0.25 * c.newton_tol;

  BoundStateResult res;
  res.op = op;
  res.lambda = op->lambda();
  res.u = seed;

  Eigen::VectorXd t = sys.b().transpose() * (seed.values - w.values);
  BorderedSystem::State s;
  s.u = seed.values;
  s.c = Eigen::VectorXd::Zero(m);
  bool ok = false;
  res.pinned_iterations += sys.newton(s, t, c, inner_tol, ok);
  if (!ok) {
    Iterate it = evaluate(*op, mu, s.u);
    finish(res, *op, it);
    res.message = "bordered Newton stalled at fixed kernel coordinates";
    return res;
  }

  // Outer Newton on c(t) = 0, the reduced equation in the kernel coordinates.
  // Near t = 0 its Jacobian is close to singular (the reduced energy has a
  // degenerate critical point there), so a failed Newton step falls back to
  // the nearest root of a quadratic model of c.
  SolveConfig trial_cfg = c;
  trial_cfg.max_iters = std::min(c.max_iters, 20);
  Iterate it = evaluate(*op, mu, s.u);

  auto try_step = [&](const Eigen::MatrixXd& du, const Eigen::MatrixXd& dc, const Eigen::VectorXd& delta,
                      int tries) {
    double tau = 1.0;
    for (int k = 0; k < tries; ++k, tau *= c.damping) {
      BorderedSystem::State trial;
      trial.u = s.u + tau * du * delta;
      trial.c = s.c + tau * dc * delta;
      const Eigen::VectorXd t_trial = t + tau * delta;
      bool inner_ok = false;
      res.pinned_iterations += sys.newton(trial, t_trial, trial_cfg, inner_tol, inner_ok);
      if (!inner_ok) continue;
      Iterate trial_it = evaluate(*op, mu, trial.u);
      if (trial_it.rn < (1.0 - c.armijo * tau) * it.rn) {
        s = std::move(trial);
        t = t_trial;
        it = std::move(trial_it);
        return true;
      }
    }
    return false;
  };

  for (int outer = 0; outer <= c.max_iters; ++outer) {
    if (it.rn <= c.newton_tol * tolerance_scale(*op, it.u)) {
      res.converged = true;
      break;
    }
    if (outer == c.max_iters) break;
    ++res.reduced_iterations;
    sys.factor(s.u);
    Eigen::MatrixXd du, dc;
    sys.sensitivities(du, dc);

    const auto lu = dc.fullPivLu();
    if (lu.isInvertible() && try_step(du, dc, Eigen::VectorXd(-lu.solve(s.c)), 3)) continue;

    // Quadratic model: second derivatives of c by differencing dc/dt.
    const Eigen::VectorXd weights = sys.zeta_norms() * (1e-3 * tolerance_scale(*op, s.u));
    std::vector<Eigen::MatrixXd> second(m);
    bool model_ok = true;
    for (int k = 0; k < m && model_ok; ++k) {
      BorderedSystem::State probe;
      probe.u = s.u + weights[k] * du.col(k);
      probe.c = s.c + weights[k] * dc.col(k);
      Eigen::VectorXd t_probe = t;
      t_probe[k] += weights[k];
      bool inner_ok = false;
      res.pinned_iterations += sys.newton(probe, t_probe, trial_cfg, inner_tol, inner_ok);
      if (!inner_ok) {
        model_ok = false;
        break;
      }
      sys.factor(probe.u);
      Eigen::MatrixXd du_k, dc_k;
      sys.sensitivities(du_k, dc_k);
      second[k] = (dc_k - dc) / weights[k];
    }
    if (!model_ok) break;
    sys.factor(s.u);  // restore the factor at the current state
    const auto root = nearest_model_root(s.c, dc, second, weights);
    if (!root || !try_step(du, dc, *root, 6)) break;
  }
  res.iterations = res.pinned_iterations + res.reduced_iterations;
  finish(res, *op, it);
  if (!res.converged) res.message = "reduced kernel equation did not reach the residual tolerance";
  return res;
}

KernelSplit kernel_split(const KirchhoffOperator& op, const Eigen::VectorXd& phi,
                         const std::vector<Eigen::VectorXd>& zeta) {
  KernelSplit out;
  const int m = static_cast<int>(zeta.size());
  const double total = lambda_norm(op, phi);
  if (m == 0) {
    out.orthogonal_norm = total;
    return out;
  }
  Eigen::MatrixXd gram(m, m);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd ai = op.apply_shifted(zeta[i]);
    rhs[i] = ai.dot(phi);
    for (int j = 0; j < m; ++j) gram(i, j) = ai.dot(zeta[j]);
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) {
        out.gram_offdiag_ratio =
            std::max(out.gram_offdiag_ratio, std::abs(gram(i, j)) / std::sqrt(gram(i, i) * gram(j, j)));
      }
  auto llt = gram.llt();
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SolveFailure, "kernel Gram matrix is singular");
  out.coefficients = llt.solve(rhs);
  Eigen::VectorXd proj = Eigen::VectorXd::Zero(phi.size());
  for (int i = 0; i < m; ++i) proj += out.coefficients[i] * zeta[i];
  out.kernel_norm = lambda_norm(op, proj);
  out.orthogonal_norm = lambda_norm(op, Eigen::VectorXd(phi - proj));
  return out;
}

KernelSplit kernel_projection_diagnostics(const BoundStateResult& result, const AnsatzSpec& ansatz) {
  if (!result.converged || !result.op) {
    throw Error(ErrorCode::NotConverged, "kernel diagnostics need a converged solve");
  }
  AnsatzSpec spec = ansatz;
  spec.lambda = result.lambda;
  const DiscreteField w = assemble_ansatz(result.op->mesh_ptr(), spec);
  return kernel_split(*result.op, result.u.values - w.values, kernel_fields(result.op->mesh(), spec));
}

std::vector<PeakLocation> locate_peaks(const DiscreteField& u, const AnsatzSpec& ansatz) {
  const Mesh& mesh = *u.mesh;
  const auto peaks = resolve_peaks(mesh.graph(), ansatz);
  std::vector<PeakLocation> out;
  for (const ResolvedPeak& peak : peaks) {
    const Eigen::VectorXd dist = mesh.distances_from(peak.star.center);
    int best = -1;
    for (int i = 0; i < mesh.dof_count(); ++i) {
      if (dist[i] >= 2.0 * peak.star.radius) continue;
      if (best < 0 || u.values[i] > u.values[best]) best = i;
    }
    PeakLocation loc;
    loc.vertex = peak.star.center;
    if (best >= 0) {
      loc.distance = dist[best];
      loc.peak_value = u.values[best];
      const DofLocation& where = mesh.location(best);
      loc.cell = mesh.edge(where.edge).h;
      if (where.vertex != kNoVertex) {
        for (const Incidence& inc : mesh.graph().incidences(where.vertex)) {
          loc.cell = std::max(loc.cell, mesh.edge(inc.edge).h);
        }
      }
    }
    out.push_back(loc);
  }
  return out;
}

std::shared_ptr<const MetricGraph> sweep_graph(const SweepSpec& spec) {
  if (!spec.graph) throw Error(ErrorCode::InvalidArgument, "sweep needs a graph");
  if (spec.ansatz.peaks.size() < 2) return spec.graph;
  std::vector<VertexId> peaks;
  for (const auto& p : spec.ansatz.peaks) peaks.push_back(p.vertex);
  return std::make_shared<const MetricGraph>(spec.graph->with_midpoints(peaks));
}

MeshOptions sweep_mesh_options(const SweepSpec& spec, double lambda) {
  if (!(spec.refinement > 0.0)) throw Error(ErrorCode::InvalidArgument, "refinement must be positive");
  MeshOptions opts = spec.mesh;
  opts.lambda = lambda;
  if (spec.growth_reference > 0.0) {
    opts.nodes_per_width *= std::max(1.0, std::sqrt(lambda / spec.growth_reference));
  }
  opts.nodes_per_width *= spec.refinement;
  if (opts.uniform_h) *opts.uniform_h /= spec.refinement;
  if (opts.refine_vertices.empty()) {
    for (const auto& p : spec.ansatz.peaks) opts.refine_vertices.push_back(p.vertex);
  }
  return opts;
}

std::vector<BoundStateResult> continuation_sweep(const SweepSpec& spec, const SolveConfig& cfg) {
  check_config(cfg);
  if (cfg.lambda_schedule.empty()) throw Error(ErrorCode::InvalidArgument, "lambda schedule is empty");
  for (std::size_t i = 0; i < cfg.lambda_schedule.size(); ++i) {
    if (!(cfg.lambda_schedule[i] > 0.0) || (i > 0 && !(cfg.lambda_schedule[i] > cfg.lambda_schedule[i - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "lambda schedule must be positive and increasing");
    }
  }
  const auto graph = sweep_graph(spec);
  bool exploratory = false;
  for (const auto& p : spec.ansatz.peaks) {
    if (p.vertex >= graph->vertex_count()) throw Error(ErrorCode::UnknownVertex, "peak vertex out of range");
    const int deg = graph->degree(p.vertex);
    exploratory = exploratory || deg < 3 || deg % 2 == 0;
  }

  std::vector<BoundStateResult> out;
  out.reserve(cfg.lambda_schedule.size());  // `previous` points into it
  const BoundStateResult* previous = nullptr;
  for (double lambda : cfg.lambda_schedule) {
    const auto mesh = Mesh::build(graph, sweep_mesh_options(spec, lambda));
    auto op = std::make_shared<const KirchhoffOperator>(KirchhoffOperator::assemble(mesh, lambda));
    AnsatzSpec ans = spec.ansatz;
    ans.lambda = lambda;
    ans.mu = cfg.mu;
    const DiscreteField w = assemble_ansatz(mesh, ans);
    const auto zeta = kernel_fields(*mesh, ans);

    DiscreteField seed = w;
    if (previous) {
      DiscreteField corr{previous->u.mesh, previous->u.values - previous->ansatz.values};
      const double scale = std::pow(lambda / previous->lambda, 0.5 / cfg.mu);
      seed.values += scale * resample(corr, mesh).values;
    }

    BoundStateResult res;
    try {
      res = cfg.pin_kernel ? pinned_newton_solve(op, cfg.mu, seed, w, zeta, cfg)
                           : newton_solve(op, cfg.mu, seed, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularJacobian && e.code() != ErrorCode::SolveFailure &&
          e.code() != ErrorCode::IndefiniteOperator && e.code() != ErrorCode::NegativeForm) {
        throw;
      }
      res = BoundStateResult{};
      res.op = op;
      res.lambda = lambda;
      res.u = seed;
      res.converged = false;
      res.message = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    res.ansatz = w;
    res.exploratory = exploratory;
    const Eigen::VectorXd phi = res.u.values - w.values;
    res.correction_norm = lambda_norm(*op, phi);
    const KernelSplit split = kernel_split(*op, phi, zeta);
    res.kernel_component_norm = split.kernel_norm;
    res.orthogonal_component_norm = split.orthogonal_norm;
    res.gram_offdiag_ratio = split.gram_offdiag_ratio;
    res.peak_locations = locate_peaks(res.u, ans);
    res.min_value = res.u.values.minCoeff();
    out.push_back(std::move(res));
    previous = out.back().converged ? &out.back() : nullptr;
  }
  return out;
}

}  // namespace qgnls
