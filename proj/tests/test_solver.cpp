#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "qgnls/discrete.hpp"
#include "qgnls/error.hpp"
#include "qgnls/functionals.hpp"
#include "qgnls/graph.hpp"
#include "qgnls/profiles.hpp"
#include "qgnls/solver.hpp"

using namespace qgnls;
using Eigen::VectorXd;

namespace {

std::shared_ptr<const MetricGraph> tripod() {
  GraphDescription d;
  d.vertices = {"c", "a", "b", "d"};
  d.edges = {{"e1", "c", "a", 1.0}, {"e2", "c", "b", 1.0}, {"e3", "c", "d", 1.0}};
  return std::make_shared<const MetricGraph>(MetricGraph::build(d));
}

std::shared_ptr<const MetricGraph> half_line(double truncation) {
  GraphDescription d;
  d.vertices = {"o"};
  d.edges = {{"h", "o", std::nullopt, std::nullopt}};
  d.truncation = truncation;
  return std::make_shared<const MetricGraph>(MetricGraph::build(d));
}

std::shared_ptr<const KirchhoffOperator> operator_on(std::shared_ptr<const Mesh> mesh, double lambda) {
  return std::make_shared<const KirchhoffOperator>(KirchhoffOperator::assemble(mesh, lambda));
}

struct TripodSetup {
  std::shared_ptr<const MetricGraph> graph = tripod();
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const KirchhoffOperator> op;
  AnsatzSpec spec;
};

TripodSetup tripod_setup(double lambda) {
  TripodSetup s;
  MeshOptions mo;
  mo.lambda = lambda;
  mo.refine_vertices = {s.graph->vertex_id("c")};
  s.mesh = Mesh::build(s.graph, mo);
  s.op = operator_on(s.mesh, lambda);
  s.spec.peaks = {PeakSpec{s.graph->vertex_id("c")}};
  s.spec.lambda = lambda;
  return s;
}

SolveConfig default_solve() {
  SolveConfig c;
  c.mu = 1.0;
  return c;
}

// One-sided second-order outgoing derivative sum at vertex v.
double outgoing_flux(const DiscreteField& f, VertexId v) {
  const auto& mesh = *f.mesh;
  double flux = 0.0;
  for (const auto& inc : mesh.graph().incidences(v)) {
    const auto vals = f.edge_values(inc.edge);
    const double h = mesh.edge(inc.edge).h;
    const int n = static_cast<int>(vals.size()) - 1;
    flux += inc.end == EdgeEnd::From ? (-3 * vals[0] + 4 * vals[1] - vals[2]) / (2 * h)
                                     : (-3 * vals[n] + 4 * vals[n - 1] - vals[n - 2]) / (2 * h);
  }
  return flux;
}

}  // namespace

TEST_CASE("residual of zero and of nonpositive fields") {
  const auto s = tripod_setup(25.0);
  const int n = s.mesh->dof_count();
  CHECK(nonlinear_residual(*s.op, 1.0, VectorXd::Zero(n)).norm() == 0.0);
  VectorXd neg(n);
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> ud(-2.0, 0.0);
  for (int i = 0; i < n; ++i) neg[i] = ud(rng);
  CHECK((nonlinear_residual(*s.op, 1.0, neg) - s.op->apply_shifted(neg)).norm() == 0.0);
}

TEST_CASE("residual of the sampled soliton is second order") {
  std::vector<double> res;
  for (double h : {0.04, 0.02}) {
    MeshOptions mo;
    mo.uniform_h = h;
    const auto mesh = Mesh::build(half_line(25.0), mo);
    const auto op = operator_on(mesh, 1.0);
    VectorXd u(mesh->dof_count());
    for (int k = 0; k < mesh->dof_count(); ++k) {
      const auto& loc = mesh->location(k);
      u[k] = eval_soliton({1.0}, mesh->edge(loc.edge).coordinate(loc.node));
    }
    res.push_back(dual_norm(*op, nonlinear_residual(*op, 1.0, u)));
  }
  CHECK(res[0] < 1e-3);
  CHECK(res[0] / res[1] >= 3.5);
}

TEST_CASE("Jacobian agrees with finite differences of the residual") {
  const auto s = tripod_setup(25.0);
  const int n = s.mesh->dof_count();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ud(0.1, 1.1);
  std::normal_distribution<double> nd;
  for (double mu : {0.5, 1.0, 2.0}) {
    VectorXd u(n), d(n);
    for (int i = 0; i < n; ++i) {
      u[i] = ud(rng);
      d[i] = nd(rng);
    }
    const VectorXd jd = jacobian(*s.op, mu, u) * d;
    const double eps = 1e-6;
    const VectorXd fd = (nonlinear_residual(*s.op, mu, VectorXd(u + eps * d)) - nonlinear_residual(*s.op, mu, VectorXd(u - eps * d))) / (2 * eps);
    CHECK((jd - fd).norm() <= 1e-5 * jd.norm());
  }
}

TEST_CASE("Newton from zero stays at the trivial solution") {
  const auto s = tripod_setup(25.0);
  const auto r = newton_solve(s.op, 1.0, DiscreteField::zeros(s.mesh), default_solve());
  CHECK(r.converged);
  CHECK(r.u.values.norm() == 0.0);
  CHECK(evaluate_functionals(*s.op, 1.0, r.u).mass == 0.0);
}

TEST_CASE("tripod bound state at lambda = 100") {
  const auto s = tripod_setup(100.0);
  const auto w = assemble_ansatz(s.mesh, s.spec);
  const auto r = newton_solve(s.op, 1.0, w, default_solve());
  REQUIRE(r.converged);
  CHECK(r.residual_norm <= 1e-10);
  CHECK(r.min_value > 0.0);
  const auto peaks = locate_peaks(r.u, s.spec);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0].within_one_cell());

  SUBCASE("restart from the converged state takes at most two steps") {
    const auto again = newton_solve(s.op, 1.0, r.u, default_solve());
    CHECK(again.converged);
    CHECK(again.iterations <= 2);
  }
  SUBCASE("edge-permutation symmetry") {
    const auto& g = *s.graph;
    const auto v1 = r.u.edge_values(*g.find_edge("e1"));
    for (const char* other : {"e2", "e3"}) {
      const auto v = r.u.edge_values(*g.find_edge(other));
      REQUIRE(v.size() == v1.size());
      double diff = 0.0;
      for (size_t k = 0; k < v.size(); ++k) diff = std::max(diff, std::abs(v[k] - v1[k]));
      CHECK(diff <= 1e-8);
    }
  }
  SUBCASE("Nehari residual vanishes") {
    const auto f = evaluate_functionals(*s.op, 1.0, r.u);
    CHECK(std::abs(f.nehari_residual) / std::pow(lambda_norm(*s.op, r.u), 2) <= 1e-8);
  }
}

TEST_CASE("converged solutions balance the flux at every vertex to second order") {
  // Fixed spacing across two lambdas would confound the comparison, so refine at fixed lambda.
  std::vector<double> flux;
  for (double npw : {20.0, 40.0}) {
    auto s = tripod_setup(25.0);
    MeshOptions mo;
    mo.lambda = 25.0;
    mo.nodes_per_width = npw;
    mo.coarse_factor = 1.0;
    mo.refine_vertices = {s.graph->vertex_id("c")};
    s.mesh = Mesh::build(s.graph, mo);
    s.op = operator_on(s.mesh, 25.0);
    const auto r = newton_solve(s.op, 1.0, assemble_ansatz(s.mesh, s.spec), default_solve());
    REQUIRE(r.converged);
    double worst = 0.0;
    for (VertexId v = 0; v < s.graph->vertex_count(); ++v) worst = std::max(worst, std::abs(outgoing_flux(r.u, v)));
    flux.push_back(worst);
  }
  CHECK(flux[0] / flux[1] >= 3.5);
}

TEST_CASE("pinned solve reaches the same state as plain Newton") {
  const auto s = tripod_setup(50.0);
  const auto w = assemble_ansatz(s.mesh, s.spec);
  const auto zeta = kernel_fields(*s.mesh, s.spec);
  REQUIRE(zeta.size() == 2);
  const auto pinned = pinned_newton_solve(s.op, 1.0, w, w, zeta, default_solve());
  const auto plain = newton_solve(s.op, 1.0, w, default_solve());
  REQUIRE(pinned.converged);
  REQUIRE(plain.converged);
  CHECK((pinned.u.values - plain.u.values).cwiseAbs().maxCoeff() <= 1e-8 * plain.u.values.cwiseAbs().maxCoeff());
}

TEST_CASE("kernel split of synthetic corrections") {
  const auto s = tripod_setup(100.0);
  const auto zeta = kernel_fields(*s.mesh, s.spec);
  const auto& op = *s.op;

  const auto in_kernel = kernel_split(op, zeta[0], zeta);
  CHECK(in_kernel.kernel_norm == doctest::Approx(lambda_norm(op, zeta[0])).epsilon(1e-10));
  CHECK(in_kernel.orthogonal_norm <= 1e-10 * lambda_norm(op, zeta[0]));

  // Gram-Schmidt a random field against the kernel directions.
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  VectorXd phi(s.mesh->dof_count());
  for (int i = 0; i < phi.size(); ++i) phi[i] = nd(rng);
  std::vector<VectorXd> basis;
  for (const auto& z : zeta) {
    VectorXd q = z;
    for (const auto& b : basis) q -= op.form(q, b) * b;
    basis.push_back(q / std::sqrt(op.form(q, q)));
  }
  for (const auto& b : basis) phi -= op.form(phi, b) * b;
  const auto orth = kernel_split(op, phi, zeta);
  CHECK(orth.kernel_norm <= 1e-10 * lambda_norm(op, phi));
  CHECK(orth.orthogonal_norm == doctest::Approx(lambda_norm(op, phi)).epsilon(1e-10));

  CHECK(in_kernel.gram_offdiag_ratio <= 0.05);
}

TEST_CASE("kernel projection needs a converged result") {
  const auto s = tripod_setup(25.0);
  BoundStateResult r;
  r.u = DiscreteField::zeros(s.mesh);
  r.op = s.op;
  r.converged = false;
  try {
    kernel_projection_diagnostics(r, s.spec);
    FAIL("unconverged accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotConverged);
  }
}

TEST_CASE("continuation sweep on the tripod") {
  SweepSpec sweep;
  sweep.graph = tripod();
  sweep.ansatz.peaks = {PeakSpec{sweep.graph->vertex_id("c")}};
  SolveConfig cfg = default_solve();
  cfg.lambda_schedule = {25, 50, 100, 200};
  const auto results = continuation_sweep(sweep, cfg);
  REQUIRE(results.size() == 4);
  const double norm2 = soliton_reference(1.0).mass;
  double prev_ratio = 1e300;
  for (const auto& r : results) {
    REQUIRE(r.converged);
    CHECK(r.min_value > 0.0);
    const double ratio = r.correction_norm / std::pow(r.lambda, 0.25 + 0.5);
    CHECK(ratio < prev_ratio);
    prev_ratio = ratio;
    const double mass = evaluate_functionals(*r.op, 1.0, r.u).mass;
    CHECK(mass / (std::sqrt(r.lambda) * 1.5 * norm2) == doctest::Approx(1.0).epsilon(0.05));
  }
}
