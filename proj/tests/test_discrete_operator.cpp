#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "qgnls/discrete.hpp"
#include "qgnls/error.hpp"
#include "qgnls/graph.hpp"
#include "qgnls/profiles.hpp"

using namespace qgnls;
using Eigen::VectorXd;

namespace {

std::shared_ptr<const MetricGraph> make(const GraphDescription& d) {
  return std::make_shared<const MetricGraph>(MetricGraph::build(d));
}

std::shared_ptr<const MetricGraph> tripod() {
  GraphDescription d;
  d.vertices = {"c", "a", "b", "d"};
  d.edges = {{"e1", "c", "a", 1.0}, {"e2", "c", "b", 1.0}, {"e3", "c", "d", 1.0}};
  return make(d);
}

std::shared_ptr<const MetricGraph> half_line_star(int n, double truncation) {
  GraphDescription d;
  d.vertices = {"c"};
  for (int i = 0; i < n; ++i) d.edges.push_back({"h" + std::to_string(i), "c", std::nullopt, std::nullopt});
  d.truncation = truncation;
  return make(d);
}

std::shared_ptr<const Mesh> uniform(std::shared_ptr<const MetricGraph> g, double h) {
  MeshOptions mo;
  mo.uniform_h = h;
  return Mesh::build(g, mo);
}

VectorXd sample(const Mesh& mesh, const std::function<double(EdgeId, double)>& f) {
  VectorXd v(mesh.dof_count());
  for (int k = 0; k < mesh.dof_count(); ++k) {
    const auto& loc = mesh.location(k);
    v[k] = f(loc.edge, mesh.edge(loc.edge).coordinate(loc.node));
  }
  return v;
}

// Sum over incident edges of the outgoing derivative at v, by the one-sided
// second-order stencil (-3u0 + 4u1 - u2) / (2h).
double outgoing_flux(const DiscreteField& f, VertexId v) {
  const auto& mesh = *f.mesh;
  double flux = 0.0;
  for (const auto& inc : mesh.graph().incidences(v)) {
    const auto vals = f.edge_values(inc.edge);
    const double h = mesh.edge(inc.edge).h;
    const int n = static_cast<int>(vals.size()) - 1;
    if (inc.end == EdgeEnd::From) {
      flux += (-3 * vals[0] + 4 * vals[1] - vals[2]) / (2 * h);
    } else {
      flux += (-3 * vals[n] + 4 * vals[n - 1] - vals[n - 2]) / (2 * h);
    }
  }
  return flux;
}

}  // namespace

TEST_CASE("mesh invariants") {
  const auto g = tripod();
  MeshOptions mo;
  mo.lambda = 100.0;
  mo.refine_vertices = {g->vertex_id("c")};
  const auto mesh = Mesh::build(g, mo);
  std::vector<int> hits(mesh->dof_count(), 0);
  for (EdgeId e = 0; e < mesh->edge_count(); ++e) {
    const auto& me = mesh->edge(e);
    CHECK(me.intervals - 1 >= 3);
    CHECK(me.intervals * me.h == doctest::Approx(g->edge(e).length));
    CHECK(me.h <= 1.0 / (40.0 * 10.0) + 1e-15);
    for (int k = 1; k < me.intervals; ++k) hits[me.dof[k]]++;
  }
  for (VertexId v = 0; v < g->vertex_count(); ++v) hits[mesh->vertex_dof(v)]++;
  for (int h : hits) CHECK(h == 1);
  // vertex values are shared by every incident edge
  for (EdgeId e = 0; e < mesh->edge_count(); ++e) {
    const auto& me = mesh->edge(e);
    CHECK(me.dof.front() == mesh->vertex_dof(g->edge(e).from));
    CHECK(me.dof.back() == mesh->vertex_dof(g->edge(e).to));
  }
}

TEST_CASE("assembled matrices are symmetric and definite") {
  const auto mesh = uniform(tripod(), 0.05);
  const auto op = KirchhoffOperator::assemble(mesh, 3.0);
  const SparseMatrix s = op.stiffness();
  CHECK(SparseMatrix(s - SparseMatrix(s.transpose())).norm() == 0.0);
  CHECK((op.mass_diagonal().array() > 0.0).all());
  CHECK(op.mass_diagonal().sum() == doctest::Approx(3.0));
  CHECK(op.form(VectorXd::Ones(mesh->dof_count()), VectorXd::Ones(mesh->dof_count())) == doctest::Approx(9.0));
}

TEST_CASE("Neumann edge has a zero bottom eigenvalue with a constant eigenvector") {
  GraphDescription d;
  d.vertices = {"a", "b"};
  d.edges = {{"e", "a", "b", 1.0}};
  const auto mesh = uniform(make(d), 0.01);
  const auto op = KirchhoffOperator::assemble(mesh, 0.0);
  const auto pairs = nearest_generalized_eigenpairs(op.stiffness(), op.mass_diagonal(), 1, -0.1);
  CHECK(std::abs(pairs.values[0]) < 1e-8);
  const VectorXd v = pairs.vectors.col(0);
  CHECK((v.array() - v[0]).abs().maxCoeff() < 1e-8 * std::abs(v[0]));
}

TEST_CASE("form of linear fields matches hand integration") {
  // u = x on every edge (x from the center), v = x on e1 and -x elsewhere.
  // int u'v' = 1 - 2 = -1, int uv = 1/3 - 2/3 = -1/3.
  const auto g = tripod();
  const auto e1 = *g->find_edge("e1");
  for (double h : {0.1, 0.05}) {
    const auto mesh = uniform(g, h);
    const auto op = KirchhoffOperator::assemble(mesh, 2.0);
    const VectorXd u = sample(*mesh, [](EdgeId, double x) { return x; });
    const VectorXd v = sample(*mesh, [&](EdgeId e, double x) { return e == e1 ? x : -x; });
    const double exact = -1.0 - 2.0 / 3.0;
    CHECK(std::abs(op.form(u, v) - exact) < h * h);
  }
}

TEST_CASE("resolvent of a constant on a compact graph") {
  const auto mesh = uniform(tripod(), 0.02);
  const double lambda = 7.0;
  const auto op = std::make_shared<KirchhoffOperator>(KirchhoffOperator::assemble(mesh, lambda));
  DiscreteField g{mesh, VectorXd::Constant(mesh->dof_count(), lambda)};
  const auto v = resolvent_apply(*op, g);
  CHECK((v.values.array() - 1.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("resolvent is adjoint and symmetric") {
  const auto mesh = uniform(tripod(), 0.01);
  const auto op = KirchhoffOperator::assemble(mesh, 25.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 5; ++k) {
    VectorXd g1(mesh->dof_count()), g2(mesh->dof_count()), w(mesh->dof_count());
    for (int i = 0; i < mesh->dof_count(); ++i) {
      g1[i] = nd(rng);
      g2[i] = nd(rng);
      w[i] = nd(rng);
    }
    const auto r1 = resolvent_apply(op, DiscreteField{mesh, g1}).values;
    const auto r2 = resolvent_apply(op, DiscreteField{mesh, g2}).values;
    const double scale = std::sqrt(op.l2_inner(g1, g1) * op.l2_inner(w, w));
    CHECK(std::abs(op.form(r1, w) - op.l2_inner(g1, w)) <= 1e-10 * scale);
    CHECK(std::abs(op.l2_inner(r1, g2) - op.l2_inner(g1, r2)) <= 1e-10 * scale);
  }
}

TEST_CASE("resolvent of the profile equation recovers the soliton") {
  // A single truncated half-line: Neumann at the vertex matches phi'(0) = 0.
  double prev = 0.0;
  for (double h : {0.04, 0.02, 0.01}) {
    const auto mesh = uniform(half_line_star(1, 25.0), h);
    const auto op = KirchhoffOperator::assemble(mesh, 1.0);
    const SolitonParams p{1.0};
    const VectorXd rhs = sample(*mesh, [&](EdgeId, double x) { return -eval_soliton_d2(p, x) + eval_soliton(p, x); });
    const VectorXd exact = sample(*mesh, [&](EdgeId, double x) { return eval_soliton(p, x); });
    const auto v = resolvent_apply(op, DiscreteField{mesh, rhs});
    const double err = (v.values - exact).cwiseAbs().maxCoeff();
    CHECK(err < 0.5 * h * h);
    if (prev > 0.0) CHECK(prev / err >= 3.5);
    prev = err;
  }
}

TEST_CASE("resolvent output satisfies the Kirchhoff flux balance to second order") {
  const auto g = tripod();
  std::vector<double> flux;
  for (double h : {0.02, 0.01, 0.005}) {
    const auto mesh = uniform(g, h);
    const auto op = KirchhoffOperator::assemble(mesh, 4.0);
    // Smooth data that is not symmetric across the edges.
    const VectorXd rhs = sample(*mesh, [](EdgeId e, double x) { return std::cos((e + 1) * x) + x * x; });
    const auto v = resolvent_apply(op, DiscreteField{mesh, rhs});
    double worst = 0.0;
    for (VertexId w = 0; w < g->vertex_count(); ++w) worst = std::max(worst, std::abs(outgoing_flux(v, w)));
    CHECK(worst <= 20.0 * h * h);
    flux.push_back(worst);
  }
  CHECK(flux[0] / flux[2] >= 10.0);
}

TEST_CASE("lambda norm") {
  const auto g = tripod();
  const auto mesh = uniform(g, 0.05);
  const auto op = KirchhoffOperator::assemble(mesh, 4.0);
  CHECK(lambda_norm(op, VectorXd::Zero(mesh->dof_count())) == 0.0);
  CHECK(lambda_norm(op, VectorXd::Ones(mesh->dof_count())) == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
  const VectorXd u = sample(*mesh, [](EdgeId e, double x) { return std::sin(3 * x + e); });
  for (double c : {-3.0, 0.5, 12.0}) CHECK(lambda_norm(op, c * u) == doctest::Approx(std::abs(c) * lambda_norm(op, u)).epsilon(1e-12));
}

TEST_CASE("negative shift is reported") {
  const auto mesh = uniform(tripod(), 0.05);
  const auto op = KirchhoffOperator::assemble(mesh, -1.0);
  try {
    lambda_norm(op, VectorXd::Ones(mesh->dof_count()));
    FAIL("negative form accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NegativeForm);
  }
  try {
    op.solve_shifted(VectorXd::Ones(mesh->dof_count()));
    FAIL("indefinite solve accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndefiniteOperator);
  }
}

TEST_CASE("spectral bottom") {
  CHECK(std::abs(spectral_bottom(*uniform(tripod(), 0.02))) < 1e-8);
  // Neumann at the vertex and Dirichlet at the cut: (pi / 2L)^2.
  const double len = 3.0;
  const double exact = std::pow(std::numbers::pi / (2 * len), 2);
  const double coarse = spectral_bottom(*uniform(half_line_star(1, len), 0.01));
  const double fine = spectral_bottom(*uniform(half_line_star(1, len), 0.005));
  CHECK(fine == doctest::Approx(exact).epsilon(1e-4));
  CHECK(std::abs(coarse - fine) < 1e-4);
}

TEST_CASE("resampling reproduces piecewise-linear data") {
  const auto g = tripod();
  const auto coarse = uniform(g, 0.1);
  const auto fine = uniform(g, 0.025);
  const VectorXd lin = sample(*coarse, [](EdgeId e, double x) { return 1.0 + (e + 1) * x; });
  const auto r = resample(DiscreteField{coarse, lin}, fine);
  const VectorXd expect = sample(*fine, [](EdgeId e, double x) { return 1.0 + (e + 1) * x; });
  CHECK((r.values - expect).cwiseAbs().maxCoeff() < 1e-12);
}
