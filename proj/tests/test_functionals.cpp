#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "qgnls/discrete.hpp"
#include "qgnls/error.hpp"
#include "qgnls/functionals.hpp"
#include "qgnls/graph.hpp"
#include "qgnls/profiles.hpp"

using namespace qgnls;
using Eigen::VectorXd;

namespace {

// Composite Simpson on [0, 60] of the full-line soliton integrals, doubled.
struct Oracle {
  double mass, kinetic, power;
};
Oracle soliton_oracle(double mu) {
  const int n = 600000;
  const double h = 60.0 / n;
  const double c = std::pow(mu + 1.0, 0.5 / mu);
  Oracle o{0, 0, 0};
  for (int i = 0; i <= n; ++i) {
    const double x = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double p = c * std::pow(1.0 / std::cosh(mu * x), 1.0 / mu);
    const double dp = -p * std::tanh(mu * x);
    o.mass += w * p * p;
    o.kinetic += w * dp * dp;
    o.power += w * std::pow(p, 2 * mu + 2);
  }
  o.mass *= 2 * h / 3;
  o.kinetic *= 2 * h / 3;
  o.power *= 2 * h / 3;
  return o;
}

std::shared_ptr<const Mesh> half_line_mesh(double h) {
  GraphDescription d;
  d.vertices = {"o"};
  d.edges = {{"h", "o", std::nullopt, std::nullopt}};
  d.truncation = 30.0;
  MeshOptions mo;
  mo.uniform_h = h;
  return Mesh::build(std::make_shared<const MetricGraph>(MetricGraph::build(d)), mo);
}

}  // namespace

TEST_CASE("functionals of zero") {
  const auto mesh = half_line_mesh(0.1);
  const auto op = KirchhoffOperator::assemble(mesh, 1.0);
  const auto f = evaluate_functionals(op, 1.0, VectorXd::Zero(mesh->dof_count()));
  CHECK(f.mass == 0.0);
  CHECK(f.action == 0.0);
  CHECK(f.energy == 0.0);
  CHECK(f.nehari_residual == 0.0);
}

TEST_CASE("functionals of the soliton on a long half-line") {
  // The half-line carries half of each full-line integral.
  const auto mesh = half_line_mesh(0.01);
  const auto op = KirchhoffOperator::assemble(mesh, 1.0);
  VectorXd u(mesh->dof_count());
  for (int k = 0; k < mesh->dof_count(); ++k) {
    const auto& loc = mesh->location(k);
    u[k] = eval_soliton({1.0}, mesh->edge(loc.edge).coordinate(loc.node));
  }
  const auto f = evaluate_functionals(op, 1.0, u);
  CHECK(2 * f.mass == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(2 * f.action == doctest::Approx(4.0 / 3.0).epsilon(1e-3));
  CHECK(2 * f.energy == doctest::Approx(-2.0 / 3.0).epsilon(1e-3));
  CHECK(f.action == doctest::Approx(f.energy + 0.5 * f.mass).epsilon(1e-12));
}

TEST_CASE("soliton reference against an independent Simpson oracle") {
  for (double mu : {0.5, 1.0, 1.5, 2.0, 3.0}) {
    CAPTURE(mu);
    const auto ref = soliton_reference(mu);
    const auto o = soliton_oracle(mu);
    const double energy = 0.5 * o.kinetic - o.power / (2 * mu + 2);
    CHECK(ref.mass == doctest::Approx(o.mass).epsilon(1e-9));
    CHECK(ref.energy == doctest::Approx(energy).epsilon(1e-9));
    CHECK(ref.action == doctest::Approx(energy + 0.5 * o.mass).epsilon(1e-9));
    CHECK(ref.action > 0.0);
    if (mu < 2.0) CHECK(ref.energy < 0.0);
  }
  const auto one = soliton_reference(1.0);
  CHECK(one.mass == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(one.action == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(one.energy == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("action identity and Nehari scaling") {
  const auto mesh = half_line_mesh(0.05);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ud(0.0, 2.0);
  for (double mu : {0.5, 1.0, 2.0}) {
    for (double lambda : {1.0, 30.0}) {
      const auto op = KirchhoffOperator::assemble(mesh, lambda);
      VectorXd u(mesh->dof_count());
      for (int i = 0; i < u.size(); ++i) u[i] = ud(rng);
      const auto f = evaluate_functionals(op, mu, u);
      CHECK(std::abs(f.action - (f.energy + 0.5 * lambda * f.mass)) <= 1e-12 * std::abs(f.action));
      const double t = nehari_scaling(op, mu, u);
      const auto g = evaluate_functionals(op, mu, VectorXd(t * u));
      CHECK(std::abs(g.nehari_residual) <= 1e-10 * (g.kinetic + lambda * g.mass));
    }
  }
  const auto op = KirchhoffOperator::assemble(mesh, 1.0);
  try {
    nehari_scaling(op, 1.0, VectorXd::Zero(mesh->dof_count()));
    FAIL("zero accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("ground-state comparison") {
  const auto ref = soliton_reference(1.0);
  FunctionalReport f;
  const double lambda = 400.0;
  const double scale = std::pow(lambda, 1.5);
  f.action = 1.5 * ref.action * scale;
  f.energy = 1.5 * ref.energy * scale;
  f.mass = 1.5 * ref.mass * std::sqrt(lambda);
  const auto gap = ground_state_gap(f, lambda, 1.0, 1.5, true);
  CHECK(gap.action_ratio == doctest::Approx(1.5));
  CHECK(gap.action_flag);
  CHECK(gap.has_energy);
  CHECK(gap.reference_energy == doctest::Approx(std::pow(1.5, 3.0) * ref.energy));
  CHECK(gap.not_ground_state);

  const auto ref2 = soliton_reference(2.0);
  FunctionalReport f2;
  f2.mass = 1.5 * ref2.mass;
  f2.action = 1.5 * ref2.action * lambda;
  const auto gap2 = ground_state_gap(f2, lambda, 2.0, 1.5, true);
  CHECK(gap2.has_mass);
  CHECK_FALSE(gap2.has_energy);
  CHECK(gap2.mass_flag);
  CHECK(gap2.not_ground_state);

  const auto gap3 = ground_state_gap(FunctionalReport{}, lambda, 3.0, 1.5, true);
  CHECK(gap3.unconditional);
  CHECK(gap3.not_ground_state);

  try {
    ground_state_gap(f, lambda, 1.0, 1.5, false);
    FAIL("unconverged accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotConverged);
  }
}

TEST_CASE("log-log slope") {
  std::vector<double> l{25, 50, 100, 200}, m;
  for (double x : l) m.push_back(3.0 * std::pow(x, 0.5));
  CHECK(log_log_slope(l, m) == doctest::Approx(0.5).epsilon(1e-12));
}
