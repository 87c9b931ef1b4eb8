#include "qgnls/functionals.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qgnls/error.hpp"
#include "qgnls/profiles.hpp"

namespace qgnls {

FunctionalReport evaluate_functionals(const KirchhoffOperator& op, double mu, const Eigen::VectorXd& u) {
  if (u.size() != op.mesh().dof_count()) {
    throw Error(ErrorCode::DimensionMismatch, "field does not live on the operator's mesh");
  }
  const double q = 2.0 * mu + 2.0;
  FunctionalReport f;
  f.mass = op.l2_inner(u, u);
  f.kinetic = u.dot(op.stiffness() * u);
  f.power = op.mass_diagonal().dot(u.cwiseAbs().array().pow(q).matrix());
  f.energy = 0.5 * f.kinetic - f.power / q;
  f.action = f.energy + 0.5 * op.lambda() * f.mass;
  f.nehari_residual = f.kinetic + op.lambda() * f.mass - f.power;
  return f;
}

FunctionalReport evaluate_functionals(const KirchhoffOperator& op, double mu, const DiscreteField& u) {
  return evaluate_functionals(op, mu, u.values);
}

namespace {

double half_line_integral(const std::function<double(double)>& f) {
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13, &error, &l1);
  if (!std::isfinite(value) || error > 1e-10 * std::max(l1, 1e-300)) {
    throw Error(ErrorCode::QuadratureNotConverged, "soliton quadrature did not converge");
  }
  return value;
}

}  // namespace

SolitonReference soliton_reference(double mu) {
  if (!(mu >= 0.5)) throw Error(ErrorCode::InvalidArgument, "soliton reference needs mu >= 1/2");
  static std::mutex lock;
  static std::map<double, SolitonReference> cache;
  {
    std::lock_guard<std::mutex> guard(lock);
    if (auto it = cache.find(mu); it != cache.end()) return it->second;
  }
  SolitonParams p;
  p.mu = mu;
  const double q = 2.0 * mu + 2.0;
  const double mass = 2.0 * half_line_integral([&](double x) {
    const double v = eval_soliton(p, x);
    return v * v;
  });
  const double kinetic = 2.0 * half_line_integral([&](double x) {
    const double v = eval_soliton_d1(p, x);
    return v * v;
  });
  const double power = 2.0 * half_line_integral([&](double x) { return std::pow(eval_soliton(p, x), q); });
  SolitonReference ref;
  ref.mass = mass;
  ref.energy = 0.5 * kinetic - power / q;
  ref.action = ref.energy + 0.5 * mass;
  if (!(ref.action > 0.0) || (mu < 2.0 && !(ref.energy < 0.0))) {
    throw Error(ErrorCode::Internal, "soliton reference has the wrong sign structure");
  }
  std::lock_guard<std::mutex> guard(lock);
  cache.emplace(mu, ref);
  return ref;
}

GroundStateGap ground_state_gap(const FunctionalReport& f, double lambda, double mu, double weight,
                                bool converged, double action_margin) {
  if (!converged) throw Error(ErrorCode::NotConverged, "ground-state comparison needs a converged solve");
  if (!(lambda > 0.0) || !(weight > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda and peak weight must be positive");
  }
  const SolitonReference ref = soliton_reference(mu);
  const double scale = std::pow(lambda, 1.0 / mu + 0.5);
  GroundStateGap g;
  g.normalized_action = f.action / scale;
  g.reference_action = ref.action;
  g.action_ratio = g.normalized_action / ref.action;
  g.action_flag = g.action_ratio > 1.0 + action_margin;
  g.mass = f.mass;
  g.reference_mass = ref.mass;
  if (mu < 2.0) {
    g.has_energy = true;
    g.normalized_energy = f.energy / scale;
    g.reference_energy = std::pow(weight, (2.0 + mu) / (2.0 - mu)) * ref.energy;
    g.energy_flag = g.normalized_energy > g.reference_energy;
  } else if (mu == 2.0) {
    g.has_mass = true;
    g.mass_flag = f.mass > ref.mass;
  } else {
    g.unconditional = true;
  }
  g.not_ground_state = g.action_flag || g.energy_flag || g.mass_flag || g.unconditional;
  return g;
}

double nehari_scaling(const KirchhoffOperator& op, double mu, const Eigen::VectorXd& u) {
  const FunctionalReport f = evaluate_functionals(op, mu, u);
  if (!(f.power > 0.0)) throw Error(ErrorCode::InvalidArgument, "Nehari scaling needs u != 0");
  return std::pow((f.kinetic + op.lambda() * f.mass) / f.power, 1.0 / (2.0 * mu));
}

double log_log_slope(const std::vector<double>& lambdas, const std::vector<double>& masses) {
  if (lambdas.size() != masses.size() || lambdas.size() < 2) {
    throw Error(ErrorCode::DimensionMismatch, "slope fit needs two or more matching samples");
  }
  const double n = static_cast<double>(lambdas.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double x = std::log(lambdas[i]);
    const double y = std::log(masses[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qgnls
