#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qgnls/discrete.hpp"

namespace qgnls {

/// Discrete functionals; the power term uses the lumped mass on nodewise
/// |u|^{2mu+2}, so action = energy + (lambda/2) mass holds exactly.
struct FunctionalReport {
  double mass = 0.0;            // ||u||_2^2
  double kinetic = 0.0;         // ||u'||_2^2
  double power = 0.0;           // ||u||_{2mu+2}^{2mu+2}
  double action = 0.0;          // J_lambda(u)
  double energy = 0.0;          // E(u)
  double nehari_residual = 0.0; // J'_lambda(u)u = ||u||_lambda^2 - power
};

FunctionalReport evaluate_functionals(const KirchhoffOperator& op, double mu, const Eigen::VectorXd& u);
FunctionalReport evaluate_functionals(const KirchhoffOperator& op, double mu, const DiscreteField& u);

/// Full-line soliton constants at lambda = 1.
struct SolitonReference {
  double mass = 0.0;    // ||phi||^2 on R
  double action = 0.0;  // J_1(phi)
  double energy = 0.0;  // E(phi)
};

/// Adaptive Gauss-Kronrod quadrature, cached per mu (thread-safe). Checks
/// J_1(phi) > 0 and, for mu < 2, E(phi) < 0.
SolitonReference soliton_reference(double mu);

struct GroundStateGap {
  double normalized_action = 0.0;   // J_lambda(u) / lambda^{1/mu + 1/2}
  double reference_action = 0.0;    // J_1(phi)
  double action_ratio = 0.0;
  bool action_flag = false;         // ratio above 1 + margin
  bool has_energy = false;          // mu < 2
  double normalized_energy = 0.0;   // E(u) / lambda^{1/mu + 1/2}
  double reference_energy = 0.0;    // W^{(2+mu)/(2-mu)} E(phi)
  bool energy_flag = false;
  bool has_mass = false;            // mu == 2
  double mass = 0.0;
  double reference_mass = 0.0;      // ||phi||^2
  bool mass_flag = false;
  bool unconditional = false;       // mu > 2
  bool not_ground_state = false;
};

/// Compares a bound state's functionals with the soliton references.
/// `weight` is the total peak weight sum N_i/2. Throws NotConverged when
/// `converged` is false.
GroundStateGap ground_state_gap(const FunctionalReport& f, double lambda, double mu, double weight,
                                bool converged, double action_margin = 0.1);

/// t* = (||u||_lambda^2 / ||u||_{2mu+2}^{2mu+2})^{1/(2mu)}, the multiple of u on
/// the Nehari manifold. Throws InvalidArgument for u = 0.
double nehari_scaling(const KirchhoffOperator& op, double mu, const Eigen::VectorXd& u);

/// Least-squares slope of log(mass) against log(lambda).
double log_log_slope(const std::vector<double>& lambdas, const std::vector<double>& masses);

}  // namespace qgnls
