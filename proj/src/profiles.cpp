#include "qgnls/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qgnls/error.hpp"

namespace qgnls {

namespace {

double scaled_arg(const SolitonParams& p, double x) {
  if (!(p.mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "soliton needs mu > 0");
  if (p.domain == SolitonDomain::HalfLine && x < p.shift) {
    throw Error(ErrorCode::InvalidArgument, "half-soliton evaluated left of its origin");
  }
  return p.mu * (x - p.shift);
}

// sech without overflow for large arguments.
double sech(double t) {
  const double a = std::abs(t);
  return a > 700.0 ? 0.0 : 1.0 / std::cosh(a);
}

}  // namespace

double eval_soliton(const SolitonParams& p, double x) {
  const double y = scaled_arg(p, x);
  return std::pow(p.mu + 1.0, 0.5 / p.mu) * std::pow(sech(y), 1.0 / p.mu);
}

double eval_soliton_d1(const SolitonParams& p, double x) {
  return -eval_soliton(p, x) * std::tanh(scaled_arg(p, x));
}

double eval_soliton_d2(const SolitonParams& p, double x) {
  const double y = scaled_arg(p, x);
  const double phi = eval_soliton(p, x);
  const double t = std::tanh(y);
  const double s = sech(y);
  return phi * t * t - p.mu * phi * s * s;
}

namespace {

SolitonParams star_branch(int n, double mu, const StarPoint& pt, double shift) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "star needs N >= 1");
  if (pt.edge < 0 || pt.edge >= n) throw Error(ErrorCode::IndexOutOfRange, "star edge index out of range");
  if (pt.x < 0.0) throw Error(ErrorCode::InvalidArgument, "star coordinate must be >= 0");
  if (shift != 0.0 && n % 2 == 1) {
    throw Error(ErrorCode::OddNWithShift, "shifted star family exists only for even N");
  }
  SolitonParams p;
  p.mu = mu;
  p.shift = pt.edge < n / 2 ? shift : -shift;
  return p;
}

}  // namespace

double eval_star_solution(int n, double mu, const StarPoint& pt, double shift) {
  return eval_soliton(star_branch(n, mu, pt, shift), pt.x);
}

double eval_star_solution_d1(int n, double mu, const StarPoint& pt, double shift) {
  return eval_soliton_d1(star_branch(n, mu, pt, shift), pt.x);
}

KernelBasis make_kernel_basis(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "kernel basis needs N >= 1");
  KernelBasis basis;
  basis.n = n;
  for (int j = 1; j < n; ++j) {
    std::vector<int> e(n, 0);
    for (int i = 0; i < j; ++i) e[i] = 1;
    e[j] = -j;
    basis.e.push_back(std::move(e));
  }
  return basis;
}

double eval_kernel_function(const KernelBasis& basis, int j, double mu, const StarPoint& pt) {
  if (j < 1 || j > basis.n - 1) throw Error(ErrorCode::IndexOutOfRange, "kernel index out of range");
  if (pt.edge < 0 || pt.edge >= basis.n) throw Error(ErrorCode::IndexOutOfRange, "star edge index out of range");
  SolitonParams p;
  p.mu = mu;
  return basis.e[j - 1][pt.edge] * eval_soliton_d1(p, pt.x);
}

double eval_cutoff(CutoffKind kind, double l, double x) {
  if (!(l > 0.0)) throw Error(ErrorCode::InvalidArgument, "cutoff radius must be positive");
  if (x <= l) return 1.0;
  if (x >= 2.0 * l) return 0.0;
  const double t = (x - l) / l;
  if (kind == CutoffKind::Cosine) {
    const double c = std::cos(0.5 * std::numbers::pi * t);
    return c * c;
  }
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

double eval_cutoff_d1(CutoffKind kind, double l, double x) {
  if (!(l > 0.0)) throw Error(ErrorCode::InvalidArgument, "cutoff radius must be positive");
  if (x <= l || x >= 2.0 * l) return 0.0;
  const double t = (x - l) / l;
  if (kind == CutoffKind::Cosine) {
    return -0.5 * std::numbers::pi * std::sin(std::numbers::pi * t) / l;
  }
  return -30.0 * t * t * (1.0 - t) * (1.0 - t) / l;
}

double compute_constant_A(double mu) {
  if (!(mu >= 0.5)) throw Error(ErrorCode::InvalidArgument, "constant A needs mu >= 1/2");
  SolitonParams p;
  p.mu = mu;
  auto integrand = [&](double x) {
    const double phi = eval_soliton(p, x);
    const double dphi = eval_soliton_d1(p, x);
    return std::pow(phi, 2.0 * mu - 1.0) * dphi * dphi * dphi;
  };
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13, &error, &l1);
  if (!std::isfinite(value) || error > 1e-10 * std::max(l1, 1e-300)) {
    throw Error(ErrorCode::QuadratureNotConverged, "quadrature for A did not converge");
  }
  return mu * (2.0 * mu + 1.0) / 3.0 * value;
}

std::vector<ResolvedPeak> resolve_peaks(const MetricGraph& g, const AnsatzSpec& spec) {
  if (spec.peaks.empty()) throw Error(ErrorCode::InvalidArgument, "ansatz needs at least one peak");
  if (!(spec.lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "ansatz needs lambda > 0");
  if (!(spec.alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "ansatz needs alpha > 0");
  if (!(spec.mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "ansatz needs mu > 0");
  const PeakMode mode = spec.peaks.size() > 1 ? PeakMode::Multi : PeakMode::Single;

  std::set<VertexId> seen;
  std::vector<ResolvedPeak> out;
  for (const PeakSpec& ps : spec.peaks) {
    if (ps.vertex >= g.vertex_count()) throw Error(ErrorCode::UnknownVertex, "peak vertex out of range");
    if (!seen.insert(ps.vertex).second) {
      throw Error(ErrorCode::InvalidArgument, "peak vertex '" + g.vertex(ps.vertex).name + "' listed twice");
    }
    ResolvedPeak rp;
    rp.star = star_neighborhood(g, ps.vertex, mode);
    const int n = rp.star.degree;
    if (ps.shift != 0.0 && n % 2 == 1) {
      throw Error(ErrorCode::OddNWithShift,
                  "shift requested at odd-degree vertex '" + g.vertex(ps.vertex).name + "'");
    }
    if (ps.b.empty()) {
      rp.b.assign(std::max(n - 1, 0), 0.0);
    } else if (static_cast<int>(ps.b.size()) != n - 1) {
      throw Error(ErrorCode::DimensionMismatch, "peak '" + g.vertex(ps.vertex).name + "' needs " +
                                                    std::to_string(n - 1) + " kernel coefficients");
    } else {
      rp.b = ps.b;
    }
    if (ps.radius) {
      // Same bound as the single-peak rule, measured on the unsplit edges.
      double bound = std::numeric_limits<double>::infinity();
      for (const Incidence& inc : g.incidences(ps.vertex)) {
        const Edge& e = g.edge(inc.edge);
        bound = std::min(bound, (e.is_loop() ? e.nominal_length / 2.0 : e.nominal_length) / 2.0);
      }
      if (!(*ps.radius > 0.0) || *ps.radius > bound * (1.0 + 1e-12)) {
        throw Error(ErrorCode::InvalidArgument, "cutoff radius override at '" + g.vertex(ps.vertex).name +
                                                    "' must lie in (0, min|e|/2]");
      }
      rp.star.radius = *ps.radius;
    }
    rp.shift = ps.shift;
    out.push_back(std::move(rp));
  }

  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto dist = vertex_distances(g, out[i].star.center);
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      const double reach = 2.0 * out[i].star.radius + 2.0 * out[j].star.radius;
      if (dist[out[j].star.center] < reach * (1.0 - 1e-12)) {
        throw Error(ErrorCode::OverlappingPeaks,
                    "cutoff supports of peaks '" + g.vertex(out[i].star.center).name + "' and '" +
                        g.vertex(out[j].star.center).name + "' overlap");
      }
    }
  }
  for (const ResolvedPeak& rp : out) {
    for (const StarSlot& slot : rp.star.slots) {
      if (2.0 * rp.star.radius > slot.arm_length * (1.0 + 1e-12)) {
        throw Error(ErrorCode::InvalidArgument,
                    "cutoff support at '" + g.vertex(rp.star.center).name + "' leaves its incident edges");
      }
    }
  }
  return out;
}

namespace {

// Calls visit(dof, slot_index, x) for every unknown within the open support
// radius 2l of the peak, x being the distance to the peak along the edge.
template <class Visit>
void for_each_support_node(const Mesh& mesh, const ResolvedPeak& peak, Visit&& visit) {
  const double reach = 2.0 * peak.star.radius;
  for (std::size_t i = 0; i < peak.star.slots.size(); ++i) {
    const StarSlot& slot = peak.star.slots[i];
    const MeshEdge& me = mesh.edge(slot.edge);
    const double len = mesh.graph().edge(slot.edge).length;
    for (int k = 0; k <= me.intervals; ++k) {
      if (me.dof[k] < 0) continue;
      const double s = me.coordinate(k);
      const double x = slot.end == EdgeEnd::From ? s : len - s;
      if (x < reach) visit(me.dof[k], static_cast<int>(i), x);
    }
  }
}

}  // namespace

DiscreteField assemble_ansatz(std::shared_ptr<const Mesh> mesh, const AnsatzSpec& spec) {
  const auto peaks = resolve_peaks(mesh->graph(), spec);
  DiscreteField w = DiscreteField::zeros(mesh);
  const double amp = std::pow(spec.lambda, 0.5 / spec.mu);
  const double root = std::sqrt(spec.lambda);
  const double decay = std::pow(spec.lambda, -spec.alpha);
  for (const ResolvedPeak& peak : peaks) {
    const int n = peak.star.degree;
    const KernelBasis basis = make_kernel_basis(n);
    SolitonParams base;
    base.mu = spec.mu;
    for_each_support_node(*mesh, peak, [&](int dof, int slot, double x) {
      const double y = root * x;
      double value = eval_star_solution(n, spec.mu, {slot, y}, peak.shift);
      const double dphi = eval_soliton_d1(base, y);
      for (int j = 1; j < n; ++j) value += peak.b[j - 1] * decay * basis.e[j - 1][slot] * dphi;
      w.values[dof] = eval_cutoff(spec.cutoff, peak.star.radius, x) * amp * value;
    });
  }
  return w;
}

std::vector<Eigen::VectorXd> kernel_fields(const Mesh& mesh, const AnsatzSpec& spec) {
  const auto peaks = resolve_peaks(mesh.graph(), spec);
  const double amp = std::pow(spec.lambda, 0.5 / spec.mu);
  const double root = std::sqrt(spec.lambda);
  SolitonParams base;
  base.mu = spec.mu;
  std::vector<Eigen::VectorXd> out;
  for (const ResolvedPeak& peak : peaks) {
    const KernelBasis basis = make_kernel_basis(peak.star.degree);
    for (int j = 1; j < peak.star.degree; ++j) {
      Eigen::VectorXd z = Eigen::VectorXd::Zero(mesh.dof_count());
      for_each_support_node(mesh, peak, [&](int dof, int slot, double x) {
        z[dof] = eval_cutoff(spec.cutoff, peak.star.radius, x) * amp * basis.e[j - 1][slot] *
                 eval_soliton_d1(base, root * x);
      });
      out.push_back(std::move(z));
    }
  }
  return out;
}

}  // namespace qgnls
