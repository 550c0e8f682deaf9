#include "tdbem/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "tdbem/format.hpp"
#include "tdbem/kernel.hpp"
#include "tdbem/parallel.hpp"

namespace tdbem {

namespace {

constexpr double kInvTwoPi = 0.5 / std::numbers::pi;

// Gauss rule pulled toward both element ends by the quintic map
// s = u^3 (10 - 15 u + 6 u^2), whose derivative vanishes to second order
// there; the residual has logarithmic singularities at the nodes.
GaussRule compute_space_rule(int order) {
  const GaussRule& g = gauss_rule(order);
  GaussRule r = g;
  for (std::size_t q = 0; q < g.nodes.size(); ++q) {
    const double u = g.nodes[q];
    r.nodes[q] = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    r.weights[q] = g.weights[q] * 30.0 * u * u * (1.0 - u) * (1.0 - u);
  }
  return r;
}

// Lambda_d = int D-tilde(x, y, lag) phi_d(y) ds_y for x = element k at s, all dofs d.
void residual_row(const SpatialMesh& mesh, int k, double s, double lag, const QuadratureConfig& cfg,
                  Eigen::Ref<Eigen::VectorXd> out) {
  out.setZero();
  if (!(lag > 0.0)) return;
  const Segment self = mesh.element(k);
  const Vec2 x = self.point(s);
  const Vec2& nx = mesh.normal(k);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const SegmentMoments m = e == k ? finite_part_moments(self, s, lag, KernelKind::residual, cfg)
                                    : lightcone_moments(mesh.element(e), x, nx, lag, KernelKind::residual, cfg);
    if (m.m0 == 0.0 && m.m1 == 0.0) continue;
    const auto dofs = mesh.element_dofs(e);
    if (dofs[0] >= 0) out[dofs[0]] += m.m0 - m.m1;
    if (dofs[1] >= 0) out[dofs[1]] += m.m1;
  }
}

// Coefficients of the ramps (t - t_m)_+ in psi_h: columns c^(m).
Eigen::MatrixXd ramp_coefficients(const TimeMesh& time, const Solution& sol, int dofs) {
  const int n = time.num_intervals();
  Eigen::MatrixXd c(dofs, n);
  for (int m = 0; m < n; ++m) {
    c.col(m) = sol.alpha[m] / time.step(m);
    if (m > 0) c.col(m) -= sol.alpha[m - 1] / time.step(m - 1);
  }
  return c;
}

void check_solution(const BlockSystem& sys, const Solution& sol) {
  if (sol.num_intervals() != sys.num_intervals() || (sys.num_intervals() > 0 && sol.num_dofs() != sys.num_dofs()))
    throw std::invalid_argument("solution does not match the system dimensions");
}

}  // namespace

const GaussRule& residual_space_rule(int order) {
  static const std::vector<GaussRule> rules = [] {
    std::vector<GaussRule> v(65);
    for (int n = 1; n <= 64; ++n) v[n] = compute_space_rule(n);
    return v;
  }();
  if (order < 1 || order > 64) throw std::invalid_argument("Gauss order must lie in [1, 64]");
  return rules[order];
}

CoefficientPolicy parse_coefficient_policy(std::string_view name) {
  if (name == "max") return CoefficientPolicy::max;
  if (name == "pythagorean") return CoefficientPolicy::pythagorean;
  if (name == "h_only") return CoefficientPolicy::h_only;
  if (name == "dt_only") return CoefficientPolicy::dt_only;
  throw std::invalid_argument("unknown indicator policy '" + std::string(name) + "'");
}

std::string_view to_string(CoefficientPolicy policy) {
  switch (policy) {
    case CoefficientPolicy::max: return "max";
    case CoefficientPolicy::pythagorean: return "pythagorean";
    case CoefficientPolicy::h_only: return "h_only";
    case CoefficientPolicy::dt_only: return "dt_only";
  }
  return "max";
}

void validate(const IndicatorConfig& cfg) {
  if (!(cfg.sobolev_s >= 0.0 && cfg.sobolev_s <= 0.5)) throw std::invalid_argument("sobolev_s must lie in [0, 1/2]");
}

double box_coefficient(CoefficientPolicy policy, double dt, double h) {
  switch (policy) {
    case CoefficientPolicy::max: return std::max(dt, h);
    case CoefficientPolicy::pythagorean: return std::hypot(dt, h);
    case CoefficientPolicy::h_only: return h;
    case CoefficientPolicy::dt_only: return dt;
  }
  return std::max(dt, h);
}

double eval_W_psih(const BlockSystem& sys, const Solution& sol, int k, double s, double t) {
  check_solution(sys, sol);
  const SpatialMesh& mesh = sys.space();
  if (k < 0 || k >= mesh.num_elements()) throw std::out_of_range("element index out of range");
  if (!(s > 0.0 && s < 1.0)) throw ContractViolation("evaluation point must be interior to its element");
  const TimeMesh& time = sys.time();
  if (!(t > 0.0 && t <= time.final_time() * (1.0 + 1e-14))) throw std::invalid_argument("time must lie in (0, T]");
  const Eigen::MatrixXd c = ramp_coefficients(time, sol, sys.num_dofs());
  Eigen::VectorXd row(sys.num_dofs());
  double w = 0.0;
  for (int m = 0; m < time.num_intervals(); ++m) {
    const double lag = t - time.knot(m);
    if (!(lag > 0.0)) break;
    residual_row(mesh, k, s, lag, sys.quadrature(), row);
    w += row.dot(c.col(m));
  }
  return kInvTwoPi * w;
}

ResidualSamples sample_residual(const BlockSystem& sys, const Solution& sol) {
  check_solution(sys, sol);
  const SpatialMesh& mesh = sys.space();
  const TimeMesh& time = sys.time();
  const QuadratureConfig& cfg = sys.quadrature();
  const GaussRule& trule = gauss_rule(cfg.time_order);
  const GaussRule& srule = residual_space_rule(cfg.inner_order);
  const int nt = time.num_intervals();
  const int ne = mesh.num_elements();
  const int nq = cfg.time_order;
  const int ng = cfg.inner_order;
  const int dofs = sys.num_dofs();

  ResidualSamples r;
  r.num_intervals = nt;
  r.num_elements = ne;
  r.time_nodes = nq;
  r.space_nodes = ng;
  r.values.assign(static_cast<std::size_t>(nt) * nq * ne * ng, 0.0);
  const Eigen::MatrixXd c = ramp_coefficients(time, sol, dofs);

  // All lags t_{i,q} - t_m (m <= i), shared by every spatial node; equal
  // lags from uniform stretches collapse to one kernel row.
  struct LagUse {
    double lag;
    int target;  // i * nq + q
    int m;
  };
  std::vector<LagUse> uses;
  for (int i = 0; i < nt; ++i)
    for (int q = 0; q < nq; ++q) {
      const double t = time.knot(i) + trule.nodes[q] * time.step(i);
      for (int m = 0; m <= i; ++m) uses.push_back({t - time.knot(m), i * nq + q, m});
    }
  std::stable_sort(uses.begin(), uses.end(), [](const LagUse& a, const LagUse& b) { return a.lag < b.lag; });
  const double tol = 1e-12 * time.final_time();
  std::vector<double> lags;
  std::vector<int> lag_of_use(uses.size());
  for (std::size_t u = 0; u < uses.size(); ++u) {
    if (lags.empty() || uses[u].lag - lags.back() > tol) lags.push_back(uses[u].lag);
    lag_of_use[u] = static_cast<int>(lags.size()) - 1;
  }
  // Uses grouped by target in m order keep the sums deterministic.
  std::vector<std::vector<std::pair<int, int>>> by_target(static_cast<std::size_t>(nt) * nq);
  for (std::size_t u = 0; u < uses.size(); ++u) by_target[uses[u].target].push_back({uses[u].m, lag_of_use[u]});
  for (auto& list : by_target) std::sort(list.begin(), list.end());

  if (dofs > 0) {
    parallel_for(ne * ng, [&](int node) {
      const int k = node / ng;
      const int g = node % ng;
      const double s = srule.nodes[g];
      Eigen::MatrixXd rows(dofs, static_cast<Eigen::Index>(lags.size()));
      for (std::size_t l = 0; l < lags.size(); ++l) residual_row(mesh, k, s, lags[l], cfg, rows.col(l));
      const double a = sys.datum().space_factor(mesh, k);
      for (int i = 0; i < nt; ++i)
        for (int q = 0; q < nq; ++q) {
          double w = 0.0;
          for (const auto& [m, l] : by_target[i * nq + q]) w += rows.col(l).dot(c.col(m));
          const double t = time.knot(i) + trule.nodes[q] * time.step(i);
          r.values[((static_cast<std::size_t>(i) * nq + q) * ne + k) * ng + g] =
              a * sys.datum().time_value(t) - kInvTwoPi * w;
        }
    });
  } else {
    for (int i = 0; i < nt; ++i)
      for (int q = 0; q < nq; ++q)
        for (int k = 0; k < ne; ++k) {
          const double t = time.knot(i) + trule.nodes[q] * time.step(i);
          for (int g = 0; g < ng; ++g)
            r.values[((static_cast<std::size_t>(i) * nq + q) * ne + k) * ng + g] = sys.datum().value(mesh, k, t);
        }
  }
  return r;
}

double residual_norm_box(const ResidualSamples& r, const BlockSystem& sys, int i, int j) {
  const QuadratureConfig& cfg = sys.quadrature();
  const GaussRule& trule = gauss_rule(r.time_nodes);
  const GaussRule& srule = residual_space_rule(r.space_nodes);
  if (cfg.time_order != r.time_nodes || cfg.inner_order != r.space_nodes)
    throw std::invalid_argument("residual samples do not match the quadrature configuration");
  double sum = 0.0;
  for (int q = 0; q < r.time_nodes; ++q)
    for (int g = 0; g < r.space_nodes; ++g) {
      const double v = r.at(i, q, j, g);
      sum += trule.weights[q] * srule.weights[g] * v * v;
    }
  return sum * sys.time().step(i) * sys.space().element_length(j);
}

IndicatorField compute_indicators(const ResidualSamples& r, const BlockSystem& sys, const IndicatorConfig& cfg) {
  validate(cfg);
  IndicatorField f;
  f.num_intervals = r.num_intervals;
  f.num_elements = r.num_elements;
  f.eta_box.assign(static_cast<std::size_t>(r.num_intervals) * r.num_elements, 0.0);
  f.eta_space.assign(r.num_elements, 0.0);
  f.eta_time.assign(r.num_intervals, 0.0);
  const double power = 2.0 - 2.0 * cfg.sobolev_s;
  for (int i = 0; i < r.num_intervals; ++i)
    for (int j = 0; j < r.num_elements; ++j) {
      const double coeff = box_coefficient(cfg.policy, sys.time().step(i), sys.space().element_length(j));
      const double eta = std::pow(coeff, power) * residual_norm_box(r, sys, i, j);
      f.eta_box[static_cast<std::size_t>(i) * r.num_elements + j] = eta;
      f.eta_space[j] += eta;
      f.eta_time[i] += eta;
    }
  for (double e : f.eta_box) f.total += e;
  return f;
}

IndicatorField compute_indicators(const BlockSystem& sys, const Solution& sol, const IndicatorConfig& cfg) {
  return compute_indicators(sample_residual(sys, sol), sys, cfg);
}

Eigen::MatrixXd galerkin_residuals(const ResidualSamples& r, const BlockSystem& sys) {
  const SpatialMesh& mesh = sys.space();
  const GaussRule& trule = gauss_rule(r.time_nodes);
  const GaussRule& srule = residual_space_rule(r.space_nodes);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r.num_intervals, sys.num_dofs());
  for (int i = 0; i < r.num_intervals; ++i)
    for (int k = 0; k < r.num_elements; ++k) {
      const auto dofs = mesh.element_dofs(k);
      const double h = mesh.element_length(k);
      for (int g = 0; g < r.space_nodes; ++g) {
        const double s = srule.nodes[g];
        double v = 0.0;
        for (int q = 0; q < r.time_nodes; ++q) v += trule.weights[q] * r.at(i, q, k, g);
        v *= srule.weights[g] * h;
        if (dofs[0] >= 0) out(i, dofs[0]) += (1.0 - s) * v;
        if (dofs[1] >= 0) out(i, dofs[1]) += s * v;
      }
    }
  return out;
}

void write_indicators(std::ostream& out, const IndicatorField& field) {
  for (int i = 0; i < field.num_intervals; ++i)
    for (int j = 0; j < field.num_elements; ++j) out << i << ' ' << j << ' ' << format_real(field.box(i, j)) << '\n';
}

}  // namespace tdbem
