#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "tdbem/assembly.hpp"
#include "tdbem/solver.hpp"

namespace tdbem {

enum class CoefficientPolicy { max, pythagorean, h_only, dt_only };

CoefficientPolicy parse_coefficient_policy(std::string_view name);
std::string_view to_string(CoefficientPolicy policy);

struct IndicatorConfig {
  CoefficientPolicy policy = CoefficientPolicy::max;
  double sobolev_s = 0.5;
};

void validate(const IndicatorConfig& cfg);

// Box coefficient C(i, j) of the indicator for time step dt and element length h.
double box_coefficient(CoefficientPolicy policy, double dt, double h);

struct IndicatorField {
  int num_intervals = 0;
  int num_elements = 0;
  // Row-major over (interval i, element j).
  std::vector<double> eta_box;
  std::vector<double> eta_space;
  std::vector<double> eta_time;
  double total = 0.0;

  double box(int i, int j) const { return eta_box[static_cast<std::size_t>(i) * num_elements + j]; }
};

// Spatial residual nodes on [0, 1]: Gauss points clustered toward both ends.
const GaussRule& residual_space_rule(int order);

// W psi_h at the point of element k with local parameter s in (0, 1), time t in (0, T].
double eval_W_psih(const BlockSystem& sys, const Solution& sol, int k, double s, double t);

// Residual f - W psi_h on the tensor nodes of every box: time_order Gauss
// nodes per interval times inner_order residual_space_rule nodes per element.
struct ResidualSamples {
  int num_intervals = 0;
  int num_elements = 0;
  int time_nodes = 0;
  int space_nodes = 0;
  // Index ((i * time_nodes + q) * num_elements + k) * space_nodes + g.
  std::vector<double> values;

  double at(int i, int q, int k, int g) const {
    return values[((static_cast<std::size_t>(i) * time_nodes + q) * num_elements + k) * space_nodes + g];
  }
};

ResidualSamples sample_residual(const BlockSystem& sys, const Solution& sol);

// ||f - W psi_h||^2 over box (i, j).
double residual_norm_box(const ResidualSamples& r, const BlockSystem& sys, int i, int j);

// eta(i, j) = C(i, j)^(2 - 2s) ||R||^2_box with aggregates.
IndicatorField compute_indicators(const ResidualSamples& r, const BlockSystem& sys, const IndicatorConfig& cfg);
IndicatorField compute_indicators(const BlockSystem& sys, const Solution& sol, const IndicatorConfig& cfg);

// Discrete pairing of the residual with phi_j d_t nu_i (N_T x M_Gamma),
// using the residual sample quadrature.
Eigen::MatrixXd galerkin_residuals(const ResidualSamples& r, const BlockSystem& sys);

// "i j eta" per box.
void write_indicators(std::ostream& out, const IndicatorField& field);

}  // namespace tdbem
