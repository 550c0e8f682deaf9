#pragma once

#include "tdbem/mesh.hpp"

namespace tdbem {

// Spatial factor of a separable Neumann datum f(x, t) = a(x) g(t).
enum class SpaceProfile {
  constant,   // a = 1
  normal_x,   // a = first component of the element normal
  side_jump,  // a = +1 on side 1, -1 on side 2, 0 elsewhere
};

enum class TimeProfile {
  heaviside,  // g = 1 for t > 0
  sine_ramp,  // g = sin(4 pi t)^2 on [0, 1/8], then 1
  power_exp,  // g = (5t)^(-0.27) exp(-5t)
};

struct Datum {
  SpaceProfile space = SpaceProfile::constant;
  TimeProfile time = TimeProfile::heaviside;
  double scale = 1.0;

  // a(x) on element k (all profiles are elementwise constant), times scale.
  double space_factor(const SpatialMesh& mesh, int k) const;
  double time_value(double t) const;
  // (1 / (t1 - t0)) int_{t0}^{t1} g dt.
  double time_average(double t0, double t1) const;
  double value(const SpatialMesh& mesh, int k, double t) const { return space_factor(mesh, k) * time_value(t); }
};

}  // namespace tdbem
