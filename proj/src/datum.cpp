#include "tdbem/datum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tdbem/quadrature.hpp"

namespace tdbem {

namespace {

constexpr double kExponent = -0.27;

double power_exp(double t) { return std::pow(5.0 * t, kExponent) * std::exp(-5.0 * t); }

// int_{t0}^{t1} (5t)^-0.27 exp(-5t) dt, graded toward the singular point 0.
double power_exp_integral(double t0, double t1) {
  const GaussRule& rule = gauss_rule(20);
  auto gauss = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) s += rule.weights[q] * power_exp(a + (b - a) * rule.nodes[q]);
    return s * (b - a);
  };
  const double len = t1 - t0;
  double total = 0.0;
  double right = t1;
  // Layers [t0 + len 2^-(k+1), t0 + len 2^-k] until the layer width drops
  // below the distance t0 to the singularity.
  int k = 0;
  for (; k < 60; ++k) {
    const double w = len * std::ldexp(1.0, -(k + 1));
    if (t0 > 0.0 && w < t0) break;
    total += gauss(t0 + w, right);
    right = t0 + w;
  }
  if (t0 > 0.0) return total + gauss(t0, right);
  // Leading terms of the expansion on [0, right].
  const double e = right;
  const double c = std::pow(5.0, kExponent);
  const double p = 1.0 + kExponent;
  return total + c * (std::pow(e, p) / p - 5.0 * std::pow(e, p + 1.0) / (p + 1.0) +
                      12.5 * std::pow(e, p + 2.0) / (p + 2.0));
}

double sine_ramp_primitive(double t) {
  const double knee = 0.125;
  if (t <= knee) return 0.5 * t - std::sin(8.0 * std::numbers::pi * t) / (16.0 * std::numbers::pi);
  return 0.5 * knee + (t - knee);
}

}  // namespace

double Datum::space_factor(const SpatialMesh& mesh, int k) const {
  switch (space) {
    case SpaceProfile::constant: return scale;
    case SpaceProfile::normal_x: return scale * mesh.normal(k).x;
    case SpaceProfile::side_jump: {
      const int s = mesh.side(k);
      return s == 1 ? scale : (s == 2 ? -scale : 0.0);
    }
  }
  return 0.0;
}

double Datum::time_value(double t) const {
  if (!(t > 0.0)) return 0.0;
  switch (time) {
    case TimeProfile::heaviside: return 1.0;
    case TimeProfile::sine_ramp: {
      if (t >= 0.125) return 1.0;
      const double s = std::sin(4.0 * std::numbers::pi * t);
      return s * s;
    }
    case TimeProfile::power_exp: return power_exp(t);
  }
  return 0.0;
}

double Datum::time_average(double t0, double t1) const {
  if (!(t1 > t0) || t0 < 0.0) throw std::invalid_argument("time_average needs 0 <= t0 < t1");
  switch (time) {
    case TimeProfile::heaviside: return 1.0;
    case TimeProfile::sine_ramp: return (sine_ramp_primitive(t1) - sine_ramp_primitive(t0)) / (t1 - t0);
    case TimeProfile::power_exp: return power_exp_integral(t0, t1) / (t1 - t0);
  }
  return 0.0;
}

}  // namespace tdbem
