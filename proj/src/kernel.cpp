#include "tdbem/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tdbem {

double kernel_D_brace(const Vec2& x, const Vec2& y, const Vec2& nx, const Vec2& ny, double lag) {
  const Vec2 d = x - y;
  const double r2 = dot(d, d);
  const double r = std::sqrt(r2);
  const double s = std::sqrt((lag - r) * (lag + r));
  const double proj = dot(d, nx) * dot(d, ny) / r2;
  const double ls = lag * s / r2;
  return proj * ls + 0.5 * dot(nx, ny) * (std::log((lag + s) / r) - ls);
}

double kernel_D(const KernelPoint& p, const TimeLag& lag) {
  const double r = p.r();
  if (!(r > 0.0)) throw ContractViolation("kernel_D evaluated at coincident points");
  if (!(lag.lag > r)) throw ContractViolation("kernel_D evaluated on or outside the light cone");
  const double pref = 1.0 / (2.0 * std::numbers::pi * lag.dt_test * lag.dt_trial);
  return pref * kernel_D_brace(p.x, p.y, p.nx, p.ny, lag.lag);
}

double kernel_Dtilde(const Vec2& x, const Vec2& y, const Vec2& nx, const Vec2& ny, double lag) {
  const Vec2 d = x - y;
  const double r2 = dot(d, d);
  const double r = std::sqrt(r2);
  if (!(r > 0.0)) throw ContractViolation("kernel_Dtilde evaluated at coincident points");
  if (lag < r) return 0.0;
  if (lag == r) throw ContractViolation("kernel_Dtilde evaluated on the light cone");
  const double s = std::sqrt((lag - r) * (lag + r));
  const double proj = dot(d, nx) * dot(d, ny) / r2;
  return ((proj - dot(nx, ny)) * s + lag * lag * proj / s) / r2;
}

double kernel_Dtilde(const KernelPoint& p, double lag) { return kernel_Dtilde(p.x, p.y, p.nx, p.ny, lag); }

std::vector<double> lightcone_breakpoints(const Vec2& a, const Vec2& b, const Vec2& center, double radius) {
  const Vec2 d = b - a;
  const double len2 = dot(d, d);
  const double len = std::sqrt(len2);
  const Vec2 ac = a - center;
  const double foot = -dot(d, ac) / len2;
  const double q = std::abs(cross(d, ac)) / len;
  std::vector<double> roots;
  if (radius < q) return roots;
  const double half = std::sqrt((radius - q) * (radius + q)) / len;
  for (double s : {foot - half, foot + half})
    if (s > 0.0 && s < 1.0) roots.push_back(s);
  if (roots.size() == 2 && roots[0] == roots[1]) roots.pop_back();
  return roots;
}

std::vector<ConePiece> lightcone_split(const Vec2& a, const Vec2& b, const Vec2& center, double radius) {
  std::vector<double> cuts{0.0};
  for (double s : lightcone_breakpoints(a, b, center, radius)) cuts.push_back(s);
  cuts.push_back(1.0);
  std::vector<ConePiece> pieces;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    const Vec2 y = a + (b - a) * mid;
    const ConeSide side = distance(center, y) < radius ? ConeSide::inside : ConeSide::outside;
    pieces.push_back({cuts[k], cuts[k + 1], side});
  }
  return pieces;
}

}  // namespace tdbem
