#pragma once

#include <stdexcept>
#include <vector>

#include "tdbem/geometry.hpp"

namespace tdbem {

// Raised when a kernel is evaluated outside its admissible region
// (on the light cone, at coincident points, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct KernelPoint {
  Vec2 x;
  Vec2 y;
  Vec2 nx;
  Vec2 ny;

  double r() const { return distance(x, y); }
};

struct TimeLag {
  double lag = 0.0;
  double dt_test = 1.0;
  double dt_trial = 1.0;
};

// Time-integrated kernel entering the matrix entries, including the
// prefactor 1/(2 pi dt_test dt_trial). Requires r > 0 and lag > r.
double kernel_D(const KernelPoint& p, const TimeLag& lag);

// Curly-brace part of kernel_D (no prefactor). Also used by quadrature.
double kernel_D_brace(const Vec2& x, const Vec2& y, const Vec2& nx, const Vec2& ny, double lag);

// Residual kernel f(x, y, lag) H[lag - r] / r^2. Zero inside the
// light cone's complement; lag == r exactly is a contract violation.
double kernel_Dtilde(const KernelPoint& p, double lag);
double kernel_Dtilde(const Vec2& x, const Vec2& y, const Vec2& nx, const Vec2& ny, double lag);

enum class ConeSide { inside, outside };

struct ConePiece {
  double s0;
  double s1;
  ConeSide side;
};

// Positions in [0, 1] along segment a->b where |center - y(s)| = radius.
std::vector<double> lightcone_breakpoints(const Vec2& a, const Vec2& b, const Vec2& center, double radius);

// Partition of the segment into pieces on which sign(radius - |center - y|)
// is constant.
std::vector<ConePiece> lightcone_split(const Vec2& a, const Vec2& b, const Vec2& center, double radius);

}  // namespace tdbem
