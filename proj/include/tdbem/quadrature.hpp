#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "tdbem/geometry.hpp"

namespace tdbem {

struct QuadratureConfig {
  int outer_order = 4;
  int inner_order = 8;
  int time_order = 4;
  double cone_shrink = 1e-12;
  // Geometric layers used toward near-singular points; the innermost
  // layer has relative width 2^-grading_levels.
  int grading_levels = 16;
};

void validate(const QuadratureConfig& cfg);

// Gauss-Legendre rule mapped to [0, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached for orders up to 64.
const GaussRule& gauss_rule(int order);

// Which closed-form kernel an integral uses: the double time-integrated
// matrix kernel (curly-brace part of D) or the residual kernel D-tilde.
enum class KernelKind { matrix, residual };

double evaluate_kernel(KernelKind kind, const Vec2& x, const Vec2& y, const Vec2& nx, const Vec2& ny, double lag);

// Affine function on a segment, by its values at the two endpoints.
struct LinearShape {
  double start = 1.0;
  double end = 1.0;

  double operator()(double s) const { return start + (end - start) * s; }
};

// Arc-length moments of a kernel on a segment: m0 = int K ds, m1 = int K s ds
// with s in [0, 1] the normalized segment parameter.
struct SegmentMoments {
  double m0 = 0.0;
  double m1 = 0.0;

  double apply(const LinearShape& phi) const { return phi.start * (m0 - m1) + phi.end * m1; }
  SegmentMoments& operator+=(const SegmentMoments& o) {
    m0 += o.m0;
    m1 += o.m1;
    return *this;
  }
};

// int_seg K(x, y, lag) phi(y) ds_y for x off the segment: light-cone split,
// outside parts dropped, sine substitution at cone breakpoints, geometric
// grading toward the segment point closest to x.
SegmentMoments lightcone_moments(const Segment& seg, const Vec2& x, const Vec2& nx, double lag, KernelKind kind,
                                 const QuadratureConfig& cfg);
double integrate_lightcone(const Segment& seg, const LinearShape& phi, const Vec2& x, const Vec2& nx, double lag,
                           KernelKind kind, const QuadratureConfig& cfg);

// Hadamard finite part for x = seg.point(s_x), 0 < s_x < 1. Returns 0 for lag <= 0.
SegmentMoments finite_part_moments(const Segment& seg, double s_x, double lag, KernelKind kind,
                                   const QuadratureConfig& cfg);
double finite_part_inner(const Segment& seg, const LinearShape& phi, double s_x, double lag, KernelKind kind,
                         const QuadratureConfig& cfg);

// Building blocks shared by the outer integrals of assembly and estimation.
struct Breakpoint {
  double s;
  // Cone breakpoints get the square-root absorbing substitution.
  bool cone;
};

struct QuadPiece {
  double s0;
  double s1;
  bool sing0;
  bool sing1;
};

// Sorted pieces of [0, 1] cut at the given breakpoints. Pieces with a
// cone breakpoint at both ends are split at their midpoint. With
// cone_layers > 0 only the last 2^-cone_layers of a piece next to a cone
// breakpoint is substituted, the rest is cut into halving layers.
std::vector<QuadPiece> build_pieces(std::vector<Breakpoint> cuts, int cone_layers = 0);

// Cuts on both sides of s0 toward a (near-)singular point at normalized
// distance gap from s0: every piece is at most `ratio` times its distance
// to that point, down to a smallest piece of ratio * min_width.
void add_point_grading(std::vector<Breakpoint>& cuts, double s0, double gap, double ratio, double min_width);

// Cone crossings of the circle |center - y| = radius along a -> b, as cone
// breakpoints. Crossings beyond an end make the end a cone breakpoint when
// closer than min_width, otherwise get graded cuts toward that end (ratio 0
// disables the grading).
void add_cone_cuts(std::vector<Breakpoint>& cuts, const Vec2& a, const Vec2& b, const Vec2& center, double radius,
                   double ratio, double min_width);

// Calls f(s, w) for the nodes of a piece. A singular end is approached
// through s = s_far + (s_end - s_far) sin(u).
template <class F>
void for_each_node(const QuadPiece& piece, const GaussRule& rule, double shrink, F&& f) {
  const double len = piece.s1 - piece.s0;
  const std::size_t n = rule.nodes.size();
  if (piece.sing1 || piece.sing0) {
    const double half_pi = 0.5 * std::numbers::pi;
    const double span = len * (1.0 - shrink);
    for (std::size_t q = 0; q < n; ++q) {
      const double u = half_pi * rule.nodes[q];
      const double w = half_pi * rule.weights[q] * span * std::cos(u);
      const double s = piece.sing1 ? piece.s0 + span * std::sin(u) : piece.s1 - span * std::sin(u);
      f(s, w);
    }
    return;
  }
  for (std::size_t q = 0; q < n; ++q) f(piece.s0 + len * rule.nodes[q], len * rule.weights[q]);
}

}  // namespace tdbem
