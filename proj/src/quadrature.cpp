#include "tdbem/quadrature.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "tdbem/kernel.hpp"

namespace tdbem {

namespace {

constexpr int kMaxOrder = 64;

GaussRule compute_rule(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k < (n + 1) / 2; ++k) {
    double z = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int m = 1; m <= n; ++m) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * m - 1.0) * z * p1 - (m - 1.0) * p2) / m;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[k] = 0.5 * (1.0 - z);
    rule.nodes[n - 1 - k] = 0.5 * (1.0 + z);
    rule.weights[k] = rule.weights[n - 1 - k] = 0.5 * w;
  }
  return rule;
}

// Does the work of lightcone_moments once the contract is checked.
SegmentMoments cone_pieces_moments(const Segment& seg, const Vec2& x, const Vec2& nx, double lag, KernelKind kind,
                                   const QuadratureConfig& cfg, double foot, double dist) {
  const double len = seg.length();
  std::vector<Breakpoint> cuts;
  const double min_width = std::ldexp(1.0, -cfg.grading_levels);
  add_cone_cuts(cuts, seg.a, seg.b, x, lag, 0.5, min_width);
  // Toward the closest point all the way down to its distance. A close foot
  // point inside the segment carries a peak of width dist and gets fine
  // layers out to a tenth of the segment.
  const double gap = dist / len;
  double p = gap;
  if (gap < 0.1 && foot > 0.0 && foot < 1.0)
    for (p = 0.25 * gap; p < 0.1; p += 0.25 * (gap + p)) {
      cuts.push_back({foot - p, false});
      cuts.push_back({foot + p, false});
    }
  for (; p < 1.0; p += gap + p) {
    cuts.push_back({foot - p, false});
    cuts.push_back({foot + p, false});
  }
  std::erase_if(cuts, [](const Breakpoint& c) { return !(c.s > 0.0 && c.s < 1.0); });

  const GaussRule& rule = gauss_rule(cfg.inner_order);
  SegmentMoments m;
  for (const QuadPiece& p : build_pieces(std::move(cuts))) {
    if (!(distance(x, seg.point(0.5 * (p.s0 + p.s1))) < lag)) continue;
    for_each_node(p, rule, cfg.cone_shrink, [&](double s, double w) {
      const double k = evaluate_kernel(kind, x, seg.point(s), nx, seg.normal, lag) * w * len;
      m.m0 += k;
      m.m1 += k * s;
    });
  }
  return m;
}

// Antiderivatives of u^k log|u|.
double log_moment0(double u) { return u * std::log(std::abs(u)) - u; }
double log_moment1(double u) { return 0.5 * u * u * std::log(std::abs(u)) - 0.25 * u * u; }

}  // namespace

void validate(const QuadratureConfig& cfg) {
  for (int order : {cfg.outer_order, cfg.inner_order, cfg.time_order})
    if (order < 2 || order > kMaxOrder) throw std::invalid_argument("quadrature orders must lie in [2, 64]");
  if (!(cfg.cone_shrink >= 0.0 && cfg.cone_shrink < 1e-3))
    throw std::invalid_argument("cone_shrink must lie in [0, 1e-3)");
  if (cfg.grading_levels < 1 || cfg.grading_levels > 40)
    throw std::invalid_argument("grading_levels must lie in [1, 40]");
}

const GaussRule& gauss_rule(int order) {
  static const std::array<GaussRule, kMaxOrder + 1> rules = [] {
    std::array<GaussRule, kMaxOrder + 1> r;
    for (int n = 1; n <= kMaxOrder; ++n) r[n] = compute_rule(n);
    return r;
  }();
  if (order < 1 || order > kMaxOrder) throw std::invalid_argument("Gauss order must lie in [1, 64]");
  return rules[order];
}

double evaluate_kernel(KernelKind kind, const Vec2& x, const Vec2& y, const Vec2& nx, const Vec2& ny, double lag) {
  const Vec2 d = x - y;
  const double r2 = dot(d, d);
  if (!(lag * lag > r2)) return 0.0;
  const double s = std::sqrt((lag - std::sqrt(r2)) * (lag + std::sqrt(r2)));
  if (!(s > 0.0)) return 0.0;
  const double proj = dot(d, nx) * dot(d, ny) / r2;
  const double nn = dot(nx, ny);
  if (kind == KernelKind::residual) return ((proj - nn) * s + lag * lag * proj / s) / r2;
  const double ls = lag * s / r2;
  return proj * ls + 0.5 * nn * (std::log((lag + s) / std::sqrt(r2)) - ls);
}

std::vector<QuadPiece> build_pieces(std::vector<Breakpoint> cuts, int cone_layers) {
  cuts.push_back({0.0, false});
  cuts.push_back({1.0, false});
  std::sort(cuts.begin(), cuts.end(), [](const Breakpoint& a, const Breakpoint& b) { return a.s < b.s; });
  std::vector<Breakpoint> merged;
  for (const Breakpoint& c : cuts) {
    if (!merged.empty() && c.s - merged.back().s < 1e-14) {
      merged.back().cone = merged.back().cone || c.cone;
      continue;
    }
    merged.push_back(c);
  }
  // Endpoints that absorbed a cut keep their exact value.
  merged.front().s = 0.0;
  if (merged.size() > 1 && merged.back().s > 1.0 - 1e-14) merged.back().s = 1.0;

  std::vector<QuadPiece> pieces;
  // Piece [s0, s1] singular at one end, with optional halving layers.
  auto push_singular = [&](double s0, double s1, bool at_end) {
    double far = at_end ? s0 : s1;
    const double sing = at_end ? s1 : s0;
    for (int m = 0; m < cone_layers; ++m) {
      const double next = 0.5 * (far + sing);
      pieces.push_back(at_end ? QuadPiece{far, next, false, false} : QuadPiece{next, far, false, false});
      far = next;
    }
    pieces.push_back(at_end ? QuadPiece{far, sing, false, true} : QuadPiece{sing, far, true, false});
  };
  for (std::size_t k = 0; k + 1 < merged.size(); ++k) {
    const Breakpoint& a = merged[k];
    const Breakpoint& b = merged[k + 1];
    if (a.cone && b.cone) {
      const double mid = 0.5 * (a.s + b.s);
      push_singular(a.s, mid, false);
      push_singular(mid, b.s, true);
    } else if (a.cone || b.cone) {
      push_singular(a.s, b.s, b.cone);
    } else {
      pieces.push_back({a.s, b.s, false, false});
    }
  }
  return pieces;
}

void add_point_grading(std::vector<Breakpoint>& cuts, double s0, double gap, double ratio, double min_width) {
  for (double p = ratio * std::max(gap, min_width); p < 1.0; p += ratio * std::max(gap + p, min_width)) {
    if (s0 - p > 0.0) cuts.push_back({s0 - p, false});
    if (s0 + p < 1.0) cuts.push_back({s0 + p, false});
  }
}

void add_cone_cuts(std::vector<Breakpoint>& cuts, const Vec2& a, const Vec2& b, const Vec2& center, double radius,
                   double ratio, double min_width) {
  const Vec2 d = b - a;
  const double len2 = dot(d, d);
  const double len = std::sqrt(len2);
  const Vec2 ac = a - center;
  const double foot = -dot(d, ac) / len2;
  const double q = std::abs(cross(d, ac)) / len;
  if (radius < q) return;
  const double half = std::sqrt((radius - q) * (radius + q)) / len;
  for (double s : {foot - half, foot + half}) {
    if (s > 0.0 && s < 1.0) {
      if (s < min_width) s = 0.0;
      if (s > 1.0 - min_width) s = 1.0;
      cuts.push_back({s, true});
      continue;
    }
    const double end = s <= 0.0 ? 0.0 : 1.0;
    const double gap = std::abs(s - end);
    if (gap < min_width) {
      cuts.push_back({end, true});
    } else if (ratio > 0.0 && ratio * gap < 1.0) {
      add_point_grading(cuts, end, gap, ratio, min_width);
    }
  }
}

SegmentMoments lightcone_moments(const Segment& seg, const Vec2& x, const Vec2& nx, double lag, KernelKind kind,
                                 const QuadratureConfig& cfg) {
  if (!(lag > 0.0)) return {};
  const Vec2 d = seg.b - seg.a;
  const double len2 = dot(d, d);
  const double foot = std::clamp(dot(x - seg.a, d) / len2, 0.0, 1.0);
  const double dist = distance(x, seg.point(foot));
  if (!(dist > 1e-15 * std::sqrt(len2)))
    throw ContractViolation("integrate_lightcone called with x on the segment");
  if (!(lag > dist)) return {};
  return cone_pieces_moments(seg, x, nx, lag, kind, cfg, foot, dist);
}

double integrate_lightcone(const Segment& seg, const LinearShape& phi, const Vec2& x, const Vec2& nx, double lag,
                           KernelKind kind, const QuadratureConfig& cfg) {
  return lightcone_moments(seg, x, nx, lag, kind, cfg).apply(phi);
}

SegmentMoments finite_part_moments(const Segment& seg, double s_x, double lag, KernelKind kind,
                                   const QuadratureConfig& cfg) {
  if (!(lag > 0.0)) return {};
  if (!(s_x > 0.0 && s_x < 1.0)) throw ContractViolation("finite-part point must be interior to the segment");
  const double len = seg.length();
  const double sig_x = s_x * len;
  // A cone end on a segment end (to rounding) counts as a cone end.
  const double snap = 1e-12 * len;
  const bool cone_left = lag < sig_x + snap;
  const bool cone_right = lag < len - sig_x + snap;
  const double ul = cone_left ? -std::min(lag, sig_x) : -sig_x;
  const double ur = cone_right ? std::min(lag, len - sig_x) : len - sig_x;

  // Closed-form parts for the shapes N = 1 (value 1, slope 0) and N = s
  // (value s_x, slope 1/len), in arc length u = sigma - sigma_x.
  const double fp2 = -1.0 / ur + 1.0 / ul;
  const double pv1 = std::log(ur / -ul);
  SegmentMoments m;
  if (kind == KernelKind::residual) {
    m.m0 = -lag * fp2;
    m.m1 = -lag * (s_x * fp2 + pv1 / len);
  } else {
    const double l0 = log_moment0(ur) - log_moment0(ul);
    const double l1 = log_moment1(ur) - log_moment1(ul);
    m.m0 = -0.5 * l0 - 0.5 * lag * lag * fp2;
    m.m1 = -0.5 * (s_x * l0 + l1 / len) - 0.5 * lag * lag * (s_x * fp2 + pv1 / len);
  }

  // Smooth remainder on the two halves, parametrized from x outward. A cone
  // end on or just beyond a half's end gets the square-root substitution,
  // a nearby one graded cuts.
  const GaussRule& rule = gauss_rule(cfg.inner_order);
  const double min_width = std::ldexp(1.0, -cfg.grading_levels);
  for (const double extent : {ul, ur}) {
    const double e = std::abs(extent);
    std::vector<Breakpoint> cuts;
    const double gap = (lag - e) / e;
    if (gap < min_width) {
      cuts.push_back({1.0, true});
    } else if (0.5 * gap < 1.0) {
      add_point_grading(cuts, 1.0, gap, 0.5, min_width);
    }
    for (const QuadPiece& p : build_pieces(std::move(cuts))) {
      for_each_node(p, rule, cfg.cone_shrink, [&](double t, double w) {
        const double u = extent * t;
        const double sq = std::sqrt(std::max(0.0, (lag - u) * (lag + u)));
        const double g = kind == KernelKind::residual ? 1.0 / (lag + sq)
                                                      : 0.5 * (std::log(lag + sq) + lag / (lag + sq));
        const double s = (sig_x + u) / len;
        m.m0 += g * w * e;
        m.m1 += g * w * e * s;
      });
    }
  }
  return m;
}

double finite_part_inner(const Segment& seg, const LinearShape& phi, double s_x, double lag, KernelKind kind,
                         const QuadratureConfig& cfg) {
  return finite_part_moments(seg, s_x, lag, kind, cfg).apply(phi);
}

}  // namespace tdbem
