#pragma once

#include <cmath>

namespace tdbem {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::sqrt(a.x * a.x + a.y * a.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

// Straight boundary segment with its unit normal.
struct Segment {
  Vec2 a;
  Vec2 b;
  Vec2 normal;

  double length() const { return distance(a, b); }
  Vec2 point(double s) const { return a + (b - a) * s; }
  Vec2 midpoint() const { return (a + b) * 0.5; }
};

}  // namespace tdbem
