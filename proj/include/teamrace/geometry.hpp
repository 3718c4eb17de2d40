#pragma once
#include <cmath>

namespace teamrace {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
};

inline Vec2 operator*(double s, const Vec2& v) { return {v.x * s, v.y * s}; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline double squared_norm(const Vec2& v) { return v.x * v.x + v.y * v.y; }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

// Unit vector along heading theta.
inline Vec2 heading_dir(double theta) { return {std::cos(theta), std::sin(theta)}; }
// Unit normal pointing to the right of heading theta (track-left is negative lateral offset).
inline Vec2 right_normal(double theta) { return {std::sin(theta), -std::cos(theta)}; }

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  if (a > kPi) a -= kTwoPi;
  return a;
}

// Wrap to [0, 2*pi).
inline double wrap_angle_positive(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

struct Pose {
  Vec2 position;
  double heading = 0.0;
};

}  // namespace teamrace
