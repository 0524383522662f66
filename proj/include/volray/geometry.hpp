#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace volray {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](std::size_t axis) const noexcept {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }
  constexpr double& operator[](std::size_t axis) noexcept {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) noexcept { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) noexcept { return a * s; }
  friend constexpr bool operator==(Vec3 a, Vec3 b) noexcept = default;
};

using Point3 = Vec3;

constexpr double dot(Vec3 a, Vec3 b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) noexcept {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) noexcept { return std::sqrt(dot(a, a)); }
Vec3 normalized(Vec3 a);
bool is_finite(Vec3 a) noexcept;

/// Linear RGB triple. Field colors live in [0,1]; accumulated colors are unclamped.
struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  constexpr double operator[](std::size_t c) const noexcept { return c == 0 ? r : (c == 1 ? g : b); }

  constexpr Rgb& operator+=(Rgb o) noexcept {
    r += o.r;
    g += o.g;
    b += o.b;
    return *this;
  }
  friend constexpr Rgb operator+(Rgb a, Rgb o) noexcept { return a += o; }
  friend constexpr Rgb operator*(Rgb a, double s) noexcept { return {a.r * s, a.g * s, a.b * s}; }
  friend constexpr Rgb operator*(double s, Rgb a) noexcept { return a * s; }
  friend constexpr bool operator==(Rgb a, Rgb b) noexcept = default;
};

bool in_unit_range(Rgb c) noexcept;
Rgb clamp01(Rgb c) noexcept;

struct Aabb {
  Vec3 min;
  Vec3 max;

  bool valid() const noexcept;
  Vec3 extent() const noexcept { return max - min; }
  Vec3 center() const noexcept { return (min + max) * 0.5; }
  /// Closed containment.
  bool contains(Vec3 p) const noexcept;
  bool contains(const Aabb& other) const noexcept;
  friend bool operator==(const Aabb&, const Aabb&) noexcept = default;
};

/// A tile as seen by the sample router: half-open [min, max) on every axis,
/// except axes flagged in closed_max, where the box touches the root box.
struct TileRegion {
  Aabb box;
  std::array<bool, 3> closed_max{true, true, true};

  bool contains(Vec3 p) const noexcept;
};

struct Ray {
  Point3 origin;
  Vec3 dir;  // unit norm
  double t_near = 0.0;
  double t_far = 1.0e30;

  Point3 at(double t) const noexcept { return origin + dir * t; }
  bool valid() const noexcept;
};

}  // namespace volray
