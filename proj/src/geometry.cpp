#include "volray/geometry.hpp"

#include <algorithm>

#include "volray/error.hpp"

namespace volray {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::NegativeLoss: return "NegativeLoss";
    case ErrorKind::ParamNotOwned: return "ParamNotOwned";
    case ErrorKind::DegenerateSplit: return "DegenerateSplit";
    case ErrorKind::InsufficientPoints: return "InsufficientPoints";
    case ErrorKind::NoPoints: return "NoPoints";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::ProtocolMismatch: return "ProtocolMismatch";
    case ErrorKind::WeightMismatch: return "WeightMismatch";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Vec3 normalized(Vec3 a) {
  const double n = norm(a);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorKind::InvalidArgument, "cannot normalize a zero or non-finite vector");
  }
  return a * (1.0 / n);
}

bool is_finite(Vec3 a) noexcept {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

bool in_unit_range(Rgb c) noexcept {
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(c[i] >= 0.0 && c[i] <= 1.0)) return false;
  }
  return true;
}

Rgb clamp01(Rgb c) noexcept {
  return {std::clamp(c.r, 0.0, 1.0), std::clamp(c.g, 0.0, 1.0), std::clamp(c.b, 0.0, 1.0)};
}

bool Aabb::valid() const noexcept {
  return is_finite(min) && is_finite(max) && min.x < max.x && min.y < max.y && min.z < max.z;
}

bool Aabb::contains(Vec3 p) const noexcept {
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(p[a] >= min[a] && p[a] <= max[a])) return false;
  }
  return true;
}

bool Aabb::contains(const Aabb& other) const noexcept {
  return contains(other.min) && contains(other.max);
}

bool TileRegion::contains(Vec3 p) const noexcept {
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(p[a] >= box.min[a])) return false;
    if (closed_max[a] ? !(p[a] <= box.max[a]) : !(p[a] < box.max[a])) return false;
  }
  return true;
}

bool Ray::valid() const noexcept {
  return is_finite(origin) && is_finite(dir) && std::abs(norm(dir) - 1.0) <= 1e-9 &&
         t_near >= 0.0 && t_near < t_far;
}

}  // namespace volray
