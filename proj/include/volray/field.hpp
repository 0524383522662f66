#pragma once

#include <array>
#include <memory>
#include <variant>
#include <vector>

#include "volray/geometry.hpp"

namespace volray {

// Analytic volumetric scenes. A Field is an immutable value; every variant
// evaluates to a finite density >= 0 and a color in [0,1]^3 at any point.

struct GaussianBlob {
  Point3 center;
  double amplitude = 0.0;  // peak density, 1/m
  double scale = 1.0;      // standard deviation, m
  Rgb color;
};

struct GaussianBlobs {
  std::vector<GaussianBlob> blobs;
};

struct ConstantBox {
  Aabb box;
  double density = 0.0;
  Rgb color;
};

enum class Interpolation { nearest, trilinear };

/// Cell-centered grid over `box`; voxel (i, j, k) lives at index i + nx*(j + ny*k).
struct VoxelGrid {
  Aabb box;
  std::array<std::size_t, 3> resolution{1, 1, 1};
  std::vector<double> densities;
  std::vector<Rgb> colors;
  Interpolation interpolation = Interpolation::trilinear;

  std::size_t voxel_count() const noexcept { return resolution[0] * resolution[1] * resolution[2]; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return i + resolution[0] * (j + resolution[1] * k);
  }
};

struct Field;

struct SumField {
  std::vector<Field> children;
};

/// The wrapped field restricted to a tile region (density 0 outside).
struct MaskedField {
  TileRegion region;
  std::shared_ptr<const Field> inner;
};

struct Field {
  std::variant<GaussianBlobs, ConstantBox, VoxelGrid, SumField, MaskedField> node;
};

struct FieldValue {
  double sigma = 0.0;
  Rgb rgb;
};

Field make_blobs(std::vector<GaussianBlob> blobs);
Field make_box(const Aabb& box, double density, Rgb color);
Field make_sum(std::vector<Field> children);
Field make_masked(Field inner, const TileRegion& region);
Field make_masked(std::shared_ptr<const Field> inner, const TileRegion& region);

/// Throws Error(InvalidArgument) on negative densities, out-of-range colors,
/// bad boxes or mismatched grid sizes.
void validate(const Field& field);

/// Density and color together. `dir` is accepted for interface stability;
/// none of the built-in fields are view dependent.
FieldValue evaluate(const Field& field, Point3 p, Vec3 dir = {0.0, 0.0, 1.0});

double eval_sigma(const Field& field, Point3 p);
Rgb eval_rgb(const Field& field, Point3 p, Vec3 dir);

}  // namespace volray
