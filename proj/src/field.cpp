#include "volray/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "volray/error.hpp"

namespace volray {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

bool valid_density(double d) { return std::isfinite(d) && d >= 0.0; }

// Combines child values: densities add, colors are density-weighted
// (uniform mean when the total density vanishes).
template <class Range, class Eval>
FieldValue mix(const Range& items, Eval&& eval) {
  FieldValue out;
  Rgb weighted;
  Rgb uniform;
  std::size_t n = 0;
  for (const auto& item : items) {
    const FieldValue v = eval(item);
    out.sigma += v.sigma;
    weighted += v.rgb * v.sigma;
    uniform += v.rgb;
    ++n;
  }
  if (n == 0) return out;
  if (out.sigma > 0.0) {
    out.rgb = weighted * (1.0 / out.sigma);
  } else {
    out.rgb = uniform * (1.0 / static_cast<double>(n));
  }
  out.rgb = clamp01(out.rgb);  // guards 1-ulp overshoot of the weighted mean
  return out;
}

FieldValue eval_voxels(const VoxelGrid& g, Point3 p) {
  if (!g.box.contains(p)) return {0.0, g.colors.empty() ? Rgb{} : g.colors.front()};
  const Vec3 ext = g.box.extent();
  std::array<double, 3> u{};
  for (std::size_t a = 0; a < 3; ++a) {
    u[a] = (p[a] - g.box.min[a]) / ext[a] * static_cast<double>(g.resolution[a]);
  }
  if (g.interpolation == Interpolation::nearest) {
    std::array<std::size_t, 3> idx{};
    for (std::size_t a = 0; a < 3; ++a) {
      const double last = static_cast<double>(g.resolution[a] - 1);
      idx[a] = static_cast<std::size_t>(std::clamp(std::floor(u[a]), 0.0, last));
    }
    const std::size_t i = g.index(idx[0], idx[1], idx[2]);
    return {g.densities[i], g.colors[i]};
  }
  // Trilinear over cell centers, clamped at the boundary cells.
  std::array<std::size_t, 3> lo{};
  std::array<std::size_t, 3> hi{};
  std::array<double, 3> frac{};
  for (std::size_t a = 0; a < 3; ++a) {
    const double last = static_cast<double>(g.resolution[a] - 1);
    const double c = std::clamp(u[a] - 0.5, 0.0, last);
    const double f = std::floor(c);
    lo[a] = static_cast<std::size_t>(f);
    hi[a] = std::min(lo[a] + 1, g.resolution[a] - 1);
    frac[a] = c - f;
  }
  FieldValue out;
  for (int corner = 0; corner < 8; ++corner) {
    double w = 1.0;
    std::array<std::size_t, 3> idx{};
    for (std::size_t a = 0; a < 3; ++a) {
      const bool upper = (corner >> a) & 1;
      idx[a] = upper ? hi[a] : lo[a];
      w *= upper ? frac[a] : 1.0 - frac[a];
    }
    const std::size_t i = g.index(idx[0], idx[1], idx[2]);
    out.sigma += w * g.densities[i];
    out.rgb += g.colors[i] * w;
  }
  out.rgb = clamp01(out.rgb);
  return out;
}

}  // namespace

Field make_blobs(std::vector<GaussianBlob> blobs) { return Field{GaussianBlobs{std::move(blobs)}}; }

Field make_box(const Aabb& box, double density, Rgb color) {
  return Field{ConstantBox{box, density, color}};
}

Field make_sum(std::vector<Field> children) { return Field{SumField{std::move(children)}}; }

Field make_masked(Field inner, const TileRegion& region) {
  return make_masked(std::make_shared<const Field>(std::move(inner)), region);
}

Field make_masked(std::shared_ptr<const Field> inner, const TileRegion& region) {
  return Field{MaskedField{region, std::move(inner)}};
}

void validate(const Field& field) {
  std::visit(Overloaded{
                 [](const GaussianBlobs& f) {
                   for (const auto& b : f.blobs) {
                     require(is_finite(b.center), "blob center must be finite");
                     require(valid_density(b.amplitude), "blob amplitude must be finite and >= 0");
                     require(std::isfinite(b.scale) && b.scale > 0.0, "blob scale must be > 0");
                     require(in_unit_range(b.color), "blob color must be in [0,1]");
                   }
                 },
                 [](const ConstantBox& f) {
                   require(f.box.valid(), "constant box needs min < max");
                   require(valid_density(f.density), "box density must be finite and >= 0");
                   require(in_unit_range(f.color), "box color must be in [0,1]");
                 },
                 [](const VoxelGrid& f) {
                   require(f.box.valid(), "voxel grid box needs min < max");
                   for (auto n : f.resolution) require(n >= 1, "voxel resolution must be >= 1");
                   require(f.densities.size() == f.voxel_count(), "voxel density count mismatch");
                   require(f.colors.size() == f.voxel_count(), "voxel color count mismatch");
                   for (double d : f.densities) require(valid_density(d), "voxel densities must be >= 0");
                   for (const Rgb& c : f.colors) require(in_unit_range(c), "voxel colors must be in [0,1]");
                 },
                 [](const SumField& f) {
                   for (const auto& c : f.children) validate(c);
                 },
                 [](const MaskedField& f) {
                   require(f.inner != nullptr, "masked field without inner field");
                   require(f.region.box.valid(), "mask region needs min < max");
                   validate(*f.inner);
                 },
             },
             field.node);
}

FieldValue evaluate(const Field& field, Point3 p, Vec3 dir) {
  return std::visit(
      Overloaded{
          [&](const GaussianBlobs& f) {
            return mix(f.blobs, [&](const GaussianBlob& b) {
              const Vec3 d = p - b.center;
              const double s = b.amplitude * std::exp(-dot(d, d) / (2.0 * b.scale * b.scale));
              return FieldValue{s, b.color};
            });
          },
          [&](const ConstantBox& f) {
            return FieldValue{f.box.contains(p) ? f.density : 0.0, f.color};
          },
          [&](const VoxelGrid& f) { return eval_voxels(f, p); },
          [&](const SumField& f) {
            return mix(f.children, [&](const Field& c) { return evaluate(c, p, dir); });
          },
          [&](const MaskedField& f) {
            FieldValue v = evaluate(*f.inner, p, dir);
            if (!f.region.contains(p)) v.sigma = 0.0;
            return v;
          },
      },
      field.node);
}

double eval_sigma(const Field& field, Point3 p) { return evaluate(field, p).sigma; }

Rgb eval_rgb(const Field& field, Point3 p, Vec3 dir) { return evaluate(field, p, dir).rgb; }

}  // namespace volray
