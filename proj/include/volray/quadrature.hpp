#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "volray/field.hpp"
#include "volray/geometry.hpp"

namespace volray {

inline constexpr int kUnassignedTile = -1;

/// Bins narrower than this are dropped when splitting at tile boundaries.
inline constexpr double kSliverWidth = 1e-12;

/// One quadrature bin [t0, t1] on a ray, shaded at its midpoint.
struct SampleInterval {
  double t0 = 0.0;
  double t1 = 0.0;
  double m = 0.0;
  double sigma = 0.0;
  Rgb rgb;
  int tile = kUnassignedTile;

  static SampleInterval between(double t0, double t1) noexcept {
    SampleInterval s;
    s.t0 = t0;
    s.t1 = t1;
    s.m = 0.5 * (t0 + t1);
    return s;
  }
  double width() const noexcept { return t1 - t0; }
};

/// Composed result for one ray. `color` excludes the background term.
struct RayAggregate {
  Rgb color;
  double alpha = 0.0;
  double depth = 0.0;
  double transmittance = 1.0;
  double distortion = 0.0;

  friend bool operator==(const RayAggregate&, const RayAggregate&) noexcept = default;
};

struct Interval {
  double enter = 0.0;
  double exit = 0.0;
};

/// Slab test clipped to [ray.t_near, ray.t_far]; empty or zero-length overlaps yield nullopt.
std::optional<Interval> ray_box_intersect(const Ray& ray, const Aabb& box);

/// Fixed global grid of width-dt bins from the clipped entry; the last bin is truncated at exit.
std::vector<SampleInterval> generate_samples(const Ray& ray, const Aabb& root, double dt);

/// Same grid shifted by a seeded sub-bin offset. Not used by any equivalence path.
std::vector<SampleInterval> generate_samples_jittered(const Ray& ray, const Aabb& root, double dt,
                                                      std::uint64_t seed);

/// Splits every bin straddling a cut; cuts must be strictly increasing.
std::vector<SampleInterval> split_at_planes(std::span<const SampleInterval> samples,
                                            std::span<const double> cuts);

/// Fills sigma/rgb at each bin's midpoint.
void shade_samples(const Field& field, const Ray& ray, std::span<SampleInterval> samples);

/// Ray point at t, clamped into `root`: midpoints of clipped bins can miss
/// the closed root box by an ulp at grazing exits.
Point3 sample_position(const Ray& ray, double t, const Aabb& root) noexcept;

/// shade_samples at sample_position(); the form every partition-aware path uses.
void shade_samples(const Field& field, const Ray& ray, std::span<SampleInterval> samples, const Aabb& root);

/// Front-to-back alpha compositing of already shaded bins (alpha_i = 1 - exp(-sigma_i * delta_i)).
RayAggregate integrate_samples(std::span<const SampleInterval> samples);

RayAggregate integrate_ray(const Field& field, const Ray& ray, std::span<const SampleInterval> samples);

/// Sum over all ordered pairs of w_i * w_j * |m_i - m_j|.
double distortion_bruteforce(std::span<const double> weights, std::span<const double> midpoints);

/// Opacity of one bin.
double bin_alpha(double sigma, double width) noexcept;

/// Final pixel: C + T * background, clamped to [0,1].
Rgb pixel_color(const RayAggregate& agg, Rgb background) noexcept;

}  // namespace volray
