#pragma once

#include <span>

#include "volray/field.hpp"
#include "volray/quadrature.hpp"

namespace volray {

/// Per-segment summary (T, C, A, D, L) rendered with unit incoming transmittance.
/// This tuple plus its ordering key is all that crosses workers in the
/// tile-aggregate protocol.
struct SegmentAggregate {
  double transmittance = 1.0;
  Rgb color;
  double alpha = 0.0;
  double depth = 0.0;
  double distortion = 0.0;
  double order_t = 0.0;  // entry distance of the segment along the ray

  static SegmentAggregate identity(double order_t = 0.0) noexcept {
    SegmentAggregate s;
    s.order_t = order_t;
    return s;
  }
  bool finite() const noexcept;
  friend bool operator==(const SegmentAggregate&, const SegmentAggregate&) noexcept = default;
};

/// Aggregates bins that already carry sigma/rgb. Empty input gives the identity.
SegmentAggregate aggregate_samples(std::span<const SampleInterval> shaded);

/// Shades `samples_in_tile` against `field` then aggregates them.
SegmentAggregate aggregate_segment(const Field& field, const Ray& ray,
                                   std::span<const SampleInterval> samples_in_tile);

/// Running prefix state of the front-to-back fold over segments.
///
/// absorb() is the body of the per-worker composition loop: the distortion
/// cross term S = D_seg * A_prefix - A_seg * D_prefix is taken against the
/// prefix *before* the segment is folded in, and the prefix transmittance is
/// updated last.
struct ComposeState {
  double t_prefix = 1.0;
  double a_prefix = 0.0;
  double d_prefix = 0.0;
  Rgb color;
  double loss = 0.0;

  void absorb(const SegmentAggregate& seg) noexcept;
  RayAggregate result() const noexcept;
};

/// Composes color, opacity, depth and transmittance; distortion is left at 0.
RayAggregate compose_render(std::span<const SegmentAggregate> ordered);

/// Composes the distortion loss. Throws NonFiniteInput on non-finite aggregates
/// and NegativeLoss when the sum is below -1e-12; smaller negatives clamp to 0.
double compose_distortion(std::span<const SegmentAggregate> ordered);

/// compose_render and compose_distortion in one pass.
RayAggregate compose(std::span<const SegmentAggregate> ordered);

/// Associative merge of two adjacent segments (front precedes back). Folding
/// merge over a list gives the same quantities as compose, up to rounding,
/// so it can drive a parallel prefix scan.
SegmentAggregate merge(const SegmentAggregate& front, const SegmentAggregate& back) noexcept;

inline constexpr double kNegativeLossTolerance = 1e-12;

}  // namespace volray
