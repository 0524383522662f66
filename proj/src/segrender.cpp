#include "volray/segrender.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "volray/error.hpp"

namespace volray {

bool SegmentAggregate::finite() const noexcept {
  return std::isfinite(transmittance) && std::isfinite(color.r) && std::isfinite(color.g) &&
         std::isfinite(color.b) && std::isfinite(alpha) && std::isfinite(depth) &&
         std::isfinite(distortion) && std::isfinite(order_t);
}

SegmentAggregate aggregate_samples(std::span<const SampleInterval> shaded) {
  if (shaded.empty()) return SegmentAggregate::identity();
  const RayAggregate local = integrate_samples(shaded);
  SegmentAggregate out;
  out.transmittance = local.transmittance;
  out.color = local.color;
  out.alpha = local.alpha;
  out.depth = local.depth;
  out.distortion = local.distortion;
  out.order_t = shaded.front().t0;
  return out;
}

SegmentAggregate aggregate_segment(const Field& field, const Ray& ray,
                                   std::span<const SampleInterval> samples_in_tile) {
  std::vector<SampleInterval> shaded(samples_in_tile.begin(), samples_in_tile.end());
  shade_samples(field, ray, shaded);
  return aggregate_samples(shaded);
}

void ComposeState::absorb(const SegmentAggregate& seg) noexcept {
  const double cross = seg.depth * a_prefix - seg.alpha * d_prefix;
  loss += t_prefix * t_prefix * seg.distortion + 2.0 * t_prefix * cross;
  color += seg.color * t_prefix;
  a_prefix += t_prefix * seg.alpha;
  d_prefix += t_prefix * seg.depth;
  t_prefix *= seg.transmittance;
}

RayAggregate ComposeState::result() const noexcept {
  return RayAggregate{color, a_prefix, d_prefix, t_prefix, loss};
}

RayAggregate compose_render(std::span<const SegmentAggregate> ordered) {
  ComposeState state;
  for (const auto& seg : ordered) state.absorb(seg);
  RayAggregate out = state.result();
  out.distortion = 0.0;
  return out;
}

namespace {

double checked_loss(double loss) {
  if (loss < -kNegativeLossTolerance) {
    throw Error(ErrorKind::NegativeLoss, "composed distortion " + std::to_string(loss));
  }
  return loss < 0.0 ? 0.0 : loss;
}

void require_finite(std::span<const SegmentAggregate> ordered) {
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (!ordered[i].finite()) {
      throw Error(ErrorKind::NonFiniteInput, "segment " + std::to_string(i) + " is not finite");
    }
  }
}

}  // namespace

double compose_distortion(std::span<const SegmentAggregate> ordered) {
  require_finite(ordered);
  ComposeState state;
  for (const auto& seg : ordered) state.absorb(seg);
  return checked_loss(state.loss);
}

RayAggregate compose(std::span<const SegmentAggregate> ordered) {
  require_finite(ordered);
  ComposeState state;
  for (const auto& seg : ordered) state.absorb(seg);
  RayAggregate out = state.result();
  out.distortion = checked_loss(out.distortion);
  return out;
}

SegmentAggregate merge(const SegmentAggregate& front, const SegmentAggregate& back) noexcept {
  SegmentAggregate out;
  const double t = front.transmittance;
  out.color = front.color + back.color * t;
  out.alpha = front.alpha + t * back.alpha;
  out.depth = front.depth + t * back.depth;
  out.distortion = front.distortion + t * t * back.distortion +
                   2.0 * t * (back.depth * front.alpha - back.alpha * front.depth);
  out.transmittance = t * back.transmittance;
  out.order_t = front.order_t;
  return out;
}

}  // namespace volray
