#include "volray/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "volray/error.hpp"

namespace volray {

std::optional<Interval> ray_box_intersect(const Ray& ray, const Aabb& box) {
  double enter = ray.t_near;
  double exit = ray.t_far;
  for (std::size_t a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.dir[a];
    if (d == 0.0) {
      if (o < box.min[a] || o > box.max[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / d;
    double t0 = (box.min[a] - o) * inv;
    double t1 = (box.max[a] - o) * inv;
    if (t0 > t1) std::swap(t0, t1);
    enter = std::max(enter, t0);
    exit = std::min(exit, t1);
    if (!(enter < exit)) return std::nullopt;
  }
  return Interval{enter, exit};
}

namespace {

std::vector<SampleInterval> grid_from(double start, double enter, double exit, double dt) {
  std::vector<SampleInterval> out;
  const double span = exit - enter;
  out.reserve(static_cast<std::size_t>(span / dt) + 2);
  double lo = enter;
  for (std::size_t i = 1;; ++i) {
    const double next = start + static_cast<double>(i) * dt;
    const double hi = std::min(next, exit);
    if (hi - lo >= kSliverWidth) out.push_back(SampleInterval::between(lo, hi));
    if (next >= exit) break;
    lo = hi;
  }
  return out;
}

}  // namespace

std::vector<SampleInterval> generate_samples(const Ray& ray, const Aabb& root, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "dt must be > 0");
  const auto hit = ray_box_intersect(ray, root);
  if (!hit) return {};
  return grid_from(hit->enter, hit->enter, hit->exit, dt);
}

std::vector<SampleInterval> generate_samples_jittered(const Ray& ray, const Aabb& root, double dt,
                                                      std::uint64_t seed) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "dt must be > 0");
  const auto hit = ray_box_intersect(ray, root);
  if (!hit) return {};
  std::mt19937_64 rng(seed);
  const double offset = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * dt;
  return grid_from(hit->enter - dt + offset, hit->enter, hit->exit, dt);
}

std::vector<SampleInterval> split_at_planes(std::span<const SampleInterval> samples,
                                            std::span<const double> cuts) {
  std::vector<SampleInterval> out;
  out.reserve(samples.size() + cuts.size());
  for (const SampleInterval& s : samples) {
    auto it = std::upper_bound(cuts.begin(), cuts.end(), s.t0);
    if (it == cuts.end() || *it >= s.t1) {
      out.push_back(s);
      continue;
    }
    double lo = s.t0;
    for (; it != cuts.end() && *it < s.t1; ++it) {
      if (*it - lo >= kSliverWidth) {
        SampleInterval piece = s;
        piece.t0 = lo;
        piece.t1 = *it;
        piece.m = 0.5 * (lo + *it);
        out.push_back(piece);
      }
      lo = *it;
    }
    if (s.t1 - lo >= kSliverWidth) {
      SampleInterval piece = s;
      piece.t0 = lo;
      piece.t1 = s.t1;
      piece.m = 0.5 * (lo + s.t1);
      out.push_back(piece);
    }
  }
  return out;
}

void shade_samples(const Field& field, const Ray& ray, std::span<SampleInterval> samples) {
  for (SampleInterval& s : samples) {
    const FieldValue v = evaluate(field, ray.at(s.m), ray.dir);
    s.sigma = v.sigma;
    s.rgb = v.rgb;
  }
}

Point3 sample_position(const Ray& ray, double t, const Aabb& root) noexcept {
  Point3 p = ray.at(t);
  for (std::size_t a = 0; a < 3; ++a) p[a] = std::clamp(p[a], root.min[a], root.max[a]);
  return p;
}

void shade_samples(const Field& field, const Ray& ray, std::span<SampleInterval> samples, const Aabb& root) {
  for (SampleInterval& s : samples) {
    const FieldValue v = evaluate(field, sample_position(ray, s.m, root), ray.dir);
    s.sigma = v.sigma;
    s.rgb = v.rgb;
  }
}

double bin_alpha(double sigma, double width) noexcept { return -std::expm1(-sigma * width); }

RayAggregate integrate_samples(std::span<const SampleInterval> samples) {
  RayAggregate out;
  std::vector<double> weights;
  std::vector<double> mids;
  weights.reserve(samples.size());
  mids.reserve(samples.size());
  double trans = 1.0;
  for (const SampleInterval& s : samples) {
    const double alpha = bin_alpha(s.sigma, s.width());
    const double w = trans * alpha;
    out.color += s.rgb * w;
    out.alpha += w;
    out.depth += w * s.m;
    trans *= 1.0 - alpha;
    weights.push_back(w);
    mids.push_back(s.m);
  }
  out.transmittance = trans;
  out.distortion = distortion_bruteforce(weights, mids);
  return out;
}

RayAggregate integrate_ray(const Field& field, const Ray& ray, std::span<const SampleInterval> samples) {
  std::vector<SampleInterval> shaded(samples.begin(), samples.end());
  shade_samples(field, ray, shaded);
  return integrate_samples(shaded);
}

double distortion_bruteforce(std::span<const double> weights, std::span<const double> midpoints) {
  if (weights.size() != midpoints.size()) {
    throw Error(ErrorKind::InvalidArgument, "weights and midpoints differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      row += weights[j] * std::abs(midpoints[i] - midpoints[j]);
    }
    total += weights[i] * row;
  }
  return total;
}

Rgb pixel_color(const RayAggregate& agg, Rgb background) noexcept {
  return clamp01(agg.color + background * agg.transmittance);
}

}  // namespace volray
