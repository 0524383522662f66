#include <doctest.h>

#include <random>

#include "support.hpp"
#include "volray/error.hpp"
#include "volray/segrender.hpp"
#include "volray/verify.hpp"

using namespace volray;

namespace {

SegmentAggregate seg(double t, Rgb c, double a, double d, double l, double order) {
  SegmentAggregate s;
  s.transmittance = t;
  s.color = c;
  s.alpha = a;
  s.depth = d;
  s.distortion = l;
  s.order_t = order;
  return s;
}

std::vector<SegmentAggregate> aggregate_runs(const std::vector<SampleInterval>& bins,
                                             const std::vector<std::size_t>& cuts) {
  std::vector<SegmentAggregate> out;
  std::size_t begin = 0;
  for (std::size_t k = 0; k <= cuts.size(); ++k) {
    const std::size_t end = k < cuts.size() ? cuts[k] : bins.size();
    out.push_back(aggregate_samples(std::span<const SampleInterval>(bins).subspan(begin, end - begin)));
    begin = end;
  }
  return out;
}

}  // namespace

TEST_CASE("aggregate of an empty segment is the identity") {
  const SegmentAggregate s = aggregate_samples({});
  CHECK(s.transmittance == 1.0);
  CHECK(s.alpha == 0.0);
  CHECK(s.depth == 0.0);
  CHECK(s.distortion == 0.0);
  CHECK(s.color == Rgb{});
}

TEST_CASE("single bin aggregate closed form") {
  SampleInterval b = SampleInterval::between(0.5, 1.5);
  b.sigma = std::log(2.0);
  b.rgb = {1, 0, 0};
  const SampleInterval bins[] = {b};
  const SegmentAggregate s = aggregate_samples(bins);
  CHECK(s.transmittance == doctest::Approx(0.5));
  CHECK(s.color.r == doctest::Approx(0.5));
  CHECK(s.alpha == doctest::Approx(0.5));
  CHECK(s.depth == doctest::Approx(0.5));
  CHECK(s.distortion == 0.0);
  CHECK(s.order_t == 0.5);
}

TEST_CASE("aggregate_segment shades then aggregates") {
  const Field f = make_box(test::unit_box(), 2.0, {0, 1, 0});
  const Ray r = test::ray_x();
  const auto bins = generate_samples(r, test::unit_box(), 0.1);
  const SegmentAggregate s = aggregate_segment(f, r, bins);
  const RayAggregate whole = integrate_ray(f, r, bins);
  CHECK(s.transmittance == whole.transmittance);
  CHECK(s.color == whole.color);
  CHECK(s.distortion == whole.distortion);
}

TEST_CASE("compose_render hand example") {
  const SegmentAggregate a = seg(0.5, {0.3, 0.3, 0.3}, 0.5, 0.0, 0.0, 0.0);
  const SegmentAggregate b = seg(1.0, {0.2, 0.2, 0.2}, 0.0, 0.0, 0.0, 1.0);
  const SegmentAggregate both[] = {a, b};
  const RayAggregate r = compose_render(both);
  CHECK(r.color.r == doctest::Approx(0.4));
  CHECK(r.transmittance == doctest::Approx(0.5));
  const SegmentAggregate only[] = {a};
  const RayAggregate single = compose_render(only);
  CHECK(single.color == a.color);
  CHECK(single.transmittance == a.transmittance);
}

TEST_CASE("an opaque first segment hides the rest") {
  const SegmentAggregate front = seg(0.0, {0.1, 0.2, 0.3}, 1.0, 1.0, 0.0, 0.0);
  const SegmentAggregate back = seg(0.5, {0.9, 0.9, 0.9}, 0.5, 1.0, 0.2, 2.0);
  const SegmentAggregate both[] = {front, back};
  const RayAggregate r = compose(both);
  CHECK(r.color == front.color);
  CHECK(r.distortion == 0.0);
}

TEST_CASE("distortion cross term hand example equals brute force") {
  const SegmentAggregate a = seg(0.5, {}, 0.5, 0.5, 0.0, 0.0);
  const SegmentAggregate b = seg(0.0, {}, 1.0, 3.0, 0.0, 2.0);
  const SegmentAggregate both[] = {a, b};
  CHECK(compose_distortion(both) == doctest::Approx(1.0).epsilon(1e-15));
  const double w[] = {0.5, 0.5};
  const double m[] = {1.0, 3.0};
  CHECK(distortion_bruteforce(w, m) == 1.0);

  const SegmentAggregate single[] = {seg(0.3, {}, 0.7, 1.0, 0.25, 0.0)};
  CHECK(compose_distortion(single) == 0.25);
}

TEST_CASE("only one loaded segment: loss is its local loss scaled by prefix transmittance squared") {
  const SegmentAggregate clear = seg(0.6, {}, 0.0, 0.0, 0.0, 0.0);
  const SegmentAggregate loaded = seg(0.2, {}, 0.8, 2.0, 0.3, 1.0);
  const SegmentAggregate list[] = {clear, loaded};
  CHECK(compose_distortion(list) == doctest::Approx(0.6 * 0.6 * 0.3));
}

TEST_CASE("distortion composition rejects bad input") {
  SegmentAggregate bad = seg(0.5, {}, 0.5, NAN, 0.0, 0.0);
  const SegmentAggregate one[] = {bad};
  CHECK_THROWS_AS(compose_distortion(one), Error);
  // Depth before prefix makes the cross term strongly negative.
  const SegmentAggregate a = seg(0.5, {}, 0.5, 1.5, 0.0, 0.0);
  const SegmentAggregate b = seg(0.0, {}, 1.0, 0.0, 0.0, 1.0);
  const SegmentAggregate wrong[] = {a, b};
  try {
    compose_distortion(wrong);
    FAIL("expected NegativeLoss");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NegativeLoss);
  }
}

TEST_CASE("partition equivalence and prefix transmittance over random cuts") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    std::mt19937_64 rng(seed + 1000);
    const Field scene = random_scene(rng);
    const Aabb root = random_scene_root();
    const Ray ray = random_ray(rng, root);
    auto bins = generate_samples(ray, root, 0.04);
    shade_samples(scene, ray, bins, root);
    const auto cuts = random_cuts(rng, bins.size(), 8);
    const auto segs = aggregate_runs(bins, cuts);
    const RayAggregate whole = integrate_samples(bins);
    const RayAggregate parts = compose(segs);
    for (std::size_t c = 0; c < 3; ++c) CHECK(test::close(parts.color[c], whole.color[c], 1e-10));
    CHECK(test::close(parts.alpha, whole.alpha, 1e-10));
    CHECK(test::close(parts.depth, whole.depth, 1e-10));
    CHECK(test::close(parts.transmittance, whole.transmittance, 1e-10));
    CHECK(std::abs(parts.distortion - whole.distortion) <= 1e-9 * whole.distortion + 1e-15);

    double prod = 1.0;
    double tau = 0.0;
    for (const auto& s : segs) prod *= s.transmittance;
    for (const auto& b : bins) tau += b.sigma * b.width();
    CHECK(parts.transmittance == prod);
    CHECK(std::abs(parts.transmittance - std::exp(-tau)) <= 1e-9);
    for (const auto& s : segs) CHECK(std::abs(s.alpha + s.transmittance - 1.0) <= 1e-9);
  }
}

TEST_CASE("merge is associative and agrees with the fold") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Field scene = random_scene(rng);
    const Aabb root = random_scene_root();
    const Ray ray = random_ray(rng, root);
    auto bins = generate_samples(ray, root, 0.05);
    shade_samples(scene, ray, bins, root);
    if (bins.size() < 3) continue;
    const auto segs = aggregate_runs(bins, random_cuts(rng, bins.size(), 6));
    SegmentAggregate left = SegmentAggregate::identity();
    for (const auto& s : segs) left = merge(left, s);
    SegmentAggregate right = SegmentAggregate::identity();
    for (auto it = segs.rbegin(); it != segs.rend(); ++it) right = merge(*it, right);
    const RayAggregate folded = compose(segs);
    CHECK(test::close(left.color.g, folded.color.g, 1e-12));
    CHECK(test::close(left.distortion, folded.distortion, 1e-10));
    CHECK(test::close(right.distortion, left.distortion, 1e-10));
    CHECK(test::close(right.depth, left.depth, 1e-12));

    // Composing a prefix into a partial and then the rest equals one pass.
    const std::size_t j = segs.size() / 2;
    SegmentAggregate head = SegmentAggregate::identity();
    for (std::size_t k = 0; k < j; ++k) head = merge(head, segs[k]);
    std::vector<SegmentAggregate> two_stage{head};
    two_stage.insert(two_stage.end(), segs.begin() + static_cast<std::ptrdiff_t>(j), segs.end());
    const RayAggregate staged = compose(two_stage);
    CHECK(test::close(staged.transmittance, folded.transmittance, 1e-13));
    CHECK(test::close(staged.color.r, folded.color.r, 1e-13));
  }
}
