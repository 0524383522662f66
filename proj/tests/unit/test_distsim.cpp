#include <doctest.h>

#include <random>

#include "support.hpp"
#include "volray/distsim.hpp"
#include "volray/error.hpp"
#include "volray/verify.hpp"

using namespace volray;

namespace {

PartitionTree random_tree(std::mt19937_64& rng, const Aabb& root, int depth) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point3> pts(64);
  for (auto& p : pts) {
    for (std::size_t a = 0; a < 3; ++a) p[a] = root.min[a] + u(rng) * (root.max[a] - root.min[a]);
  }
  return build_tree(pts, root, depth);
}

bool agg_close(const RayAggregate& a, const RayAggregate& b) {
  for (std::size_t c = 0; c < 3; ++c) {
    if (!test::close(a.color[c], b.color[c], 1e-10)) return false;
  }
  return test::close(a.alpha, b.alpha, 1e-10) && test::close(a.depth, b.depth, 1e-10) &&
         test::close(a.transmittance, b.transmittance, 1e-10) &&
         std::abs(a.distortion - b.distortion) <= 1e-9 * (1.0 + std::abs(b.distortion));
}

// Two workers split at x = 1, eight bins of width 0.125 on each side.
WorkerPool two_tile_pool() {
  const Aabb root{{0, 0, 0}, {2, 1, 1}};
  PartitionNode r;
  r.axis = 0;
  r.plane = 1.0;
  r.low = 1;
  r.high = 2;
  PartitionNode a;
  a.tile_id = 0;
  PartitionNode b;
  b.tile_id = 1;
  return WorkerPool::spawn(PartitionTree(root, 1, {r, a, b}), make_box(root, 1.0, {0.5, 0.5, 0.5}));
}

}  // namespace

TEST_CASE("spawn: one worker per leaf with disjoint masked fields") {
  const WorkerPool single = WorkerPool::spawn(PartitionTree::single(test::unit_box()), make_box(test::unit_box(), 1.0, {1, 1, 1}));
  CHECK(single.size() == 1);
  const WorkerPool pool = two_tile_pool();
  CHECK(pool.size() == 2);
  CHECK(eval_sigma(pool.workers()[0].field(), {1.5, 0.5, 0.5}) == 0.0);
  CHECK(eval_sigma(pool.workers()[1].field(), {1.5, 0.5, 0.5}) == 1.0);
}

TEST_CASE("mask soundness: worker densities sum to the scene density") {
  std::mt19937_64 rng(8);
  const Aabb root = random_scene_root();
  const Field scene = random_scene(rng);
  const WorkerPool pool = WorkerPool::spawn(random_tree(rng, root, 3), scene);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 2000; ++i) {
    const Point3 p{u(rng), u(rng), u(rng)};
    double sum = 0.0;
    for (const Worker& w : pool.workers()) sum += eval_sigma(w.field(), p);
    CHECK(sum == eval_sigma(scene, p));
  }
}

TEST_CASE("payload accounting: 2 workers with 8 bins each") {
  const WorkerPool pool = two_tile_pool();
  Ray r;
  r.origin = {-1.0, 0.5, 0.5};
  r.dir = {1, 0, 0};
  RenderSettings s;
  s.dt = 0.125;
  s.protocol = Protocol::sample_broadcast;
  RayRender naive = render_ray(pool, r, 0, s);
  CHECK(naive.stats.scalars_sent_total() == 2 * (1 + 8 * 6));
  CHECK(naive.stats.compositor.scalars_received == 98);
  s.protocol = Protocol::tile_aggregate;
  RayRender tiled = render_ray(pool, r, 0, s);
  CHECK(tiled.stats.scalars_sent_total() == 18);
  s.protocol = Protocol::mono;
  RayRender mono = render_ray(pool, r, 0, s);
  CHECK(mono.stats.scalars_sent_total() == 0);
  CHECK(agg_close(naive.aggregate, mono.aggregate));
  CHECK(agg_close(tiled.aggregate, mono.aggregate));
}

TEST_CASE("one worker: protocols agree and the tile protocol sends 9 scalars") {
  const WorkerPool pool = WorkerPool::spawn(PartitionTree::single(test::unit_box()), make_box(test::unit_box(), 2.0, {0.2, 0.4, 0.6}));
  RenderSettings s;
  s.dt = 0.1;
  const Ray r = test::ray_x();
  const RayRender tiled = render_ray(pool, r, 0, s);
  CHECK(tiled.stats.scalars_sent_total() == 9);
  s.protocol = Protocol::mono;
  CHECK(agg_close(tiled.aggregate, render_ray(pool, r, 0, s).aggregate));
}

TEST_CASE("a ray missing the root box costs nothing") {
  const WorkerPool pool = two_tile_pool();
  RenderSettings s;
  const Ray r = test::ray_x(5.0);
  for (Protocol p : {Protocol::sample_broadcast, Protocol::tile_aggregate}) {
    s.protocol = p;
    const RayRender out = render_ray(pool, r, 0, s);
    CHECK(out.stats.scalars_sent_total() == 0);
    CHECK(out.aggregate == RayAggregate{});
    CHECK(pixel_color(out.aggregate, {0.1, 0.2, 0.3}) == Rgb{0.1, 0.2, 0.3});
  }
}

TEST_CASE("workers with no bins answer with an identity aggregate") {
  // A ray grazing tile 1 for less than a sliver still gets a reply from it.
  const WorkerPool pool = two_tile_pool();
  Ray r;
  r.origin = {0.5, 0.5, 0.5};
  r.dir = {1, 0, 0};
  r.t_far = 0.5 + 1e-13;
  const auto replies = pool.workers()[1].handle({0, r, 0.1}, Protocol::tile_aggregate);
  REQUIRE(replies.size() == 1);
  const auto& p = std::get<TilePayload>(replies[0]);
  CHECK(p.segment.transmittance == 1.0);
  CHECK(p.segment.alpha == 0.0);
}

TEST_CASE("protocol equivalence on random scenes, rays and trees") {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    std::mt19937_64 rng(seed + 500);
    const Aabb root = random_scene_root();
    const Field scene = random_scene(rng);
    const int depth = static_cast<int>(seed % 4);
    const WorkerPool pool = WorkerPool::spawn(random_tree(rng, root, depth), scene);
    const Ray ray = random_ray(rng, root);
    RenderSettings s;
    s.dt = 0.03;
    s.protocol = Protocol::mono;
    const RayRender mono = render_ray(pool, ray, seed, s);
    for (Protocol p : {Protocol::sample_broadcast, Protocol::tile_aggregate}) {
      s.protocol = p;
      const RayRender d = render_ray(pool, ray, seed, s);
      CHECK(agg_close(d.aggregate, mono.aggregate));
      CHECK(d.stats.scalars_sent_total() == d.stats.scalars_received_total());
    }
  }
}

TEST_CASE("scheduling shuffles and broadcast do not change results") {
  std::mt19937_64 rng(9);
  const Aabb root = random_scene_root();
  const Field scene = random_scene(rng);
  const WorkerPool pool = WorkerPool::spawn(random_tree(rng, root, 2), scene);
  for (int i = 0; i < 50; ++i) {
    const Ray ray = random_ray(rng, root);
    RenderSettings s;
    s.dt = 0.05;
    for (Protocol p : {Protocol::sample_broadcast, Protocol::tile_aggregate}) {
      s.protocol = p;
      s.schedule = {};
      const RayRender plain = render_ray(pool, ray, static_cast<std::uint64_t>(i), s);
      s.schedule.shuffle_seed = 1234;
      const RayRender shuffled = render_ray(pool, ray, static_cast<std::uint64_t>(i), s);
      CHECK(shuffled.aggregate == plain.aggregate);
      s.schedule.broadcast_all = true;
      const RayRender everyone = render_ray(pool, ray, static_cast<std::uint64_t>(i), s);
      CHECK(everyone.aggregate == plain.aggregate);
      CHECK(everyone.stats.scalars_sent_total() == everyone.stats.scalars_received_total());
      const std::size_t k = pool.size();
      CHECK(everyone.stats.scalars_sent_total() == plain.stats.scalars_sent_total() * (k - 1));
    }
  }
}

TEST_CASE("composite orders by geometry, not arrival") {
  SegmentAggregate near;
  near.transmittance = 0.5;
  near.alpha = 0.5;
  near.color = {0.5, 0, 0};
  near.depth = 0.5;
  near.order_t = 1.0;
  SegmentAggregate far = near;
  far.color = {0, 0.5, 0};
  far.depth = 1.5;
  far.order_t = 3.0;
  const std::vector<Message> a{TilePayload{0, 1, far}, TilePayload{0, 0, near}};
  const std::vector<Message> b{TilePayload{0, 0, near}, TilePayload{0, 1, far}};
  CHECK(composite(Protocol::tile_aggregate, a) == composite(Protocol::tile_aggregate, b));
  CHECK(composite(Protocol::tile_aggregate, a).color.r == 0.5);
  CHECK_THROWS_AS(composite(Protocol::mono, a), Error);
}

TEST_CASE("camera rays") {
  Camera c;
  c.width = 3;
  c.height = 3;
  const Ray center = c.primary_ray(1, 1);
  CHECK(center.dir.z == doctest::Approx(-1.0));
  CHECK(c.primary_ray(0, 0).dir.y > 0.0);
  CHECK(c.primary_ray(0, 0).dir.x < 0.0);
  CHECK(c.all_rays().size() == 9);
  c.vertical_fov = 180.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.vertical_fov = 45.0;
  c.width = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("images: empty scene shows background; threads and shuffles are bit identical") {
  const Aabb root{{-1, -1, -1}, {1, 1, 1}};
  Camera cam;
  cam.width = 12;
  cam.height = 10;
  const WorkerPool empty = WorkerPool::spawn(PartitionTree::single(root), make_box(root, 0.0, {1, 1, 1}));
  const Rgb bg{0.1, 0.2, 0.3};
  const ImageRender e = render_image(empty, cam, bg, {});
  for (const Rgb& p : e.image.pixels) CHECK(p == bg);

  std::mt19937_64 rng(10);
  const Field scene = make_blobs({{{0.2, 0.1, 0.0}, 5.0, 0.4, {0.9, 0.2, 0.1}}, {{-0.4, -0.2, 0.3}, 4.0, 0.3, {0.1, 0.3, 0.9}}});
  const WorkerPool pool = WorkerPool::spawn(random_tree(rng, root, 2), scene);
  RenderSettings s;
  s.dt = 0.04;
  s.protocol = Protocol::mono;
  const ImageRender mono = render_image(pool, cam, bg, s);
  s.protocol = Protocol::tile_aggregate;
  const ImageRender tiled = render_image(pool, cam, bg, s);
  CHECK(max_abs_diff(mono.image, tiled.image) <= 1e-9);
  s.schedule.threads = 3;
  s.schedule.shuffle_seed = 99;
  const ImageRender threaded = render_image(pool, cam, bg, s);
  CHECK(threaded.image.pixels == tiled.image.pixels);
  CHECK(threaded.stats.scalars_sent_total() == tiled.stats.scalars_sent_total());
  s.protocol = Protocol::sample_broadcast;
  const ImageRender naive = render_image(pool, cam, bg, s);
  CHECK(tiled.stats.scalars_sent_total() < naive.stats.scalars_sent_total());
}

TEST_CASE("bench accounting over a dt sweep") {
  const Aabb root{{-1, -1, -1}, {1, 1, 1}};
  std::mt19937_64 rng(12);
  const WorkerPool pool = WorkerPool::spawn(random_tree(rng, root, 2), make_blobs({{{0, 0, 0}, 3.0, 0.5, {1, 1, 1}}}));
  Camera cam;
  cam.width = 8;
  cam.height = 8;
  const double dts[] = {0.04, 0.02, 0.01};
  const BenchReport r = bench_protocols(pool, cam, dts);
  REQUIRE(r.rows.size() == 6);
  CHECK(r.rows[1].scalars_total == r.rows[3].scalars_total);
  CHECK(r.rows[3].scalars_total == r.rows[5].scalars_total);
  const double growth = static_cast<double>(r.rows[2].scalars_total) / static_cast<double>(r.rows[0].scalars_total);
  CHECK(growth == doctest::Approx(2.0).epsilon(0.1));
  CHECK(r.within_tolerance);
  CHECK_THROWS_AS(bench_protocols(pool, cam, {}), Error);
}

TEST_CASE("coarse sampling keeps the protocols within a factor of two") {
  const WorkerPool pool = two_tile_pool();
  Camera cam;
  cam.position = {-2.0, 0.5, 0.5};
  cam.look_at = {1.0, 0.5, 0.5};
  cam.vertical_fov = 10.0;
  cam.width = 4;
  cam.height = 4;
  const double dts[] = {2.5};  // one bin per tile on every ray
  const BenchReport r = bench_protocols(pool, cam, dts);
  CHECK(r.rows[0].samples_per_ray_per_worker <= 1.0);
  const double ratio = static_cast<double>(r.rows[0].scalars_total) / static_cast<double>(r.rows[1].scalars_total);
  CHECK(ratio <= 2.0);
  CHECK(ratio >= 0.5);
}

TEST_CASE("protocol names") {
  CHECK(parse_protocol("tile") == Protocol::tile_aggregate);
  CHECK(parse_protocol("sample") == Protocol::sample_broadcast);
  CHECK(parse_protocol("mono") == Protocol::mono);
  CHECK_THROWS_AS(parse_protocol("carrier-pigeon"), Error);
  CHECK(payload_scalars(Message{RayAssignment{}}) == 0);
}
