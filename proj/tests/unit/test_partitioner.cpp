#include <doctest.h>

#include <random>

#include "support.hpp"
#include "volray/error.hpp"
#include "volray/partitioner.hpp"

using namespace volray;

namespace {

int brute_force_locate(const PartitionTree& tree, Point3 p) {
  int found = -1;
  for (int t = 0; t < static_cast<int>(tree.tile_count()); ++t) {
    if (tree.leaf_region(t).contains(p)) {
      if (found >= 0) return -2;  // overlap
      found = t;
    }
  }
  return found;
}

void check_balance(const PartitionTree& tree) {
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) continue;
    const auto a = tree.nodes()[static_cast<std::size_t>(n.low)].point_count;
    const auto b = tree.nodes()[static_cast<std::size_t>(n.high)].point_count;
    CHECK(a + b == n.point_count);
    CHECK((a > b ? a - b : b - a) <= 1);
  }
}

}  // namespace

TEST_CASE("median split on the only useful axis") {
  const std::vector<Point3> pts{{0, 0.5, 0.5}, {1, 0.5, 0.5}, {2, 0.5, 0.5}, {3, 0.5, 0.5}};
  const SplitChoice s = choose_split(pts, {{0, 0, 0}, {4, 1, 1}});
  CHECK(s.axis == Axis::x);
  CHECK(s.plane == 1.5);
}

TEST_CASE("symmetric points tie-break to x") {
  const std::vector<Point3> pts{{0.25, 0.25, 0.5}, {0.75, 0.75, 0.5}, {0.25, 0.75, 0.5}, {0.75, 0.25, 0.5}};
  const SplitChoice s = choose_split(pts, test::unit_box());
  CHECK(s.axis == Axis::x);
  CHECK(s.plane == 0.5);
}

TEST_CASE("two points split between them; odd counts use the middle value") {
  const std::vector<Point3> two{{0.2, 0.5, 0.5}, {0.6, 0.5, 0.5}};
  SplitChoice s = choose_split(two, test::unit_box());
  CHECK(s.plane > 0.2);
  CHECK(s.plane < 0.6);
  const std::vector<Point3> three{{0.1, 0.5, 0.5}, {0.4, 0.5, 0.5}, {0.9, 0.5, 0.5}};
  s = choose_split(three, test::unit_box());
  CHECK(s.plane == 0.4);
  const PartitionTree t = build_tree(three, test::unit_box(), 1);
  CHECK(t.leaf(0).point_count == 2);
  CHECK(t.leaf(1).point_count == 1);
}

TEST_CASE("degenerate and insufficient inputs") {
  const std::vector<Point3> same(5, Point3{0.5, 0.5, 0.5});
  try {
    build_tree(same, test::unit_box(), 1);
    FAIL("expected DegenerateSplit");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateSplit);
  }
  const std::vector<Point3> three{{0.1, 0.1, 0.1}, {0.5, 0.5, 0.5}, {0.9, 0.9, 0.9}};
  try {
    build_tree(three, test::unit_box(), 2);
    FAIL("expected InsufficientPoints");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientPoints);
  }
}

TEST_CASE("depth zero is a single leaf") {
  const std::vector<Point3> pts{{0.5, 0.5, 0.5}};
  const PartitionTree t = build_tree(pts, test::unit_box(), 0);
  CHECK(t.tile_count() == 1);
  CHECK(t.leaf_box(0) == test::unit_box());
  CHECK(t.locate({0.3, 0.3, 0.3}) == 0);
}

TEST_CASE("eight points split four and four") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point3> pts(8);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  const PartitionTree t = build_tree(pts, test::unit_box(), 1);
  CHECK(t.leaf(0).point_count == 4);
  CHECK(t.leaf(1).point_count == 4);
}

TEST_CASE("clustered cloud stays balanced with small tiles inside the cluster") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  std::vector<Point3> pts(1000);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  const PartitionTree t = build_tree(pts, test::unit_box(), 3);
  REQUIRE(t.tile_count() == 8);
  double smallest = 1e9;
  double largest = 0.0;
  for (int k = 0; k < 8; ++k) {
    CHECK(t.leaf(k).point_count >= 124);
    CHECK(t.leaf(k).point_count <= 126);
    const Vec3 e = t.leaf_box(k).extent();
    const double vol = e.x * e.y * e.z;
    smallest = std::min(smallest, vol);
    largest = std::max(largest, vol);
  }
  CHECK(largest > 10.0 * smallest);
  check_balance(t);
}

TEST_CASE("balance holds at every split with heavy ties") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coarse(0, 3);
  std::vector<Point3> pts(777);
  for (auto& p : pts) p = {coarse(rng) / 4.0 + 0.1, coarse(rng) / 4.0 + 0.1, coarse(rng) / 4.0 + 0.1};
  const PartitionTree t = build_tree(pts, test::unit_box(), 3);
  check_balance(t);
}

TEST_CASE("locate: plane points go high; agrees with a leaf scan") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point3> pts(512);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  const PartitionTree t = build_tree(pts, test::unit_box(), 3);
  const PartitionNode& root = t.nodes()[0];
  Point3 on{0.5, 0.5, 0.5};
  on[static_cast<std::size_t>(root.axis)] = root.plane;
  const int tile = t.locate(on);
  CHECK(t.leaf_box(tile).min[static_cast<std::size_t>(root.axis)] >= root.plane);
  for (int i = 0; i < 10000; ++i) {
    const Point3 p{u(rng), u(rng), u(rng)};
    CHECK(t.locate(p) == brute_force_locate(t, p));
  }
  for (const Point3 corner : {Point3{0, 0, 0}, Point3{1, 1, 1}, Point3{1, 0, 1}}) {
    CHECK(t.locate(corner) == brute_force_locate(t, corner));
  }
  try {
    t.locate({1.5, 0.5, 0.5});
    FAIL("expected OutOfBounds");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfBounds);
  }
}

TEST_CASE("tile ids are depth-first, low child first") {
  std::vector<Point3> pts;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) pts.push_back({0.125 + 0.25 * i, 0.125 + 0.25 * j, 0.5});
  }
  const PartitionTree t = build_tree(pts, test::unit_box(), 2);
  CHECK(t.locate({0.1, 0.1, 0.5}) == 0);
  const PartitionNode& root = t.nodes()[0];
  CHECK(t.nodes()[static_cast<std::size_t>(root.low)].is_leaf() == false);
  CHECK(t.locate({0.9, 0.9, 0.5}) == 3);
}

TEST_CASE("rays to points") {
  Ray r = test::ray_x();
  const std::vector<Ray> one{r};
  PointCloud c = rays_to_points(one, test::unit_box(), 0.1, 100, 1);
  CHECK(c.points.size() == 10);
  CHECK(c.source == PointSource::ray_discretized);
  for (const auto& p : c.points) CHECK(p.y == 0.5);

  const PointCloud a = rays_to_points(one, test::unit_box(), 0.1, 5, 42);
  const PointCloud b = rays_to_points(one, test::unit_box(), 0.1, 5, 42);
  REQUIRE(a.points.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a.points[i] == b.points[i]);

  const std::vector<Ray> miss{test::ray_x(3.0)};
  try {
    rays_to_points(miss, test::unit_box(), 0.1, 10, 1);
    FAIL("expected NoPoints");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoPoints);
  }
}

TEST_CASE("tile samples never straddle a tile boundary") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point3> pts(256);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  const PartitionTree t = build_tree(pts, test::unit_box(), 3);
  for (int i = 0; i < 200; ++i) {
    Ray r;
    r.origin = {-1.0, u(rng), u(rng)};
    r.dir = normalized(Vec3{1.0, u(rng) - 0.5, u(rng) - 0.5});
    const auto bins = tile_samples(t, r, 0.03);
    for (const auto& b : bins) {
      CHECK(b.tile >= 0);
      const TileRegion reg = t.leaf_region(b.tile);
      CHECK(reg.box.contains(sample_position(r, b.t0 + 1e-9 * b.width(), t.root_box())));
      CHECK(reg.box.contains(sample_position(r, b.t1 - 1e-9 * b.width(), t.root_box())));
    }
  }
}

TEST_CASE("balance report") {
  std::vector<Point3> pts;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) pts.push_back({0.125 + 0.25 * i, 0.125 + 0.25 * j, 0.5});
  }
  const PartitionTree t = build_tree(pts, test::unit_box(), 2);
  const BalanceReport r = balance_report(t, pts);
  CHECK(r.point_counts == std::vector<std::size_t>{4, 4, 4, 4});
  CHECK(r.point_ratio == 1.0);
  CHECK_FALSE(r.sample_counts);

  const std::vector<Ray> rays{test::ray_x(0.1, 0.5)};
  const BalanceReport s = balance_report(t, pts, rays, 0.05);
  REQUIRE(s.sample_counts);
  CHECK(*s.sample_ratio > 1.0);
}

TEST_CASE("padded bounds and tree validation") {
  const std::vector<Point3> pts{{0, 0, 0}, {1, 2, 4}};
  const Aabb b = padded_bounds(pts);
  CHECK(b.min.x == doctest::Approx(-0.01));
  CHECK(b.max.z == doctest::Approx(4.04));

  PartitionNode bad_root;
  bad_root.axis = 0;
  bad_root.plane = 5.0;
  bad_root.low = 1;
  bad_root.high = 2;
  PartitionNode l0;
  l0.tile_id = 0;
  PartitionNode l1;
  l1.tile_id = 1;
  CHECK_THROWS_AS(PartitionTree(test::unit_box(), 1, {bad_root, l0, l1}), Error);
  bad_root.plane = 0.5;
  CHECK_NOTHROW(PartitionTree(test::unit_box(), 1, {bad_root, l0, l1}));
  l1.tile_id = 0;
  CHECK_THROWS_AS(PartitionTree(test::unit_box(), 1, {bad_root, l0, l1}), Error);
}

TEST_CASE("determinism: identical input gives identical trees") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point3> pts(300);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  CHECK(build_tree(pts, test::unit_box(), 3) == build_tree(pts, test::unit_box(), 3));
}
