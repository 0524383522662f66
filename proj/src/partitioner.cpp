#include "volray/partitioner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "volray/error.hpp"

namespace volray {

char axis_name(Axis a) noexcept { return "xyz"[static_cast<int>(a)]; }

namespace {

double aspect_score(const Aabb& box) {
  const Vec3 e = box.extent();
  const double geo = std::cbrt(e.x * e.y * e.z);
  return std::abs(std::log(e.x / geo)) + std::abs(std::log(e.y / geo)) + std::abs(std::log(e.z / geo));
}

std::pair<Aabb, Aabb> cut(const Aabb& box, std::size_t axis, double plane) {
  Aabb lo = box;
  Aabb hi = box;
  lo.max[axis] = plane;
  hi.min[axis] = plane;
  return {lo, hi};
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool all_coincide(std::span<const Point3> points) {
  return std::all_of(points.begin(), points.end(), [&](const Point3& p) { return p == points.front(); });
}

}  // namespace

SplitChoice choose_split(std::span<const Point3> points, const Aabb& box) {
  if (points.size() < 2) throw Error(ErrorKind::InsufficientPoints, "a split needs at least 2 points");
  if (all_coincide(points)) throw Error(ErrorKind::DegenerateSplit, "all points coincide");

  std::optional<SplitChoice> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < 3; ++a) {
    std::vector<double> coords(points.size());
    std::transform(points.begin(), points.end(), coords.begin(), [a](const Point3& p) { return p[a]; });
    const auto [lo, hi] = std::minmax_element(coords.begin(), coords.end());
    if (*lo == *hi) continue;  // this axis does not separate the points
    const double plane = median(std::move(coords));
    if (!(plane > box.min[a] && plane < box.max[a])) continue;
    const auto [low_box, high_box] = cut(box, a, plane);
    const double score = aspect_score(low_box) + aspect_score(high_box);
    if (!best || score < best_score - 1e-12 * std::max(1.0, best_score)) {
      best = SplitChoice{static_cast<Axis>(a), plane};
      best_score = score;
    }
  }
  if (!best) throw Error(ErrorKind::DegenerateSplit, "no axis yields a plane strictly inside the box");
  return *best;
}

PartitionTree::PartitionTree(Aabb root_box, int depth, std::vector<PartitionNode> nodes)
    : root_box_(root_box), depth_(depth), nodes_(std::move(nodes)) {
  index_leaves();
}

PartitionTree PartitionTree::single(const Aabb& root_box, std::size_t point_count) {
  PartitionNode leaf;
  leaf.tile_id = 0;
  leaf.box = root_box;
  leaf.point_count = point_count;
  return PartitionTree(root_box, 0, {leaf});
}

void PartitionTree::index_leaves() {
  if (!root_box_.valid()) throw Error(ErrorKind::InvalidArgument, "partition root box needs min < max");
  if (nodes_.empty()) throw Error(ErrorKind::InvalidArgument, "partition tree has no nodes");
  std::size_t leaf_count = 0;
  for (const auto& n : nodes_) leaf_count += n.is_leaf() ? 1 : 0;
  if (depth_ < 0 || depth_ > 30 || leaf_count != (std::size_t{1} << depth_)) {
    throw Error(ErrorKind::InvalidArgument, "a depth-n tree has exactly 2^n leaves");
  }
  leaves_.assign(leaf_count, -1);
  // Boxes are re-derived from the splits so routing and regions always agree.
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<std::pair<std::size_t, Aabb>> stack{{0, root_box_}};
  while (!stack.empty()) {
    const auto [i, box] = stack.back();
    stack.pop_back();
    if (seen[i]) throw Error(ErrorKind::InvalidArgument, "partition nodes must form a tree");
    seen[i] = true;
    PartitionNode& n = nodes_[i];
    n.box = box;
    if (n.is_leaf()) {
      if (n.tile_id < 0 || static_cast<std::size_t>(n.tile_id) >= leaf_count ||
          leaves_[static_cast<std::size_t>(n.tile_id)] != -1) {
        throw Error(ErrorKind::InvalidArgument, "tile ids must be a bijection onto 0..K-1");
      }
      leaves_[static_cast<std::size_t>(n.tile_id)] = static_cast<int>(i);
      continue;
    }
    const auto count = static_cast<int>(nodes_.size());
    if (n.axis > 2 || n.low < 0 || n.high < 0 || n.low >= count || n.high >= count) {
      throw Error(ErrorKind::InvalidArgument, "malformed internal node " + std::to_string(i));
    }
    const auto axis = static_cast<std::size_t>(n.axis);
    if (!(n.plane > box.min[axis] && n.plane < box.max[axis])) {
      throw Error(ErrorKind::InvalidArgument, "split plane outside its node box at node " + std::to_string(i));
    }
    const auto [lo, hi] = cut(box, axis, n.plane);
    stack.emplace_back(static_cast<std::size_t>(n.high), hi);
    stack.emplace_back(static_cast<std::size_t>(n.low), lo);
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw Error(ErrorKind::InvalidArgument, "partition tree has unreachable nodes");
  }
}

TileRegion PartitionTree::leaf_region(int tile_id) const {
  TileRegion r;
  r.box = leaf_box(tile_id);
  for (std::size_t a = 0; a < 3; ++a) r.closed_max[a] = r.box.max[a] == root_box_.max[a];
  return r;
}

int PartitionTree::locate(Point3 p) const {
  if (!root_box_.contains(p)) throw Error(ErrorKind::OutOfBounds, "point outside the root box");
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const PartitionNode& n = nodes_[i];
    i = static_cast<std::size_t>(p[static_cast<std::size_t>(n.axis)] < n.plane ? n.low : n.high);
  }
  return nodes_[i].tile_id;
}

std::vector<double> PartitionTree::boundary_crossings(const Ray& ray) const {
  std::vector<double> ts;
  if (tile_count() <= 1) return ts;
  ts.reserve(2 * tile_count());
  for (int t = 0; t < static_cast<int>(tile_count()); ++t) {
    if (const auto hit = ray_box_intersect(ray, leaf_box(t))) {
      ts.push_back(hit->enter);
      ts.push_back(hit->exit);
    }
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

namespace {

struct Builder {
  std::vector<PartitionNode> nodes;
  int next_tile = 0;

  int build(std::vector<Point3> points, const Aabb& box, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[static_cast<std::size_t>(id)].box = box;
    nodes[static_cast<std::size_t>(id)].point_count = points.size();
    if (depth == 0) {
      nodes[static_cast<std::size_t>(id)].tile_id = next_tile++;
      return id;
    }
    const SplitChoice split = choose_split(points, box);
    const auto axis = static_cast<std::size_t>(split.axis);
    // Rank split: the lower half (the middle point too, for odd counts) goes low.
    std::stable_sort(points.begin(), points.end(),
                     [axis](const Point3& a, const Point3& b) { return a[axis] < b[axis]; });
    const std::size_t low_count = (points.size() + 1) / 2;
    std::vector<Point3> high(points.begin() + static_cast<std::ptrdiff_t>(low_count), points.end());
    points.resize(low_count);
    const auto [low_box, high_box] = cut(box, axis, split.plane);
    const int low = build(std::move(points), low_box, depth - 1);
    const int hi = build(std::move(high), high_box, depth - 1);
    PartitionNode& n = nodes[static_cast<std::size_t>(id)];
    n.axis = static_cast<int>(axis);
    n.plane = split.plane;
    n.low = low;
    n.high = hi;
    return id;
  }
};

}  // namespace

PartitionTree build_tree(std::span<const Point3> points, const Aabb& root_box, int depth) {
  if (depth < 0) throw Error(ErrorKind::InvalidArgument, "depth must be >= 0");
  if (depth > 30) throw Error(ErrorKind::InvalidArgument, "depth too large");
  if (!root_box.valid()) throw Error(ErrorKind::InvalidArgument, "root box needs min < max");
  const std::size_t needed = std::size_t{1} << depth;
  if (points.size() < needed || points.empty()) {
    throw Error(ErrorKind::InsufficientPoints,
                std::to_string(points.size()) + " points for " + std::to_string(needed) + " tiles");
  }
  for (const auto& p : points) {
    if (!is_finite(p)) throw Error(ErrorKind::InvalidArgument, "point cloud contains non-finite points");
  }
  Builder b;
  b.build(std::vector<Point3>(points.begin(), points.end()), root_box, depth);
  return PartitionTree(root_box, depth, std::move(b.nodes));
}

PointCloud rays_to_points(std::span<const Ray> rays, const Aabb& root, double dt, std::size_t max_points,
                          std::uint64_t seed) {
  if (rays.empty()) throw Error(ErrorKind::InvalidArgument, "rays_to_points needs at least one ray");
  if (max_points == 0) throw Error(ErrorKind::InvalidArgument, "max_points must be > 0");
  PointCloud cloud;
  cloud.source = PointSource::ray_discretized;
  for (const Ray& r : rays) {
    for (const SampleInterval& s : generate_samples(r, root, dt)) cloud.points.push_back(sample_position(r, s.m, root));
  }
  if (cloud.points.empty()) throw Error(ErrorKind::NoPoints, "no ray intersects the root box");
  if (cloud.points.size() > max_points) {
    // Partial Fisher-Yates, then restore ray order for reproducible output.
    std::vector<std::size_t> idx(cloud.points.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < max_points; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(max_points);
    std::sort(idx.begin(), idx.end());
    std::vector<Point3> kept;
    kept.reserve(max_points);
    for (std::size_t i : idx) kept.push_back(cloud.points[i]);
    cloud.points = std::move(kept);
  }
  return cloud;
}

Aabb padded_bounds(std::span<const Point3> points, double pad) {
  if (points.empty()) throw Error(ErrorKind::NoPoints, "empty point cloud");
  Aabb box{points.front(), points.front()};
  for (const auto& p : points) {
    for (std::size_t a = 0; a < 3; ++a) {
      box.min[a] = std::min(box.min[a], p[a]);
      box.max[a] = std::max(box.max[a], p[a]);
    }
  }
  const Vec3 ext = box.extent();
  const double largest = std::max({ext.x, ext.y, ext.z, 1.0});
  for (std::size_t a = 0; a < 3; ++a) {
    const double grow = std::max(pad * ext[a], 1e-6 * largest);
    box.min[a] -= grow;
    box.max[a] += grow;
  }
  return box;
}

std::vector<SampleInterval> tile_samples(const PartitionTree& tree, const Ray& ray, double dt) {
  std::vector<SampleInterval> bins = generate_samples(ray, tree.root_box(), dt);
  if (bins.empty()) return bins;
  const std::vector<double> cuts = tree.boundary_crossings(ray);
  if (!cuts.empty()) bins = split_at_planes(bins, cuts);
  for (SampleInterval& s : bins) s.tile = tree.locate(sample_position(ray, s.m, tree.root_box()));
  return bins;
}

namespace {

double ratio(const std::vector<std::size_t>& counts) {
  if (counts.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  if (*lo == 0) return *hi == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  return static_cast<double>(*hi) / static_cast<double>(*lo);
}

}  // namespace

BalanceReport balance_report(const PartitionTree& tree, std::span<const Point3> points,
                             std::span<const Ray> rays, double dt) {
  BalanceReport report;
  report.point_counts.assign(tree.tile_count(), 0);
  for (const auto& p : points) {
    if (tree.root_box().contains(p)) ++report.point_counts[static_cast<std::size_t>(tree.locate(p))];
  }
  report.point_ratio = ratio(report.point_counts);
  if (!rays.empty()) {
    std::vector<std::size_t> samples(tree.tile_count(), 0);
    for (const Ray& r : rays) {
      for (const SampleInterval& s : tile_samples(tree, r, dt)) ++samples[static_cast<std::size_t>(s.tile)];
    }
    report.sample_ratio = ratio(samples);
    report.sample_counts = std::move(samples);
  }
  return report;
}

}  // namespace volray
