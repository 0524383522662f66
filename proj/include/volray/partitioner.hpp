#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "volray/geometry.hpp"
#include "volray/quadrature.hpp"

namespace volray {

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2 };

struct SplitChoice {
  Axis axis = Axis::x;
  double plane = 0.0;
};

/// Median plane per axis, then the axis whose two children are closest to
/// cubes (sum over children of sum_e |log(edge_e / geomean)|); ties go x, y, z.
/// Throws DegenerateSplit when every point coincides or no axis can split `box`.
SplitChoice choose_split(std::span<const Point3> points, const Aabb& box);

/// Axis-aligned bisection tree. Internal nodes route p[axis] < plane to `low`;
/// leaves carry tile ids 0..2^n-1 in depth-first (low first) order.
struct PartitionNode {
  int axis = -1;  // -1 for leaves
  double plane = 0.0;
  int low = -1;
  int high = -1;
  int tile_id = -1;
  Aabb box;
  std::size_t point_count = 0;  // build points routed here

  bool is_leaf() const noexcept { return axis < 0; }
  friend bool operator==(const PartitionNode&, const PartitionNode&) noexcept = default;
};

class PartitionTree {
 public:
  PartitionTree() = default;
  PartitionTree(Aabb root_box, int depth, std::vector<PartitionNode> nodes);

  /// One tile covering the whole box.
  static PartitionTree single(const Aabb& root_box, std::size_t point_count = 0);

  const Aabb& root_box() const noexcept { return root_box_; }
  int depth() const noexcept { return depth_; }
  const std::vector<PartitionNode>& nodes() const noexcept { return nodes_; }
  std::size_t tile_count() const noexcept { return leaves_.size(); }
  const PartitionNode& leaf(int tile_id) const { return nodes_.at(static_cast<std::size_t>(leaves_.at(static_cast<std::size_t>(tile_id)))); }
  const Aabb& leaf_box(int tile_id) const { return leaf(tile_id).box; }

  /// Half-open region of a leaf; faces on the root boundary are closed.
  TileRegion leaf_region(int tile_id) const;

  /// Throws OutOfBounds when p lies outside the (closed) root box.
  int locate(Point3 p) const;

  /// Ray distances where the ray enters or leaves any tile, sorted and unique.
  std::vector<double> boundary_crossings(const Ray& ray) const;

  friend bool operator==(const PartitionTree&, const PartitionTree&) noexcept = default;

 private:
  void index_leaves();

  Aabb root_box_;
  int depth_ = 0;
  std::vector<PartitionNode> nodes_;
  std::vector<int> leaves_;
};

/// Recursive median bisection to 2^depth tiles. Throws InsufficientPoints when
/// fewer than 2^depth points are given; DegenerateSplit propagates.
PartitionTree build_tree(std::span<const Point3> points, const Aabb& root_box, int depth);

enum class PointSource { sfm, ray_discretized };

struct PointCloud {
  std::vector<Point3> points;
  PointSource source = PointSource::sfm;
};

/// Midpoints of every ray's global dt grid inside `root`, uniformly subsampled
/// to at most max_points with `seed`. Throws NoPoints when no ray hits `root`.
PointCloud rays_to_points(std::span<const Ray> rays, const Aabb& root, double dt,
                          std::size_t max_points, std::uint64_t seed);

/// Bounding box of the cloud grown by `pad` times its extent on every side.
Aabb padded_bounds(std::span<const Point3> points, double pad = 0.01);

/// Sample bins for one ray, split at every tile boundary the ray crosses and
/// tagged with the owning tile of their midpoint.
std::vector<SampleInterval> tile_samples(const PartitionTree& tree, const Ray& ray, double dt);

struct BalanceReport {
  std::vector<std::size_t> point_counts;
  std::optional<std::vector<std::size_t>> sample_counts;
  double point_ratio = 0.0;                 // max/min, +inf when a tile is empty
  std::optional<double> sample_ratio;
};

BalanceReport balance_report(const PartitionTree& tree, std::span<const Point3> points,
                             std::span<const Ray> rays = {}, double dt = 0.0);

char axis_name(Axis a) noexcept;

}  // namespace volray
