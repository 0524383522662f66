#pragma once

#include <span>
#include <vector>

#include "volray/distsim.hpp"
#include "volray/field.hpp"
#include "volray/partitioner.hpp"

namespace volray {

// Blending baselines over overlapping tiles, each tile holding its own
// independently obtained model. They exist to show how blending departs from
// the exact composition that disjoint tiles allow.

struct OverlappedTiles {
  Aabb root;
  double overlap = 0.0;
  std::vector<Aabb> leaves;  // unexpanded
  std::vector<Aabb> tiles;   // leaves grown by overlap * edge per side, clamped to root
};

/// Throws InvalidArgument when f < 0 or is not finite.
OverlappedTiles expand_tiles(const PartitionTree& tree, double f);

/// The scene restricted to each expanded tile (closed boxes).
std::vector<Field> overlapped_models(const Field& scene, const OverlappedTiles& tiles);

/// Distance from p to the nearest face of tile k that is not on the root
/// boundary; tiles without such a face weigh the root diagonal.
double blend3d_weight(const OverlappedTiles& tiles, std::size_t k, Point3 p);

/// Bins come from the tile-split grid of `tree`. Each bin's sigma and color are
/// weight-averaged over the tiles containing its midpoint (a lone tile is used
/// as is; all-zero weights fall back to a plain mean), then composited.
RayAggregate render_blend3d(std::span<const Field> models, const OverlappedTiles& tiles,
                            const PartitionTree& tree, const Ray& ray, double dt);

Image render_blend3d_image(std::span<const Field> models, const OverlappedTiles& tiles,
                           const PartitionTree& tree, const Camera& camera, Rgb background, double dt);

/// Single-worker rendering of one field over the tile-split grid of `tree`.
Image render_field_image(const Field& field, const PartitionTree& tree, const Camera& camera, Rgb background,
                         double dt);

/// Inverse distance from the camera to each tile center, normalized; a
/// camera sitting on a center takes all the weight.
std::vector<double> blend2d_weights(const Camera& camera, std::span<const Aabb> tiles);

/// Pixelwise weighted mean. Throws WeightMismatch unless there is one weight
/// per image summing to 1 within 1e-9, InvalidArgument on size mismatch.
Image render_blend2d(std::span<const Image> images, std::span<const double> weights);

struct RedundancyReport {
  double overlap = 0.0;
  std::size_t samples = 0;       // tile-split bins over all rays
  std::size_t memberships = 0;   // (bin, expanded tile containing its midpoint) pairs
  std::size_t out_of_leaf = 0;   // memberships whose midpoint is outside that tile's leaf
  double fraction = 0.0;         // out_of_leaf / memberships
};

RedundancyReport redundancy(const PartitionTree& tree, const OverlappedTiles& tiles, std::span<const Ray> rays,
                            double dt);

/// A constructed witness where blending visibly fails. Root [0,2]x[0,1]^2
/// split at x = 1, overlap 0.5. The truth is one thin dense red wall at x = 1;
/// each tile's model instead places its wall deeper inside the other tile's
/// overlap region, where its blend weight is small.
struct TwoWallWitness {
  Aabb root;
  PartitionTree tree;
  double overlap = 0.5;
  Field truth;
  std::vector<Field> tile_models;  // one per leaf, in tile order
  Camera camera;
  Rgb background;
};

TwoWallWitness two_wall_witness();

}  // namespace volray
