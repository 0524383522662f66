#include "volray/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "volray/error.hpp"

namespace volray {

OverlappedTiles expand_tiles(const PartitionTree& tree, double f) {
  if (!(f >= 0.0) || !std::isfinite(f)) throw Error(ErrorKind::InvalidArgument, "overlap must be finite and >= 0");
  OverlappedTiles out;
  out.root = tree.root_box();
  out.overlap = f;
  for (int t = 0; t < static_cast<int>(tree.tile_count()); ++t) {
    const Aabb& leaf = tree.leaf_box(t);
    Aabb grown = leaf;
    for (std::size_t a = 0; a < 3; ++a) {
      const double pad = f * (leaf.max[a] - leaf.min[a]);
      grown.min[a] = std::max(out.root.min[a], leaf.min[a] - pad);
      grown.max[a] = std::min(out.root.max[a], leaf.max[a] + pad);
    }
    out.leaves.push_back(leaf);
    out.tiles.push_back(grown);
  }
  return out;
}

std::vector<Field> overlapped_models(const Field& scene, const OverlappedTiles& tiles) {
  auto shared = std::make_shared<const Field>(scene);
  std::vector<Field> out;
  for (const Aabb& box : tiles.tiles) out.push_back(make_masked(shared, TileRegion{box, {true, true, true}}));
  return out;
}

double blend3d_weight(const OverlappedTiles& tiles, std::size_t k, Point3 p) {
  const Aabb& box = tiles.tiles.at(k);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < 3; ++a) {
    if (box.min[a] > tiles.root.min[a]) best = std::min(best, p[a] - box.min[a]);
    if (box.max[a] < tiles.root.max[a]) best = std::min(best, box.max[a] - p[a]);
  }
  if (std::isinf(best)) return norm(tiles.root.extent());
  return std::max(0.0, best);
}

RayAggregate render_blend3d(std::span<const Field> models, const OverlappedTiles& tiles,
                            const PartitionTree& tree, const Ray& ray, double dt) {
  if (models.size() != tiles.tiles.size()) {
    throw Error(ErrorKind::InvalidArgument, "one model per overlapped tile is required");
  }
  std::vector<SampleInterval> bins = tile_samples(tree, ray, dt);
  std::vector<std::size_t> members;
  std::vector<double> weights;
  for (SampleInterval& s : bins) {
    const Point3 p = sample_position(ray, s.m, tiles.root);
    members.clear();
    for (std::size_t k = 0; k < tiles.tiles.size(); ++k) {
      if (tiles.tiles[k].contains(p)) members.push_back(k);
    }
    if (members.size() == 1) {
      const FieldValue v = evaluate(models[members[0]], p, ray.dir);
      s.sigma = v.sigma;
      s.rgb = v.rgb;
      continue;
    }
    weights.assign(members.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      weights[i] = blend3d_weight(tiles, members[i], p);
      total += weights[i];
    }
    if (total <= 0.0) {
      std::fill(weights.begin(), weights.end(), 1.0);
      total = static_cast<double>(members.size());
    }
    double sigma = 0.0;
    Rgb rgb;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const FieldValue v = evaluate(models[members[i]], p, ray.dir);
      const double w = weights[i] / total;
      sigma += w * v.sigma;
      rgb += v.rgb * w;
    }
    s.sigma = sigma;
    s.rgb = clamp01(rgb);
  }
  return integrate_samples(bins);
}

Image render_blend3d_image(std::span<const Field> models, const OverlappedTiles& tiles,
                           const PartitionTree& tree, const Camera& camera, Rgb background, double dt) {
  camera.validate();
  Image img(camera.width, camera.height);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      img.at(x, y) = pixel_color(render_blend3d(models, tiles, tree, camera.primary_ray(x, y), dt), background);
    }
  }
  return img;
}

Image render_field_image(const Field& field, const PartitionTree& tree, const Camera& camera, Rgb background,
                         double dt) {
  camera.validate();
  Image img(camera.width, camera.height);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const Ray ray = camera.primary_ray(x, y);
      std::vector<SampleInterval> bins = tile_samples(tree, ray, dt);
      shade_samples(field, ray, bins, tree.root_box());
      img.at(x, y) = pixel_color(integrate_samples(bins), background);
    }
  }
  return img;
}

std::vector<double> blend2d_weights(const Camera& camera, std::span<const Aabb> tiles) {
  if (tiles.empty()) throw Error(ErrorKind::InvalidArgument, "no tiles to weight");
  std::vector<double> w(tiles.size(), 0.0);
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const double d = norm(camera.position - tiles[k].center());
    if (d == 0.0) {
      std::fill(w.begin(), w.end(), 0.0);
      w[k] = 1.0;
      return w;
    }
    w[k] = 1.0 / d;
  }
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return w;
}

Image render_blend2d(std::span<const Image> images, std::span<const double> weights) {
  if (images.empty() || images.size() != weights.size()) {
    throw Error(ErrorKind::WeightMismatch, "need exactly one weight per image");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error(ErrorKind::WeightMismatch, "weights must be finite");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorKind::WeightMismatch, "weights must sum to 1");
  const int width = images[0].width;
  const int height = images[0].height;
  for (const Image& img : images) {
    if (img.width != width || img.height != height) throw Error(ErrorKind::InvalidArgument, "image sizes differ");
  }
  Image out(width, height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    Rgb acc;
    for (std::size_t k = 0; k < images.size(); ++k) acc += images[k].pixels[i] * weights[k];
    out.pixels[i] = clamp01(acc);
  }
  return out;
}

RedundancyReport redundancy(const PartitionTree& tree, const OverlappedTiles& tiles, std::span<const Ray> rays,
                            double dt) {
  RedundancyReport out;
  out.overlap = tiles.overlap;
  for (const Ray& ray : rays) {
    for (const SampleInterval& s : tile_samples(tree, ray, dt)) {
      ++out.samples;
      const Point3 p = sample_position(ray, s.m, tiles.root);
      for (std::size_t k = 0; k < tiles.tiles.size(); ++k) {
        if (!tiles.tiles[k].contains(p)) continue;
        ++out.memberships;
        if (s.tile != static_cast<int>(k)) ++out.out_of_leaf;
      }
    }
  }
  out.fraction = out.memberships == 0 ? 0.0
                                      : static_cast<double>(out.out_of_leaf) / static_cast<double>(out.memberships);
  return out;
}

TwoWallWitness two_wall_witness() {
  constexpr Rgb red{1.0, 0.0, 0.0};
  constexpr double density = 100.0;
  TwoWallWitness w;
  w.root = Aabb{{0.0, 0.0, 0.0}, {2.0, 1.0, 1.0}};
  PartitionNode root;
  root.axis = 0;
  root.plane = 1.0;
  root.low = 1;
  root.high = 2;
  PartitionNode low;
  low.tile_id = 0;
  PartitionNode high;
  high.tile_id = 1;
  w.tree = PartitionTree(w.root, 1, {root, low, high});
  w.overlap = 0.5;
  auto wall = [&](double x0, double x1) { return make_box(Aabb{{x0, 0.0, 0.0}, {x1, 1.0, 1.0}}, density, red); };
  w.truth = wall(0.95, 1.05);
  w.tile_models = {wall(1.35, 1.45), wall(0.55, 0.65)};
  w.camera.position = {-1.5, 0.5, 0.5};
  w.camera.look_at = {1.0, 0.5, 0.5};
  w.camera.up = {0.0, 1.0, 0.0};
  w.camera.vertical_fov = 30.0;
  w.camera.width = 16;
  w.camera.height = 16;
  w.background = {0.0, 0.0, 0.0};
  return w;
}

}  // namespace volray
