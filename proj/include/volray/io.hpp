#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "volray/distsim.hpp"
#include "volray/field.hpp"
#include "volray/partitioner.hpp"

namespace volray {

// Text formats. Parse failures throw Error(Parse), filesystem failures
// Error(Io), semantically invalid content Error(InvalidArgument).
//
// Scene:  { "root_box": Box, "background": [r,g,b], "field": Field,
//           "camera"?: Camera, "tile_models"?: [Field], "overlap"?: f }
// Box:    { "min": [x,y,z], "max": [x,y,z] }
// Field:  { "type": "gaussian_blobs", "blobs": [{ "center", "amplitude", "scale", "color" }] }
//       | { "type": "constant_box", "box": Box, "density", "color" }
//       | { "type": "voxel_grid", "box": Box, "resolution": [nx,ny,nz],
//           "densities": [...], "colors": [[r,g,b], ...], "interpolation": "nearest" | "trilinear" }
//       | { "type": "sum", "children": [Field] }
// Camera: { "position", "look_at", "up", "vertical_fov", "width", "height" }

struct Scene {
  Aabb root_box;
  Field field;
  Rgb background;
  std::optional<Camera> camera;
  std::vector<Field> tile_models;  // per-tile stand-ins for the blending baselines
  std::optional<double> overlap;
};

Scene parse_scene(std::string_view text);
std::string dump_scene(const Scene& scene);

/// Keys are written in a fixed order, so dump(parse(dump(t))) == dump(t).
std::string dump_tree(const PartitionTree& tree);
PartitionTree parse_tree(std::string_view text);

/// ASCII PLY (vertex element with x, y, z properties) or whitespace separated
/// "x y z" lines; '#' starts a comment in the latter.
std::vector<Point3> parse_points(std::string_view text);

/// Binary P6, maxval 255, each channel floor(c * 255 + 0.5) after clamping.
std::string encode_ppm(const Image& image);
unsigned char quantize(double c) noexcept;

std::string dump_stats(const CommStats& stats);
std::string dump_balance(const BalanceReport& report);
/// Rows of dt,S_bar,protocol,scalars_total followed by the ratio fit as comments.
std::string bench_csv(const BenchReport& report);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

inline Scene load_scene(const std::filesystem::path& path) { return parse_scene(read_file(path)); }
inline PartitionTree load_tree(const std::filesystem::path& path) { return parse_tree(read_file(path)); }
inline std::vector<Point3> load_points(const std::filesystem::path& path) { return parse_points(read_file(path)); }

}  // namespace volray
