#include "volray/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "volray/error.hpp"

namespace volray {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorKind::Parse, what); }

const json& member(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) parse_error(std::string("missing key '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) parse_error(std::string(what) + " must be a number");
  return j.get<double>();
}

double number_at(const json& j, const char* key) { return number(member(j, key), key); }

std::size_t count_at(const json& j, const char* key) {
  const json& v = member(j, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    parse_error(std::string(key) + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

Vec3 vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) parse_error(std::string(what) + " must be an array of 3 numbers");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

Rgb rgb(const json& j, const char* what) {
  const Vec3 v = vec3(j, what);
  return {v.x, v.y, v.z};
}

Aabb box(const json& j) { return {vec3(member(j, "min"), "min"), vec3(member(j, "max"), "max")}; }

template <class J>
J to_json(Vec3 v) { return J::array({v.x, v.y, v.z}); }
template <class J>
J to_json(Rgb c) { return J::array({c.r, c.g, c.b}); }
template <class J>
J to_json(const Aabb& b) {
  J j;
  j["min"] = to_json<J>(b.min);
  j["max"] = to_json<J>(b.max);
  return j;
}

Field field_from(const json& j) {
  const json& type = member(j, "type");
  if (!type.is_string()) parse_error("field type must be a string");
  const std::string t = type.get<std::string>();
  if (t == "gaussian_blobs") {
    std::vector<GaussianBlob> blobs;
    const json& list = member(j, "blobs");
    if (!list.is_array()) parse_error("blobs must be an array");
    for (const json& b : list) {
      blobs.push_back({vec3(member(b, "center"), "center"), number_at(b, "amplitude"), number_at(b, "scale"),
                       rgb(member(b, "color"), "color")});
    }
    return make_blobs(std::move(blobs));
  }
  if (t == "constant_box") {
    return make_box(box(member(j, "box")), number_at(j, "density"), rgb(member(j, "color"), "color"));
  }
  if (t == "voxel_grid") {
    VoxelGrid g;
    g.box = box(member(j, "box"));
    const json& res = member(j, "resolution");
    if (!res.is_array() || res.size() != 3) parse_error("resolution must be an array of 3 integers");
    for (std::size_t a = 0; a < 3; ++a) {
      if (!res[a].is_number_integer() || res[a].get<long long>() < 1) parse_error("resolution entries must be >= 1");
      g.resolution[a] = res[a].get<std::size_t>();
    }
    const json& dens = member(j, "densities");
    const json& cols = member(j, "colors");
    if (!dens.is_array() || !cols.is_array()) parse_error("densities and colors must be arrays");
    for (const json& d : dens) g.densities.push_back(number(d, "density"));
    for (const json& c : cols) g.colors.push_back(rgb(c, "color"));
    if (j.contains("interpolation")) {
      const json& mode = j.at("interpolation");
      if (mode == "nearest") {
        g.interpolation = Interpolation::nearest;
      } else if (mode == "trilinear") {
        g.interpolation = Interpolation::trilinear;
      } else {
        parse_error("interpolation must be nearest or trilinear");
      }
    }
    return Field{std::move(g)};
  }
  if (t == "sum") {
    std::vector<Field> children;
    const json& list = member(j, "children");
    if (!list.is_array()) parse_error("children must be an array");
    for (const json& c : list) children.push_back(field_from(c));
    return make_sum(std::move(children));
  }
  parse_error("unknown field type '" + t + "'");
}

ordered_json field_to(const Field& f) {
  ordered_json j;
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, GaussianBlobs>) {
          j["type"] = "gaussian_blobs";
          j["blobs"] = ordered_json::array();
          for (const auto& b : node.blobs) {
            ordered_json e;
            e["center"] = to_json<ordered_json>(b.center);
            e["amplitude"] = b.amplitude;
            e["scale"] = b.scale;
            e["color"] = to_json<ordered_json>(b.color);
            j["blobs"].push_back(std::move(e));
          }
        } else if constexpr (std::is_same_v<T, ConstantBox>) {
          j["type"] = "constant_box";
          j["box"] = to_json<ordered_json>(node.box);
          j["density"] = node.density;
          j["color"] = to_json<ordered_json>(node.color);
        } else if constexpr (std::is_same_v<T, VoxelGrid>) {
          j["type"] = "voxel_grid";
          j["box"] = to_json<ordered_json>(node.box);
          j["resolution"] = node.resolution;
          j["densities"] = node.densities;
          j["colors"] = ordered_json::array();
          for (const Rgb& c : node.colors) j["colors"].push_back(to_json<ordered_json>(c));
          j["interpolation"] = node.interpolation == Interpolation::nearest ? "nearest" : "trilinear";
        } else if constexpr (std::is_same_v<T, SumField>) {
          j["type"] = "sum";
          j["children"] = ordered_json::array();
          for (const Field& c : node.children) j["children"].push_back(field_to(c));
        } else {
          throw Error(ErrorKind::InvalidArgument, "masked fields have no file representation");
        }
      },
      f.node);
  return j;
}

Camera camera_from(const json& j) {
  Camera c;
  c.position = vec3(member(j, "position"), "position");
  c.look_at = vec3(member(j, "look_at"), "look_at");
  if (j.contains("up")) c.up = vec3(j.at("up"), "up");
  if (j.contains("vertical_fov")) c.vertical_fov = number(j.at("vertical_fov"), "vertical_fov");
  if (j.contains("width")) c.width = static_cast<int>(count_at(j, "width"));
  if (j.contains("height")) c.height = static_cast<int>(count_at(j, "height"));
  c.validate();
  return c;
}

ordered_json camera_to(const Camera& c) {
  ordered_json j;
  j["position"] = to_json<ordered_json>(c.position);
  j["look_at"] = to_json<ordered_json>(c.look_at);
  j["up"] = to_json<ordered_json>(c.up);
  j["vertical_fov"] = c.vertical_fov;
  j["width"] = c.width;
  j["height"] = c.height;
  return j;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    parse_error(e.what());
  }
}

ordered_json endpoint(const EndpointStats& s) {
  ordered_json j;
  j["scalars_sent"] = s.scalars_sent;
  j["scalars_received"] = s.scalars_received;
  j["messages_sent"] = s.messages_sent;
  j["messages_received"] = s.messages_received;
  return j;
}

}  // namespace

Scene parse_scene(std::string_view text) {
  const json j = parse_json(text);
  try {
    Scene s;
    s.root_box = box(member(j, "root_box"));
    if (!s.root_box.valid()) throw Error(ErrorKind::InvalidArgument, "root_box needs min < max");
    s.field = field_from(member(j, "field"));
    validate(s.field);
    if (j.contains("background")) s.background = rgb(j.at("background"), "background");
    if (!in_unit_range(s.background)) throw Error(ErrorKind::InvalidArgument, "background must lie in [0,1]");
    if (j.contains("camera")) s.camera = camera_from(j.at("camera"));
    if (j.contains("tile_models")) {
      const json& list = j.at("tile_models");
      if (!list.is_array()) parse_error("tile_models must be an array");
      for (const json& m : list) {
        s.tile_models.push_back(field_from(m));
        validate(s.tile_models.back());
      }
    }
    if (j.contains("overlap")) s.overlap = number(j.at("overlap"), "overlap");
    return s;
  } catch (const json::exception& e) {
    parse_error(e.what());
  }
}

std::string dump_scene(const Scene& scene) {
  ordered_json j;
  j["root_box"] = to_json<ordered_json>(scene.root_box);
  j["background"] = to_json<ordered_json>(scene.background);
  j["field"] = field_to(scene.field);
  if (scene.camera) j["camera"] = camera_to(*scene.camera);
  if (!scene.tile_models.empty()) {
    j["tile_models"] = ordered_json::array();
    for (const Field& m : scene.tile_models) j["tile_models"].push_back(field_to(m));
  }
  if (scene.overlap) j["overlap"] = *scene.overlap;
  return j.dump(2) + "\n";
}

std::string dump_tree(const PartitionTree& tree) {
  ordered_json j;
  j["format"] = "volray-partition-tree";
  j["version"] = 1;
  j["root_box"] = to_json<ordered_json>(tree.root_box());
  j["depth"] = tree.depth();
  j["nodes"] = ordered_json::array();
  for (const PartitionNode& n : tree.nodes()) {
    ordered_json e;
    if (n.is_leaf()) {
      e["tile_id"] = n.tile_id;
    } else {
      e["axis"] = std::string(1, axis_name(static_cast<Axis>(n.axis)));
      e["plane"] = n.plane;
      e["low"] = n.low;
      e["high"] = n.high;
    }
    e["point_count"] = n.point_count;
    e["box"] = to_json<ordered_json>(n.box);
    j["nodes"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

PartitionTree parse_tree(std::string_view text) {
  const json j = parse_json(text);
  try {
    if (j.contains("format") && j.at("format") != "volray-partition-tree") parse_error("not a partition tree");
    const Aabb root = box(member(j, "root_box"));
    const json& depth = member(j, "depth");
    if (!depth.is_number_integer()) parse_error("depth must be an integer");
    std::vector<PartitionNode> nodes;
    const json& list = member(j, "nodes");
    if (!list.is_array()) parse_error("nodes must be an array");
    for (const json& e : list) {
      PartitionNode n;
      if (e.contains("axis")) {
        const std::string a = member(e, "axis").get<std::string>();
        if (a == "x") {
          n.axis = 0;
        } else if (a == "y") {
          n.axis = 1;
        } else if (a == "z") {
          n.axis = 2;
        } else {
          parse_error("axis must be x, y or z");
        }
        n.plane = number_at(e, "plane");
        n.low = member(e, "low").get<int>();
        n.high = member(e, "high").get<int>();
      } else {
        n.tile_id = member(e, "tile_id").get<int>();
      }
      if (e.contains("point_count")) n.point_count = count_at(e, "point_count");
      nodes.push_back(n);
    }
    return PartitionTree(root, depth.get<int>(), std::move(nodes));
  } catch (const json::exception& e) {
    parse_error(e.what());
  }
}

std::vector<Point3> parse_points(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<Point3> points;
  std::string line;
  auto read_xyz = [&](std::istringstream& ls, std::size_t line_no) {
    Point3 p;
    if (!(ls >> p.x >> p.y >> p.z)) parse_error("line " + std::to_string(line_no) + ": expected x y z");
    if (!is_finite(p)) parse_error("line " + std::to_string(line_no) + ": non-finite coordinate");
    points.push_back(p);
  };

  if (text.substr(0, 3) == "ply") {
    std::size_t vertices = 0;
    std::vector<std::string> props;
    bool in_vertex = false;
    bool ascii = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ls(line);
      std::string word;
      ls >> word;
      if (word == "format") {
        std::string kind;
        ls >> kind;
        ascii = kind == "ascii";
      } else if (word == "element") {
        std::string name;
        ls >> name;
        in_vertex = name == "vertex";
        if (in_vertex && !(ls >> vertices)) parse_error("bad vertex count");
      } else if (word == "property" && in_vertex) {
        std::string type;
        std::string name;
        ls >> type >> name;
        if (type == "list") parse_error("list properties on vertices are not supported");
        props.push_back(name);
      } else if (word == "end_header") {
        break;
      }
    }
    if (!ascii) parse_error("only ASCII PLY is supported");
    std::array<std::size_t, 3> col{};
    for (std::size_t a = 0; a < 3; ++a) {
      const char* want = a == 0 ? "x" : (a == 1 ? "y" : "z");
      const auto it = std::find(props.begin(), props.end(), want);
      if (it == props.end()) parse_error(std::string("vertex has no ") + want + " property");
      col[a] = static_cast<std::size_t>(it - props.begin());
    }
    for (std::size_t v = 0; v < vertices; ++v) {
      ++line_no;
      if (!std::getline(in, line)) parse_error("PLY ends before all vertices");
      std::istringstream ls(line);
      std::vector<double> values(props.size());
      for (double& x : values) {
        if (!(ls >> x)) parse_error("line " + std::to_string(line_no) + ": short vertex row");
      }
      const Point3 p{values[col[0]], values[col[1]], values[col[2]]};
      if (!is_finite(p)) parse_error("line " + std::to_string(line_no) + ": non-finite coordinate");
      points.push_back(p);
    }
    return points;
  }

  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    read_xyz(ls, line_no);
  }
  return points;
}

unsigned char quantize(double c) noexcept {
  const double v = std::floor(std::clamp(c, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<unsigned char>(v);
}

std::string encode_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + image.pixels.size() * 3);
  for (const Rgb& p : image.pixels) {
    out.push_back(static_cast<char>(quantize(p.r)));
    out.push_back(static_cast<char>(quantize(p.g)));
    out.push_back(static_cast<char>(quantize(p.b)));
  }
  return out;
}

std::string dump_stats(const CommStats& stats) {
  ordered_json j;
  j["protocol"] = std::string(to_string(stats.protocol));
  j["num_workers"] = stats.per_worker.size();
  j["rays"] = stats.rays;
  j["rays_hit"] = stats.rays_hit;
  j["samples"] = stats.samples;
  j["scalars_sent_total"] = stats.scalars_sent_total();
  j["scalars_received_total"] = stats.scalars_received_total();
  j["messages_sent_total"] = stats.messages_sent_total();
  j["control_messages"] = stats.control_messages;
  j["sample_payloads"] = stats.sample_payloads;
  j["tile_payloads"] = stats.tile_payloads;
  j["per_worker"] = ordered_json::array();
  for (std::size_t w = 0; w < stats.per_worker.size(); ++w) {
    ordered_json e = endpoint(stats.per_worker[w]);
    e["tile_id"] = w;
    j["per_worker"].push_back(std::move(e));
  }
  j["compositor"] = endpoint(stats.compositor);
  j["samples_per_ray_mean"] = stats.samples_per_ray_mean();
  j["samples_per_ray_per_worker_mean"] = stats.samples_per_ray_per_worker_mean();
  return j.dump(2) + "\n";
}

std::string dump_balance(const BalanceReport& report) {
  auto ratio = [](double r) { return std::isfinite(r) ? ordered_json(r) : ordered_json(nullptr); };
  ordered_json j;
  j["tiles"] = report.point_counts.size();
  j["point_counts"] = report.point_counts;
  j["point_ratio"] = ratio(report.point_ratio);
  if (report.sample_counts) j["sample_counts"] = *report.sample_counts;
  if (report.sample_ratio) j["sample_ratio"] = ratio(*report.sample_ratio);
  return j.dump(2) + "\n";
}

std::string bench_csv(const BenchReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "dt,S_bar,protocol,scalars_total\n";
  for (const BenchRow& r : report.rows) {
    out << r.dt << ',' << r.samples_per_ray_per_worker << ',' << to_string(r.protocol) << ',' << r.scalars_total
        << '\n';
  }
  out << "# predicted_slope," << report.predicted_slope << '\n';
  if (report.fitted_slope) out << "# fitted_slope," << *report.fitted_slope << '\n';
  out << "# worst_model_error," << report.worst_model_error << '\n';
  out << "# within_tolerance," << (report.within_tolerance ? "true" : "false") << '\n';
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::Io, "cannot read " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

}  // namespace volray
