#include "earthvox/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <png.h>

#include "earthvox/error.hpp"

namespace earthvox {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "raw array I/O assumes a little-endian host");

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
std::vector<T> read_array(const fs::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() % sizeof(T) != 0) {
    throw FormatError(path.string() + ": size is not a multiple of " + std::to_string(sizeof(T)));
  }
  std::vector<T> out(bytes.size() / sizeof(T));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

template <typename T>
void write_array(std::span<const T> values, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
  if (!out) throw Error("write failed for " + path.string());
}

template <typename T>
std::vector<T> read_sized(const fs::path& path, std::size_t expected, const std::string& what) {
  auto v = read_array<T>(path);
  if (v.size() != expected) {
    throw FormatError(what + " " + path.string() + " holds " + std::to_string(v.size()) +
                      " values, expected " + std::to_string(expected));
  }
  return v;
}

std::vector<std::array<double, 3>> to_triples(const std::vector<float>& flat) {
  std::vector<std::array<double, 3>> out(flat.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]};
  }
  return out;
}

std::vector<float> from_triples(const std::vector<std::array<double, 3>>& triples) {
  std::vector<float> flat;
  flat.reserve(triples.size() * 3);
  for (const auto& t : triples)
    for (double v : t) flat.push_back(static_cast<float>(v));
  return flat;
}

}  // namespace

std::vector<float> read_f32(const fs::path& path) { return read_array<float>(path); }
std::vector<std::int32_t> read_i32(const fs::path& path) { return read_array<std::int32_t>(path); }
std::vector<std::uint8_t> read_u8(const fs::path& path) { return read_array<std::uint8_t>(path); }
void write_f32(std::span<const float> values, const fs::path& path) { write_array(values, path); }
void write_i32(std::span<const std::int32_t> values, const fs::path& path) { write_array(values, path); }
void write_u8(std::span<const std::uint8_t> values, const fs::path& path) { write_array(values, path); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const json& value, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << value.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

json pose_to_json(const CameraPose& pose, const PinholeCamera& camera) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(pose.rotation(r, c));
  return json{{"position", {pose.position.x(), pose.position.y(), pose.position.z()}},
              {"rotation", rot},
              {"fx", camera.fx},
              {"fy", camera.fy},
              {"cx", camera.cx},
              {"cy", camera.cy},
              {"width", camera.width},
              {"height", camera.height}};
}

std::pair<CameraPose, PinholeCamera> pose_from_json(const json& j) {
  try {
    CameraPose pose;
    const auto& p = j.at("position");
    const auto& r = j.at("rotation");
    if (p.size() != 3 || r.size() != 9) throw FormatError("pose: bad position/rotation arity");
    pose.position = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col) pose.rotation(row, col) = r[row * 3 + col].get<double>();
    PinholeCamera cam;
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    return {pose, cam};
  } catch (const json::exception& e) {
    throw FormatError(std::string("pose: ") + e.what());
  }
}

json poses_to_json(std::span<const CameraPose> poses, const PinholeCamera& camera) {
  json arr = json::array();
  for (const auto& p : poses) arr.push_back(pose_to_json(p, camera));
  return arr;
}

std::vector<SceneRecord> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<SceneRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      SceneRecord r;
      r.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      r.max_height = j.at("max_height").get<double>();
      r.source = j.value("source", std::string{});
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

HeightField read_height_field(const fs::path& path) {
  fs::path header = path;
  if (path.extension() != ".json") header = fs::path(path).replace_extension(".json");
  const json j = read_json(header);
  HeightField hf;
  try {
    hf.rows = j.at("rows").get<std::size_t>();
    hf.cols = j.at("cols").get<std::size_t>();
    hf.cell_size = j.value("cell_size", 1.0);
    if (j.contains("origin")) {
      hf.origin_x = j["origin"].at(0).get<double>();
      hf.origin_y = j["origin"].at(1).get<double>();
    }
  } catch (const json::exception& e) {
    throw FormatError(header.string() + ": " + e.what());
  }
  fs::path data;
  if (j.contains("data")) {
    data = header.parent_path() / j["data"].get<std::string>();
  } else if (path.extension() != ".json") {
    data = path;
  } else {
    data = fs::path(header).replace_extension(".f32");
  }
  hf.heights = read_sized<float>(data, hf.rows * hf.cols, "height raster");
  return hf;
}

void write_height_field(const HeightField& field, const fs::path& header_path) {
  const fs::path data = fs::path(header_path).replace_extension(".f32");
  write_f32(field.heights, data);
  write_json(json{{"rows", field.rows},
                  {"cols", field.cols},
                  {"cell_size", field.cell_size},
                  {"origin", {field.origin_x, field.origin_y}},
                  {"data", data.filename().string()}},
             header_path);
}

SemanticMap read_semantic_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw FormatError("png: " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError("png: " + path.string() + ": " + image.message);
  }
  SemanticMap map;
  map.rows = image.height;
  map.cols = image.width;
  map.ids.resize(map.rows * map.cols);
  for (std::size_t i = 0; i < map.ids.size(); ++i) {
    const int id = semantic_id_from_color(pixels[3 * i], pixels[3 * i + 1], pixels[3 * i + 2]);
    if (id < 0) {
      throw FormatError("png: " + path.string() + ": pixel " + std::to_string(i) +
                        " is not a semantic palette color");
    }
    map.ids[i] = static_cast<std::uint8_t>(id);
  }
  return map;
}

void write_semantic_png(const SemanticMap& map, const fs::path& path) {
  std::vector<png_byte> pixels(map.rows * map.cols * 3, 0);
  for (std::size_t i = 0; i < map.ids.size(); ++i) {
    if (map.ids[i] == 0) continue;
    const auto rgb = semantic_color(map.ids[i]);
    std::copy(rgb.begin(), rgb.end(), pixels.begin() + static_cast<std::ptrdiff_t>(3 * i));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(map.cols);
  image.height = static_cast<png_uint_32>(map.rows);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, pixels.data(), 0, nullptr)) {
    throw Error("png: cannot write " + path.string() + ": " + image.message);
  }
}

ViewScene read_view_scene(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest)) throw Error("no manifest.json in " + dir.string());
  const json j = read_json(manifest);
  ViewScene scene;
  try {
    const auto h = j.at("height").get<std::size_t>();
    const auto w = j.at("width").get<std::size_t>();
    const auto f = j.at("channels").get<std::size_t>();
    const auto& el = j.at("elements");
    const auto n = el.at("count").get<std::size_t>();
    scene.elements.positions =
        to_triples(read_sized<float>(dir / el.at("positions").get<std::string>(), n * 3, "positions"));
    scene.elements.normals =
        to_triples(read_sized<float>(dir / el.at("normals").get<std::string>(), n * 3, "normals"));
    if (j.contains("config")) {
      const auto& c = j["config"];
      scene.config.z_far = c.value("z_far", scene.config.z_far);
      scene.config.tau_s = c.value("tau_s", scene.config.tau_s);
      scene.config.tau_d = c.value("tau_d", scene.config.tau_d);
      scene.config.eps = c.value("eps", scene.config.eps);
    }
    if (j.contains("voxels")) scene.voxels = dir / j["voxels"].get<std::string>();
    const auto& views = j.at("views");
    if (views.empty()) throw Error("view manifest lists no views");
    for (const auto& v : views) {
      ViewSample s;
      s.features = FeatureMap(h, w, f);
      s.features.data = read_sized<float>(dir / v.at("features").get<std::string>(), h * w * f, "features");
      s.depth = read_sized<float>(dir / v.at("depth").get<std::string>(), h * w, "depth");
      s.element_index = read_sized<std::int32_t>(dir / v.at("index").get<std::string>(), h * w, "index");
      if (v.contains("mask")) {
        s.mask = read_sized<std::uint8_t>(dir / v["mask"].get<std::string>(), h * w, "mask");
      }
      if (v.contains("origin")) {
        const auto& o = v["origin"];
        s.origin = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
      } else {
        const auto& m = v.at("c2w");
        if (m.size() != 16 && m.size() != 12) throw FormatError("c2w must hold 12 or 16 values");
        s.origin = {m[3].get<double>(), m[7].get<double>(), m[11].get<double>()};
      }
      scene.views.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  return scene;
}

void write_view_scene(const ViewScene& scene, const fs::path& dir) {
  if (scene.views.empty()) throw Error("scene has no views");
  fs::create_directories(dir);
  const auto& first = scene.views.front().features;
  json views = json::array();
  for (std::size_t i = 0; i < scene.views.size(); ++i) {
    const auto& v = scene.views[i];
    const std::string stem = "view" + std::to_string(i);
    write_f32(v.features.data, dir / (stem + "_features.f32"));
    write_f32(v.depth, dir / (stem + "_depth.f32"));
    write_i32(v.element_index, dir / (stem + "_index.i32"));
    json entry{{"features", stem + "_features.f32"},
               {"depth", stem + "_depth.f32"},
               {"index", stem + "_index.i32"},
               {"origin", {v.origin[0], v.origin[1], v.origin[2]}}};
    if (!v.mask.empty()) {
      write_u8(v.mask, dir / (stem + "_mask.u8"));
      entry["mask"] = stem + "_mask.u8";
    }
    views.push_back(std::move(entry));
  }
  write_f32(from_triples(scene.elements.positions), dir / "positions.f32");
  write_f32(from_triples(scene.elements.normals), dir / "normals.f32");
  json manifest{{"height", first.height},
                {"width", first.width},
                {"channels", first.channels},
                {"elements", {{"count", scene.elements.size()},
                              {"positions", "positions.f32"},
                              {"normals", "normals.f32"}}},
                {"config", {{"z_far", scene.config.z_far},
                            {"tau_s", scene.config.tau_s},
                            {"tau_d", scene.config.tau_d},
                            {"eps", scene.config.eps}}},
                {"views", views}};
  if (!scene.voxels.empty()) manifest["voxels"] = scene.voxels.filename().string();
  write_json(manifest, dir / "manifest.json");
}

json diagnostics_to_json(const GenerationDiagnostics& d) {
  return json{{"steps", d.steps},
              {"dense", d.dense_count},
              {"coarse", d.coarse_count},
              {"roughened", d.roughened_count},
              {"kept", d.kept_count},
              {"empty", d.empty}};
}

}  // namespace earthvox
