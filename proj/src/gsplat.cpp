#include "earthvox/gsplat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "earthvox/error.hpp"

namespace earthvox {

namespace {

constexpr std::array<const char*, 23> kPlyProperties{
    "x",       "y",       "z",       "scale_0",  "scale_1",  "scale_2",  "opacity", "rot_0",
    "rot_1",   "rot_2",   "rot_3",   "f_dc_0",   "f_dc_1",   "f_dc_2",   "f_rest_0", "f_rest_1",
    "f_rest_2", "f_rest_3", "f_rest_4", "f_rest_5", "f_rest_6", "f_rest_7", "f_rest_8"};

std::array<float, 23> flatten(const GaussianPrimitive2D& p) {
  std::array<float, 23> v{};
  std::copy(p.position.begin(), p.position.end(), v.begin());
  std::copy(p.scale.begin(), p.scale.end(), v.begin() + 3);
  v[6] = p.opacity;
  std::copy(p.rotation.begin(), p.rotation.end(), v.begin() + 7);
  for (std::size_t ch = 0; ch < 3; ++ch) v[11 + ch] = p.sh[ch];
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t k = 0; k < 3; ++k) v[14 + ch * 3 + k] = p.sh[(k + 1) * 3 + ch];
  return v;
}

GaussianPrimitive2D unflatten(const std::array<float, 23>& v) {
  GaussianPrimitive2D p;
  std::copy(v.begin(), v.begin() + 3, p.position.begin());
  std::copy(v.begin() + 3, v.begin() + 6, p.scale.begin());
  p.opacity = v[6];
  std::copy(v.begin() + 7, v.begin() + 11, p.rotation.begin());
  for (std::size_t ch = 0; ch < 3; ++ch) p.sh[ch] = v[11 + ch];
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t k = 0; k < 3; ++k) p.sh[(k + 1) * 3 + ch] = v[14 + ch * 3 + k];
  return p;
}

std::string format_float(float value) {
  // Shortest representation that parses back to the same float.
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<GaussianPrimitive2D> decode_primitives(std::span<const float> raw,
                                                   const SparseVoxelGrid& coords,
                                                   double voxel_size) {
  const std::size_t per_voxel = kPrimitivesPerVoxel * kRawPrimitiveWidth;
  if (raw.size() != coords.size() * per_voxel) {
    throw Error("raw primitive block has " + std::to_string(raw.size()) + " values, expected " +
                std::to_string(coords.size()) + " x 16 x 23");
  }
  if (!(voxel_size > 0.0)) throw Error("voxel size must be positive");
  const float half = static_cast<float>(voxel_size / 2.0);
  const float max_scale = static_cast<float>(4.0 * voxel_size);
  const float opacity_hi = std::nextafter(1.0f, 0.0f);
  const float opacity_lo = std::numeric_limits<float>::min();

  std::vector<GaussianPrimitive2D> out;
  out.reserve(coords.size() * kPrimitivesPerVoxel);
  for (std::size_t v = 0; v < coords.size(); ++v) {
    const Coord3& c = coords.coords()[v];
    const std::array<double, 3> center{(c.x + 0.5) * voxel_size, (c.y + 0.5) * voxel_size,
                                       (c.z + 0.5) * voxel_size};
    for (std::size_t k = 0; k < kPrimitivesPerVoxel; ++k) {
      const float* r = raw.data() + v * per_voxel + k * kRawPrimitiveWidth;
      GaussianPrimitive2D p;
      for (std::size_t a = 0; a < 3; ++a) {
        p.position[a] = static_cast<float>(center[a] + static_cast<double>(std::tanh(r[a]) * half));
        p.scale[a] = std::clamp(std::exp(r[3 + a]), 1e-6f, max_scale);
      }
      const double logistic = 1.0 / (1.0 + std::exp(-static_cast<double>(r[6])));
      p.opacity = std::clamp(static_cast<float>(logistic), opacity_lo, opacity_hi);
      const double qn = std::sqrt(static_cast<double>(r[7]) * r[7] + static_cast<double>(r[8]) * r[8] +
                                  static_cast<double>(r[9]) * r[9] + static_cast<double>(r[10]) * r[10]);
      if (qn > 0.0 && std::isfinite(qn)) {
        for (std::size_t q = 0; q < 4; ++q) p.rotation[q] = static_cast<float>(r[7 + q] / qn);
      }
      std::copy(r + 11, r + 23, p.sh.begin());
      out.push_back(p);
    }
  }
  return out;
}

std::string encode_ply(std::span<const GaussianPrimitive2D> primitives) {
  std::string out;
  out += "ply\nformat ascii 1.0\nelement vertex " + std::to_string(primitives.size()) + "\n";
  for (const char* name : kPlyProperties) out += std::string("property float ") + name + "\n";
  out += "end_header\n";
  for (const auto& p : primitives) {
    const auto v = flatten(p);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i != 0) out += ' ';
      out += format_float(v[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<GaussianPrimitive2D> decode_ply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw FormatError("ply: unexpected end of file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next_line() != "ply") throw FormatError("ply: missing magic");
  if (next_line() != "format ascii 1.0") throw FormatError("ply: only ASCII 1.0 is supported");
  std::size_t count = 0;
  bool have_count = false;
  std::size_t prop = 0;
  for (;;) {
    next_line();
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment") continue;
    if (word == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex" || !ls) throw FormatError("ply: expected a single vertex element");
      have_count = true;
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      if (prop >= kPlyProperties.size() || type != "float" || name != kPlyProperties[prop]) {
        throw FormatError("ply: unexpected property '" + line + "'");
      }
      ++prop;
    } else {
      throw FormatError("ply: unexpected header line '" + line + "'");
    }
  }
  if (!have_count || prop != kPlyProperties.size()) throw FormatError("ply: incomplete header");
  std::vector<GaussianPrimitive2D> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    next_line();
    if (in.eof()) throw FormatError("ply: truncated vertex " + std::to_string(i));
    std::array<float, 23> v{};
    const char* pos = line.data();
    const char* end = line.data() + line.size();
    for (auto& value : v) {
      while (pos < end && *pos == ' ') ++pos;
      const auto res = std::from_chars(pos, end, value);
      if (res.ec != std::errc()) throw FormatError("ply: bad value in vertex " + std::to_string(i));
      pos = res.ptr;
    }
    while (pos < end && *pos == ' ') ++pos;
    if (pos != end) throw FormatError("ply: extra values in vertex " + std::to_string(i));
    out.push_back(unflatten(v));
  }
  return out;
}

void export_ply(std::span<const GaussianPrimitive2D> primitives, const std::filesystem::path& path) {
  const std::string text = encode_ply(primitives);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("ply: cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("ply: write failed for " + path.string());
}

std::vector<GaussianPrimitive2D> import_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("ply: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ply(text);
}

}  // namespace earthvox
