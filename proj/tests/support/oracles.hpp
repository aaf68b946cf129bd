#pragma once

// Reference implementations used by unit and acceptance tests. They favor
// obviousness over speed and share no code with the library beyond its
// public types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "earthvox/aggregate.hpp"
#include "earthvox/gsplat.hpp"
#include "earthvox/voxel_grid.hpp"

namespace oracle {

using Key = std::tuple<int, int, int>;
using KeySet = std::set<Key>;

inline KeySet keys(const earthvox::SparseVoxelGrid& g) {
  KeySet s;
  for (const auto& c : g.coords()) s.emplace(c.x, c.y, c.z);
  return s;
}

inline earthvox::SparseVoxelGrid grid_from(const KeySet& s, earthvox::GridSpec spec = {}) {
  std::vector<earthvox::Coord3> coords;
  for (const auto& [x, y, z] : s) coords.push_back({x, y, z});
  return earthvox::SparseVoxelGrid::canonicalize(std::move(coords), spec);
}

inline KeySet random_keys(std::mt19937_64& gen, int side, double density) {
  std::bernoulli_distribution occupied(density);
  KeySet s;
  for (int x = 0; x < side; ++x)
    for (int y = 0; y < side; ++y)
      for (int z = 0; z < side; ++z)
        if (occupied(gen)) s.emplace(x, y, z);
  return s;
}

inline bool inside(const Key& k, int resolution) {
  if (resolution == 0) return true;
  const auto [x, y, z] = k;
  return x >= 0 && y >= 0 && z >= 0 && x < resolution && y < resolution && z < resolution;
}

// Cube neighborhood test, written as a distance check rather than loops.
inline KeySet dilate(const KeySet& s, int k, int resolution) {
  const int r = k / 2;
  KeySet out;
  if (s.empty()) return out;
  int lo = 1 << 30, hi = -(1 << 30);
  for (const auto& [x, y, z] : s) {
    lo = std::min({lo, x, y, z});
    hi = std::max({hi, x, y, z});
  }
  for (int x = lo - r; x <= hi + r; ++x)
    for (int y = lo - r; y <= hi + r; ++y)
      for (int z = lo - r; z <= hi + r; ++z) {
        const Key cand{x, y, z};
        if (!inside(cand, resolution)) continue;
        for (const auto& [a, b, c] : s) {
          if (std::max({std::abs(a - x), std::abs(b - y), std::abs(c - z)}) <= r) {
            out.insert(cand);
            break;
          }
        }
      }
  return out;
}

inline KeySet erode(const KeySet& s, int k, int resolution) {
  const int r = k / 2;
  KeySet out;
  for (const auto& key : s) {
    const auto [x, y, z] = key;
    bool full = true;
    for (int dx = -r; dx <= r; ++dx)
      for (int dy = -r; dy <= r; ++dy)
        for (int dz = -r; dz <= r; ++dz) {
          const Key n{x + dx, y + dy, z + dz};
          if (inside(n, resolution) && !s.count(n)) full = false;
        }
    if (full) out.insert(key);
  }
  return out;
}

inline KeySet set_union(const KeySet& a, const KeySet& b) {
  KeySet out = a;
  out.insert(b.begin(), b.end());
  return out;
}
inline KeySet set_intersection(const KeySet& a, const KeySet& b) {
  KeySet out;
  for (const auto& k : a)
    if (b.count(k)) out.insert(k);
  return out;
}
inline KeySet set_difference(const KeySet& a, const KeySet& b) {
  KeySet out;
  for (const auto& k : a)
    if (!b.count(k)) out.insert(k);
  return out;
}

// Per-element brute force over every pixel of every view, without the
// library's per-view partials.
inline std::vector<double> brute_aggregate(const std::vector<earthvox::ViewSample>& views,
                                           const earthvox::ElementGeometry& el,
                                           const earthvox::AggregationConfig& cfg) {
  const std::size_t n = el.size();
  const std::size_t f = views.empty() ? 0 : views.front().features.channels;
  std::vector<double> out(n * f, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> num(f, 0.0);
    double den = 0.0;
    for (const auto& v : views) {
      for (std::size_t p = 0; p < v.depth.size(); ++p) {
        if (v.element_index[p] != static_cast<std::int32_t>(j)) continue;
        if (!v.mask.empty() && v.mask[p] == 0) continue;
        const double d = std::clamp(static_cast<double>(v.depth[p]), 0.0, cfg.z_far);
        const double ds = std::clamp(1.0 - d / cfg.z_far, 0.0, 1.0);
        double dir[3];
        double len = 0.0;
        for (int a = 0; a < 3; ++a) {
          dir[a] = v.origin[a] - el.positions[j][a];
          len += dir[a] * dir[a];
        }
        len = std::sqrt(len);
        double cosv = 0.0;
        if (len > 0.0)
          for (int a = 0; a < 3; ++a) cosv += dir[a] / len * el.normals[j][a];
        const double w = std::pow(ds, cfg.tau_d) * std::pow(std::min(1.0, std::abs(cosv)), cfg.tau_s);
        for (std::size_t c = 0; c < f; ++c) num[c] += w * v.features.data[p * f + c];
        den += w;
      }
    }
    for (std::size_t c = 0; c < f; ++c) out[j * f + c] = num[c] / (den + cfg.eps);
  }
  return out;
}

// Random scene: elements on the unit cube, unit normals, views at random
// origins; pixels hit random elements or nothing.
inline std::pair<std::vector<earthvox::ViewSample>, earthvox::ElementGeometry> random_scene(
    std::mt19937_64& gen, std::size_t views, std::size_t elements, std::size_t h, std::size_t w,
    std::size_t channels, bool with_mask = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<float> depth(-0.2f, 2.5f);
  std::uniform_int_distribution<std::int32_t> idx(-1, static_cast<std::int32_t>(elements) - 1);
  std::normal_distribution<float> feat;
  earthvox::ElementGeometry el;
  for (std::size_t j = 0; j < elements; ++j) {
    el.positions.push_back({u(gen), u(gen), u(gen)});
    std::array<double, 3> n{u(gen), u(gen), u(gen)};
    double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    if (len < 1e-3) n = {0.0, 0.0, 1.0}, len = 1.0;
    for (auto& c : n) c /= len;
    el.normals.push_back(n);
  }
  std::vector<earthvox::ViewSample> out;
  for (std::size_t v = 0; v < views; ++v) {
    earthvox::ViewSample s;
    s.features = earthvox::FeatureMap(h, w, channels);
    for (auto& x : s.features.data) x = feat(gen);
    s.depth.resize(h * w);
    s.element_index.resize(h * w);
    for (auto& d : s.depth) d = depth(gen);
    for (auto& i : s.element_index) i = idx(gen);
    if (with_mask) {
      s.mask.resize(h * w);
      for (auto& m : s.mask) m = static_cast<std::uint8_t>(gen() & 1u);
    }
    s.origin = {3.0 * u(gen), 3.0 * u(gen), 3.0 + u(gen)};
    out.push_back(std::move(s));
  }
  return {std::move(out), std::move(el)};
}

// Geocentric coordinates through the reduced (parametric) latitude beta,
// tan(beta) = (1 - f) tan(phi):
//   X = (a cos(beta) + h cos(phi)) cos(lambda)
//   Z =  b sin(beta) + h sin(phi)
inline std::array<double, 3> geodetic_to_ecef_reduced(double lat_deg, double lon_deg, double h) {
  const double a = 6378137.0;
  const double f = 1.0 / 298.257223563;
  const double b = a * (1.0 - f);
  const double phi = lat_deg * std::numbers::pi / 180.0;
  const double lam = lon_deg * std::numbers::pi / 180.0;
  const double beta = std::atan2((1.0 - f) * std::sin(phi), std::cos(phi));
  const double p = a * std::cos(beta) + h * std::cos(phi);
  return {p * std::cos(lam), p * std::sin(lam), b * std::sin(beta) + h * std::sin(phi)};
}

// Minimal PLY reader that trusts nothing but the header's declared order.
struct PlyTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
};

inline PlyTable read_ply_reference(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  PlyTable t;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "element") {
      std::string kind;
      ls >> kind >> count;
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      t.names.push_back(name);
    }
  }
  for (std::size_t i = 0; i < count && std::getline(in, line); ++i) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    t.rows.push_back(row);
  }
  return t;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("earthvox_" + name + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& leaf) const { return path / leaf; }
};

}  // namespace oracle
