#include <cstring>
#include <optional>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "earthvox/aggregate.hpp"
#include "earthvox/augment.hpp"
#include "earthvox/dataset.hpp"
#include "earthvox/error.hpp"
#include "earthvox/flow.hpp"
#include "earthvox/geo.hpp"
#include "earthvox/gsplat.hpp"
#include "earthvox/pss.hpp"
#include "earthvox/rng.hpp"
#include "earthvox/svox.hpp"

namespace py = pybind11;
using namespace earthvox;

namespace {

template <typename T>
using CArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

std::vector<Coord3> coords_from(const CArray<std::int32_t>& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw py::value_error("coords must have shape (N, 3)");
  std::vector<Coord3> out(static_cast<std::size_t>(a.shape(0)));
  std::memcpy(out.data(), a.data(), out.size() * sizeof(Coord3));
  return out;
}

py::array_t<std::int32_t> coords_to(const SparseVoxelGrid& g) {
  py::array_t<std::int32_t> out({static_cast<py::ssize_t>(g.size()), py::ssize_t{3}});
  std::memcpy(out.mutable_data(), g.coords().data(), g.size() * sizeof(Coord3));
  return out;
}

py::array_t<float> features_to(const SparseVoxelGrid& g) {
  py::array_t<float> out({static_cast<py::ssize_t>(g.size()), static_cast<py::ssize_t>(g.channels())});
  if (!g.features().empty()) std::memcpy(out.mutable_data(), g.features().data(), g.features().size_bytes());
  return out;
}

SparseVoxelGrid make_grid(const CArray<std::int32_t>& coords, std::optional<CArray<float>> features,
                          std::uint32_t resolution, float voxel_size) {
  auto c = coords_from(coords);
  const GridSpec spec{resolution, voxel_size};
  if (!features) return SparseVoxelGrid::canonicalize(std::move(c), spec);
  const auto& f = *features;
  if (f.ndim() != 2 || f.shape(0) != static_cast<py::ssize_t>(c.size())) {
    throw py::value_error("features must have shape (N, C)");
  }
  std::vector<float> v(f.data(), f.data() + f.size());
  return SparseVoxelGrid::canonicalize(std::move(c), std::move(v), static_cast<std::size_t>(f.shape(1)), spec);
}

SetOp parse_set_op(const std::string& s) {
  if (s == "union") return SetOp::Union;
  if (s == "intersection") return SetOp::Intersection;
  if (s == "difference") return SetOp::Difference;
  throw py::value_error("unknown set op '" + s + "'");
}

MorphMode parse_morph(const std::string& s) {
  if (s == "dilate") return MorphMode::Dilate;
  if (s == "erode") return MorphMode::Erode;
  throw py::value_error("unknown morphology mode '" + s + "'");
}

JaggedMode parse_jagged(const std::string& s) {
  if (s == "symmetric") return JaggedMode::Symmetric;
  if (s == "half-open") return JaggedMode::HalfOpen;
  throw py::value_error("unknown jagged mode '" + s + "'");
}

ViewSample view_from(const py::dict& d) {
  ViewSample v;
  const auto f = d["features"].cast<CArray<float>>();
  if (f.ndim() != 3) throw py::value_error("view features must have shape (H, W, C)");
  const auto h = static_cast<std::size_t>(f.shape(0)), w = static_cast<std::size_t>(f.shape(1));
  v.features = FeatureMap(h, w, static_cast<std::size_t>(f.shape(2)));
  std::memcpy(v.features.data.data(), f.data(), v.features.data.size() * sizeof(float));
  const auto depth = d["depth"].cast<CArray<float>>();
  const auto index = d["index"].cast<CArray<std::int32_t>>();
  if (static_cast<std::size_t>(depth.size()) != h * w || static_cast<std::size_t>(index.size()) != h * w) {
    throw py::value_error("depth and index must have shape (H, W)");
  }
  v.depth.assign(depth.data(), depth.data() + depth.size());
  v.element_index.assign(index.data(), index.data() + index.size());
  if (d.contains("mask") && !d["mask"].is_none()) {
    const auto m = d["mask"].cast<CArray<std::uint8_t>>();
    v.mask.assign(m.data(), m.data() + m.size());
  }
  v.origin = d["origin"].cast<std::array<double, 3>>();
  return v;
}

std::vector<std::array<double, 3>> rows3(const CArray<double>& a, const char* what) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw py::value_error(std::string(what) + " must have shape (N, 3)");
  std::vector<std::array<double, 3>> out(static_cast<std::size_t>(a.shape(0)));
  std::memcpy(out.data(), a.data(), out.size() * sizeof(out[0]));
  return out;
}

static_assert(sizeof(GaussianPrimitive2D) == kRawPrimitiveWidth * sizeof(float));

}  // namespace

PYBIND11_MODULE(_earthvox, m) {
  m.doc() = "Sparse voxel machinery for aerial scene generation";

  auto& base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  py::class_<SparseVoxelGrid>(m, "SparseVoxelGrid")
      .def(py::init(&make_grid), py::arg("coords"), py::arg("features") = py::none(),
           py::arg("resolution") = 0, py::arg("voxel_size") = 1.0f)
      .def_property_readonly("coords", &coords_to)
      .def_property_readonly("features", &features_to)
      .def_property_readonly("resolution", &SparseVoxelGrid::resolution)
      .def_property_readonly("voxel_size", &SparseVoxelGrid::voxel_size)
      .def_property_readonly("channels", &SparseVoxelGrid::channels)
      .def("__len__", &SparseVoxelGrid::size)
      .def("__eq__", [](const SparseVoxelGrid& a, const SparseVoxelGrid& b) { return a == b; })
      .def("__contains__", [](const SparseVoxelGrid& g, std::array<std::int32_t, 3> c) {
        return g.contains({c[0], c[1], c[2]});
      })
      .def("__repr__", [](const SparseVoxelGrid& g) {
        return "SparseVoxelGrid(size=" + std::to_string(g.size()) + ", channels=" +
               std::to_string(g.channels()) + ", resolution=" + std::to_string(g.resolution()) + ")";
      });

  m.def("set_op", [](const SparseVoxelGrid& a, const SparseVoxelGrid& b, const std::string& op) {
    return set_op(a, b, parse_set_op(op));
  }, py::arg("a"), py::arg("b"), py::arg("op"));
  m.def("morph", [](const SparseVoxelGrid& g, int k, const std::string& mode) {
    return morph(g, k, parse_morph(mode));
  }, py::arg("grid"), py::arg("kernel"), py::arg("mode"));
  m.def("downsample_coords", &downsample_coords, py::arg("grid"), py::arg("factor"));
  m.def("upsample_coords", &upsample_coords, py::arg("grid"), py::arg("factor"));
  m.def("iou", &iou, py::arg("a"), py::arg("b"));

  m.def("encode_svox", [](const SparseVoxelGrid& g) {
    const auto b = encode_svox(g);
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
  });
  m.def("decode_svox", [](const py::bytes& data) {
    const std::string s = data;
    return decode_svox(std::vector<std::uint8_t>(s.begin(), s.end()));
  });
  m.def("read_svox", &read_svox, py::arg("path"));
  m.def("write_svox", &write_svox, py::arg("grid"), py::arg("path"));

  m.def("sparse_pixel_shuffle", [](const SparseVoxelGrid& g, int factor) {
    auto p = sparse_pixel_shuffle(g, factor);
    return py::make_tuple(p.candidates, py::array_t<std::uint32_t>(static_cast<py::ssize_t>(p.parents.size()), p.parents.data()));
  }, py::arg("grid"), py::arg("factor") = 2, "Returns (candidates, parent indices).");
  m.def("pseudo_label_targets", [](const SparseVoxelGrid& candidates, const SparseVoxelGrid& gt) {
    const PseudoSparseGrid p{candidates, std::vector<std::uint32_t>(candidates.size()), 2};
    const auto labels = pseudo_label_targets(p, gt);
    return py::array_t<std::uint8_t>(static_cast<py::ssize_t>(labels.size()), labels.data());
  }, py::arg("candidates"), py::arg("gt"));
  m.def("prune_by_logits", [](const SparseVoxelGrid& candidates, const CArray<float>& logits, double threshold) {
    const PseudoSparseGrid p{candidates, std::vector<std::uint32_t>(candidates.size()), 2};
    return prune_by_logits(p, std::span<const float>(logits.data(), static_cast<std::size_t>(logits.size())), threshold);
  }, py::arg("candidates"), py::arg("logits"), py::arg("threshold") = 0.0);
  m.def("coarse_threshold", [](const CArray<double>& dense) {
    if (dense.ndim() != 3 || dense.shape(0) != dense.shape(1) || dense.shape(1) != dense.shape(2)) {
      throw py::value_error("dense field must be a cube");
    }
    return coarse_threshold(std::span<const double>(dense.data(), static_cast<std::size_t>(dense.size())),
                            static_cast<std::uint32_t>(dense.shape(0)));
  }, py::arg("dense"));
  m.def("latent_magnitude_filter", &latent_magnitude_filter, py::arg("latents"), py::arg("tau") = 0.3,
        py::arg("frac") = 0.5);

  m.def("scatter_aggregate", [](const py::list& views, const CArray<double>& positions, const CArray<double>& normals,
                                double z_far, double tau_s, double tau_d, double eps, unsigned threads) {
    std::vector<ViewSample> vs;
    for (const auto& v : views) vs.push_back(view_from(v.cast<py::dict>()));
    const ElementGeometry el{rows3(positions, "positions"), rows3(normals, "normals")};
    const AggregationConfig cfg{z_far, tau_s, tau_d, eps};
    std::vector<float> out;
    {
      py::gil_scoped_release release;
      out = scatter_aggregate(vs, el, cfg, threads);
    }
    const auto f = vs.empty() ? 0 : vs.front().features.channels;
    py::array_t<float> arr({static_cast<py::ssize_t>(el.size()), static_cast<py::ssize_t>(f)});
    std::memcpy(arr.mutable_data(), out.data(), out.size() * sizeof(float));
    return arr;
  }, py::arg("views"), py::arg("positions"), py::arg("normals"), py::arg("z_far") = 2.0, py::arg("tau_s") = 3.0,
     py::arg("tau_d") = 3.0, py::arg("eps") = 1e-6, py::arg("threads") = 1);

  m.def("geodetic_to_ecef", [](double lat, double lon, double h) {
    const Vec3 p = geodetic_to_ecef({lat, lon, h});
    return std::array<double, 3>{p.x(), p.y(), p.z()};
  }, py::arg("lat_deg"), py::arg("lon_deg"), py::arg("height_m") = 0.0);
  m.def("ecef_to_enu", [](std::array<double, 3> p, double lat, double lon, double h) {
    const Vec3 e = ecef_to_enu({p[0], p[1], p[2]}, {lat, lon, h});
    return std::array<double, 3>{e.x(), e.y(), e.z()};
  }, py::arg("ecef"), py::arg("lat_deg"), py::arg("lon_deg"), py::arg("height_m") = 0.0);
  m.def("enu_to_ecef", [](std::array<double, 3> p, double lat, double lon, double h) {
    const Vec3 e = enu_to_ecef({p[0], p[1], p[2]}, {lat, lon, h});
    return std::array<double, 3>{e.x(), e.y(), e.z()};
  }, py::arg("enu"), py::arg("lat_deg"), py::arg("lon_deg"), py::arg("height_m") = 0.0);

  m.def("shift_time", &shift_time, py::arg("u"), py::arg("shift"));
  m.def("make_timesteps", [](int steps, double shift) { return make_timesteps({steps, shift}); },
        py::arg("steps") = 25, py::arg("shift") = 3.0);
  m.def("tile_starts", &tile_starts, py::arg("extent"), py::arg("window"), py::arg("overlap"));
  m.def("generate", [](const std::string& field, std::optional<SparseVoxelGrid> target, std::uint32_t resolution,
                       int steps, double shift, double cfg_scale, std::uint64_t seed) {
    const FieldKind kind = parse_field_kind(field);
    FieldParams cls, lat;
    if (kind == FieldKind::ShapeOracle) {
      if (!target) throw py::value_error("shape-oracle needs a target");
      cls.shape = lat.shape = *target;
      lat.outside = 0.0;
    } else if (kind == FieldKind::SeededRandom) {
      cls.seed = seed;
      lat.seed = mix64(seed);
    } else {
      throw py::value_error("generate supports shape-oracle and seeded-random fields");
    }
    GenerationConfig cfg;
    cfg.resolution = resolution;
    cfg.schedule = {steps, shift};
    cfg.guidance.scale = cfg_scale;
    cfg.seed = seed;
    const auto cf = make_builtin_field(kind, cls), lf = make_builtin_field(kind, lat);
    py::gil_scoped_release release;
    return coarse_to_fine_generate(*cf, *lf, nullptr, cfg).latents;
  }, py::arg("field"), py::arg("target") = py::none(), py::arg("resolution") = 256, py::arg("steps") = 25,
     py::arg("shift") = 3.0, py::arg("cfg") = 3.0, py::arg("seed") = 0,
     "Coarse-to-fine generation with a built-in field; returns the latent grid at resolution / 8.");

  m.def("jagged_perturb", [](const SparseVoxelGrid& g, std::uint64_t seed, const std::string& mode) {
    Rng rng(seed);
    return jagged_perturb(g, rng, parse_jagged(mode));
  }, py::arg("grid"), py::arg("seed"), py::arg("mode") = "symmetric");
  m.def("roughen", &roughen, py::arg("grid"), py::arg("kernel") = 3, py::arg("factor") = 2);
  m.def("normal_drop", [](const SparseVoxelGrid& g, std::uint64_t seed, double threshold, int kernel, double noise) {
    Rng rng(seed);
    return normal_drop(g, rng, {threshold, kernel, noise});
  }, py::arg("grid"), py::arg("seed"), py::arg("threshold") = 0.8, py::arg("kernel") = 3, py::arg("noise_deg") = 5.0);

  m.def("height_split", [](const std::vector<std::string>& ids, const std::vector<double>& heights, std::uint64_t seed,
                           int groups, double ratio, std::size_t min_val) {
    if (ids.size() != heights.size()) throw py::value_error("ids and heights differ in length");
    std::vector<SceneRecord> r;
    for (std::size_t i = 0; i < ids.size(); ++i) r.push_back({ids[i], heights[i], ""});
    Rng rng(seed);
    auto s = height_split(r, {groups, ratio, min_val}, rng);
    return py::make_tuple(s.train, s.val);
  }, py::arg("ids"), py::arg("heights"), py::arg("seed") = 0, py::arg("groups") = 20, py::arg("ratio") = 1.0 / 120.0,
     py::arg("min_val") = 8, "Returns (train ids, validation ids).");
  m.def("sample_weights", [](const std::vector<double>& heights, double alpha, double clamp, double divisor) {
    std::vector<SceneRecord> r;
    for (double h : heights) r.push_back({"", h, ""});
    return sample_weights(r, {alpha, clamp, divisor});
  }, py::arg("heights"), py::arg("alpha") = 1.0, py::arg("clamp") = 200.0, py::arg("divisor") = 10.0);

  // Primitives travel as (N, 23) arrays: position, scale, opacity, rotation, sh.
  m.def("decode_ply", [](const std::string& text) {
    const auto p = decode_ply(text);
    py::array_t<float> out({static_cast<py::ssize_t>(p.size()), static_cast<py::ssize_t>(kRawPrimitiveWidth)});
    std::memcpy(out.mutable_data(), p.data(), p.size() * sizeof(GaussianPrimitive2D));
    return out;
  }, py::arg("text"));
  m.def("encode_ply", [](const CArray<float>& a) {
    if (a.ndim() != 2 || a.shape(1) != static_cast<py::ssize_t>(kRawPrimitiveWidth)) {
      throw py::value_error("primitives must have shape (N, 23)");
    }
    std::vector<GaussianPrimitive2D> p(static_cast<std::size_t>(a.shape(0)));
    std::memcpy(p.data(), a.data(), p.size() * sizeof(GaussianPrimitive2D));
    return encode_ply(p);
  }, py::arg("primitives"));
}
