#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "earthvox/aggregate.hpp"
#include "earthvox/augment.hpp"
#include "earthvox/dataset.hpp"
#include "earthvox/error.hpp"
#include "earthvox/flow.hpp"
#include "earthvox/geo.hpp"
#include "earthvox/io.hpp"
#include "earthvox/rng.hpp"
#include "earthvox/svox.hpp"
#include "earthvox/voxel_grid.hpp"

namespace earthvox::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool quiet = false;
};

class Logger {
 public:
  Logger(std::ostream& err, const bool& quiet) : err_(err), quiet_(quiet) {}
  template <typename... Args>
  void operator()(const Args&... args) const {
    if (quiet_) return;
    err_ << "earthvox: ";
    (err_ << ... << args);
    err_ << '\n';
  }

 private:
  std::ostream& err_;
  const bool& quiet_;
};

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  if (values.size() != expected) {
    throw Error(std::string(what) + " needs " + std::to_string(expected) + " comma-separated values");
  }
  return values;
}

void ensure_parent(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw Error("output directory does not exist: " + parent.string());
  }
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsArgs {
  std::string pred, gt;
  int level = 0;
};

int cmd_metrics(const MetricsArgs& a, std::ostream& out) {
  if (a.level < 0 || a.level > 16) throw Error("--level must be in [0, 16]");
  SparseVoxelGrid pred = read_svox(a.pred);
  SparseVoxelGrid gt = read_svox(a.gt);
  if (pred.resolution() != gt.resolution()) {
    throw Error("grids have different resolutions (" + std::to_string(pred.resolution()) + " vs " +
                std::to_string(gt.resolution()) + ")");
  }
  if (a.level > 0) {
    pred = downsample_coords(pred, 1 << a.level);
    gt = downsample_coords(gt, 1 << a.level);
  }
  json result{{"iou", iou(pred, gt)}, {"level", a.level}, {"resolution", pred.resolution()}};
  if (pred.bounded()) {
    const auto uni = set_op(pred, gt, SetOp::Union).size();
    const auto inter = set_op(pred, gt, SetOp::Intersection).size();
    const double volume = std::pow(static_cast<double>(pred.resolution()), 3);
    result["accuracy"] = 1.0 - static_cast<double>(uni - inter) / volume;
  } else {
    result["accuracy"] = nullptr;
  }
  out << result.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  std::string mode = "coarse2fine";
  std::string field;
  std::string target;
  std::string cond = "none";
  int steps = 25;
  double shift = 3.0;
  double cfg = 3.0;
  std::uint32_t resolution = 256;
  double voxel_size = 0.56;
  std::size_t channels = 32;
  std::uint32_t window = 256;
  std::uint32_t overlap = 64;
  std::string out;
  std::string diagnostics;
};

SparseVoxelGrid latent_target(const SparseVoxelGrid& target, std::uint32_t latent_res) {
  if (target.resolution() == latent_res) return target.without_features();
  if (target.resolution() == latent_res * 8) return downsample_coords(target, 8);
  throw Error("target resolution " + std::to_string(target.resolution()) + " matches neither " +
              std::to_string(latent_res) + " nor " + std::to_string(latent_res * 8));
}

int cmd_sample(const SampleArgs& a, const Globals& g, const Logger& log) {
  const FieldKind kind = parse_field_kind(a.field);
  if (kind == FieldKind::ConstantOracle) throw Error("constant-oracle needs explicit arrays; use the library");
  if (a.mode != "coarse2fine" && a.mode != "sliding") throw Error("unknown --mode " + a.mode);
  if (a.steps < 1) throw Error("--steps must be positive");
  if (!(a.shift > 0.0)) throw Error("--shift must be positive");
  if (!(a.voxel_size > 0.0)) throw Error("--voxel-size must be positive");

  GenerationConfig cfg;
  cfg.resolution = a.resolution;
  cfg.voxel_size = static_cast<float>(a.voxel_size);
  cfg.schedule = {a.steps, a.shift};
  cfg.guidance = {a.cfg};
  cfg.latent_channels = a.channels;
  cfg.seed = g.seed;

  std::optional<SemanticMap> semantic;
  if (a.cond != "none") semantic = read_semantic_png(a.cond);
  if (a.mode == "sliding" && !semantic) throw Error("--mode sliding needs a --cond semantic map");

  std::uint32_t latent_res = 0;
  if (a.mode == "sliding") {
    latent_res = std::max({static_cast<std::uint32_t>((semantic->rows + 7) / 8),
                           static_cast<std::uint32_t>((semantic->cols + 7) / 8), a.window / 8});
  } else {
    if (a.resolution < 8 || a.resolution % 8 != 0) throw Error("--resolution must be a multiple of 8");
    latent_res = a.resolution / 8;
  }

  FieldParams class_params, latent_params;
  if (kind == FieldKind::ShapeOracle) {
    if (a.target.empty()) throw Error("shape-oracle needs --target");
    const SparseVoxelGrid shape = latent_target(read_svox(a.target), latent_res);
    class_params.shape = shape;
    class_params.inside = 1.0;
    class_params.outside = -1.0;
    latent_params.shape = shape;
    latent_params.inside = 1.0;
    latent_params.outside = 0.0;
  } else {
    class_params.seed = g.seed;
    latent_params.seed = mix64(g.seed);
  }
  const auto class_field = make_builtin_field(kind, class_params);
  const auto latent_field = make_builtin_field(kind, latent_params);

  const fs::path out_path = a.out;
  const fs::path diag_path =
      a.diagnostics.empty() ? fs::path(a.out).replace_extension(".json") : fs::path(a.diagnostics);
  ensure_parent(out_path);
  ensure_parent(diag_path);

  json diag{{"mode", a.mode},
            {"field", std::string(to_string(kind))},
            {"seed", g.seed},
            {"schedule", {{"steps", a.steps}, {"shift", a.shift}, {"timesteps", make_timesteps(cfg.schedule)}}},
            {"cfg", a.cfg},
            {"latent_channels", a.channels},
            {"condition", a.cond}};

  SparseVoxelGrid latents;
  bool empty = false;
  if (a.mode == "coarse2fine") {
    std::optional<SparseVoxelGrid> condition;
    if (semantic) condition = lift_semantic_plane(*semantic, a.resolution);
    const GenerationResult res = coarse_to_fine_generate(
        *class_field, *latent_field, condition ? &*condition : nullptr, cfg);
    latents = res.latents;
    empty = res.diagnostics.empty || res.latents.empty();
    diag["resolution"] = a.resolution;
    diag["stages"] = diagnostics_to_json(res.diagnostics);
    log("sample: dense ", res.diagnostics.dense_count, ", coarse ", res.diagnostics.coarse_count,
        ", roughened ", res.diagnostics.roughened_count, ", kept ", res.diagnostics.kept_count);
  } else {
    const SlidingWindowResult res =
        sliding_window_generate(*semantic, {a.window, a.overlap}, *class_field, *latent_field, cfg);
    latents = res.latents;
    empty = res.latents.empty();
    json tiles = json::array();
    for (const auto& t : res.tiles) {
      tiles.push_back({{"origin", {t.origin_x, t.origin_y}}, {"stages", diagnostics_to_json(t.diagnostics)}});
    }
    diag["window"] = a.window;
    diag["overlap"] = a.overlap;
    diag["tiles"] = tiles;
    log("sample: ", res.tiles.size(), " tiles, kept ", res.latents.size());
  }
  diag["output_count"] = latents.size();
  diag["empty"] = empty;

  write_svox(latents, out_path);
  write_json(diag, diag_path);
  if (empty) {
    log("sample: generation produced no voxels");
    return kExitEmpty;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// aggregate

struct AggregateArgs {
  std::string views;
  long long elements = -1;
  std::string out;
};

int cmd_aggregate(const AggregateArgs& a, const Globals& g, const Logger& log) {
  const ViewScene scene = read_view_scene(a.views);
  const std::size_t n = scene.elements.size();
  if (a.elements >= 0 && static_cast<std::size_t>(a.elements) != n) {
    throw Error("--elements " + std::to_string(a.elements) + " does not match the manifest count " +
                std::to_string(n));
  }
  std::optional<SparseVoxelGrid> voxels;
  if (!scene.voxels.empty()) {
    voxels = read_svox(scene.voxels);
    if (voxels->size() != n) {
      throw Error("voxel grid holds " + std::to_string(voxels->size()) + " voxels but the scene has " +
                  std::to_string(n) + " elements");
    }
  }
  ensure_parent(a.out);
  AggregationStats stats;
  std::vector<float> features = scatter_aggregate(scene.views, scene.elements, scene.config,
                                                  std::max(1u, g.threads), &stats);
  for (std::size_t v = 0; v < stats.contributions_per_view.size(); ++v) {
    log("aggregate: view ", v, " contributed ", stats.contributions_per_view[v], " pixels");
  }
  if (voxels) {
    const std::size_t channels = scene.views.front().features.channels;
    write_svox(voxels->with_features(std::move(features), channels), a.out);
  } else {
    write_f32(features, a.out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// augment

struct AugmentArgs {
  std::string op;
  std::string in;
  std::string out;
  std::string jagged_mode = "symmetric";
  int kernel = 3;
  int factor = 2;
  double threshold = 0.8;
  double noise_deg = 5.0;
  int axis = 0;
  std::string box;
  std::size_t count = 0;
  std::string poses;
  std::string out_poses;
};

int cmd_augment(const AugmentArgs& a, const Globals& g, const Logger& log) {
  static const std::vector<std::string> ops{"jagged", "roughen", "normal-drop", "flip", "crop", "zero"};
  if (std::find(ops.begin(), ops.end(), a.op) == ops.end()) throw Error("unknown --op " + a.op);
  if (!a.out_poses.empty() && a.poses.empty()) throw Error("--out-poses needs --poses");

  const SparseVoxelGrid in = read_svox(a.in);
  std::vector<CameraPose> poses;
  PinholeCamera camera;
  if (!a.poses.empty()) {
    const json arr = read_json(a.poses);
    if (!arr.is_array()) throw Error("pose file must hold a JSON array");
    for (const auto& j : arr) {
      auto [pose, cam] = pose_from_json(j);
      poses.push_back(pose);
      camera = cam;
    }
  }
  ensure_parent(a.out);
  if (!a.out_poses.empty()) ensure_parent(a.out_poses);

  Rng rng(g.seed);
  SparseVoxelGrid result;
  std::optional<std::vector<CameraPose>> new_poses;
  if (a.op == "jagged") {
    JaggedMode mode;
    if (a.jagged_mode == "symmetric") {
      mode = JaggedMode::Symmetric;
    } else if (a.jagged_mode == "half-open") {
      mode = JaggedMode::HalfOpen;
    } else {
      throw Error("--jagged-mode must be symmetric or half-open");
    }
    result = jagged_perturb(in, rng, mode);
  } else if (a.op == "roughen") {
    result = roughen(in, a.kernel, a.factor);
  } else if (a.op == "normal-drop") {
    NormalDropConfig cfg;
    cfg.threshold = a.threshold;
    cfg.closing_kernel = a.kernel;
    cfg.noise_deg = a.noise_deg;
    result = normal_drop(in, rng, cfg);
  } else if (a.op == "flip") {
    AugmentedScene s = flip_with_pose(in, a.axis, poses);
    result = std::move(s.grid);
    new_poses = std::move(s.poses);
  } else if (a.op == "crop") {
    if (a.box.empty()) throw Error("crop needs --box x0,y0,z0,x1,y1,z1");
    const auto b = parse_list(a.box, 6, "--box");
    VoxelBox box;
    box.min = {static_cast<std::int32_t>(b[0]), static_cast<std::int32_t>(b[1]), static_cast<std::int32_t>(b[2])};
    box.max = {static_cast<std::int32_t>(b[3]), static_cast<std::int32_t>(b[4]), static_cast<std::int32_t>(b[5])};
    AugmentedScene s = crop_with_pose(in, box, poses);
    result = std::move(s.grid);
    new_poses = std::move(s.poses);
  } else {
    result = random_zero_condition(in, a.count, rng);
  }
  log("augment: ", a.op, " ", in.size(), " -> ", result.size(), " voxels");

  write_svox(result, a.out);
  if (!a.out_poses.empty()) {
    write_json(poses_to_json(new_poses ? *new_poses : poses, camera), a.out_poses);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plan

struct PlanArgs {
  std::string pattern;
  std::string center = "0,0,0";
  std::string heightfield;
  std::string out;
  int points = 36;
  double turns = 3.0;
  double building_height = -1.0;
  int rings = 10;
  int views = 6;
};

int cmd_plan(const PlanArgs& a, const Logger& log) {
  const auto c = parse_list(a.center, 3, "--center");
  const Vec3 center(c[0], c[1], c[2]);
  std::vector<CameraPose> poses;
  if (a.pattern == "top") {
    ensure_parent(a.out);
    poses = plan_top_pose(center);
  } else if (a.pattern == "adalevel") {
    if (a.heightfield.empty()) throw Error("adalevel needs --heightfield");
    const HeightField hf = read_height_field(a.heightfield);
    ensure_parent(a.out);
    AdaLevelConfig cfg;
    cfg.rings = a.rings;
    cfg.views_per_ring = a.views;
    poses = plan_adalevel(hf, center, cfg);
  } else if (a.pattern == "spiral") {
    double height = a.building_height;
    if (!a.heightfield.empty()) {
      height = read_height_field(a.heightfield).max_height();
    } else if (height < 0.0) {
      throw Error("spiral needs --building-height or --heightfield");
    }
    ensure_parent(a.out);
    SpiralConfig cfg;
    cfg.points = a.points;
    cfg.turns = a.turns;
    poses = plan_building_spiral(center, height, cfg);
  } else {
    throw Error("unknown --pattern " + a.pattern);
  }
  log("plan: ", a.pattern, " produced ", poses.size(), " poses");
  write_json(poses_to_json(poses, PinholeCamera{}), a.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
  std::string manifest;
  int groups = 20;
  double ratio = 1.0 / 120.0;
  std::size_t min_val = 8;
  std::string out_train;
  std::string out_val;
};

int cmd_split(const SplitArgs& a, const Globals& g, const Logger& log) {
  const auto records = read_manifest(a.manifest);
  if (records.empty()) throw Error("manifest " + a.manifest + " holds no records");
  ensure_parent(a.out_train);
  ensure_parent(a.out_val);
  Rng rng(g.seed);
  const SplitResult split = height_split(records, {a.groups, a.ratio, a.min_val}, rng);
  for (std::size_t b = 0; b < split.bin_sizes.size(); ++b) {
    log("split: bin ", b, " size ", split.bin_sizes[b], " val ", split.bin_val_counts[b]);
  }
  log("split: ", split.train.size(), " train, ", split.val.size(), " val");
  write_json(json(split.train), a.out_train);
  write_json(json(split.val), a.out_val);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse voxel scene tooling", "earthvox"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for stochastic commands")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()
      ->check(CLI::Range(1u, 1024u));
  app.add_flag("--quiet", g.quiet, "Suppress log output");
  const Logger log(err, g.quiet);

  MetricsArgs metrics;
  auto* m = app.add_subcommand("metrics", "IoU and accuracy between two grids");
  m->add_option("--pred", metrics.pred)->required()->check(CLI::ExistingFile);
  m->add_option("--gt", metrics.gt)->required()->check(CLI::ExistingFile);
  m->add_option("--level", metrics.level, "Downsample both grids by 2^level first")->capture_default_str();

  SampleArgs sample;
  auto* s = app.add_subcommand("sample", "Coarse-to-fine generation with a built-in field");
  s->add_option("--mode", sample.mode)->capture_default_str()
      ->check(CLI::IsMember({"coarse2fine", "sliding"}));
  s->add_option("--field", sample.field, "shape-oracle or seeded-random")->required();
  s->add_option("--target", sample.target, "Target grid for shape-oracle")->check(CLI::ExistingFile);
  s->add_option("--cond", sample.cond, "Semantic PNG or 'none'")->capture_default_str();
  s->add_option("--steps", sample.steps)->capture_default_str();
  s->add_option("--shift", sample.shift)->capture_default_str();
  s->add_option("--cfg", sample.cfg)->capture_default_str();
  s->add_option("--resolution", sample.resolution, "Full-resolution side L")->capture_default_str();
  s->add_option("--voxel-size", sample.voxel_size)->capture_default_str();
  s->add_option("--channels", sample.channels)->capture_default_str();
  s->add_option("--window", sample.window)->capture_default_str();
  s->add_option("--overlap", sample.overlap)->capture_default_str();
  s->add_option("--out", sample.out)->required();
  s->add_option("--diagnostics", sample.diagnostics, "Defaults to the output path with .json");

  AggregateArgs aggregate;
  auto* ag = app.add_subcommand("aggregate", "Fuse per-view features onto elements");
  ag->add_option("--views", aggregate.views)->required()->check(CLI::ExistingDirectory);
  ag->add_option("--elements", aggregate.elements, "Expected element count");
  ag->add_option("--out", aggregate.out)->required();

  AugmentArgs augment;
  auto* au = app.add_subcommand("augment", "Apply one augmentation to a grid");
  au->add_option("--op", augment.op)->required()
      ->check(CLI::IsMember({"jagged", "roughen", "normal-drop", "flip", "crop", "zero"}));
  au->add_option("--in", augment.in)->required()->check(CLI::ExistingFile);
  au->add_option("--out", augment.out)->required();
  au->add_option("--jagged-mode", augment.jagged_mode)->capture_default_str();
  au->add_option("--kernel", augment.kernel)->capture_default_str();
  au->add_option("--factor", augment.factor)->capture_default_str();
  au->add_option("--threshold", augment.threshold)->capture_default_str();
  au->add_option("--noise-deg", augment.noise_deg)->capture_default_str();
  au->add_option("--axis", augment.axis)->capture_default_str();
  au->add_option("--box", augment.box, "x0,y0,z0,x1,y1,z1 (max exclusive)");
  au->add_option("--count", augment.count, "Voxels kept by the zero op")->capture_default_str();
  au->add_option("--poses", augment.poses)->check(CLI::ExistingFile);
  au->add_option("--out-poses", augment.out_poses);

  PlanArgs plan;
  auto* p = app.add_subcommand("plan", "Camera trajectory planning");
  p->add_option("--pattern", plan.pattern)->required()
      ->check(CLI::IsMember({"top", "adalevel", "spiral"}));
  p->add_option("--center", plan.center, "x,y,z")->capture_default_str();
  p->add_option("--heightfield", plan.heightfield)->check(CLI::ExistingFile);
  p->add_option("--out", plan.out)->required();
  p->add_option("--points", plan.points)->capture_default_str();
  p->add_option("--turns", plan.turns)->capture_default_str();
  p->add_option("--building-height", plan.building_height);
  p->add_option("--rings", plan.rings)->capture_default_str();
  p->add_option("--views", plan.views)->capture_default_str();

  SplitArgs split;
  auto* sp = app.add_subcommand("split", "Height-stratified train/val split");
  sp->add_option("--manifest", split.manifest)->required()->check(CLI::ExistingFile);
  sp->add_option("--groups", split.groups)->capture_default_str();
  sp->add_option("--ratio", split.ratio)->capture_default_str();
  sp->add_option("--min-val", split.min_val)->capture_default_str();
  sp->add_option("--out-train", split.out_train)->required();
  sp->add_option("--out-val", split.out_val)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*m) return cmd_metrics(metrics, out);
    if (*s) return cmd_sample(sample, g, log);
    if (*ag) return cmd_aggregate(aggregate, g, log);
    if (*au) return cmd_augment(augment, g, log);
    if (*p) return cmd_plan(plan, log);
    if (*sp) return cmd_split(split, g, log);
  } catch (const std::exception& e) {
    err << "earthvox: error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace earthvox::cli
