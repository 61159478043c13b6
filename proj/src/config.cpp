#include "tad/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <variant>

#include "tad/frame_io.hpp"

namespace tad {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Field {
  const char* key;
  std::variant<double*, int*, bool*, std::string*, std::size_t*> ptr;
  double lo = -kInf, hi = kInf;
};

struct Section {
  const char* name;
  std::vector<Field> fields;
};

std::vector<Section> schema(PipelineConfig& c) {
  auto& s = c.stabilization;
  auto& b = c.backtrack;
  return {
      {"io",
       {{"ground_truth", &c.ground_truth},
        {"output_dir", &c.output_dir},
        {"cache_dir", &c.cache_dir},
        {"fps", &c.fps, 1e-3, 1000},
        {"workers", &c.workers, 1, 256}}},
      {"stages",
       {{"stabilize", &c.stages.stabilize},
        {"postproc", &c.stages.postproc},
        {"collision", &c.stages.collision},
        {"refine", &c.stages.refine}}},
      {"stabilization",
       {{"max_corners", &s.max_corners, 3, 10000},
        {"quality", &s.quality, 0, 1},
        {"min_distance", &s.min_distance, 0, 1000},
        {"redetect_interval", &s.redetect_interval, 1, 100000},
        {"min_tracked", &s.min_tracked, 0, 10000},
        {"lk_levels", &s.lk.levels, 1, 8},
        {"lk_window", &s.lk.window, 3, 101},
        {"lk_max_iterations", &s.lk.max_iterations, 1, 1000},
        {"lk_epsilon", &s.lk.epsilon, 0, 10},
        {"lk_min_eigen", &s.lk.min_eigen, 0, kInf},
        {"shake_accumulated", &s.shake_accumulated, 0, kInf},
        {"shake_average", &s.shake_average, 0, kInf},
        {"smooth_window", &s.smooth_window, 1, 100001},
        {"smooth_alpha", &s.smooth_alpha, 0, 0.999999},
        {"force", &s.force}}},
      {"background",
       {{"components", &c.mog.components, 1, kMaxComponents},
        {"alpha", &c.mog.alpha, 1e-6, 1},
        {"bg_threshold", &c.mog.bg_threshold, 0, 1},
        {"match_sigma", &c.mog.match_sigma, 0.1, 100},
        {"init_variance", &c.mog.init_variance, 1e-3, 1e6},
        {"variance_floor", &c.mog.variance_floor, 1e-6, 1e6},
        {"warmup", &c.mog.warmup},
        {"interval", &c.background_interval, 1, 1000000}}},
      {"detect",
       {{"diff_threshold", &c.diff_threshold, 1, 255},
        {"min_area", &c.blob_min_area, 1, 1e9},
        {"fuse_nms", &c.fuse_nms, 0, 1}}},
      {"roadmask",
       {{"motion_freq", &c.motion_freq, 0, 1},
        {"motion_kernel", &c.motion_kernel, 1, 101},
        {"track_iou", &c.tracker.iou_threshold, 0, 1},
        {"track_max_missed", &c.tracker.max_missed, 0, 100000},
        {"track_min_samples", &c.tracker.min_samples, 1, 100000},
        {"min_len", &c.trajectory.min_len, 1, 100000},
        {"min_displacement", &c.trajectory.min_displacement, 0, kInf},
        {"angle_threshold", &c.trajectory.angle_threshold, 0, 3.15},
        {"fuse_kernel", &c.mask_fuse_kernel, 1, 101}}},
      {"pixel_track",
       {{"suspicious_time", &c.grid.suspicious_time, 0, kInf},
        {"abnormal_time", &c.grid.abnormal_time, 0, kInf},
        {"min_hits", &c.grid.min_hits, 1, 100000},
        {"miss_reset", &c.grid.miss_reset, 1, 100000},
        {"min_area", &c.grid.min_area, 1, 1e9},
        {"seed_merge", &c.seed_merge, 0, 1}}},
      {"backtrack",
       {{"t_iou", &b.t_iou, 0, 1},
        {"t_iou_relaxed", &b.t_iou_relaxed, 0, 1},
        {"t_psnr", &b.t_psnr, 0, 100},
        {"t_psnr_relaxed", &b.t_psnr_relaxed, 0, 100},
        {"t_color", &b.t_color, 0, 1},
        {"t_color_relaxed", &b.t_color_relaxed, 0, 1},
        {"t_ratio", &b.t_ratio, 0, 1},
        {"t_time", &b.t_time, 0, kInf},
        {"step", &b.step, 1e-3, 3600},
        {"window", &b.window, 1, 10000},
        {"crop_size", &b.crop_size, 8, 1024}}},
      {"tube",
       {{"lookback", &c.tube_lookback, 0, kInf},
        {"step", &c.tube_step, 1e-3, 3600},
        {"thre_sim", &c.judge.thre_sim, -1, 1},
        {"lower_bound", &c.judge.lower_bound, -1, 1},
        {"gamma", &c.judge.gamma, 0, 1},
        {"fuse_psnr", &c.tube_fuse_psnr, 0, 100}}},
      {"postproc",
       {{"ring_width", &c.collision.ring_width, 1, 10000},
        {"fg_threshold", &c.collision.fg_threshold, 0, 1e12},
        {"bg_sim_threshold", &c.collision.bg_sim_threshold, -1, 1},
        {"traceback", &c.collision.traceback, 0, kInf},
        {"settle_intervals", &c.collision.settle_intervals, 0, 1000},
        {"appearance_sim_threshold", &c.refine.appearance_sim_threshold, -1, 1},
        {"refine_settle_intervals", &c.refine.settle_intervals, 0, 1000}}},
      {"eval", {{"window", &c.eval_window, 0, kInf}, {"nrmse_cap", &c.nrmse_cap, 1e-9, kInf}}},
  };
}

std::string qualified(const Section& s, const Field& f) { return std::string(s.name) + "." + f.key; }

void check_range(const Section& s, const Field& f, double v) {
  if (!(v >= f.lo && v <= f.hi))
    throw InvalidInput("config: " + qualified(s, f) + " = " + std::to_string(v) + " outside [" + std::to_string(f.lo) +
                       ", " + std::to_string(f.hi) + "]");
}

void read_field(const Section& s, const Field& f, const json& v) {
  const std::string name = qualified(s, f);
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (!v.is_boolean()) throw InvalidInput("config: " + name + " must be true or false");
          *p = v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (!v.is_string()) throw InvalidInput("config: " + name + " must be a string");
          *p = v.get<std::string>();
        } else {
          if (!v.is_number()) throw InvalidInput("config: " + name + " must be a number");
          double d = v.get<double>();
          if constexpr (!std::is_same_v<T, double>)
            if (d != std::floor(d)) throw InvalidInput("config: " + name + " must be an integer");
          check_range(s, f, d);
          *p = static_cast<T>(d);
        }
      },
      f.ptr);
}

void write_field(ordered_json& out, const Field& f) {
  std::visit([&](auto* p) { out[f.key] = *p; }, f.ptr);
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  PipelineConfig c = cfg;
  for (const auto& s : schema(c))
    for (const auto& f : s.fields)
      std::visit(
          [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (!std::is_same_v<T, bool> && !std::is_same_v<T, std::string>) check_range(s, f, double(*p));
          },
          f.ptr);
  if (c.grid.abnormal_time < c.grid.suspicious_time)
    throw InvalidInput("config: pixel_track.abnormal_time must not be below suspicious_time");
  if (c.backtrack.t_iou_relaxed < c.backtrack.t_iou)
    throw InvalidInput("config: backtrack.t_iou_relaxed must not be below t_iou");
  if (c.stabilization.lk.window % 2 == 0) throw InvalidInput("config: stabilization.lk_window must be odd");
  if (c.motion_kernel % 2 == 0 || c.mask_fuse_kernel % 2 == 0)
    throw InvalidInput("config: roadmask kernels must be odd");
  for (std::size_t i = 0; i < c.videos.size(); ++i) {
    if (c.videos[i].video_id.empty()) throw InvalidInput("config: videos[" + std::to_string(i) + "].video_id is empty");
    if (c.videos[i].frames.empty()) throw InvalidInput("config: videos[" + std::to_string(i) + "].frames is empty");
    for (std::size_t j = 0; j < i; ++j)
      if (c.videos[j].video_id == c.videos[i].video_id)
        throw InvalidInput("config: duplicate video_id '" + c.videos[i].video_id + "'");
  }
}

void apply_json(PipelineConfig& c, const json& j) {
  if (!j.is_object()) throw InvalidInput("config: top level must be an object");
  auto sections = schema(c);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "videos") {
      if (!it->is_array()) throw InvalidInput("config: videos must be a list");
      c.videos.clear();
      for (const auto& v : *it) {
        if (!v.is_object()) throw InvalidInput("config: each video is an object");
        VideoInput in;
        for (auto vi = v.begin(); vi != v.end(); ++vi) {
          if (!vi->is_string()) throw InvalidInput("config: videos." + vi.key() + " must be a string");
          if (vi.key() == "video_id")
            in.video_id = vi->get<std::string>();
          else if (vi.key() == "frames")
            in.frames = vi->get<std::string>();
          else if (vi.key() == "detections")
            in.detections = vi->get<std::string>();
          else
            throw InvalidInput("config: unknown key videos." + vi.key());
        }
        c.videos.push_back(in);
      }
      continue;
    }
    auto sec = std::find_if(sections.begin(), sections.end(), [&](const Section& s) { return it.key() == s.name; });
    if (sec == sections.end()) throw InvalidInput("config: unknown section '" + it.key() + "'");
    if (!it->is_object()) throw InvalidInput("config: section '" + it.key() + "' must be an object");
    for (auto kv = it->begin(); kv != it->end(); ++kv) {
      auto f = std::find_if(sec->fields.begin(), sec->fields.end(), [&](const Field& f) { return kv.key() == f.key; });
      if (f == sec->fields.end()) throw InvalidInput("config: unknown key " + it.key() + "." + kv.key());
      read_field(*sec, *f, *kv);
    }
  }
  validate(c);
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  PipelineConfig c;
  apply_json(c, j);
  return c;
}

void apply_env_overrides(PipelineConfig& c) {
  if (const char* w = std::getenv("TAD_WORKERS"); w && *w) {
    char* end = nullptr;
    long v = std::strtol(w, &end, 10);
    if (*end != '\0' || v < 1 || v > 256) throw InvalidInput("TAD_WORKERS must be an integer in [1, 256]");
    c.workers = static_cast<int>(v);
  }
  if (const char* d = std::getenv("TAD_CACHE_DIR"); d) c.cache_dir = d;
}

ordered_json to_json(const PipelineConfig& cfg) {
  PipelineConfig c = cfg;
  ordered_json out;
  out["videos"] = ordered_json::array();
  for (const auto& v : c.videos)
    out["videos"].push_back({{"video_id", v.video_id}, {"frames", v.frames}, {"detections", v.detections}});
  for (const auto& s : schema(c)) {
    ordered_json sec = ordered_json::object();
    for (const auto& f : s.fields) write_field(sec, f);
    out[s.name] = sec;
  }
  return out;
}

ordered_json section_json(const PipelineConfig& cfg, const std::string& section) {
  ordered_json all = to_json(cfg);
  if (!all.contains(section)) throw InvalidInput("config: no section '" + section + "'");
  return all[section];
}

}  // namespace tad
