#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tad/background.hpp"
#include "tad/pixel_track.hpp"
#include "tad/postproc.hpp"
#include "tad/roadmask.hpp"
#include "tad/stabilization.hpp"
#include "tad/tube.hpp"

namespace tad {

struct VideoInput {
  std::string video_id;
  std::string frames;      // directory, .raw or .json sidecar
  std::string detections;  // frame-level detections; empty uses foreground blobs
};

struct StageFlags {
  bool stabilize = true;
  bool postproc = true;   // collision check and boundary refinement
  bool collision = true;
  bool refine = true;
};

struct PipelineConfig {
  // io
  std::vector<VideoInput> videos;
  std::string ground_truth;
  std::string output_dir = "tad_out";
  std::string cache_dir;  // empty disables the stage cache
  double fps = 30.0;      // used for frame directories without timing
  int workers = 1;
  StageFlags stages;

  StabilizationParams stabilization;

  MogParams mog;
  int background_interval = 120;  // frames between emitted backgrounds

  int diff_threshold = 30;
  int blob_min_area = 64;
  double fuse_nms = 0.8;

  double motion_freq = 0.002;
  int motion_kernel = 5;
  TrackerParams tracker;
  TrajectoryMaskParams trajectory;
  int mask_fuse_kernel = 7;

  GridParams grid;
  double seed_merge = 0.5;
  BacktrackParams backtrack;

  double tube_lookback = 10.0;  // seconds before the backtracked start
  double tube_step = 1.0;
  TubeJudgeParams judge;
  double tube_fuse_psnr = 18.0;

  CollisionParams collision;
  RefineParams refine;

  double eval_window = 10.0;
  double nrmse_cap = 300.0;
};

/// Throws InvalidInput naming the offending key.
void validate(const PipelineConfig& c);

/// Overlays keys from `j` onto `c`. Unknown keys and out-of-range values throw.
void apply_json(PipelineConfig& c, const nlohmann::json& j);

PipelineConfig load_config(const std::filesystem::path& path);

/// TAD_WORKERS and TAD_CACHE_DIR take precedence over the file.
void apply_env_overrides(PipelineConfig& c);

/// Full nested form, every key present; `section` restricts to one top-level group.
nlohmann::ordered_json to_json(const PipelineConfig& c);
nlohmann::ordered_json section_json(const PipelineConfig& c, const std::string& section);

}  // namespace tad
