#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tad/image.hpp"

namespace tad {

inline constexpr int kTubeCrop = 64;

struct TubeRegion {
  std::int64_t frame_index = 0;
  double timestamp = 0.0;
  BoundingBox box;
  GrayFrame crop;  // kTubeCrop x kTubeCrop
};

struct Tube {
  int id = 0;
  std::vector<TubeRegion> regions;  // time-ordered
  double start = 0.0;
  double end = 0.0;
};

struct TubeVerdict {
  double anomaly_start = 0.0;
  bool accepted = false;
  std::vector<double> similarity;        // Sim_j
  std::vector<double> similarity_trace;  // S'_j = Sim_j - mean(Sim)
};

struct TubeJudgeParams {
  double thre_sim = 0.6;
  double lower_bound = 0.25;
  double gamma = 0.3;
};

/// Samples the region every `step` seconds over [t_from, t_to] (clamped to the
/// sequence).
Tube build_tube(const FrameSequence& frames, const BoundingBox& region, double t_from, double t_to, double step,
                int id = 0);

GrayFrame tube_mean(const Tube& tube);

TubeVerdict intra_tube_judge(const Tube& tube, const TubeJudgeParams& params = {});

/// Groups of tube indices whose means reach the PSNR threshold, closed
/// transitively. Groups are ordered by their smallest member.
std::vector<std::vector<std::size_t>> fuse_groups(const std::vector<Tube>& tubes, double psnr_threshold = 18.0);

/// Merges each group: start = min, end = max, regions concatenated in time
/// order, id of the first member.
std::vector<Tube> inter_tube_fuse(const std::vector<Tube>& tubes, double psnr_threshold = 18.0);

/// tube_id start end anomaly_start accepted
void write_tube_report(std::ostream& out, const std::vector<Tube>& tubes, const std::vector<TubeVerdict>& verdicts);

}  // namespace tad
