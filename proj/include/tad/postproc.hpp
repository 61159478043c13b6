#pragma once

#include <optional>
#include <string>

#include "tad/background.hpp"
#include "tad/image.hpp"

namespace tad {

/// A reported anomaly with the intermediate times that led to it.
struct AnomalyEvent {
  std::string video_id;
  int id = 0;
  BoundingBox region;       // seed region on the background frames
  BoundingBox stopped_box;  // vehicle box at the stop frame
  double stop_time = 0.0;
  double last_seen = 0.0;
  double backtrack_start = 0.0;
  double tube_start = 0.0;
  bool tube_accepted = false;
  std::optional<double> crash_time;
  double start = 0.0;  // reported time
  double end = 0.0;
  double confidence = 0.0;
};

struct CollisionParams {
  int ring_width = 50;
  std::size_t fg_threshold = 1000;
  double bg_sim_threshold = 0.9;
  double traceback = 60.0;      // seconds scanned before the stop time
  int settle_intervals = 2;     // background intervals after the stop for the "after" crop
};

struct CollisionResult {
  std::optional<double> crash_time;
  bool insufficient_history = false;
  std::size_t candidates = 0;
  std::size_t peak_fg = 0;
  double bg_similarity = 1.0;  // ring SSIM at the reported crash time (or the lowest seen)
};

/// Foreground pixels in the annulus of width `ring_width` around `box`.
std::size_t ring_foreground(const ForegroundHistory& fg, std::size_t frame, const BoundingBox& box, int ring_width);

/// Mean SSIM over the ring crop, using only windows whose support stays clear of
/// the inner box. Falls back to every window when none qualifies.
double ring_similarity(const GrayFrame& a, const GrayFrame& b, const BoundingBox& box, int ring_width);

CollisionResult detect_collision(const AnomalyEvent& event, double fps, const ForegroundHistory& fg,
                                 const BackgroundSequence& forward, const CollisionParams& params = {});

struct RefineParams {
  double appearance_sim_threshold = 0.8;
  int settle_intervals = 2;
};

struct RefineResult {
  double start = 0.0;
  double end = 0.0;
  std::optional<double> backward_onset;
  std::optional<double> forward_onset;
  bool changed = false;
};

/// Tightens start/end from the runs of background samples that show the stopped
/// vehicle. The forward and backward absorption lags are symmetric, so the
/// arrival is placed midway between both onsets. Only ever widens the interval.
RefineResult refine_boundaries(const AnomalyEvent& event, const BackgroundSequence& forward,
                               const BackgroundSequence& backward, const RefineParams& params = {});

}  // namespace tad
