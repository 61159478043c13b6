#pragma once

#include <cstdint>
#include <vector>

#include "tad/detect.hpp"
#include "tad/image.hpp"

namespace tad {

enum class PixelState : std::uint8_t { normal = 0, suspicious = 1, abnormal = 2 };

struct GridParams {
  double suspicious_time = 20.0;  // seconds of sustained hits
  double abnormal_time = 30.0;
  int min_hits = 3;    // background frames in the run before suspicion
  int miss_reset = 3;  // consecutive misses that end a run
  int min_area = 64;   // candidate component floor in pixels
};

/// The six per-pixel matrices.
struct PixelStateGrid {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> v_undetected;
  std::vector<std::int32_t> v_detected;
  std::vector<double> v_score;
  std::vector<PixelState> v_state;
  std::vector<double> v_start;
  std::vector<double> v_end;

  PixelStateGrid() = default;
  PixelStateGrid(int w, int h);
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

/// Boxes whose centre lies on a mask pixel.
std::vector<ScoredBox> filter_by_mask(const std::vector<ScoredBox>& boxes, const BinaryMask& mask);

/// One background-frame update at time t. Boxes with their centre outside the
/// mask are ignored. A pixel covered by several boxes takes the highest score.
void update_grid(PixelStateGrid& grid, const std::vector<ScoredBox>& boxes, const BinaryMask& mask, double t,
                 const GridParams& params = {});

struct TubeSeed {
  BoundingBox region;
  double stop_time = 0.0;
  double last_seen = 0.0;
  double peak_score = 0.0;
};

std::vector<TubeSeed> extract_candidates(const PixelStateGrid& grid, double t, const GridParams& params = {});

/// Accumulates candidates over successive updates. A new candidate that mostly
/// lies inside (or contains) a known seed is merged into it.
class SeedTracker {
 public:
  explicit SeedTracker(double merge_containment = 0.5) : thr_(merge_containment) {}
  void update(const std::vector<TubeSeed>& candidates);
  const std::vector<TubeSeed>& seeds() const { return seeds_; }

 private:
  double thr_;
  std::vector<TubeSeed> seeds_;
};

struct BacktrackParams {
  double t_iou = 0.3;
  double t_iou_relaxed = 0.5;
  double t_psnr = 18.0;
  double t_psnr_relaxed = 20.0;
  double t_color = 0.88;
  double t_color_relaxed = 0.9;
  double t_ratio = 0.6;
  double t_time = 30.0;  // seconds always traced
  double step = 0.5;     // seconds between examined frames
  int window = 10;       // trailing steps for the acceptance ratio
  int crop_size = 64;
};

struct BacktrackResult {
  double start = 0.0;
  BoundingBox anchor;         // box at the stop frame
  BoundingBox earliest_box;   // box at the returned start
  int steps = 0;
  int accepted = 0;
  bool had_detections = false;
};

/// Box at the stop frame that best represents the seed: most contained in the
/// seed region (at least half), ties by IoU. Falls back to the region itself.
BoundingBox select_anchor(const TubeSeed& seed, const std::vector<DetectionRecord>* dets);

BacktrackResult backtrack_start(const TubeSeed& seed, const DetectionStream& detections, const FrameSequence& frames,
                                const BacktrackParams& params = {});

}  // namespace tad
