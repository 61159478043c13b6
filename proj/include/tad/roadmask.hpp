#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tad/detect.hpp"
#include "tad/frame_io.hpp"
#include "tad/image.hpp"

namespace tad {

struct TrajectoryTrack {
  int track_id = 0;
  std::vector<std::pair<std::int64_t, BoundingBox>> samples;

  /// Distance between the first and last box centres.
  double displacement() const;
  /// atan2 of the net centre motion; 0 when the track did not move.
  double direction_angle() const;
  /// |arctan(dy/dx)| of the net motion, in [0, pi/2].
  double abs_slope_angle() const;
};

struct TrackerParams {
  double iou_threshold = 0.3;
  int max_missed = 10;
  int min_samples = 2;
};

std::vector<TrajectoryTrack> track_vehicles(const DetectionStream& stream, const TrackerParams& params = {});

using RoadMask = BinaryMask;

/// Pixels covered by some box in at least freq_threshold of the total_frames,
/// then closed and opened with a 5x5 kernel.
RoadMask motion_mask(const DetectionStream& stream, std::int64_t total_frames, int width, int height,
                     double freq_threshold = 0.002, int kernel = 5);

struct TrajectoryMaskParams {
  int min_len = 5;
  double min_displacement = 50.0;
  double angle_threshold = 0.8;  // radians from the dominant cluster centre
};

/// Which qualifying tracks fall into the primary direction group. Returned in
/// track order; `centre` receives the dominant cluster centre when non-null.
std::vector<bool> primary_tracks(const std::vector<TrajectoryTrack>& tracks, const TrajectoryMaskParams& params,
                                 double* centre = nullptr);

RoadMask trajectory_mask(const std::vector<TrajectoryTrack>& tracks, int width, int height,
                         const TrajectoryMaskParams& params = {});

RoadMask fuse_masks(const RoadMask& motion, const RoadMask& trajectory, int kernel = 7);

/// Road pixels tinted green over the frame, for debugging.
RgbImage mask_overlay(const GrayFrame& frame, const RoadMask& mask);

/// 1-D two-means; returns cluster labels (0/1) and the two centres.
struct TwoMeans {
  std::vector<int> labels;
  double centres[2] = {0, 0};
  std::size_t sizes[2] = {0, 0};
};
TwoMeans two_means(const std::vector<double>& values);

}  // namespace tad
