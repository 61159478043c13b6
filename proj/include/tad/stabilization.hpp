#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "tad/image.hpp"

namespace tad {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct PointMatch {
  Point2 from;
  Point2 to;
  bool valid = false;
};

/// Maps a point p of the previous frame to R(dangle)(p - c) + c + (dx, dy) in the
/// current frame, where c is the rotation centre used during estimation.
struct RigidTransform {
  double dx = 0.0;
  double dy = 0.0;
  double dangle = 0.0;
};

struct TransformEstimate {
  RigidTransform transform;
  bool degraded = false;  // fewer than 3 usable pairs; transform is identity
  int inliers = 0;
};

struct ShakeVerdict {
  double accumulated = 0.0;
  double average = 0.0;
  bool is_shaky = false;
};

struct LkParams {
  int levels = 3;
  int window = 21;
  int max_iterations = 30;
  double epsilon = 0.01;
  double min_eigen = 1.0;  // minimum eigenvalue of the averaged gradient tensor
};

struct StabilizationParams {
  int max_corners = 60;
  double quality = 0.01;
  double min_distance = 10.0;
  int redetect_interval = 10;
  int min_tracked = 20;
  LkParams lk;
  double shake_accumulated = 17200.0;
  double shake_average = 0.645;
  int smooth_window = 31;
  double smooth_alpha = 0.9;
  bool force = false;  // warp even when the video is not classified shaky
};

/// Good-features-to-track corners, strongest first.
std::vector<Point2> detect_corners(const GrayFrame& frame, int max_corners, double quality, double min_distance);

/// Pyramidal iterative Lucas-Kanade.
std::vector<PointMatch> track_points(const GrayFrame& prev, const GrayFrame& cur, const std::vector<Point2>& points,
                                     const LkParams& params = {});

/// Least-squares rigid fit over the valid pairs, one round of 2-sigma residual
/// rejection, then refit.
TransformEstimate estimate_transform(const std::vector<PointMatch>& pairs, Point2 center = {});

ShakeVerdict classify_shaky(const std::vector<RigidTransform>& transforms, double accumulated_threshold = 17200.0,
                            double average_threshold = 0.645);

struct Trajectory {
  std::vector<double> x, y, a;
  std::size_t size() const { return x.size(); }
};

/// Prefix sums of the frame-to-frame transforms; element 0 is the zero pose, so the
/// result has transforms.size() + 1 entries.
Trajectory cumulative_trajectory(const std::vector<RigidTransform>& transforms);

/// Centred moving average (end samples replicated past the ends) followed by a
/// forward-backward exponential smoother with factor alpha on the previous output.
std::vector<double> smooth_signal(const std::vector<double>& v, int window, double alpha);
Trajectory smooth_trajectory(const Trajectory& t, int window, double alpha);

/// Rotate by angle about `center`, then translate. Output pixels sample the input
/// bilinearly with replicated borders.
GrayFrame warp_rigid(const GrayFrame& src, const RigidTransform& t, Point2 center);

/// Warps each frame by its (smoothed - raw) trajectory correction.
FrameSequence smooth_and_correct(const FrameSequence& frames, const std::vector<RigidTransform>& transforms,
                                 int window = 31, double alpha = 0.9);

/// Frame-to-frame motion chain over the whole sequence (size = frames - 1).
struct MotionEstimate {
  std::vector<RigidTransform> transforms;
  std::size_t degraded_frames = 0;
};
MotionEstimate estimate_motion(const FrameSequence& frames, const StabilizationParams& params = {});

struct StabilizationResult {
  std::vector<RigidTransform> transforms;
  ShakeVerdict verdict;
  bool applied = false;
  std::size_t degraded_frames = 0;
};

/// Estimates motion, classifies the video and, when shaky (or forced), replaces the
/// frames in place with the corrected ones.
StabilizationResult stabilize(FrameSequence& frames, const StabilizationParams& params = {});

/// One line per transform: index dx dy dangle accumulated.
void write_transform_log(std::ostream& out, const std::vector<RigidTransform>& transforms);

}  // namespace tad
